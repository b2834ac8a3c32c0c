#pragma once

#include "elab/common/database.hpp"
#include "elab/provenance/dag.hpp"
#include "elab/provenance/record.hpp"

#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace elab::provenance {

/// Append-only audit log of executions, backed by SQLite.
class ProvenanceStore {
public:
    explicit ProvenanceStore(Database& db);

    /// Validates and appends; returns the new record id.
    std::int64_t record_execution(ExecutionRecord rec);

    std::optional<ExecutionRecord> get(std::int64_t record_id) const;
    /// Every record in execution (id) order.
    std::vector<ExecutionRecord> records() const;
    std::size_t size() const;

    /// Latest succeeded record listing `lfn` among its outputs.
    std::optional<ExecutionRecord> latest_producer(std::string_view lfn) const;

    WorkflowDag build_dag(std::string_view lfn, const std::function<bool(std::string_view)>& known_source = {}) const;

    /// One JSON record per line, in id order.
    std::string export_audit() const;

private:
    Database& db_;
    mutable std::shared_mutex mutex_;
    std::vector<ExecutionRecord> log_;
};

} // namespace elab::provenance

#pragma once

#include "elab/common/error.hpp"
#include "elab/provenance/record.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace elab::provenance {

/// Bipartite lineage graph. Nodes are keyed "f:<lfn>" for files and
/// "d:<record_id>" for derivations; edges run file→derivation (consumed)
/// and derivation→file (produced).
struct WorkflowDag {
    std::set<std::string> files;
    /// record_id → label "tr_name(dv_name)"
    std::map<std::int64_t, std::string> derivations;
    std::set<std::pair<std::string, std::string>> edges;

    static std::string file_node(std::string_view lfn);
    static std::string derivation_node(std::int64_t record_id);

    bool empty() const { return files.empty() && derivations.empty(); }
    std::size_t node_count() const { return files.size() + derivations.size(); }

    /// Files with no producer, sorted.
    std::vector<std::string> sources() const;
    bool is_acyclic() const;
    bool is_bipartite() const;

    bool operator==(const WorkflowDag&) const = default;
};

class UnknownFile : public Error {
public:
    explicit UnknownFile(std::string lfn) : Error("unknown logical file '" + lfn + "'"), lfn_(std::move(lfn)) {}
    const std::string& lfn() const { return lfn_; }

private:
    std::string lfn_;
};

/// Backward closure of `lfn` over an execution log (ordered by record id).
///
/// Each file resolves to the latest succeeded record that produced it before
/// the consuming record ran, preferring one whose output digest matches what
/// was consumed. `known_source` decides whether a file that never appears in
/// the log exists anyway (e.g. an upload); otherwise UnknownFile is thrown.
WorkflowDag build_dag(const std::vector<ExecutionRecord>& log, std::string_view lfn,
    const std::function<bool(std::string_view)>& known_source = {});

/// Deterministic DOT text; nodes and edges sorted lexicographically.
std::string export_dot(const WorkflowDag& dag);

class DotSyntaxError : public Error {
public:
    using Error::Error;
};

/// Reads back the subset of DOT that export_dot writes.
WorkflowDag parse_dot(std::string_view text);

} // namespace elab::provenance

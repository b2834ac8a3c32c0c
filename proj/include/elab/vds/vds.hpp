#pragma once

#include "elab/catalog/catalog.hpp"
#include "elab/common/database.hpp"
#include "elab/planner/executor.hpp"
#include "elab/planner/plan.hpp"
#include "elab/provenance/store.hpp"
#include "elab/vdl/types.hpp"
#include "elab/vdl/validate.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace elab::vds {

class InvalidDerivation : public Error {
public:
    InvalidDerivation(std::string dv_name, std::vector<vdl::Problem> problems);
    const std::vector<vdl::Problem>& problems() const { return problems_; }

private:
    std::vector<vdl::Problem> problems_;
};

class UnknownDerivation : public Error {
public:
    using Error::Error;
};

/// The file exists but was uploaded, not derived, so there is nothing to rerun.
class NotDerived : public Error {
public:
    using Error::Error;
};

class OverrideTypeMismatch : public Error {
public:
    using Error::Error;
};

struct RunResult {
    std::string dv_name;
    bool cached = false;
    bool succeeded = false;
    /// Records written by this run (empty on a cache hit).
    std::vector<provenance::ExecutionRecord> records;
    /// Derivation output parameter → logical file holding the product.
    std::map<std::string, std::string> outputs;
};

struct CacheHit {
    std::map<std::string, std::string> outputs;
    std::vector<std::int64_t> record_ids;
};

/// Ties the language, catalog, planner, executor and provenance together.
class VirtualDataSystem {
public:
    VirtualDataSystem(catalog::Catalog& catalog, provenance::ProvenanceStore& provenance, BlobStore& blobs,
        const planner::Registry& registry, planner::ExecutorOptions options);

    catalog::Catalog& catalog() { return catalog_; }
    provenance::ProvenanceStore& provenance() { return provenance_; }
    BlobStore& blobs() { return blobs_; }

    /// Parses VDL and registers each definition in source order.
    std::vector<catalog::ObjectId> define(std::string_view vdl_source);
    catalog::ObjectId define(const vdl::Transformation& tr);
    catalog::ObjectId define(const vdl::Derivation& dv);

    /// Exact version, or the highest one when `version` is empty.
    const vdl::Transformation* resolve(std::string_view name, std::optional<std::int64_t> version = std::nullopt);
    vdl::Resolver resolver();
    std::optional<vdl::Derivation> derivation(std::string_view name) const;

    /// Stores bytes under `lfn` and catalogs them with `metadata`.
    catalog::ObjectId import_file(std::string_view lfn, std::string_view bytes,
        const std::vector<catalog::MetadataTuple>& metadata = {},
        catalog::ObjectKind kind = catalog::ObjectKind::dataset_file);
    std::string read_file(std::string_view lfn) const;
    bool has_file(std::string_view lfn) const;

    planner::Plan plan(const vdl::Derivation& dv);
    std::optional<CacheHit> check_cache(const vdl::Derivation& dv);

    /// Registers `dv` if needed, then answers from the cache or executes.
    RunResult run(const vdl::Derivation& dv, bool use_cache = true);
    RunResult run(std::string_view dv_name, bool use_cache = true);

    /// Reruns the derivation that produced `lfn`. With overrides a new
    /// derivation `<dv>-<hash8>` is defined whose outputs carry the same suffix.
    RunResult rederive(std::string_view lfn, const std::map<std::string, vdl::Literal>& overrides = {});

    provenance::WorkflowDag build_dag(std::string_view lfn) const;

private:
    catalog::Catalog& catalog_;
    provenance::ProvenanceStore& provenance_;
    BlobStore& blobs_;
    planner::LocalExecutor executor_;
    std::mutex tr_mutex_;
    std::map<std::string, std::unique_ptr<vdl::Transformation>> tr_cache_;
};

/// "a.svg" + "-1a2b3c4d" → "a-1a2b3c4d.svg"
std::string suffix_lfn(std::string_view lfn, std::string_view suffix);

} // namespace elab::vds

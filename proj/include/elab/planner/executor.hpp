#pragma once

#include "elab/catalog/catalog.hpp"
#include "elab/common/database.hpp"
#include "elab/planner/plan.hpp"
#include "elab/provenance/store.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace elab::planner {

class UnknownExecutable : public Error {
public:
    explicit UnknownExecutable(std::string key) : Error("no executable registered as '" + key + "'"), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

/// Raised by implementations for bad arguments or unusable inputs.
class JobError : public Error {
public:
    using Error::Error;
};

/// What an implementation sees while it runs: its scalars, read-only input
/// files, and the paths where it must write each output.
struct JobContext {
    const Job& job;
    std::filesystem::path workdir;
    std::map<std::string, std::string> scalars;
    std::map<std::string, std::filesystem::path> inputs;
    std::map<std::string, std::filesystem::path> outputs;
    /// Extra catalog metadata for each output, keyed by output parameter.
    std::map<std::string, std::vector<catalog::MetadataTuple>> output_metadata;

    const std::string& scalar(const std::string& param) const;
    std::int64_t integer(const std::string& param) const;
    double floating(const std::string& param) const;
    bool boolean(const std::string& param) const;
    const std::filesystem::path& input(const std::string& param) const;
    const std::filesystem::path& output(const std::string& param) const;
};

struct Executable {
    std::function<void(JobContext&)> run;
    /// Catalog kind per output parameter; unlisted outputs are dataset files.
    std::map<std::string, catalog::ObjectKind> output_kinds;
};

class Registry {
public:
    void add(std::string key, Executable exe);
    const Executable* find(std::string_view key) const;
    std::vector<std::string> keys() const;

private:
    std::map<std::string, Executable, std::less<>> entries_;
};

struct ExecutorOptions {
    std::filesystem::path workspace;
    /// Concurrent jobs; 0 means the machine's parallelism.
    std::size_t width = 0;
};

/// Runs plans in-process: one fresh working directory per job, inputs
/// copied in read-only, outputs digested into the blob store and cataloged,
/// and one provenance record per job whatever the outcome.
class LocalExecutor {
public:
    LocalExecutor(catalog::Catalog& catalog, provenance::ProvenanceStore& provenance, BlobStore& blobs,
        const Registry& registry, ExecutorOptions options);

    /// Records in plan order. Throws UnknownExecutable before running anything.
    std::vector<provenance::ExecutionRecord> execute(const Plan& p, std::string_view dv_name);

private:
    provenance::ExecutionRecord run_job(const Job& job, std::string_view plan_id, std::string_view dv_name);

    catalog::Catalog& catalog_;
    provenance::ProvenanceStore& provenance_;
    BlobStore& blobs_;
    const Registry& registry_;
    ExecutorOptions options_;
};

} // namespace elab::planner

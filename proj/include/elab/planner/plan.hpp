#pragma once

#include "elab/common/error.hpp"
#include "elab/vdl/validate.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace elab::planner {

/// Logical file bound to a parameter of a job.
struct FileArg {
    std::string param;
    std::string lfn;

    bool operator==(const FileArg&) const = default;
};

struct Job {
    std::string id; // "j<index>"
    std::string tr_name;
    std::int64_t tr_version = 1;
    std::string executable;
    /// Every parameter in declared order: `--p=value` for scalars, `--p=@lfn` for files.
    std::vector<std::string> args;
    std::vector<FileArg> inputs;
    std::vector<FileArg> outputs;
    /// Scalars as rendered in args, in declared order.
    std::vector<std::pair<std::string, std::string>> scalars;
    std::vector<std::string> depends_on;

    std::string tr_key() const { return tr_name + ":" + std::to_string(tr_version); }

    bool operator==(const Job&) const = default;
};

struct Plan {
    std::string plan_id;
    std::vector<Job> jobs; // topological order

    const Job* find(std::string_view job_id) const;

    bool operator==(const Plan&) const = default;
};

class MissingInput : public Error {
public:
    explicit MissingInput(std::string lfn) : Error("input '" + lfn + "' is neither cataloged nor produced"), lfn_(std::move(lfn)) {}
    const std::string& lfn() const { return lfn_; }

private:
    std::string lfn_;
};

class DuplicateProducer : public Error {
public:
    explicit DuplicateProducer(std::string lfn) : Error("'" + lfn + "' is produced by more than one job"), lfn_(std::move(lfn)) {}
    const std::string& lfn() const { return lfn_; }

private:
    std::string lfn_;
};

/// Builds a job from one atomic call (no id, no dependencies yet).
Job make_job(const vdl::AtomicCall& call);

/// One job per call; a job depends on the producers of its inputs. Order is
/// topological with ties broken by call index. `is_cataloged` answers
/// whether an lfn not produced in the plan already exists.
Plan plan(const std::vector<vdl::AtomicCall>& calls, const std::function<bool(std::string_view)>& is_cataloged,
    std::string plan_id = {});

/// The job manifest handed to external schedulers; keys in fixed order.
std::string submit_grid(const Plan& p);

class ManifestError : public Error {
public:
    using Error::Error;
};

Plan parse_manifest(std::string_view text);

} // namespace elab::planner

#pragma once

#include "elab/common/error.hpp"
#include "elab/service/users.hpp"
#include "elab/vdl/types.hpp"

#include <json.hpp>

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace elab::vds {
class VirtualDataSystem;
}

namespace elab::service {

enum class Study { lifetime, flux, shower };

const char* to_string(Study s);
std::optional<Study> parse_study(std::string_view s);

struct AnalysisRequest {
    Study study = Study::lifetime;
    std::vector<std::string> inputs;
    /// Scalar parameters by name, as JSON values; absent ones take defaults.
    nlohmann::json params = nlohmann::json::object();
};

struct FieldError {
    std::string field;
    std::string message;
    /// The parameter's annotation, empty when it has none.
    std::string help;

    bool operator==(const FieldError&) const = default;
};

class InvalidAnalysis : public Error {
public:
    explicit InvalidAnalysis(std::vector<FieldError> fields);
    const std::vector<FieldError>& fields() const { return fields_; }

private:
    std::vector<FieldError> fields_;
};

class UnknownInput : public Error {
public:
    explicit UnknownInput(std::string lfn);
    const std::string& lfn() const { return lfn_; }

private:
    std::string lfn_;
};

/// The transformation a study runs for the given number of inputs.
std::string study_transformation(Study s, std::size_t n_inputs);

/// Validates the request and builds its derivation. The name is a digest of
/// (study, group, inputs, effective parameters), so identical submissions by
/// one group map to the same derivation and hit the cache.
vdl::Derivation make_analysis_derivation(vds::VirtualDataSystem& vds, const AnalysisRequest& req, GroupId group);

enum class AnalysisStatus { pending, succeeded, failed };

const char* to_string(AnalysisStatus s);

struct Analysis {
    std::string id;
    Study study = Study::lifetime;
    GroupId group_id = 0;
    std::vector<std::string> inputs;
    std::string dv_name;
    AnalysisStatus status = AnalysisStatus::pending;
    bool cached = false;
    /// Derivation output parameter → lfn; filled once succeeded.
    std::map<std::string, std::string> outputs;
    std::string error;
    std::int64_t submitted_ns = 0;
    std::int64_t finished_ns = 0;
};

nlohmann::json to_json(const Analysis& a);

/// Runs analyses on a fixed pool of worker threads.
class AnalysisRunner {
public:
    AnalysisRunner(vds::VirtualDataSystem& vds, std::size_t workers);
    ~AnalysisRunner();
    AnalysisRunner(const AnalysisRunner&) = delete;
    AnalysisRunner& operator=(const AnalysisRunner&) = delete;

    /// Validates synchronously, then queues. Throws InvalidAnalysis / UnknownInput.
    Analysis submit(const AnalysisRequest& req, GroupId group);
    std::optional<Analysis> get(const std::string& id) const;
    /// Blocks until `id` leaves pending; returns its final state.
    std::optional<Analysis> wait(const std::string& id) const;

private:
    struct Task {
        std::string id;
        vdl::Derivation dv;
    };

    void work();
    void run_task(const Task& t);

    vds::VirtualDataSystem& vds_;
    mutable std::mutex mutex_;
    mutable std::condition_variable queue_cv_;
    mutable std::condition_variable done_cv_;
    std::deque<Task> queue_;
    std::map<std::string, Analysis> analyses_;
    bool stopping_ = false;
    std::vector<std::thread> workers_;
};

} // namespace elab::service

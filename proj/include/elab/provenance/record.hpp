#pragma once

#include "elab/common/error.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace elab::provenance {

enum class Status { succeeded, failed };

const char* to_string(Status s);

struct FileUse {
    std::string param;
    std::string lfn;
    std::string digest; // empty when the file was never produced

    bool operator==(const FileUse&) const = default;
};

/// One execution of one atomic job.
struct ExecutionRecord {
    std::int64_t record_id = 0; // assigned on store
    std::string plan_id;
    std::string job_id;
    std::string dv_name;
    std::string tr_name;
    std::int64_t tr_version = 1;
    /// Scalar parameters as rendered on the job's command line.
    std::map<std::string, std::string> scalars;
    std::vector<FileUse> inputs;
    std::vector<FileUse> outputs;
    std::int64_t started_ns = 0;
    std::int64_t finished_ns = 0;
    Status status = Status::succeeded;
    std::optional<std::string> failure_detail;

    std::string tr_key() const { return tr_name + ":" + std::to_string(tr_version); }

    bool operator==(const ExecutionRecord&) const = default;
};

class InvalidRecord : public Error {
public:
    using Error::Error;
};

/// Throws InvalidRecord unless finished ≥ started and a succeeded record
/// carries a digest for every output.
void check(const ExecutionRecord& rec);

std::string to_json_line(const ExecutionRecord& rec);
ExecutionRecord record_from_json_line(std::string_view line);

} // namespace elab::provenance

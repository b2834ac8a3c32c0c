#include "elab/provenance/record.hpp"

#include <json.hpp>

namespace elab::provenance {

using json = nlohmann::ordered_json;

namespace {

json files_to_json(const std::vector<FileUse>& files)
{
    json arr = json::array();
    for (const auto& f : files) {
        arr.push_back(json { { "param", f.param }, { "lfn", f.lfn }, { "digest", f.digest } });
    }
    return arr;
}

std::vector<FileUse> files_from_json(const json& arr)
{
    std::vector<FileUse> out;
    for (const auto& f : arr) {
        out.push_back({ f.at("param").get<std::string>(), f.at("lfn").get<std::string>(),
            f.at("digest").get<std::string>() });
    }
    return out;
}

} // namespace

const char* to_string(Status s)
{
    return s == Status::succeeded ? "succeeded" : "failed";
}

void check(const ExecutionRecord& rec)
{
    if (rec.finished_ns < rec.started_ns) {
        throw InvalidRecord("record for job " + rec.job_id + " finishes before it starts");
    }
    if (rec.tr_name.empty() || rec.dv_name.empty()) {
        throw InvalidRecord("record for job " + rec.job_id + " names no transformation or derivation");
    }
    if (rec.status == Status::succeeded) {
        if (rec.outputs.empty()) {
            throw InvalidRecord("succeeded record for job " + rec.job_id + " has no outputs");
        }
        for (const auto& out : rec.outputs) {
            if (out.digest.empty()) {
                throw InvalidRecord("succeeded record for job " + rec.job_id + " lacks a digest for " + out.lfn);
            }
        }
    }
}

std::string to_json_line(const ExecutionRecord& rec)
{
    json j;
    j["record_id"] = rec.record_id;
    j["plan_id"] = rec.plan_id;
    j["job_id"] = rec.job_id;
    j["dv"] = rec.dv_name;
    j["tr"] = rec.tr_name;
    j["tr_version"] = rec.tr_version;
    j["scalars"] = json::object();
    for (const auto& [k, v] : rec.scalars) {
        j["scalars"][k] = v;
    }
    j["inputs"] = files_to_json(rec.inputs);
    j["outputs"] = files_to_json(rec.outputs);
    j["started_ns"] = rec.started_ns;
    j["finished_ns"] = rec.finished_ns;
    j["status"] = to_string(rec.status);
    j["failure_detail"] = rec.failure_detail ? json(*rec.failure_detail) : json(nullptr);
    return j.dump();
}

ExecutionRecord record_from_json_line(std::string_view line)
{
    const json j = json::parse(line);
    ExecutionRecord rec;
    rec.record_id = j.at("record_id").get<std::int64_t>();
    rec.plan_id = j.at("plan_id").get<std::string>();
    rec.job_id = j.at("job_id").get<std::string>();
    rec.dv_name = j.at("dv").get<std::string>();
    rec.tr_name = j.at("tr").get<std::string>();
    rec.tr_version = j.at("tr_version").get<std::int64_t>();
    for (const auto& [k, v] : j.at("scalars").items()) {
        rec.scalars[k] = v.get<std::string>();
    }
    rec.inputs = files_from_json(j.at("inputs"));
    rec.outputs = files_from_json(j.at("outputs"));
    rec.started_ns = j.at("started_ns").get<std::int64_t>();
    rec.finished_ns = j.at("finished_ns").get<std::int64_t>();
    const auto status = j.at("status").get<std::string>();
    if (status == "succeeded") {
        rec.status = Status::succeeded;
    } else if (status == "failed") {
        rec.status = Status::failed;
    } else {
        throw InvalidRecord("unknown status '" + status + "'");
    }
    if (!j.at("failure_detail").is_null()) {
        rec.failure_detail = j.at("failure_detail").get<std::string>();
    }
    return rec;
}

} // namespace elab::provenance

#include "elab/service/analyses.hpp"

#include "elab/common/digest.hpp"
#include "elab/common/text.hpp"
#include "elab/cosmic/lifetime.hpp"
#include "elab/cosmic/transformations.hpp"
#include "elab/vds/vds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace elab::service {

using nlohmann::json;

const char* to_string(Study s)
{
    switch (s) {
    case Study::lifetime:
        return "lifetime";
    case Study::flux:
        return "flux";
    case Study::shower:
        return "shower";
    }
    return "?";
}

std::optional<Study> parse_study(std::string_view s)
{
    for (auto st : { Study::lifetime, Study::flux, Study::shower }) {
        if (s == to_string(st)) {
            return st;
        }
    }
    return std::nullopt;
}

const char* to_string(AnalysisStatus s)
{
    switch (s) {
    case AnalysisStatus::pending:
        return "pending";
    case AnalysisStatus::succeeded:
        return "succeeded";
    case AnalysisStatus::failed:
        return "failed";
    }
    return "?";
}

namespace {

std::string describe(const std::vector<FieldError>& fields)
{
    std::string out = "invalid analysis request:";
    for (const auto& f : fields) {
        out += " " + f.field + " " + f.message + ";";
    }
    return out;
}

int saturate(std::int64_t v)
{
    return static_cast<int>(std::clamp<std::int64_t>(v, std::numeric_limits<int>::min(), std::numeric_limits<int>::max()));
}

std::optional<vdl::Literal> from_json(const json& v, vdl::ValueType want)
{
    using vdl::ValueType;
    switch (want) {
    case ValueType::integer:
        if (v.is_number_integer()) {
            return vdl::Literal { v.get<std::int64_t>() };
        }
        return std::nullopt;
    case ValueType::floating:
        if (v.is_number() && std::isfinite(v.get<double>())) {
            return vdl::Literal { v.get<double>() };
        }
        return std::nullopt;
    case ValueType::boolean:
        if (v.is_boolean()) {
            return vdl::Literal { v.get<bool>() };
        }
        return std::nullopt;
    case ValueType::string:
        if (v.is_string()) {
            return vdl::Literal { v.get<std::string>() };
        }
        return std::nullopt;
    case ValueType::logical_file:
        return std::nullopt;
    }
    return std::nullopt;
}

const char* type_phrase(vdl::ValueType t)
{
    switch (t) {
    case vdl::ValueType::integer:
        return "must be an integer";
    case vdl::ValueType::floating:
        return "must be a number";
    case vdl::ValueType::boolean:
        return "must be true or false";
    default:
        return "must be a string";
    }
}

std::string output_extension(std::string_view param)
{
    if (param == "plot") {
        return ".svg";
    }
    if (param == "series" || param == "groups") {
        return "." + std::string(param) + ".jsonl";
    }
    return "." + std::string(param) + ".json";
}

} // namespace

InvalidAnalysis::InvalidAnalysis(std::vector<FieldError> fields) : Error(describe(fields)), fields_(std::move(fields))
{
}

UnknownInput::UnknownInput(std::string lfn) : Error("unknown input file '" + lfn + "'"), lfn_(std::move(lfn))
{
}

std::string study_transformation(Study s, std::size_t n_inputs)
{
    switch (s) {
    case Study::lifetime:
        return "Lifetime";
    case Study::flux:
        return "Flux";
    case Study::shower:
        return "ShowerSearch_" + std::to_string(n_inputs);
    }
    return {};
}

vdl::Derivation make_analysis_derivation(vds::VirtualDataSystem& vds, const AnalysisRequest& req, GroupId group)
{
    std::vector<FieldError> errors;
    const auto n = req.inputs.size();
    if (req.study == Study::shower) {
        if (n < 2 || n > static_cast<std::size_t>(cosmic::max_shower_inputs)) {
            errors.push_back({ "inputs", "a shower study takes 2 to " + std::to_string(cosmic::max_shower_inputs) + " datasets", "" });
        }
    } else if (n != 1) {
        errors.push_back({ "inputs", std::string("a ") + to_string(req.study) + " study takes exactly one dataset", "" });
    }
    if (!req.params.is_object()) {
        errors.push_back({ "params", "must be an object", "" });
    }
    if (!errors.empty()) {
        throw InvalidAnalysis(std::move(errors));
    }
    for (const auto& lfn : req.inputs) {
        if (!vdl::is_valid_lfn(lfn) || !vds.has_file(lfn)) {
            throw UnknownInput(lfn);
        }
    }

    const auto* tr = vds.resolve(study_transformation(req.study, n));
    if (!tr) {
        throw Error("transformation library is not installed");
    }

    // Effective scalar values: request value, else the declared default.
    std::map<std::string, vdl::Literal> values;
    std::map<std::string, std::string> help;
    for (const auto& p : tr->params) {
        if (p.direction != vdl::Direction::scalar) {
            continue;
        }
        help[p.name] = p.annotation.value_or("");
        if (req.params.contains(p.name)) {
            if (auto lit = from_json(req.params.at(p.name), p.type)) {
                values[p.name] = vdl::coerce_literal(*lit, p.type);
            } else {
                errors.push_back({ p.name, type_phrase(p.type), help[p.name] });
            }
        } else if (p.default_value) {
            values[p.name] = vdl::coerce_literal(*p.default_value, p.type);
        } else {
            errors.push_back({ p.name, "is required", help[p.name] });
        }
    }
    for (const auto& [key, value] : req.params.items()) {
        if (!help.contains(key)) {
            errors.push_back({ key, "is not a parameter of this study", "" });
        }
    }
    if (!errors.empty()) {
        throw InvalidAnalysis(std::move(errors));
    }

    auto integer = [&](const char* k) { return std::get<std::int64_t>(values.at(k)); };
    auto floating = [&](const char* k) { return std::get<double>(values.at(k)); };
    auto add = [&](const std::string& field, const std::string& message) {
        errors.push_back({ field, message, help.contains(field) ? help[field] : "" });
    };

    switch (req.study) {
    case Study::lifetime: {
        cosmic::LifetimeParams p;
        p.coincidence_level = saturate(integer("coincidence_level"));
        p.check_second_pulse_energy = std::get<bool>(values.at("check_energy"));
        p.gate_width_s = floating("gate_width");
        p.bins = saturate(integer("bins"));
        p.fit_min_us = floating("fit_min");
        p.fit_max_us = floating("fit_max");
        for (const auto& [field, message] : cosmic::check(p)) {
            add(field, message);
        }
        break;
    }
    case Study::flux: {
        const auto level = integer("coincidence_level");
        if (level < 1 || level > 4) {
            add("coincidence_level", "must be between 1 and 4");
        }
        if (!(floating("bin_width") > 0)) {
            add("bin_width", "must be positive");
        }
        break;
    }
    case Study::shower: {
        const double w = floating("window");
        if (!(w * 1e9 >= 1 && w <= 1)) {
            add("window", "must lie between 1 ns and 1 s");
        }
        const auto k = integer("min_detectors");
        if (k < 2 || k > static_cast<std::int64_t>(n)) {
            add("min_detectors", "must be between 2 and the number of datasets");
        }
        break;
    }
    }
    if (!errors.empty()) {
        throw InvalidAnalysis(std::move(errors));
    }

    std::string canonical = std::string(to_string(req.study)) + "\ngroup=" + std::to_string(group) + "\n";
    for (const auto& lfn : req.inputs) {
        canonical += "input=" + lfn + "\n";
    }
    for (const auto& [k, v] : values) {
        canonical += k + "=" + vdl::format_literal(v) + "\n";
    }

    vdl::Derivation dv;
    dv.name = std::string(to_string(req.study)) + "-" + sha256_hex(canonical).substr(0, 16);
    dv.tr_name = tr->name;
    dv.tr_version = tr->version;
    std::size_t next_input = 0;
    for (const auto& p : tr->params) {
        switch (p.direction) {
        case vdl::Direction::input:
            dv.bindings.emplace_back(p.name, vdl::FileRef { req.inputs.at(next_input++) });
            break;
        case vdl::Direction::output:
            dv.bindings.emplace_back(p.name, vdl::FileRef { dv.name + output_extension(p.name) });
            break;
        case vdl::Direction::scalar:
            dv.bindings.emplace_back(p.name, values.at(p.name));
            break;
        }
    }
    return dv;
}

json to_json(const Analysis& a)
{
    json j { { "id", a.id }, { "study", to_string(a.study) }, { "group_id", a.group_id }, { "inputs", a.inputs },
        { "derivation", a.dv_name }, { "status", to_string(a.status) }, { "submitted_at", format_timestamp(a.submitted_ns) } };
    if (a.status != AnalysisStatus::pending) {
        j["finished_at"] = format_timestamp(a.finished_ns);
    }
    if (a.status == AnalysisStatus::succeeded) {
        j["cached"] = a.cached;
        j["outputs"] = a.outputs;
        if (auto it = a.outputs.find("plot"); it != a.outputs.end()) {
            j["plot"] = it->second;
        }
        for (const char* data : { "plotdata", "series", "groups" }) {
            if (auto it = a.outputs.find(data); it != a.outputs.end()) {
                j["data"] = it->second;
            }
        }
        if (auto it = a.outputs.find("fit"); it != a.outputs.end()) {
            j["fit"] = it->second;
        }
    }
    j["dag_available"] = a.status == AnalysisStatus::succeeded;
    if (a.status == AnalysisStatus::failed) {
        j["error"] = a.error;
    }
    return j;
}

AnalysisRunner::AnalysisRunner(vds::VirtualDataSystem& vds, std::size_t workers) : vds_(vds)
{
    workers = std::max<std::size_t>(workers, 1);
    for (std::size_t i = 0; i < workers; ++i) {
        workers_.emplace_back([this] { work(); });
    }
}

AnalysisRunner::~AnalysisRunner()
{
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    queue_cv_.notify_all();
    for (auto& t : workers_) {
        t.join();
    }
}

Analysis AnalysisRunner::submit(const AnalysisRequest& req, GroupId group)
{
    auto dv = make_analysis_derivation(vds_, req, group);
    Analysis a;
    a.id = random_token(12);
    a.study = req.study;
    a.group_id = group;
    a.inputs = req.inputs;
    a.dv_name = dv.name;
    a.submitted_ns = now_ns();
    {
        std::lock_guard lock(mutex_);
        analyses_[a.id] = a;
        queue_.push_back({ a.id, std::move(dv) });
    }
    queue_cv_.notify_one();
    return a;
}

std::optional<Analysis> AnalysisRunner::get(const std::string& id) const
{
    std::lock_guard lock(mutex_);
    auto it = analyses_.find(id);
    if (it == analyses_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<Analysis> AnalysisRunner::wait(const std::string& id) const
{
    std::unique_lock lock(mutex_);
    auto it = analyses_.find(id);
    if (it == analyses_.end()) {
        return std::nullopt;
    }
    done_cv_.wait(lock, [&] { return it->second.status != AnalysisStatus::pending; });
    return it->second;
}

void AnalysisRunner::work()
{
    while (true) {
        Task t;
        {
            std::unique_lock lock(mutex_);
            queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
            if (queue_.empty()) {
                return;
            }
            t = std::move(queue_.front());
            queue_.pop_front();
        }
        run_task(t);
    }
}

void AnalysisRunner::run_task(const Task& t)
{
    AnalysisStatus status = AnalysisStatus::failed;
    bool cached = false;
    std::map<std::string, std::string> outputs;
    std::string error;
    try {
        auto r = vds_.run(t.dv);
        cached = r.cached;
        if (r.succeeded) {
            status = AnalysisStatus::succeeded;
            outputs = std::move(r.outputs);
        } else {
            for (const auto& rec : r.records) {
                if (rec.status == provenance::Status::failed) {
                    error = rec.job_id + " (" + rec.tr_name + "): " + rec.failure_detail.value_or("failed");
                    break;
                }
            }
        }
    } catch (const std::exception& e) {
        error = e.what();
    }
    {
        std::lock_guard lock(mutex_);
        auto& a = analyses_.at(t.id);
        a.status = status;
        a.cached = cached;
        a.outputs = std::move(outputs);
        a.error = std::move(error);
        a.finished_ns = now_ns();
    }
    done_cv_.notify_all();
}

} // namespace elab::service

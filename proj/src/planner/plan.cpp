#include "elab/planner/plan.hpp"

#include <json.hpp>

#include <map>
#include <queue>
#include <set>

namespace elab::planner {

using json = nlohmann::ordered_json;

const Job* Plan::find(std::string_view job_id) const
{
    for (const auto& j : jobs) {
        if (j.id == job_id) {
            return &j;
        }
    }
    return nullptr;
}

Job make_job(const vdl::AtomicCall& call)
{
    const auto& tr = call.transformation;
    Job job;
    job.tr_name = tr.name;
    job.tr_version = tr.version;
    job.executable = std::get<vdl::AtomicBody>(tr.body).executable;
    for (const auto& p : tr.params) {
        auto it = call.bindings.find(p.name);
        if (it == call.bindings.end()) {
            throw vdl::InvalidTransformation("call to " + tr.key() + " leaves '" + p.name + "' unbound");
        }
        if (const auto* file = std::get_if<vdl::FileRef>(&it->second)) {
            job.args.push_back("--" + p.name + "=@" + file->name);
            (p.direction == vdl::Direction::output ? job.outputs : job.inputs).push_back({ p.name, file->name });
        } else {
            const auto value = vdl::render_scalar(std::get<vdl::Literal>(it->second));
            job.args.push_back("--" + p.name + "=" + value);
            job.scalars.emplace_back(p.name, value);
        }
    }
    return job;
}

Plan plan(const std::vector<vdl::AtomicCall>& calls, const std::function<bool(std::string_view)>& is_cataloged,
    std::string plan_id)
{
    std::vector<Job> jobs;
    std::map<std::string, std::size_t> producer;
    for (std::size_t i = 0; i < calls.size(); ++i) {
        jobs.push_back(make_job(calls[i]));
        jobs.back().id = "j" + std::to_string(i);
        for (const auto& out : jobs.back().outputs) {
            if (!producer.emplace(out.lfn, i).second) {
                throw DuplicateProducer(out.lfn);
            }
        }
    }

    std::vector<std::set<std::size_t>> deps(jobs.size());
    std::vector<std::vector<std::size_t>> dependents(jobs.size());
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        for (const auto& in : jobs[i].inputs) {
            auto it = producer.find(in.lfn);
            if (it == producer.end()) {
                if (!is_cataloged || !is_cataloged(in.lfn)) {
                    throw MissingInput(in.lfn);
                }
                continue;
            }
            if (it->second == i) {
                throw DuplicateProducer(in.lfn);
            }
            if (deps[i].insert(it->second).second) {
                dependents[it->second].push_back(i);
            }
        }
    }

    std::vector<std::size_t> pending(jobs.size());
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        pending[i] = deps[i].size();
        if (pending[i] == 0) {
            ready.push(i);
        }
    }
    Plan p;
    p.plan_id = std::move(plan_id);
    while (!ready.empty()) {
        const auto i = ready.top();
        ready.pop();
        Job job = jobs[i];
        for (auto d : deps[i]) {
            job.depends_on.push_back(jobs[d].id);
        }
        p.jobs.push_back(std::move(job));
        for (auto next : dependents[i]) {
            if (--pending[next] == 0) {
                ready.push(next);
            }
        }
    }
    if (p.jobs.size() != jobs.size()) {
        throw vdl::CycleDetected({ "plan " + p.plan_id });
    }
    return p;
}

std::string submit_grid(const Plan& p)
{
    json jobs = json::array();
    for (const auto& job : p.jobs) {
        json inputs = json::array();
        for (const auto& in : job.inputs) {
            inputs.push_back(in.lfn);
        }
        json outputs = json::array();
        for (const auto& out : job.outputs) {
            outputs.push_back(out.lfn);
        }
        jobs.push_back(json { { "id", job.id }, { "tr", job.tr_key() }, { "exe", job.executable }, { "args", job.args },
            { "inputs", inputs }, { "outputs", outputs }, { "depends_on", job.depends_on } });
    }
    json doc { { "plan_id", p.plan_id }, { "jobs", jobs } };
    return doc.dump(2) + "\n";
}

Plan parse_manifest(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ManifestError(std::string("manifest is not JSON: ") + e.what());
    }
    try {
        Plan p;
        p.plan_id = doc.at("plan_id").get<std::string>();
        for (const auto& jj : doc.at("jobs")) {
            Job job;
            job.id = jj.at("id").get<std::string>();
            const auto tr = jj.at("tr").get<std::string>();
            const auto colon = tr.rfind(':');
            if (colon == std::string::npos) {
                throw ManifestError("job " + job.id + ": tr '" + tr + "' lacks a version");
            }
            job.tr_name = tr.substr(0, colon);
            job.tr_version = std::stoll(tr.substr(colon + 1));
            job.executable = jj.at("exe").get<std::string>();
            job.args = jj.at("args").get<std::vector<std::string>>();
            job.depends_on = jj.at("depends_on").get<std::vector<std::string>>();
            const auto in_lfns = jj.at("inputs").get<std::vector<std::string>>();
            const auto out_lfns = jj.at("outputs").get<std::vector<std::string>>();
            std::size_t next_in = 0;
            std::size_t next_out = 0;
            for (const auto& arg : job.args) {
                const auto eq = arg.find('=');
                if (!arg.starts_with("--") || eq == std::string::npos) {
                    throw ManifestError("job " + job.id + ": malformed argument '" + arg + "'");
                }
                auto param = arg.substr(2, eq - 2);
                auto value = arg.substr(eq + 1);
                if (value.starts_with("@")) {
                    const auto lfn = value.substr(1);
                    if (next_in < in_lfns.size() && in_lfns[next_in] == lfn) {
                        job.inputs.push_back({ param, lfn });
                        ++next_in;
                        continue;
                    }
                    if (next_out < out_lfns.size() && out_lfns[next_out] == lfn) {
                        job.outputs.push_back({ param, lfn });
                        ++next_out;
                        continue;
                    }
                }
                job.scalars.emplace_back(std::move(param), std::move(value));
            }
            if (next_in != in_lfns.size() || next_out != out_lfns.size()) {
                throw ManifestError("job " + job.id + ": file lists disagree with arguments");
            }
            p.jobs.push_back(std::move(job));
        }
        return p;
    } catch (const json::exception& e) {
        throw ManifestError(std::string("malformed manifest: ") + e.what());
    }
}

} // namespace elab::planner

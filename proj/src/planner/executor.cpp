#include "elab/planner/executor.hpp"

#include "elab/common/digest.hpp"
#include "elab/common/text.hpp"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

namespace elab::planner {

namespace fs = std::filesystem;

const std::string& JobContext::scalar(const std::string& param) const
{
    auto it = scalars.find(param);
    if (it == scalars.end()) {
        throw JobError("missing scalar argument '" + param + "'");
    }
    return it->second;
}

std::int64_t JobContext::integer(const std::string& param) const
{
    auto v = parse_int(scalar(param));
    if (!v) {
        throw JobError("argument '" + param + "' is not an integer: " + scalar(param));
    }
    return *v;
}

double JobContext::floating(const std::string& param) const
{
    auto v = parse_double(scalar(param));
    if (!v) {
        throw JobError("argument '" + param + "' is not a number: " + scalar(param));
    }
    return *v;
}

bool JobContext::boolean(const std::string& param) const
{
    const auto& s = scalar(param);
    if (s == "true") {
        return true;
    }
    if (s == "false") {
        return false;
    }
    throw JobError("argument '" + param + "' is not a boolean: " + s);
}

const fs::path& JobContext::input(const std::string& param) const
{
    auto it = inputs.find(param);
    if (it == inputs.end()) {
        throw JobError("missing input '" + param + "'");
    }
    return it->second;
}

const fs::path& JobContext::output(const std::string& param) const
{
    auto it = outputs.find(param);
    if (it == outputs.end()) {
        throw JobError("missing output '" + param + "'");
    }
    return it->second;
}

void Registry::add(std::string key, Executable exe)
{
    entries_.insert_or_assign(std::move(key), std::move(exe));
}

const Executable* Registry::find(std::string_view key) const
{
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> Registry::keys() const
{
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_) {
        out.push_back(k);
    }
    return out;
}

LocalExecutor::LocalExecutor(catalog::Catalog& catalog, provenance::ProvenanceStore& provenance, BlobStore& blobs,
    const Registry& registry, ExecutorOptions options)
    : catalog_(catalog)
    , provenance_(provenance)
    , blobs_(blobs)
    , registry_(registry)
    , options_(std::move(options))
{
    if (options_.width == 0) {
        options_.width = std::max(1u, std::thread::hardware_concurrency());
    }
}

provenance::ExecutionRecord LocalExecutor::run_job(const Job& job, std::string_view plan_id, std::string_view dv_name)
{
    provenance::ExecutionRecord rec;
    rec.plan_id = std::string(plan_id);
    rec.job_id = job.id;
    rec.dv_name = std::string(dv_name);
    rec.tr_name = job.tr_name;
    rec.tr_version = job.tr_version;
    for (const auto& [k, v] : job.scalars) {
        rec.scalars[k] = v;
    }
    for (const auto& out : job.outputs) {
        rec.outputs.push_back({ out.param, out.lfn, "" });
    }
    rec.started_ns = now_ns();

    const fs::path workdir = options_.workspace / std::string(plan_id.empty() ? "plan" : plan_id)
        / (job.id + "-" + random_token(6));
    try {
        const auto* exe = registry_.find(job.executable);
        if (!exe) {
            throw UnknownExecutable(job.executable);
        }
        fs::create_directories(workdir / "in");
        fs::create_directories(workdir / "out");
        JobContext ctx { job, workdir, {}, {}, {}, {} };
        for (const auto& [k, v] : job.scalars) {
            ctx.scalars[k] = v;
        }
        for (const auto& in : job.inputs) {
            auto obj = catalog_.find_file(in.lfn);
            if (!obj || !blobs_.contains(obj->payload)) {
                throw JobError("input '" + in.lfn + "' has no stored content");
            }
            const fs::path dest = workdir / "in" / in.param;
            fs::copy_file(blobs_.path(obj->payload), dest, fs::copy_options::overwrite_existing);
            fs::permissions(dest, fs::perms::owner_read | fs::perms::group_read | fs::perms::others_read);
            rec.inputs.push_back({ in.param, in.lfn, sha256_file(dest) });
            ctx.inputs[in.param] = dest;
        }
        for (const auto& out : job.outputs) {
            ctx.outputs[out.param] = workdir / "out" / out.param;
        }

        exe->run(ctx);

        std::vector<catalog::CatalogObject> products;
        for (auto& out : rec.outputs) {
            const auto path = ctx.outputs.at(out.param);
            if (!fs::is_regular_file(path)) {
                throw JobError("output '" + out.param + "' was not written");
            }
            out.digest = blobs_.put_file(path);
            catalog::CatalogObject obj;
            auto kind = exe->output_kinds.find(out.param);
            obj.kind = kind == exe->output_kinds.end() ? catalog::ObjectKind::dataset_file : kind->second;
            obj.name = out.lfn;
            obj.payload = out.digest;
            obj.add(catalog::MetadataTuple::string("derivation", { std::string(dv_name) }));
            obj.add(catalog::MetadataTuple::string("transformation", { job.tr_key() }));
            obj.add(catalog::MetadataTuple::integer(
                "size_bytes", { static_cast<std::int64_t>(fs::file_size(blobs_.path(out.digest))) }));
            if (auto md = ctx.output_metadata.find(out.param); md != ctx.output_metadata.end()) {
                for (const auto& t : md->second) {
                    obj.add(t);
                }
            }
            products.push_back(std::move(obj));
        }
        for (const auto& obj : products) {
            catalog_.register_object(obj);
        }
        rec.status = provenance::Status::succeeded;
    } catch (const std::exception& e) {
        rec.status = provenance::Status::failed;
        rec.failure_detail = e.what();
        for (auto& out : rec.outputs) {
            out.digest.clear();
        }
    }
    std::error_code ec;
    fs::remove_all(workdir, ec);
    rec.finished_ns = std::max(now_ns(), rec.started_ns);
    rec.record_id = provenance_.record_execution(rec);
    return rec;
}

std::vector<provenance::ExecutionRecord> LocalExecutor::execute(const Plan& p, std::string_view dv_name)
{
    for (const auto& job : p.jobs) {
        if (!registry_.find(job.executable)) {
            throw UnknownExecutable(job.executable);
        }
    }
    const std::size_t n = p.jobs.size();
    if (n == 0) {
        return {};
    }

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) {
        index[p.jobs[i].id] = i;
    }
    std::vector<std::size_t> pending(n);
    std::vector<std::vector<std::size_t>> dependents(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& d : p.jobs[i].depends_on) {
            auto it = index.find(d);
            if (it == index.end()) {
                throw ManifestError("job " + p.jobs[i].id + " depends on unknown job " + d);
            }
            dependents[it->second].push_back(i);
            ++pending[i];
        }
    }

    std::vector<provenance::ExecutionRecord> records(n);
    std::vector<bool> upstream_failed(n, false);
    std::deque<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i) {
        if (pending[i] == 0) {
            ready.push_back(i);
        }
    }
    std::mutex mutex;
    std::condition_variable cv;
    std::size_t done = 0;

    auto skip_record = [&](const Job& job) {
        provenance::ExecutionRecord rec;
        rec.plan_id = p.plan_id;
        rec.job_id = job.id;
        rec.dv_name = std::string(dv_name);
        rec.tr_name = job.tr_name;
        rec.tr_version = job.tr_version;
        for (const auto& [k, v] : job.scalars) {
            rec.scalars[k] = v;
        }
        for (const auto& in : job.inputs) {
            auto obj = catalog_.find_file(in.lfn);
            rec.inputs.push_back({ in.param, in.lfn, obj ? obj->payload : "" });
        }
        for (const auto& out : job.outputs) {
            rec.outputs.push_back({ out.param, out.lfn, "" });
        }
        rec.started_ns = rec.finished_ns = now_ns();
        rec.status = provenance::Status::failed;
        rec.failure_detail = "upstream failure";
        rec.record_id = provenance_.record_execution(rec);
        return rec;
    };

    auto worker = [&] {
        std::unique_lock lock(mutex);
        while (true) {
            cv.wait(lock, [&] { return !ready.empty() || done == n; });
            if (done == n) {
                return;
            }
            const auto i = ready.front();
            ready.pop_front();
            const bool skip = upstream_failed[i];
            lock.unlock();
            auto rec = skip ? skip_record(p.jobs[i]) : run_job(p.jobs[i], p.plan_id, dv_name);
            lock.lock();
            const bool failed = rec.status == provenance::Status::failed;
            records[i] = std::move(rec);
            ++done;
            for (auto next : dependents[i]) {
                if (failed) {
                    upstream_failed[next] = true;
                }
                if (--pending[next] == 0) {
                    ready.push_back(next);
                }
            }
            cv.notify_all();
        }
    };

    const std::size_t width = std::min(options_.width, n);
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < width; ++t) {
        threads.emplace_back(worker);
    }
    worker();
    for (auto& t : threads) {
        t.join();
    }
    return records;
}

} // namespace elab::planner

#include "elab/vds/vds.hpp"

#include "elab/common/digest.hpp"
#include "elab/common/text.hpp"
#include "elab/vdl/parser.hpp"

#include <algorithm>

namespace elab::vds {

namespace {

std::string join_problems(const std::vector<vdl::Problem>& problems)
{
    std::string out;
    for (const auto& p : problems) {
        if (!out.empty()) {
            out += "; ";
        }
        out += vdl::describe(p);
    }
    return out;
}

} // namespace

InvalidDerivation::InvalidDerivation(std::string dv_name, std::vector<vdl::Problem> problems)
    : Error("derivation " + dv_name + ": " + join_problems(problems))
    , problems_(std::move(problems))
{
}

std::string suffix_lfn(std::string_view lfn, std::string_view suffix)
{
    const auto slash = lfn.find_last_of('/');
    const auto base = slash == std::string_view::npos ? 0 : slash + 1;
    const auto dot = lfn.find_last_of('.');
    if (dot == std::string_view::npos || dot <= base) {
        return std::string(lfn) + std::string(suffix);
    }
    return std::string(lfn.substr(0, dot)) + std::string(suffix) + std::string(lfn.substr(dot));
}

VirtualDataSystem::VirtualDataSystem(catalog::Catalog& catalog, provenance::ProvenanceStore& provenance,
    BlobStore& blobs, const planner::Registry& registry, planner::ExecutorOptions options)
    : catalog_(catalog)
    , provenance_(provenance)
    , blobs_(blobs)
    , executor_(catalog, provenance, blobs, registry, std::move(options))
{
}

std::vector<catalog::ObjectId> VirtualDataSystem::define(std::string_view vdl_source)
{
    std::vector<catalog::ObjectId> ids;
    for (const auto& def : vdl::parse_vdl(vdl_source)) {
        ids.push_back(std::visit([&](const auto& d) { return define(d); }, def));
    }
    return ids;
}

catalog::ObjectId VirtualDataSystem::define(const vdl::Transformation& tr)
{
    vdl::validate_transformation(tr, resolver());
    catalog::CatalogObject obj;
    obj.kind = catalog::ObjectKind::transformation;
    obj.name = tr.key();
    obj.payload = vdl::serialize(vdl::Definition { tr });
    obj.add(catalog::MetadataTuple::string("name", { tr.name }));
    obj.add(catalog::MetadataTuple::integer("version", { tr.version }));
    if (const auto* atomic = std::get_if<vdl::AtomicBody>(&tr.body)) {
        obj.add(catalog::MetadataTuple::string("body", { "atomic" }));
        obj.add(catalog::MetadataTuple::string("executable", { atomic->executable }));
    } else {
        obj.add(catalog::MetadataTuple::string("body", { "compound" }));
    }
    return catalog_.register_object(obj);
}

catalog::ObjectId VirtualDataSystem::define(const vdl::Derivation& dv)
{
    const auto* tr = resolve(dv.tr_name, dv.tr_version);
    if (!tr) {
        throw vdl::UnresolvedTransformation(dv.tr_name + ":" + std::to_string(dv.tr_version));
    }
    auto report = vdl::validate_derivation(dv, *tr);
    if (!report.ok()) {
        throw InvalidDerivation(dv.name, report.problems);
    }
    catalog::CatalogObject obj;
    obj.kind = catalog::ObjectKind::derivation;
    obj.name = dv.name;
    obj.payload = vdl::serialize(vdl::Definition { dv });
    obj.add(catalog::MetadataTuple::string("transformation", { tr->key() }));
    return catalog_.register_object(obj);
}

const vdl::Transformation* VirtualDataSystem::resolve(std::string_view name, std::optional<std::int64_t> version)
{
    std::string key;
    if (version) {
        key = std::string(name) + ":" + std::to_string(*version);
    } else {
        std::int64_t best = -1;
        const std::string prefix = std::string(name) + ":";
        for (const auto& obj : catalog_.list_by_kind(catalog::ObjectKind::transformation)) {
            if (obj.name.starts_with(prefix)) {
                if (auto v = parse_int(std::string_view(obj.name).substr(prefix.size())); v && *v > best) {
                    best = *v;
                }
            }
        }
        if (best < 0) {
            return nullptr;
        }
        key = prefix + std::to_string(best);
    }
    std::lock_guard lock(tr_mutex_);
    if (auto it = tr_cache_.find(key); it != tr_cache_.end()) {
        return it->second.get();
    }
    auto obj = catalog_.find(catalog::ObjectKind::transformation, key);
    if (!obj) {
        return nullptr;
    }
    auto defs = vdl::parse_vdl(obj->payload);
    if (defs.size() != 1 || !std::holds_alternative<vdl::Transformation>(defs.front())) {
        throw vdl::InvalidTransformation("catalog entry " + key + " does not hold one transformation");
    }
    auto tr = std::make_unique<vdl::Transformation>(std::get<vdl::Transformation>(std::move(defs.front())));
    return tr_cache_.emplace(key, std::move(tr)).first->second.get();
}

vdl::Resolver VirtualDataSystem::resolver()
{
    return [this](std::string_view name, std::optional<std::int64_t> version) { return resolve(name, version); };
}

std::optional<vdl::Derivation> VirtualDataSystem::derivation(std::string_view name) const
{
    auto obj = catalog_.find(catalog::ObjectKind::derivation, name);
    if (!obj) {
        return std::nullopt;
    }
    auto defs = vdl::parse_vdl(obj->payload);
    if (defs.size() != 1 || !std::holds_alternative<vdl::Derivation>(defs.front())) {
        throw InvalidDerivation(std::string(name), {});
    }
    return std::get<vdl::Derivation>(std::move(defs.front()));
}

catalog::ObjectId VirtualDataSystem::import_file(std::string_view lfn, std::string_view bytes,
    const std::vector<catalog::MetadataTuple>& metadata, catalog::ObjectKind kind)
{
    catalog::CatalogObject obj;
    obj.kind = kind;
    obj.name = std::string(lfn);
    obj.payload = blobs_.put(bytes);
    for (const auto& t : metadata) {
        obj.add(t);
    }
    return catalog_.register_object(obj);
}

std::string VirtualDataSystem::read_file(std::string_view lfn) const
{
    auto obj = catalog_.find_file(lfn);
    if (!obj) {
        throw provenance::UnknownFile(std::string(lfn));
    }
    return blobs_.get(obj->payload);
}

bool VirtualDataSystem::has_file(std::string_view lfn) const
{
    return catalog_.find_file(lfn).has_value();
}

planner::Plan VirtualDataSystem::plan(const vdl::Derivation& dv)
{
    const auto* tr = resolve(dv.tr_name, dv.tr_version);
    if (!tr) {
        throw vdl::UnresolvedTransformation(dv.tr_name + ":" + std::to_string(dv.tr_version));
    }
    auto report = vdl::validate_derivation(dv, *tr);
    if (!report.ok()) {
        throw InvalidDerivation(dv.name, report.problems);
    }
    const auto calls = vdl::expand_compound(*tr, report.effective, resolver(), dv.name);
    return planner::plan(calls, [this](std::string_view lfn) { return has_file(lfn); }, dv.name);
}

std::optional<CacheHit> VirtualDataSystem::check_cache(const vdl::Derivation& dv)
{
    const auto p = plan(dv);
    if (p.jobs.empty()) {
        return std::nullopt;
    }
    const auto log = provenance_.records();
    // Plan lfn → (prior lfn, digest) for files produced earlier in this plan.
    std::map<std::string, std::pair<std::string, std::string>> produced;
    CacheHit hit;
    for (const auto& job : p.jobs) {
        std::map<std::string, std::string> want_inputs;
        for (const auto& in : job.inputs) {
            if (auto it = produced.find(in.lfn); it != produced.end()) {
                want_inputs[in.param] = it->second.second;
            } else if (auto obj = catalog_.find_file(in.lfn)) {
                want_inputs[in.param] = obj->payload;
            } else {
                return std::nullopt;
            }
        }
        std::map<std::string, std::string> want_scalars(job.scalars.begin(), job.scalars.end());
        const provenance::ExecutionRecord* match = nullptr;
        for (auto it = log.rbegin(); it != log.rend() && !match; ++it) {
            const auto& rec = *it;
            if (rec.status != provenance::Status::succeeded || rec.tr_name != job.tr_name
                || rec.tr_version != job.tr_version || rec.scalars != want_scalars) {
                continue;
            }
            std::map<std::string, std::string> got_inputs;
            for (const auto& in : rec.inputs) {
                got_inputs[in.param] = in.digest;
            }
            if (got_inputs != want_inputs) {
                continue;
            }
            const bool outputs_intact = std::all_of(rec.outputs.begin(), rec.outputs.end(), [&](const auto& out) {
                auto obj = catalog_.find_file(out.lfn);
                return obj && obj->payload == out.digest && blobs_.contains(out.digest);
            });
            if (outputs_intact) {
                match = &rec;
            }
        }
        if (!match) {
            return std::nullopt;
        }
        hit.record_ids.push_back(match->record_id);
        for (const auto& out : job.outputs) {
            auto prior = std::find_if(match->outputs.begin(), match->outputs.end(),
                [&](const auto& o) { return o.param == out.param; });
            if (prior == match->outputs.end()) {
                return std::nullopt;
            }
            produced[out.lfn] = { prior->lfn, prior->digest };
        }
    }
    for (const auto& [param, arg] : dv.bindings) {
        const auto* file = std::get_if<vdl::FileRef>(&arg);
        if (!file) {
            continue;
        }
        if (auto it = produced.find(file->name); it != produced.end()) {
            hit.outputs[param] = it->second.first;
        }
    }
    return hit;
}

RunResult VirtualDataSystem::run(const vdl::Derivation& dv, bool use_cache)
{
    define(dv);
    RunResult result;
    result.dv_name = dv.name;
    if (use_cache) {
        if (auto hit = check_cache(dv)) {
            result.cached = true;
            result.succeeded = true;
            result.outputs = std::move(hit->outputs);
            return result;
        }
    }
    const auto p = plan(dv);
    result.records = executor_.execute(p, dv.name);
    result.succeeded = std::all_of(result.records.begin(), result.records.end(),
        [](const auto& r) { return r.status == provenance::Status::succeeded; });
    const auto* tr = resolve(dv.tr_name, dv.tr_version);
    for (const auto& [param, arg] : dv.bindings) {
        const auto* spec = tr->find_param(param);
        if (spec && spec->direction == vdl::Direction::output) {
            result.outputs[param] = std::get<vdl::FileRef>(arg).name;
        }
    }
    return result;
}

RunResult VirtualDataSystem::run(std::string_view dv_name, bool use_cache)
{
    auto dv = derivation(dv_name);
    if (!dv) {
        throw UnknownDerivation("unknown derivation '" + std::string(dv_name) + "'");
    }
    return run(*dv, use_cache);
}

RunResult VirtualDataSystem::rederive(std::string_view lfn, const std::map<std::string, vdl::Literal>& overrides)
{
    auto producer = provenance_.latest_producer(lfn);
    if (!producer) {
        if (has_file(lfn)) {
            throw NotDerived("'" + std::string(lfn) + "' was uploaded, not derived");
        }
        throw provenance::UnknownFile(std::string(lfn));
    }
    auto dv = derivation(producer->dv_name);
    if (!dv) {
        throw UnknownDerivation("derivation '" + producer->dv_name + "' is not cataloged");
    }
    if (overrides.empty()) {
        return run(*dv, false);
    }

    const auto* tr = resolve(dv->tr_name, dv->tr_version);
    std::string canonical;
    for (const auto& [param, value] : overrides) {
        const auto* spec = tr->find_param(param);
        if (!spec || spec->direction != vdl::Direction::scalar) {
            throw OverrideTypeMismatch("'" + param + "' is not a scalar parameter of " + tr->key());
        }
        if (!vdl::literal_fits(value, spec->type)) {
            throw OverrideTypeMismatch("override for '" + param + "' must be " + vdl::to_string(spec->type) + ", got "
                + vdl::to_string(vdl::literal_type(value)));
        }
        canonical += param + "=" + vdl::format_literal(vdl::coerce_literal(value, spec->type)) + ";";
    }
    const std::string suffix = "-" + sha256_hex(canonical).substr(0, 8);

    vdl::Derivation next;
    next.name = dv->name + suffix;
    next.tr_name = dv->tr_name;
    next.tr_version = dv->tr_version;
    std::map<std::string, vdl::Literal> remaining = overrides;
    for (const auto& [param, arg] : dv->bindings) {
        const auto* spec = tr->find_param(param);
        if (spec && spec->direction == vdl::Direction::output) {
            next.bindings.emplace_back(param, vdl::FileRef { suffix_lfn(std::get<vdl::FileRef>(arg).name, suffix) });
        } else if (auto it = remaining.find(param); it != remaining.end()) {
            next.bindings.emplace_back(param, vdl::coerce_literal(it->second, spec->type));
            remaining.erase(it);
        } else {
            next.bindings.emplace_back(param, arg);
        }
    }
    for (const auto& [param, value] : remaining) {
        next.bindings.emplace_back(param, vdl::coerce_literal(value, tr->find_param(param)->type));
    }
    return run(next, false);
}

provenance::WorkflowDag VirtualDataSystem::build_dag(std::string_view lfn) const
{
    return provenance_.build_dag(lfn, [this](std::string_view f) { return has_file(f); });
}

} // namespace elab::vds

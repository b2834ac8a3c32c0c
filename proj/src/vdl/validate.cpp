#include "elab/vdl/validate.hpp"

#include <algorithm>
#include <queue>
#include <set>

namespace elab::vdl {

std::string describe(const Problem& p)
{
    struct Visitor {
        std::string operator()(const MissingBinding& m) const { return "missing binding for '" + m.param + "'"; }
        std::string operator()(const TypeMismatch& t) const
        {
            return "parameter '" + t.param + "' expects " + t.expected + ", got " + t.got;
        }
        std::string operator()(const UnknownParam& u) const { return "unknown parameter '" + u.name + "'"; }
        std::string operator()(const FileConflict& f) const
        {
            return "logical file '" + f.lfn + "' is bound as both input and output";
        }
    };
    return std::visit(Visitor {}, p);
}

namespace {

std::string argument_kind(const Argument& arg)
{
    if (std::holds_alternative<FileRef>(arg)) {
        return to_string(ValueType::logical_file);
    }
    return to_string(literal_type(std::get<Literal>(arg)));
}

} // namespace

ValidationReport validate_derivation(const Derivation& dv, const Transformation& tr)
{
    ValidationReport report;
    for (const auto& [key, arg] : dv.bindings) {
        const ParamSpec* p = tr.find_param(key);
        if (!p) {
            report.problems.emplace_back(UnknownParam { key });
            continue;
        }
        if (p->direction == Direction::scalar) {
            const auto* lit = std::get_if<Literal>(&arg);
            if (!lit || !literal_fits(*lit, p->type)) {
                report.problems.emplace_back(TypeMismatch { key, to_string(p->type), argument_kind(arg) });
                continue;
            }
            report.effective.emplace(key, coerce_literal(*lit, p->type));
        } else {
            const auto* f = std::get_if<FileRef>(&arg);
            if (!f || !is_valid_lfn(f->name)) {
                report.problems.emplace_back(TypeMismatch { key, to_string(ValueType::logical_file),
                    f ? "invalid logical file name" : argument_kind(arg) });
                continue;
            }
            report.effective.emplace(key, arg);
        }
    }
    for (const auto& p : tr.params) {
        if (report.effective.contains(p.name) || dv.find_binding(p.name)) {
            continue;
        }
        if (p.direction == Direction::scalar && p.default_value) {
            report.effective.emplace(p.name, *p.default_value);
        } else {
            report.problems.emplace_back(MissingBinding { p.name });
        }
    }

    std::set<std::string> inputs;
    std::set<std::string> outputs;
    for (const auto& p : tr.params) {
        auto it = report.effective.find(p.name);
        if (it == report.effective.end() || p.direction == Direction::scalar) {
            continue;
        }
        const auto& lfn = std::get<FileRef>(it->second).name;
        if (p.direction == Direction::input) {
            inputs.insert(lfn);
        } else if (!outputs.insert(lfn).second) {
            report.problems.emplace_back(FileConflict { lfn });
        }
    }
    for (const auto& lfn : outputs) {
        if (inputs.contains(lfn)) {
            report.problems.emplace_back(FileConflict { lfn });
        }
    }
    return report;
}

UnresolvedTransformation::UnresolvedTransformation(std::string name)
    : Error("unresolved transformation '" + name + "'")
    , name_(std::move(name))
{
}

namespace {

std::string join_path(const std::vector<std::string>& path)
{
    std::string out;
    for (const auto& p : path) {
        if (!out.empty()) {
            out += " -> ";
        }
        out += p;
    }
    return out;
}

void check_params(const Transformation& tr)
{
    std::set<std::string> names;
    for (const auto& p : tr.params) {
        if (!is_identifier(p.name)) {
            throw InvalidTransformation(tr.key() + ": invalid parameter name '" + p.name + "'");
        }
        if (!names.insert(p.name).second) {
            throw InvalidTransformation(tr.key() + ": duplicate parameter '" + p.name + "'");
        }
        const bool file_param = p.direction != Direction::scalar;
        if (file_param != (p.type == ValueType::logical_file)) {
            throw InvalidTransformation(tr.key() + ": parameter '" + p.name + "' direction and type disagree");
        }
        if (p.default_value && (file_param || !literal_fits(*p.default_value, p.type))) {
            throw InvalidTransformation(tr.key() + ": bad default for '" + p.name + "'");
        }
    }
    if (!is_identifier(tr.name) || tr.version < 0) {
        throw InvalidTransformation("invalid transformation name/version '" + tr.key() + "'");
    }
}

struct CallFlow {
    // Per call: file names (caller params or locals) consumed and produced.
    std::vector<std::vector<std::string>> consumes;
    std::vector<std::vector<std::string>> produces;
};

CallFlow call_flow(const CompoundBody& body, const std::vector<const Transformation*>& callees)
{
    CallFlow flow;
    flow.consumes.resize(body.calls.size());
    flow.produces.resize(body.calls.size());
    for (std::size_t i = 0; i < body.calls.size(); ++i) {
        for (const auto& [key, arg] : body.calls[i].bindings) {
            const auto* f = std::get_if<FileRef>(&arg);
            const ParamSpec* p = callees[i]->find_param(key);
            if (!f || !p || p->direction == Direction::scalar) {
                continue;
            }
            (p->direction == Direction::input ? flow.consumes : flow.produces)[i].push_back(f->name);
        }
    }
    return flow;
}

/// Kahn's algorithm with ties broken by call index. Throws on a data-flow cycle.
std::vector<std::size_t> call_order(const Transformation& tr, const CallFlow& flow)
{
    const std::size_t n = flow.consumes.size();
    std::map<std::string, std::size_t> producer;
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& name : flow.produces[i]) {
            producer.emplace(name, i);
        }
    }
    std::vector<std::set<std::size_t>> successors(n);
    std::vector<std::size_t> indegree(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
        std::set<std::size_t> deps;
        for (const auto& name : flow.consumes[j]) {
            auto it = producer.find(name);
            if (it != producer.end() && it->second != j) {
                deps.insert(it->second);
            } else if (it != producer.end()) {
                throw CycleDetected({ tr.key(), "call " + std::to_string(j) + " consumes its own output '" + name + "'" });
            }
        }
        for (auto d : deps) {
            successors[d].insert(j);
            ++indegree[j];
        }
    }
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t i = 0; i < n; ++i) {
        if (indegree[i] == 0) {
            ready.push(i);
        }
    }
    std::vector<std::size_t> order;
    while (!ready.empty()) {
        const auto i = ready.top();
        ready.pop();
        order.push_back(i);
        for (auto s : successors[i]) {
            if (--indegree[s] == 0) {
                ready.push(s);
            }
        }
    }
    if (order.size() != n) {
        throw CycleDetected({ tr.key(), "data flow between calls" });
    }
    return order;
}

void validate_rec(const Transformation& tr, const Resolver& resolve, std::vector<std::string>& path)
{
    check_params(tr);
    if (const auto* atomic = std::get_if<AtomicBody>(&tr.body)) {
        if (atomic->executable.empty()) {
            throw InvalidTransformation(tr.key() + ": empty executable key");
        }
        return;
    }
    const auto& body = std::get<CompoundBody>(tr.body);
    if (body.calls.empty()) {
        throw InvalidTransformation(tr.key() + ": compound body has no calls");
    }

    std::vector<const Transformation*> callees;
    for (const auto& call : body.calls) {
        if (call.transformation == tr.name
            || std::find(path.begin(), path.end(), call.transformation) != path.end()) {
            auto cycle = path;
            cycle.push_back(tr.name);
            cycle.push_back(call.transformation);
            throw CycleDetected(std::move(cycle));
        }
        const Transformation* callee = resolve(call.transformation, std::nullopt);
        if (!callee) {
            throw UnresolvedTransformation(call.transformation);
        }
        callees.push_back(callee);
    }

    std::map<std::string, int> local_producers;
    std::map<std::string, int> output_producers;
    std::set<std::string> local_consumed;
    for (std::size_t i = 0; i < body.calls.size(); ++i) {
        const auto& call = body.calls[i];
        const Transformation& callee = *callees[i];
        const std::string where = tr.key() + " call " + std::to_string(i) + " (" + callee.name + ")";
        for (const auto& [key, arg] : call.bindings) {
            const ParamSpec* p = callee.find_param(key);
            if (!p) {
                throw InvalidTransformation(where + ": unknown parameter '" + key + "'");
            }
            if (const auto* lit = std::get_if<Literal>(&arg)) {
                if (p->direction != Direction::scalar || !literal_fits(*lit, p->type)) {
                    throw InvalidTransformation(where + ": literal cannot bind '" + key + "'");
                }
                continue;
            }
            const auto& ref = std::get<FileRef>(arg).name;
            const ParamSpec* outer = tr.find_param(ref);
            if (p->direction == Direction::scalar) {
                if (!outer || outer->direction != Direction::scalar
                    || !(outer->type == p->type || (outer->type == ValueType::integer && p->type == ValueType::floating))) {
                    throw InvalidTransformation(where + ": '" + key + "' must bind a compatible scalar parameter");
                }
                continue;
            }
            if (outer) {
                if (outer->direction == Direction::scalar) {
                    throw InvalidTransformation(where + ": file parameter '" + key + "' bound to scalar '" + ref + "'");
                }
                if (p->direction == Direction::output) {
                    if (outer->direction == Direction::input) {
                        throw InvalidTransformation(where + ": output '" + key + "' would overwrite input '" + ref + "'");
                    }
                    ++output_producers[ref];
                }
            } else if (p->direction == Direction::output) {
                ++local_producers[ref];
            } else {
                local_consumed.insert(ref);
            }
        }
        for (const auto& p : callee.params) {
            const bool bound = std::any_of(call.bindings.begin(), call.bindings.end(),
                [&](const auto& b) { return b.first == p.name; });
            if (!bound && !(p.direction == Direction::scalar && p.default_value)) {
                throw InvalidTransformation(where + ": required parameter '" + p.name + "' not bound");
            }
        }
    }
    for (const auto& [name, count] : local_producers) {
        if (count > 1) {
            throw InvalidTransformation(tr.key() + ": intermediate '" + name + "' produced more than once");
        }
    }
    for (const auto& name : local_consumed) {
        if (!local_producers.contains(name)) {
            throw InvalidTransformation(tr.key() + ": intermediate '" + name + "' is never produced");
        }
    }
    for (const auto& p : tr.params) {
        if (p.direction == Direction::output && output_producers[p.name] != 1) {
            throw InvalidTransformation(tr.key() + ": output '" + p.name + "' must be produced by exactly one call");
        }
    }
    call_order(tr, call_flow(body, callees));

    path.push_back(tr.name);
    for (const auto* callee : callees) {
        validate_rec(*callee, resolve, path);
    }
    path.pop_back();
}

void expand_rec(const Transformation& tr, const EffectiveBindings& bindings, const Resolver& resolve,
    const std::string& scope, std::vector<std::string>& path, std::vector<AtomicCall>& out)
{
    EffectiveBindings complete;
    for (const auto& p : tr.params) {
        auto it = bindings.find(p.name);
        if (it != bindings.end()) {
            complete.emplace(p.name, it->second);
        } else if (p.direction == Direction::scalar && p.default_value) {
            complete.emplace(p.name, *p.default_value);
        } else {
            throw InvalidTransformation(tr.key() + ": parameter '" + p.name + "' unbound during expansion");
        }
    }

    if (tr.is_atomic()) {
        for (auto& [key, arg] : complete) {
            if (auto* lit = std::get_if<Literal>(&arg)) {
                *lit = coerce_literal(*lit, tr.find_param(key)->type);
            }
        }
        out.push_back(AtomicCall { tr, std::move(complete) });
        return;
    }

    const auto& body = std::get<CompoundBody>(tr.body);
    std::vector<const Transformation*> callees;
    for (const auto& call : body.calls) {
        if (call.transformation == tr.name
            || std::find(path.begin(), path.end(), call.transformation) != path.end()) {
            auto cycle = path;
            cycle.push_back(tr.name);
            cycle.push_back(call.transformation);
            throw CycleDetected(std::move(cycle));
        }
        const Transformation* callee = resolve(call.transformation, std::nullopt);
        if (!callee) {
            throw UnresolvedTransformation(call.transformation);
        }
        callees.push_back(callee);
    }

    // Local intermediate name → generated lfn, keyed by its producing call.
    std::map<std::string, std::string> locals;
    for (std::size_t i = 0; i < body.calls.size(); ++i) {
        for (const auto& [key, arg] : body.calls[i].bindings) {
            const auto* f = std::get_if<FileRef>(&arg);
            const ParamSpec* p = callees[i]->find_param(key);
            if (f && p && p->direction == Direction::output && !tr.find_param(f->name)) {
                locals.emplace(f->name, scope + "." + std::to_string(i) + "." + key);
            }
        }
    }

    path.push_back(tr.name);
    for (const auto i : call_order(tr, call_flow(body, callees))) {
        const auto& call = body.calls[i];
        EffectiveBindings callee_bindings;
        for (const auto& [key, arg] : call.bindings) {
            if (const auto* lit = std::get_if<Literal>(&arg)) {
                callee_bindings.emplace(key, *lit);
                continue;
            }
            const auto& ref = std::get<FileRef>(arg).name;
            if (auto it = complete.find(ref); it != complete.end()) {
                callee_bindings.emplace(key, it->second);
            } else if (auto lt = locals.find(ref); lt != locals.end()) {
                callee_bindings.emplace(key, FileRef { lt->second });
            } else {
                throw InvalidTransformation(tr.key() + ": '" + ref + "' has no producer");
            }
        }
        expand_rec(*callees[i], callee_bindings, resolve, scope + "." + std::to_string(i), path, out);
    }
    path.pop_back();
}

} // namespace

CycleDetected::CycleDetected(std::vector<std::string> path)
    : Error("cycle detected: " + join_path(path))
    , path_(std::move(path))
{
}

void validate_transformation(const Transformation& tr, const Resolver& resolve)
{
    std::vector<std::string> path;
    validate_rec(tr, resolve, path);
}

std::vector<AtomicCall> expand_compound(const Transformation& tr, const EffectiveBindings& bindings,
    const Resolver& resolve, std::string_view dv_name)
{
    std::vector<AtomicCall> out;
    std::vector<std::string> path;
    expand_rec(tr, bindings, resolve, std::string(dv_name), path, out);
    return out;
}

} // namespace elab::vdl

#pragma once

// Random VDL definitions, and a naive macro-substitution expander used as
// the reference for compound expansion.

#include "elab/vdl/types.hpp"
#include "elab/vdl/validate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace oracle {

template <class Rng>
std::string random_name(Rng& rng, const std::string& prefix)
{
    static const std::string tail = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_.-";
    std::string s = prefix;
    for (int k = std::uniform_int_distribution<int>(1, 6)(rng); k > 0; --k) {
        s += tail[std::uniform_int_distribution<std::size_t>(0, tail.size() - 1)(rng)];
    }
    return s;
}

template <class Rng>
std::string random_lfn(Rng& rng)
{
    static const std::string chars = "abcdefghijklmnopqrstuvwxyz0123456789._-/:+";
    std::string s;
    for (int k = std::uniform_int_distribution<int>(1, 12)(rng); k > 0; --k) {
        s += chars[std::uniform_int_distribution<std::size_t>(0, chars.size() - 1)(rng)];
    }
    return s;
}

template <class Rng>
std::string random_text(Rng& rng)
{
    static const std::vector<std::string> atoms { "a", "Z", " ", "\"", "\\", "\n", "\t", "\r", "#", "@", "(", ")", ";",
        "µs", "τ", "=", ",", "{", "}", "1e5" };
    std::string s;
    for (int k = std::uniform_int_distribution<int>(0, 8)(rng); k > 0; --k) {
        s += atoms[std::uniform_int_distribution<std::size_t>(0, atoms.size() - 1)(rng)];
    }
    return s;
}

template <class Rng>
elab::vdl::Literal random_literal(Rng& rng, elab::vdl::ValueType t)
{
    using elab::vdl::ValueType;
    switch (t) {
    case ValueType::integer:
        switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
        case 0:
            return std::int64_t { std::uniform_int_distribution<std::int64_t>(-100, 100)(rng) };
        case 1:
            return std::int64_t { std::uniform_int_distribution<std::int64_t>(INT64_MIN + 1, INT64_MAX)(rng) };
        default:
            return std::int64_t { 0 };
        }
    case ValueType::floating: {
        switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
        case 0:
            return std::uniform_real_distribution<double>(-1e3, 1e3)(rng);
        case 1:
            return std::ldexp(std::uniform_real_distribution<double>(0.5, 1.0)(rng),
                std::uniform_int_distribution<int>(-300, 300)(rng));
        case 2:
            return double(std::uniform_int_distribution<int>(-5, 5)(rng));
        default:
            return 1e-4;
        }
    }
    case ValueType::boolean:
        return std::bernoulli_distribution(0.5)(rng);
    default:
        return random_text(rng);
    }
}

template <class Rng>
elab::vdl::ValueType random_scalar_type(Rng& rng)
{
    using elab::vdl::ValueType;
    static const ValueType types[] = { ValueType::integer, ValueType::floating, ValueType::string, ValueType::boolean };
    return types[std::uniform_int_distribution<int>(0, 3)(rng)];
}

template <class Rng>
elab::vdl::Bindings random_bindings(Rng& rng)
{
    elab::vdl::Bindings b;
    std::set<std::string> used;
    for (int k = std::uniform_int_distribution<int>(1, 5)(rng); k > 0; --k) {
        auto name = random_name(rng, "b");
        if (!used.insert(name).second) {
            continue;
        }
        if (std::bernoulli_distribution(0.5)(rng)) {
            b.emplace_back(name, elab::vdl::FileRef { random_lfn(rng) });
        } else {
            b.emplace_back(name, random_literal(rng, random_scalar_type(rng)));
        }
    }
    return b;
}

/// A syntactically valid definition; not necessarily semantically valid.
template <class Rng>
elab::vdl::Definition random_definition(Rng& rng)
{
    using namespace elab::vdl;
    if (std::bernoulli_distribution(0.4)(rng)) {
        Derivation dv;
        dv.name = random_name(rng, "dv");
        dv.tr_name = random_name(rng, "T");
        dv.tr_version = std::uniform_int_distribution<std::int64_t>(1, 9)(rng);
        dv.bindings = random_bindings(rng);
        return dv;
    }
    Transformation tr;
    tr.name = random_name(rng, "T");
    tr.version = std::uniform_int_distribution<std::int64_t>(1, 9)(rng);
    std::set<std::string> used;
    for (int k = std::uniform_int_distribution<int>(1, 6)(rng); k > 0; --k) {
        ParamSpec p;
        p.name = random_name(rng, "p");
        if (!used.insert(p.name).second) {
            continue;
        }
        const int dir = std::uniform_int_distribution<int>(0, 2)(rng);
        if (dir < 2) {
            p.direction = dir == 0 ? Direction::input : Direction::output;
            p.type = ValueType::logical_file;
        } else {
            p.direction = Direction::scalar;
            p.type = random_scalar_type(rng);
            if (std::bernoulli_distribution(0.5)(rng)) {
                p.default_value = random_literal(rng, p.type);
            }
            if (std::bernoulli_distribution(0.4)(rng)) {
                p.annotation = random_text(rng);
            }
        }
        tr.params.push_back(std::move(p));
    }
    if (std::bernoulli_distribution(0.5)(rng)) {
        tr.body = AtomicBody { random_text(rng) };
    } else {
        CompoundBody body;
        for (int k = std::uniform_int_distribution<int>(1, 4)(rng); k > 0; --k) {
            body.calls.push_back({ random_name(rng, "C"), random_bindings(rng) });
        }
        tr.body = body;
    }
    return tr;
}

/// A library of transformations that validates: atomic leaves, and compound
/// transformations up to three levels deep whose bodies list calls in
/// dependency order.
struct Library {
    std::vector<elab::vdl::Transformation> all;

    const elab::vdl::Transformation* resolve(std::string_view name, std::optional<std::int64_t> version) const
    {
        const elab::vdl::Transformation* best = nullptr;
        for (const auto& t : all) {
            if (t.name != name) continue;
            if (version) {
                if (t.version == *version) return &t;
            } else if (!best || t.version > best->version) {
                best = &t;
            }
        }
        return best;
    }

    elab::vdl::Resolver resolver() const
    {
        return [this](std::string_view n, std::optional<std::int64_t> v) { return resolve(n, v); };
    }
};

template <class Rng>
Library random_library(Rng& rng)
{
    using namespace elab::vdl;
    Library lib;
    std::vector<std::vector<std::string>> levels(4);
    auto scalar_param = [&](const std::string& name, bool with_default) {
        ParamSpec p { name, Direction::scalar, random_scalar_type(rng), std::nullopt, std::nullopt };
        if (with_default) {
            p.default_value = random_literal(rng, p.type);
        }
        return p;
    };

    const int n_atomic = std::uniform_int_distribution<int>(2, 4)(rng);
    for (int a = 0; a < n_atomic; ++a) {
        Transformation t;
        t.name = "A" + std::to_string(a);
        t.version = 2;
        for (int k = std::uniform_int_distribution<int>(1, 2)(rng), i = 0; i < k; ++i)
            t.params.push_back({ "in" + std::to_string(i), Direction::input, ValueType::logical_file, {}, {} });
        for (int k = std::uniform_int_distribution<int>(1, 2)(rng), i = 0; i < k; ++i)
            t.params.push_back({ "out" + std::to_string(i), Direction::output, ValueType::logical_file, {}, {} });
        for (int k = std::uniform_int_distribution<int>(0, 2)(rng), i = 0; i < k; ++i)
            t.params.push_back(scalar_param("s" + std::to_string(i), std::bernoulli_distribution(0.5)(rng)));
        t.body = AtomicBody { "exe-" + t.name };
        lib.all.push_back(t);
        levels[0].push_back(t.name);
        if (std::bernoulli_distribution(0.3)(rng)) {
            // An older version that compound calls must not pick.
            Transformation old = t;
            old.version = 1;
            old.body = AtomicBody { "exe-old-" + t.name };
            lib.all.push_back(old);
        }
    }

    for (int level = 1; level <= 3; ++level) {
        const int n = std::uniform_int_distribution<int>(1, 2)(rng);
        for (int c = 0; c < n; ++c) {
            Transformation t;
            t.name = "K" + std::to_string(level) + "_" + std::to_string(c);
            t.version = std::uniform_int_distribution<std::int64_t>(1, 3)(rng);
            const int n_in = std::uniform_int_distribution<int>(1, 2)(rng);
            for (int i = 0; i < n_in; ++i)
                t.params.push_back({ "in" + std::to_string(i), Direction::input, ValueType::logical_file, {}, {} });
            const int n_sc = std::uniform_int_distribution<int>(0, 2)(rng);
            std::vector<ParamSpec> scalars;
            for (int i = 0; i < n_sc; ++i) scalars.push_back(scalar_param("s" + std::to_string(i), std::bernoulli_distribution(0.5)(rng)));

            // Callees come from lower levels; the first one from level-1 keeps depth exact.
            std::vector<std::string> pool;
            for (int l = 0; l < level; ++l) pool.insert(pool.end(), levels[l].begin(), levels[l].end());
            CompoundBody body;
            std::vector<std::string> files;
            for (int i = 0; i < n_in; ++i) files.push_back("in" + std::to_string(i));
            std::vector<std::pair<std::size_t, std::string>> produced; // (call, local name)
            std::set<std::string> consumed;
            const int n_calls = std::uniform_int_distribution<int>(1, 3)(rng);
            for (int k = 0; k < n_calls; ++k) {
                const std::string callee_name = k == 0
                    ? levels[level - 1][std::uniform_int_distribution<std::size_t>(0, levels[level - 1].size() - 1)(rng)]
                    : pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
                const Transformation* callee = lib.resolve(callee_name, std::nullopt);
                Call call { callee_name, {} };
                for (const auto& p : callee->params) {
                    if (p.direction == Direction::input) {
                        const auto f = files[std::uniform_int_distribution<std::size_t>(0, files.size() - 1)(rng)];
                        consumed.insert(f);
                        call.bindings.emplace_back(p.name, FileRef { f });
                    } else if (p.direction == Direction::output) {
                        const std::string local = "t" + std::to_string(k) + "_" + p.name;
                        call.bindings.emplace_back(p.name, FileRef { local });
                        produced.emplace_back(body.calls.size(), local);
                    } else {
                        const ParamSpec* pass = nullptr;
                        for (const auto& s : scalars) {
                            if (s.type == p.type) pass = &s;
                        }
                        const int mode = std::uniform_int_distribution<int>(0, 2)(rng);
                        if (mode == 0 && pass) {
                            call.bindings.emplace_back(p.name, FileRef { pass->name });
                        } else if (mode == 1 || !p.default_value) {
                            auto lit = random_literal(rng, p.type);
                            if (p.type == ValueType::floating && std::bernoulli_distribution(0.3)(rng)) {
                                lit = std::int64_t { std::uniform_int_distribution<std::int64_t>(-9, 9)(rng) };
                            }
                            call.bindings.emplace_back(p.name, lit);
                        }
                    }
                }
                // Bindings in a shuffled order exercise name-based lookup.
                std::shuffle(call.bindings.begin(), call.bindings.end(), rng);
                body.calls.push_back(std::move(call));
                for (const auto& [idx, local] : produced) {
                    if (idx == body.calls.size() - 1) files.push_back(local);
                }
            }
            // Every scalar the body references, plus unreferenced caller inputs dropped.
            std::set<std::string> refs;
            for (const auto& call : body.calls) {
                for (const auto& [k, arg] : call.bindings) {
                    if (const auto* f = std::get_if<FileRef>(&arg)) refs.insert(f->name);
                }
            }
            std::vector<ParamSpec> params;
            for (const auto& p : t.params) {
                if (refs.contains(p.name)) params.push_back(p);
            }
            // Outputs: a nonempty subset of produced locals, renamed to output params.
            std::vector<std::string> outs;
            for (const auto& [idx, local] : produced) {
                if (outs.empty() || std::bernoulli_distribution(0.4)(rng)) outs.push_back(local);
            }
            for (std::size_t o = 0; o < outs.size(); ++o) {
                const std::string pname = "out" + std::to_string(o);
                params.push_back({ pname, Direction::output, ValueType::logical_file, {}, {} });
                for (auto& call : body.calls) {
                    for (auto& [k, arg] : call.bindings) {
                        if (auto* f = std::get_if<FileRef>(&arg); f && f->name == outs[o]) f->name = pname;
                    }
                }
            }
            for (const auto& s : scalars) {
                if (refs.contains(s.name)) params.push_back(s);
            }
            if (std::none_of(params.begin(), params.end(), [](const ParamSpec& p) { return p.direction == Direction::input; })) {
                continue;
            }
            t.params = std::move(params);
            t.body = std::move(body);
            lib.all.push_back(t);
            levels[level].push_back(t.name);
        }
        if (levels[level].empty()) {
            break;
        }
    }
    return lib;
}

/// One flattened call: transformation key and every parameter's argument.
struct FlatCall {
    std::string tr_key;
    std::map<std::string, elab::vdl::Argument> args;
    bool operator==(const FlatCall&) const = default;
};

/// Expands by substitution: a compound's formal parameters are replaced by
/// the actual arguments, a local produced by call j through output p becomes
/// `<scope>.j.p`, and each callee is expanded with scope `<scope>.<k>`.
inline void substitute(const Library& lib, const elab::vdl::Transformation& tr,
    const std::map<std::string, elab::vdl::Argument>& actual, const std::string& scope, std::vector<FlatCall>& out)
{
    using namespace elab::vdl;
    std::map<std::string, Argument> env = actual;
    for (const auto& p : tr.params) {
        if (!env.contains(p.name) && p.default_value) {
            env[p.name] = *p.default_value;
        }
    }
    if (tr.is_atomic()) {
        FlatCall fc { tr.name + ":" + std::to_string(tr.version), {} };
        for (const auto& p : tr.params) {
            Argument a = env.at(p.name);
            if (p.type == ValueType::floating) {
                if (const auto* lit = std::get_if<Literal>(&a); lit && std::holds_alternative<std::int64_t>(*lit)) {
                    a = Literal { static_cast<double>(std::get<std::int64_t>(*lit)) };
                }
            }
            fc.args[p.name] = a;
        }
        out.push_back(std::move(fc));
        return;
    }
    const auto& calls = std::get<CompoundBody>(tr.body).calls;
    std::map<std::string, std::string> local_names;
    for (std::size_t j = 0; j < calls.size(); ++j) {
        const auto* callee = lib.resolve(calls[j].transformation, std::nullopt);
        for (const auto& [param, arg] : calls[j].bindings) {
            const auto* f = std::get_if<FileRef>(&arg);
            if (f && callee->find_param(param)->direction == Direction::output && !tr.find_param(f->name)) {
                local_names[f->name] = scope + "." + std::to_string(j) + "." + param;
            }
        }
    }
    for (std::size_t j = 0; j < calls.size(); ++j) {
        const auto* callee = lib.resolve(calls[j].transformation, std::nullopt);
        std::map<std::string, Argument> sub;
        for (const auto& [param, arg] : calls[j].bindings) {
            if (const auto* f = std::get_if<FileRef>(&arg)) {
                if (env.contains(f->name)) {
                    sub[param] = env.at(f->name);
                } else {
                    sub[param] = FileRef { local_names.at(f->name) };
                }
            } else {
                sub[param] = arg;
            }
        }
        substitute(lib, *callee, sub, scope + "." + std::to_string(j), out);
    }
}

} // namespace oracle

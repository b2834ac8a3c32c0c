#pragma once

#include "elab/common/error.hpp"
#include "elab/vdl/types.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace elab::vdl {

struct MissingBinding {
    std::string param;
    bool operator==(const MissingBinding&) const = default;
};

struct TypeMismatch {
    std::string param;
    std::string expected;
    std::string got;
    bool operator==(const TypeMismatch&) const = default;
};

struct UnknownParam {
    std::string name;
    bool operator==(const UnknownParam&) const = default;
};

/// Output lfn that also appears as an input of the same derivation.
struct FileConflict {
    std::string lfn;
    bool operator==(const FileConflict&) const = default;
};

using Problem = std::variant<MissingBinding, TypeMismatch, UnknownParam, FileConflict>;

std::string describe(const Problem& p);

/// Effective bindings are keyed by parameter name.
using EffectiveBindings = std::map<std::string, Argument>;

struct ValidationReport {
    std::vector<Problem> problems;
    /// Every parameter bound, defaults filled in, integer→float widened.
    EffectiveBindings effective;

    bool ok() const { return problems.empty(); }
};

ValidationReport validate_derivation(const Derivation& dv, const Transformation& tr);

/// Looks up a transformation by name. A version of std::nullopt asks for the
/// highest registered version (compound calls name callees without a version).
using Resolver = std::function<const Transformation*(std::string_view name, std::optional<std::int64_t> version)>;

class UnresolvedTransformation : public Error {
public:
    explicit UnresolvedTransformation(std::string name);
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

class CycleDetected : public Error {
public:
    explicit CycleDetected(std::vector<std::string> path);
    const std::vector<std::string>& path() const { return path_; }

private:
    std::vector<std::string> path_;
};

class InvalidTransformation : public Error {
public:
    using Error::Error;
};

/// Checks parameter invariants and, for compound bodies, that every callee
/// resolves, calls bind exactly the callee's required parameters with
/// matching kinds, each local intermediate has one producer, and the call
/// graph is acyclic.
void validate_transformation(const Transformation& tr, const Resolver& resolve);

struct AtomicCall {
    Transformation transformation;
    /// Callee parameter → logical file or literal, all parameters bound.
    EffectiveBindings bindings;

    bool operator==(const AtomicCall&) const = default;
};

/// Flattens `tr` under `bindings` into atomic calls in dependency order.
///
/// Intermediate files local to a compound body are named
/// `<scope>.<call_index>.<param>` after the call and output parameter that
/// produces them; `scope` starts as the derivation name and extends by
/// `.<call_index>` for each nested compound.
std::vector<AtomicCall> expand_compound(const Transformation& tr, const EffectiveBindings& bindings,
    const Resolver& resolve, std::string_view dv_name);

} // namespace elab::vdl

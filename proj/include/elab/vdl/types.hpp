#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace elab::vdl {

enum class Direction { input, output, scalar };

enum class ValueType { logical_file, integer, floating, string, boolean };

/// A scalar literal as written in VDL source.
using Literal = std::variant<std::int64_t, double, std::string, bool>;

/// `@name`: a logical file in a derivation, or a caller parameter / local
/// intermediate file inside a compound body.
struct FileRef {
    std::string name;
    bool operator==(const FileRef&) const = default;
};

using Argument = std::variant<FileRef, Literal>;

/// Bindings keep source order so serialization is canonical.
using Bindings = std::vector<std::pair<std::string, Argument>>;

struct ParamSpec {
    std::string name;
    Direction direction = Direction::scalar;
    ValueType type = ValueType::string;
    std::optional<Literal> default_value;
    std::optional<std::string> annotation;

    bool operator==(const ParamSpec&) const = default;
};

struct AtomicBody {
    std::string executable;
    bool operator==(const AtomicBody&) const = default;
};

struct Call {
    std::string transformation;
    Bindings bindings;
    bool operator==(const Call&) const = default;
};

struct CompoundBody {
    std::vector<Call> calls;
    bool operator==(const CompoundBody&) const = default;
};

struct Transformation {
    std::string name;
    std::int64_t version = 1;
    std::vector<ParamSpec> params;
    std::variant<AtomicBody, CompoundBody> body;

    bool is_atomic() const { return std::holds_alternative<AtomicBody>(body); }
    const ParamSpec* find_param(std::string_view param) const;
    /// "name:version"
    std::string key() const;

    bool operator==(const Transformation&) const = default;
};

struct Derivation {
    std::string name;
    std::string tr_name;
    std::int64_t tr_version = 1;
    Bindings bindings;

    const Argument* find_binding(std::string_view param) const;

    bool operator==(const Derivation&) const = default;
};

using Definition = std::variant<Transformation, Derivation>;

struct LogicalFile {
    std::string lfn;
    std::optional<std::string> physical_path;
    std::optional<std::string> content_digest;
    std::int64_t registered_at_ns = 0;
};

/// Nonempty, no whitespace, none of the VDL delimiter characters.
bool is_valid_lfn(std::string_view lfn);
bool is_identifier(std::string_view name);

const char* to_string(Direction d);
const char* to_string(ValueType t);

/// The value type a literal carries on its own (integers stay integers).
ValueType literal_type(const Literal& lit);

/// Whether `lit` may bind a scalar of type `want` (integers widen to float).
bool literal_fits(const Literal& lit, ValueType want);

/// Converts an integer literal bound to a float parameter; otherwise identity.
Literal coerce_literal(const Literal& lit, ValueType want);

/// VDL source form of a literal: quoted strings, floats always with '.'/exponent.
std::string format_literal(const Literal& lit);

/// Command-line rendering of a scalar: shortest round-trip floats, raw strings.
std::string render_scalar(const Literal& lit);

} // namespace elab::vdl

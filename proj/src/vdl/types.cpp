#include "elab/vdl/types.hpp"

#include "elab/common/text.hpp"

#include <algorithm>

namespace elab::vdl {

const ParamSpec* Transformation::find_param(std::string_view param) const
{
    auto it = std::find_if(params.begin(), params.end(), [&](const ParamSpec& p) { return p.name == param; });
    return it == params.end() ? nullptr : &*it;
}

std::string Transformation::key() const
{
    return name + ":" + std::to_string(version);
}

const Argument* Derivation::find_binding(std::string_view param) const
{
    auto it = std::find_if(bindings.begin(), bindings.end(), [&](const auto& b) { return b.first == param; });
    return it == bindings.end() ? nullptr : &it->second;
}

namespace {

bool is_delimiter(char c)
{
    switch (c) {
    case ',':
    case '(':
    case ')':
    case '{':
    case '}':
    case ';':
    case '#':
    case '"':
    case '=':
    case '@':
        return true;
    default:
        return false;
    }
}

bool is_space(char c)
{
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

} // namespace

bool is_valid_lfn(std::string_view lfn)
{
    if (lfn.empty()) {
        return false;
    }
    return std::none_of(lfn.begin(), lfn.end(), [](char c) {
        return is_space(c) || is_delimiter(c) || static_cast<unsigned char>(c) < 0x20;
    });
}

bool is_identifier(std::string_view name)
{
    if (name.empty()) {
        return false;
    }
    auto head = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
    auto tail = [&](char c) { return head(c) || (c >= '0' && c <= '9') || c == '.' || c == '-'; };
    return head(name.front()) && std::all_of(name.begin() + 1, name.end(), tail);
}

const char* to_string(Direction d)
{
    switch (d) {
    case Direction::input:
        return "input";
    case Direction::output:
        return "output";
    case Direction::scalar:
        return "scalar";
    }
    return "?";
}

const char* to_string(ValueType t)
{
    switch (t) {
    case ValueType::logical_file:
        return "logical_file";
    case ValueType::integer:
        return "integer";
    case ValueType::floating:
        return "float";
    case ValueType::string:
        return "string";
    case ValueType::boolean:
        return "boolean";
    }
    return "?";
}

ValueType literal_type(const Literal& lit)
{
    switch (lit.index()) {
    case 0:
        return ValueType::integer;
    case 1:
        return ValueType::floating;
    case 2:
        return ValueType::string;
    default:
        return ValueType::boolean;
    }
}

bool literal_fits(const Literal& lit, ValueType want)
{
    const ValueType got = literal_type(lit);
    return got == want || (got == ValueType::integer && want == ValueType::floating);
}

Literal coerce_literal(const Literal& lit, ValueType want)
{
    if (want == ValueType::floating) {
        if (const auto* i = std::get_if<std::int64_t>(&lit)) {
            return static_cast<double>(*i);
        }
    }
    return lit;
}

std::string format_literal(const Literal& lit)
{
    struct Visitor {
        std::string operator()(std::int64_t v) const { return std::to_string(v); }
        std::string operator()(double v) const { return format_float_literal(v); }
        std::string operator()(bool v) const { return v ? "true" : "false"; }
        std::string operator()(const std::string& s) const
        {
            std::string out = "\"";
            for (char c : s) {
                switch (c) {
                case '"':
                    out += "\\\"";
                    break;
                case '\\':
                    out += "\\\\";
                    break;
                case '\n':
                    out += "\\n";
                    break;
                case '\t':
                    out += "\\t";
                    break;
                case '\r':
                    out += "\\r";
                    break;
                default:
                    out += c;
                }
            }
            return out + "\"";
        }
    };
    return std::visit(Visitor {}, lit);
}

std::string render_scalar(const Literal& lit)
{
    struct Visitor {
        std::string operator()(std::int64_t v) const { return std::to_string(v); }
        std::string operator()(double v) const { return format_double(v); }
        std::string operator()(bool v) const { return v ? "true" : "false"; }
        std::string operator()(const std::string& s) const { return s; }
    };
    return std::visit(Visitor {}, lit);
}

} // namespace elab::vdl

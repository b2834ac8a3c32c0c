#pragma once

#include "elab/catalog/metadata.hpp"
#include "elab/common/error.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace elab::catalog {

enum class Comparator { eq, ne, lt, le, gt, ge, contains };

const char* to_string(Comparator c);

/// Literal as typed in a query. Dates are written as quoted strings and are
/// interpreted as dates when compared against a date attribute.
using QueryLiteral = std::variant<std::int64_t, double, std::string, bool>;

struct Clause {
    std::string attribute;
    Comparator op = Comparator::eq;
    QueryLiteral literal;

    bool operator==(const Clause&) const = default;
};

struct QueryNode {
    enum class Kind { clause, all_of, any_of, negation };

    Kind kind = Kind::clause;
    Clause clause;                  // kind == clause
    std::vector<QueryNode> children; // all_of / any_of: ≥2, negation: exactly 1

    static QueryNode make_clause(Clause c);
    static QueryNode make_and(std::vector<QueryNode> children);
    static QueryNode make_or(std::vector<QueryNode> children);
    static QueryNode make_not(QueryNode child);

    bool operator==(const QueryNode&) const = default;
};

struct QuerySyntaxError : Error {
    QuerySyntaxError(std::size_t position, const std::string& message);
    std::size_t position;
};

struct QueryTypeError : Error {
    QueryTypeError(std::size_t position, const std::string& message);
    std::size_t position;
};

/// query := expr ; expr := term ("or" term)* ; term := factor ("and" factor)*
/// factor := "not" factor | "(" expr ")" | clause ; clause := IDENT OP literal
///
/// Keywords are case-insensitive. Positions in errors are byte offsets.
QueryNode parse_query(std::string_view text);

/// Canonical text that reparses to an equal tree.
std::string to_string(const QueryNode& q);

/// Whether an object carrying `md` satisfies `q`. A multi-valued tuple
/// satisfies a clause if any of its values does; a clause on an attribute
/// the object lacks, or whose type cannot compare with the literal, is false.
bool matches(const QueryNode& q, const Metadata& md);
bool matches(const Clause& c, const Metadata& md);

} // namespace elab::catalog

#include "elab/catalog/query.hpp"

#include "elab/common/text.hpp"

#include <algorithm>
#include <cctype>

namespace elab::catalog {

QuerySyntaxError::QuerySyntaxError(std::size_t pos, const std::string& message)
    : Error("query syntax error at " + std::to_string(pos) + ": " + message)
    , position(pos)
{
}

QueryTypeError::QueryTypeError(std::size_t pos, const std::string& message)
    : Error("query type error at " + std::to_string(pos) + ": " + message)
    , position(pos)
{
}

const char* to_string(Comparator c)
{
    switch (c) {
    case Comparator::eq:
        return "=";
    case Comparator::ne:
        return "!=";
    case Comparator::lt:
        return "<";
    case Comparator::le:
        return "<=";
    case Comparator::gt:
        return ">";
    case Comparator::ge:
        return ">=";
    case Comparator::contains:
        return "contains";
    }
    return "?";
}

QueryNode QueryNode::make_clause(Clause c)
{
    QueryNode n;
    n.kind = Kind::clause;
    n.clause = std::move(c);
    return n;
}

QueryNode QueryNode::make_and(std::vector<QueryNode> children)
{
    QueryNode n;
    n.kind = Kind::all_of;
    n.children = std::move(children);
    return n;
}

QueryNode QueryNode::make_or(std::vector<QueryNode> children)
{
    QueryNode n;
    n.kind = Kind::any_of;
    n.children = std::move(children);
    return n;
}

QueryNode QueryNode::make_not(QueryNode child)
{
    QueryNode n;
    n.kind = Kind::negation;
    n.children.push_back(std::move(child));
    return n;
}

namespace {

struct Token {
    enum class Type { ident, op, string, integer, floating, lparen, rparen, end };
    Type type = Type::end;
    std::string text; // identifier / operator / decoded string / number text
    std::size_t pos = 0;
};

bool ident_head(char c)
{
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool ident_tail(char c)
{
    return ident_head(c) || std::isdigit(static_cast<unsigned char>(c)) || c == '.';
}

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::vector<Token> lex(std::string_view src)
{
    std::vector<Token> out;
    std::size_t i = 0;
    while (true) {
        while (i < src.size() && std::isspace(static_cast<unsigned char>(src[i]))) {
            ++i;
        }
        Token t;
        t.pos = i;
        if (i >= src.size()) {
            out.push_back(t);
            return out;
        }
        const char c = src[i];
        if (c == '(' || c == ')') {
            t.type = c == '(' ? Token::Type::lparen : Token::Type::rparen;
            ++i;
        } else if (c == '=' ) {
            t.type = Token::Type::op;
            t.text = "=";
            ++i;
        } else if (c == '!' || c == '<' || c == '>') {
            t.type = Token::Type::op;
            if (i + 1 < src.size() && src[i + 1] == '=') {
                t.text = std::string { c, '=' };
                i += 2;
            } else if (c == '!') {
                throw QuerySyntaxError(i, "expected '!='");
            } else {
                t.text = std::string(1, c);
                ++i;
            }
        } else if (c == '"') {
            t.type = Token::Type::string;
            ++i;
            while (true) {
                if (i >= src.size()) {
                    throw QuerySyntaxError(t.pos, "unterminated string literal");
                }
                if (src[i] == '"') {
                    ++i;
                    break;
                }
                if (src[i] == '\\') {
                    if (i + 1 >= src.size() || (src[i + 1] != '"' && src[i + 1] != '\\')) {
                        throw QuerySyntaxError(i, "bad escape (only \\\" and \\\\)");
                    }
                    t.text += src[i + 1];
                    i += 2;
                } else {
                    t.text += src[i++];
                }
            }
        } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
            std::size_t j = i;
            if (src[j] == '-' || src[j] == '+') {
                ++j;
            }
            bool is_float = false;
            while (j < src.size()
                && (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '.' || src[j] == 'e' || src[j] == 'E'
                    || ((src[j] == '-' || src[j] == '+') && (src[j - 1] == 'e' || src[j - 1] == 'E')))) {
                is_float = is_float || src[j] == '.' || src[j] == 'e' || src[j] == 'E';
                ++j;
            }
            t.text = std::string(src.substr(i, j - i));
            const bool valid = is_float ? parse_double(t.text).has_value() : parse_int(t.text).has_value();
            if (!valid || (j < src.size() && ident_tail(src[j]))) {
                throw QuerySyntaxError(i, "malformed number");
            }
            t.type = is_float ? Token::Type::floating : Token::Type::integer;
            i = j;
        } else if (ident_head(c)) {
            std::size_t j = i;
            while (j < src.size() && ident_tail(src[j])) {
                ++j;
            }
            t.text = std::string(src.substr(i, j - i));
            t.type = lower(t.text) == "contains" ? Token::Type::op : Token::Type::ident;
            if (t.type == Token::Type::op) {
                t.text = "contains";
            }
            i = j;
        } else {
            throw QuerySyntaxError(i, std::string("unexpected character '") + c + "'");
        }
        out.push_back(std::move(t));
    }
}

class QueryParser {
public:
    explicit QueryParser(std::string_view src) : toks_(lex(src)) {}

    QueryNode run()
    {
        if (peek().type == Token::Type::end) {
            throw QuerySyntaxError(peek().pos, "empty query");
        }
        QueryNode q = expr();
        if (peek().type != Token::Type::end) {
            throw QuerySyntaxError(peek().pos, "unexpected trailing input");
        }
        return q;
    }

private:
    std::vector<Token> toks_;
    std::size_t i_ = 0;

    const Token& peek() const { return toks_[i_]; }
    const Token& next() { return toks_[i_ < toks_.size() - 1 ? i_++ : i_]; }

    bool keyword(std::string_view kw) const
    {
        return peek().type == Token::Type::ident && lower(peek().text) == kw;
    }

    QueryNode expr()
    {
        std::vector<QueryNode> terms;
        terms.push_back(term());
        while (keyword("or")) {
            next();
            terms.push_back(term());
        }
        return terms.size() == 1 ? std::move(terms.front()) : QueryNode::make_or(std::move(terms));
    }

    QueryNode term()
    {
        std::vector<QueryNode> factors;
        factors.push_back(factor());
        while (keyword("and")) {
            next();
            factors.push_back(factor());
        }
        return factors.size() == 1 ? std::move(factors.front()) : QueryNode::make_and(std::move(factors));
    }

    QueryNode factor()
    {
        if (keyword("not")) {
            next();
            return QueryNode::make_not(factor());
        }
        if (peek().type == Token::Type::lparen) {
            next();
            QueryNode inner = expr();
            if (peek().type != Token::Type::rparen) {
                throw QuerySyntaxError(peek().pos, "expected ')'");
            }
            next();
            return inner;
        }
        return QueryNode::make_clause(clause());
    }

    Clause clause()
    {
        const Token& id = peek();
        if (id.type != Token::Type::ident || keyword("and") || keyword("or") || keyword("not")) {
            throw QuerySyntaxError(id.pos, "expected attribute name");
        }
        Clause c;
        c.attribute = next().text;
        const Token& op = peek();
        if (op.type != Token::Type::op) {
            throw QuerySyntaxError(op.pos, "expected comparison operator");
        }
        next();
        if (op.text == "=") {
            c.op = Comparator::eq;
        } else if (op.text == "!=") {
            c.op = Comparator::ne;
        } else if (op.text == "<") {
            c.op = Comparator::lt;
        } else if (op.text == "<=") {
            c.op = Comparator::le;
        } else if (op.text == ">") {
            c.op = Comparator::gt;
        } else if (op.text == ">=") {
            c.op = Comparator::ge;
        } else {
            c.op = Comparator::contains;
        }
        const Token& lit = peek();
        switch (lit.type) {
        case Token::Type::string:
            c.literal = lit.text;
            break;
        case Token::Type::integer:
            c.literal = *parse_int(lit.text);
            break;
        case Token::Type::floating:
            c.literal = *parse_double(lit.text);
            break;
        case Token::Type::ident:
            if (lower(lit.text) == "true" || lower(lit.text) == "false") {
                c.literal = lower(lit.text) == "true";
                break;
            }
            [[fallthrough]];
        default:
            throw QuerySyntaxError(lit.pos, "expected literal");
        }
        next();
        if (c.op == Comparator::contains && !std::holds_alternative<std::string>(c.literal)) {
            throw QueryTypeError(lit.pos, "'contains' needs a string literal");
        }
        if (std::holds_alternative<bool>(c.literal) && c.op != Comparator::eq && c.op != Comparator::ne) {
            throw QueryTypeError(lit.pos, "booleans only compare with = and !=");
        }
        return c;
    }
};

std::string literal_text(const QueryLiteral& lit)
{
    struct Visitor {
        std::string operator()(std::int64_t v) const { return std::to_string(v); }
        std::string operator()(double v) const { return format_float_literal(v); }
        std::string operator()(bool v) const { return v ? "true" : "false"; }
        std::string operator()(const std::string& s) const
        {
            std::string out = "\"";
            for (char c : s) {
                if (c == '"' || c == '\\') {
                    out += '\\';
                }
                out += c;
            }
            return out + "\"";
        }
    };
    return std::visit(Visitor {}, lit);
}

template <class T>
bool compare(const T& a, const T& b, Comparator op)
{
    switch (op) {
    case Comparator::eq:
        return a == b;
    case Comparator::ne:
        return a != b;
    case Comparator::lt:
        return a < b;
    case Comparator::le:
        return a <= b;
    case Comparator::gt:
        return a > b;
    case Comparator::ge:
        return b <= a;
    case Comparator::contains:
        return false;
    }
    return false;
}

bool value_matches(const MetadataValue& v, const Clause& c)
{
    const auto& lit = c.literal;
    if (c.op == Comparator::contains) {
        const auto* s = std::get_if<std::string>(&v);
        return s && s->find(std::get<std::string>(lit)) != std::string::npos;
    }
    if (const auto* b = std::get_if<bool>(&v)) {
        const auto* lb = std::get_if<bool>(&lit);
        return lb && (c.op == Comparator::eq || c.op == Comparator::ne) && compare(*b, *lb, c.op);
    }
    if (const auto* s = std::get_if<std::string>(&v)) {
        const auto* ls = std::get_if<std::string>(&lit);
        return ls && compare(*s, *ls, c.op);
    }
    if (const auto* d = std::get_if<Date>(&v)) {
        const auto* ls = std::get_if<std::string>(&lit);
        if (!ls) {
            return false;
        }
        const auto ld = parse_date(*ls);
        return ld && compare(d->epoch_seconds, ld->epoch_seconds, c.op);
    }
    if (const auto* i = std::get_if<std::int64_t>(&v)) {
        if (const auto* li = std::get_if<std::int64_t>(&lit)) {
            return compare(*i, *li, c.op);
        }
        if (const auto* ld = std::get_if<double>(&lit)) {
            return compare(static_cast<double>(*i), *ld, c.op);
        }
        return false;
    }
    const double x = std::get<double>(v);
    if (const auto* li = std::get_if<std::int64_t>(&lit)) {
        return compare(x, static_cast<double>(*li), c.op);
    }
    if (const auto* ld = std::get_if<double>(&lit)) {
        return compare(x, *ld, c.op);
    }
    return false;
}

} // namespace

QueryNode parse_query(std::string_view text)
{
    return QueryParser(text).run();
}

std::string to_string(const QueryNode& q)
{
    auto child_text = [](const QueryNode& c) {
        const bool composite = c.kind == QueryNode::Kind::all_of || c.kind == QueryNode::Kind::any_of;
        return composite ? "(" + to_string(c) + ")" : to_string(c);
    };
    switch (q.kind) {
    case QueryNode::Kind::clause:
        return q.clause.attribute + " " + to_string(q.clause.op) + " " + literal_text(q.clause.literal);
    case QueryNode::Kind::negation:
        return "not " + child_text(q.children.front());
    case QueryNode::Kind::all_of:
    case QueryNode::Kind::any_of: {
        const char* sep = q.kind == QueryNode::Kind::all_of ? " and " : " or ";
        std::string out;
        for (std::size_t i = 0; i < q.children.size(); ++i) {
            if (i > 0) {
                out += sep;
            }
            out += child_text(q.children[i]);
        }
        return out;
    }
    }
    return {};
}

bool matches(const Clause& c, const Metadata& md)
{
    auto it = md.find(c.attribute);
    if (it == md.end()) {
        return false;
    }
    const auto& values = it->second.values;
    return std::any_of(values.begin(), values.end(), [&](const MetadataValue& v) { return value_matches(v, c); });
}

bool matches(const QueryNode& q, const Metadata& md)
{
    switch (q.kind) {
    case QueryNode::Kind::clause:
        return matches(q.clause, md);
    case QueryNode::Kind::negation:
        return !matches(q.children.front(), md);
    case QueryNode::Kind::all_of:
        return std::all_of(q.children.begin(), q.children.end(), [&](const QueryNode& c) { return matches(c, md); });
    case QueryNode::Kind::any_of:
        return std::any_of(q.children.begin(), q.children.end(), [&](const QueryNode& c) { return matches(c, md); });
    }
    return false;
}

} // namespace elab::catalog

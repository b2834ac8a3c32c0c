#include "elab/vdl/parser.hpp"

#include "elab/common/text.hpp"

#include <algorithm>
#include <set>

namespace elab::vdl {

SyntaxError::SyntaxError(int line, int column, std::string expected)
    : Error("syntax error at " + std::to_string(line) + ":" + std::to_string(column) + ": expected " + expected)
    , line_(line)
    , column_(column)
    , expected_(std::move(expected))
{
}

DuplicateParam::DuplicateParam(std::string transformation, std::string param)
    : Error("duplicate parameter '" + param + "' in transformation " + transformation)
    , param_(std::move(param))
{
}

namespace {

class Parser {
public:
    explicit Parser(std::string_view text) : src_(text) {}

    std::vector<Definition> run()
    {
        std::vector<Definition> defs;
        skip();
        while (!at_end()) {
            const auto word = peek_word();
            if (word == "TR") {
                defs.emplace_back(parse_tr());
            } else if (word == "DV") {
                defs.emplace_back(parse_dv());
            } else {
                fail("\"TR\" or \"DV\"");
            }
            skip();
        }
        return defs;
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;

    bool at_end() const { return pos_ >= src_.size(); }
    char cur() const { return at_end() ? '\0' : src_[pos_]; }

    [[noreturn]] void fail(std::string expected) const { fail_at(pos_, std::move(expected)); }

    [[noreturn]] void fail_at(std::size_t at, std::string expected) const
    {
        int line = 1;
        int col = 1;
        for (std::size_t i = 0; i < at && i < src_.size(); ++i) {
            if (src_[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw SyntaxError(line, col, std::move(expected));
    }

    void skip()
    {
        while (!at_end()) {
            const char c = cur();
            if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
                ++pos_;
            } else if (c == '#') {
                while (!at_end() && cur() != '\n') {
                    ++pos_;
                }
            } else {
                break;
            }
        }
    }

    static bool name_head(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
    static bool name_tail(char c) { return name_head(c) || (c >= '0' && c <= '9') || c == '.' || c == '-'; }

    std::string_view peek_word() const
    {
        std::size_t end = pos_;
        if (end < src_.size() && name_head(src_[end])) {
            ++end;
            while (end < src_.size() && name_tail(src_[end])) {
                ++end;
            }
        }
        return src_.substr(pos_, end - pos_);
    }

    std::string name(const char* what = "name")
    {
        skip();
        auto word = peek_word();
        if (word.empty()) {
            fail(what);
        }
        pos_ += word.size();
        return std::string(word);
    }

    void keyword(std::string_view kw)
    {
        skip();
        if (peek_word() != kw) {
            fail("\"" + std::string(kw) + "\"");
        }
        pos_ += kw.size();
    }

    bool accept(char c)
    {
        skip();
        if (cur() == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c)
    {
        if (!accept(c)) {
            fail(std::string("'") + c + "'");
        }
    }

    std::string lfn()
    {
        // No skip(): '@' binds directly to the name that follows.
        const std::size_t start = pos_;
        while (!at_end()) {
            const char c = cur();
            if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == ',' || c == '(' || c == ')' || c == '{'
                || c == '}' || c == ';' || c == '#' || c == '"' || c == '=' || c == '@'
                || static_cast<unsigned char>(c) < 0x20) {
                break;
            }
            ++pos_;
        }
        if (pos_ == start) {
            fail("logical file name after '@'");
        }
        return std::string(src_.substr(start, pos_ - start));
    }

    std::string quoted()
    {
        skip();
        if (cur() != '"') {
            fail("quoted string");
        }
        const std::size_t open = pos_;
        ++pos_;
        std::string out;
        while (true) {
            if (at_end()) {
                fail_at(open, "closing '\"'");
            }
            const char c = cur();
            ++pos_;
            if (c == '"') {
                break;
            }
            if (c == '\\') {
                if (at_end()) {
                    fail_at(open, "closing '\"'");
                }
                const char e = cur();
                ++pos_;
                switch (e) {
                case '"':
                    out += '"';
                    break;
                case '\\':
                    out += '\\';
                    break;
                case 'n':
                    out += '\n';
                    break;
                case 't':
                    out += '\t';
                    break;
                case 'r':
                    out += '\r';
                    break;
                default:
                    fail_at(pos_ - 2, "escape sequence (\\\" \\\\ \\n \\t \\r)");
                }
            } else {
                out += c;
            }
        }
        return out;
    }

    Literal literal()
    {
        skip();
        if (cur() == '"') {
            return quoted();
        }
        const auto word = peek_word();
        if (word == "true" || word == "false") {
            pos_ += word.size();
            return word == "true";
        }
        const std::size_t start = pos_;
        std::size_t i = pos_;
        if (i < src_.size() && (src_[i] == '-' || src_[i] == '+')) {
            ++i;
        }
        const std::size_t digits_start = i;
        while (i < src_.size() && src_[i] >= '0' && src_[i] <= '9') {
            ++i;
        }
        if (i == digits_start) {
            fail("literal");
        }
        bool is_float = false;
        if (i < src_.size() && src_[i] == '.') {
            is_float = true;
            ++i;
            const std::size_t frac = i;
            while (i < src_.size() && src_[i] >= '0' && src_[i] <= '9') {
                ++i;
            }
            if (i == frac) {
                fail_at(i, "digit after '.'");
            }
        }
        if (i < src_.size() && (src_[i] == 'e' || src_[i] == 'E')) {
            is_float = true;
            ++i;
            if (i < src_.size() && (src_[i] == '-' || src_[i] == '+')) {
                ++i;
            }
            const std::size_t exp = i;
            while (i < src_.size() && src_[i] >= '0' && src_[i] <= '9') {
                ++i;
            }
            if (i == exp) {
                fail_at(i, "exponent digits");
            }
        }
        if (i < src_.size() && name_tail(src_[i])) {
            fail_at(i, "end of numeric literal");
        }
        const auto text = src_.substr(start, i - start);
        pos_ = i;
        if (is_float) {
            if (auto v = parse_double(text)) {
                return *v;
            }
        } else if (auto v = parse_int(text)) {
            return *v;
        }
        fail_at(start, "representable number");
    }

    Bindings binding_list()
    {
        expect('(');
        Bindings out;
        std::set<std::string> seen;
        do {
            skip();
            const std::size_t at = pos_;
            std::string key = name("parameter name");
            if (!seen.insert(key).second) {
                fail_at(at, "distinct binding name (duplicate '" + key + "')");
            }
            expect('=');
            skip();
            if (cur() == '@') {
                ++pos_;
                out.emplace_back(std::move(key), FileRef { lfn() });
            } else {
                out.emplace_back(std::move(key), literal());
            }
        } while (accept(','));
        expect(')');
        return out;
    }

    std::int64_t version()
    {
        skip();
        const std::size_t start = pos_;
        while (!at_end() && cur() >= '0' && cur() <= '9') {
            ++pos_;
        }
        auto v = parse_int(src_.substr(start, pos_ - start));
        if (!v) {
            fail_at(start, "version number");
        }
        return *v;
    }

    ParamSpec param()
    {
        skip();
        ParamSpec p;
        const auto kind = peek_word();
        if (kind == "input" || kind == "output") {
            pos_ += kind.size();
            p.direction = kind == "input" ? Direction::input : Direction::output;
            keyword("logical_file");
            p.type = ValueType::logical_file;
            p.name = name("parameter name");
            return p;
        }
        if (kind != "scalar") {
            fail("\"input\", \"output\" or \"scalar\"");
        }
        pos_ += kind.size();
        p.direction = Direction::scalar;
        skip();
        const auto type = peek_word();
        if (type == "integer") {
            p.type = ValueType::integer;
        } else if (type == "float") {
            p.type = ValueType::floating;
        } else if (type == "string") {
            p.type = ValueType::string;
        } else if (type == "boolean") {
            p.type = ValueType::boolean;
        } else {
            fail("\"integer\", \"float\", \"string\" or \"boolean\"");
        }
        pos_ += type.size();
        p.name = name("parameter name");
        if (accept('=')) {
            skip();
            const std::size_t at = pos_;
            Literal lit = literal();
            if (!literal_fits(lit, p.type)) {
                fail_at(at, std::string(to_string(p.type)) + " literal");
            }
            p.default_value = coerce_literal(lit, p.type);
        }
        skip();
        if (cur() == '@') {
            ++pos_;
            if (peek_word() != "doc") {
                fail("\"@doc\"");
            }
            pos_ += 3;
            p.annotation = quoted();
        }
        return p;
    }

    Transformation parse_tr()
    {
        keyword("TR");
        Transformation tr;
        tr.name = name("transformation name");
        if (accept(':')) {
            tr.version = version();
        }
        expect('(');
        do {
            ParamSpec p = param();
            if (tr.find_param(p.name)) {
                throw DuplicateParam(tr.name, p.name);
            }
            tr.params.push_back(std::move(p));
        } while (accept(','));
        expect(')');
        skip();
        if (peek_word() == "atomic") {
            pos_ += 6;
            tr.body = AtomicBody { quoted() };
            return tr;
        }
        if (!accept('{')) {
            fail("\"atomic\" or '{'");
        }
        CompoundBody body;
        do {
            Call call;
            call.transformation = name("transformation name");
            call.bindings = binding_list();
            expect(';');
            body.calls.push_back(std::move(call));
        } while (!accept('}'));
        tr.body = std::move(body);
        return tr;
    }

    Derivation parse_dv()
    {
        keyword("DV");
        Derivation dv;
        dv.name = name("derivation name");
        expect('=');
        dv.tr_name = name("transformation name");
        expect(':');
        dv.tr_version = version();
        dv.bindings = binding_list();
        return dv;
    }
};

void write_bindings(std::string& out, const Bindings& bindings)
{
    out += '(';
    bool first = true;
    for (const auto& [key, arg] : bindings) {
        if (!first) {
            out += ", ";
        }
        first = false;
        out += key;
        out += " = ";
        if (const auto* f = std::get_if<FileRef>(&arg)) {
            out += '@';
            out += f->name;
        } else {
            out += format_literal(std::get<Literal>(arg));
        }
    }
    out += ')';
}

} // namespace

std::vector<Definition> parse_vdl(std::string_view text)
{
    return Parser(text).run();
}

std::string serialize(const Definition& def)
{
    std::string out;
    if (const auto* tr = std::get_if<Transformation>(&def)) {
        out += "TR " + tr->key() + "(";
        bool first = true;
        for (const auto& p : tr->params) {
            if (!first) {
                out += ", ";
            }
            first = false;
            out += to_string(p.direction);
            out += ' ';
            out += to_string(p.type);
            out += ' ';
            out += p.name;
            if (p.default_value) {
                out += " = " + format_literal(*p.default_value);
            }
            if (p.annotation) {
                out += " @doc " + format_literal(*p.annotation);
            }
        }
        out += ")";
        if (const auto* atomic = std::get_if<AtomicBody>(&tr->body)) {
            out += " atomic " + format_literal(atomic->executable) + "\n";
        } else {
            out += " {\n";
            for (const auto& call : std::get<CompoundBody>(tr->body).calls) {
                out += "  " + call.transformation;
                write_bindings(out, call.bindings);
                out += ";\n";
            }
            out += "}\n";
        }
    } else {
        const auto& dv = std::get<Derivation>(def);
        out += "DV " + dv.name + " = " + dv.tr_name + ":" + std::to_string(dv.tr_version);
        write_bindings(out, dv.bindings);
        out += "\n";
    }
    return out;
}

std::string serialize(const std::vector<Definition>& defs)
{
    std::string out;
    for (std::size_t i = 0; i < defs.size(); ++i) {
        if (i > 0) {
            out += '\n';
        }
        out += serialize(defs[i]);
    }
    return out;
}

} // namespace elab::vdl

#include "elab/provenance/dag.hpp"

#include "elab/common/text.hpp"

#include <algorithm>
#include <cctype>
#include <deque>

namespace elab::provenance {

std::string WorkflowDag::file_node(std::string_view lfn)
{
    return "f:" + std::string(lfn);
}

std::string WorkflowDag::derivation_node(std::int64_t record_id)
{
    return "d:" + std::to_string(record_id);
}

std::vector<std::string> WorkflowDag::sources() const
{
    std::set<std::string> produced;
    for (const auto& [from, to] : edges) {
        if (to.starts_with("f:")) {
            produced.insert(to.substr(2));
        }
    }
    std::vector<std::string> out;
    for (const auto& f : files) {
        if (!produced.contains(f)) {
            out.push_back(f);
        }
    }
    return out;
}

bool WorkflowDag::is_acyclic() const
{
    std::map<std::string, int> indegree;
    std::map<std::string, std::vector<std::string>> next;
    for (const auto& f : files) {
        indegree[file_node(f)] = 0;
    }
    for (const auto& [id, label] : derivations) {
        indegree[derivation_node(id)] = 0;
    }
    for (const auto& [from, to] : edges) {
        ++indegree[to];
        indegree.try_emplace(from, 0);
        next[from].push_back(to);
    }
    std::deque<std::string> ready;
    for (const auto& [node, deg] : indegree) {
        if (deg == 0) {
            ready.push_back(node);
        }
    }
    std::size_t seen = 0;
    while (!ready.empty()) {
        const auto node = ready.front();
        ready.pop_front();
        ++seen;
        for (const auto& to : next[node]) {
            if (--indegree[to] == 0) {
                ready.push_back(to);
            }
        }
    }
    return seen == indegree.size();
}

bool WorkflowDag::is_bipartite() const
{
    for (const auto& [from, to] : edges) {
        const bool from_file = from.starts_with("f:");
        const bool to_file = to.starts_with("f:");
        if (from_file == to_file) {
            return false;
        }
        const auto& file = from_file ? from : to;
        const auto& deriv = from_file ? to : from;
        if (!files.contains(file.substr(2))) {
            return false;
        }
        const auto id = parse_int(std::string_view(deriv).substr(2));
        if (!deriv.starts_with("d:") || !id || !derivations.contains(*id)) {
            return false;
        }
    }
    for (const auto& [id, label] : derivations) {
        const auto node = derivation_node(id);
        const bool produces = std::any_of(edges.begin(), edges.end(), [&](const auto& e) { return e.first == node; });
        if (!produces) {
            return false;
        }
    }
    return true;
}

WorkflowDag build_dag(const std::vector<ExecutionRecord>& log, std::string_view lfn,
    const std::function<bool(std::string_view)>& known_source)
{
    // Latest succeeded producer of `file` strictly before log position `before`.
    auto producer = [&](std::string_view file, const std::string* digest, std::size_t before) -> std::optional<std::size_t> {
        std::optional<std::size_t> fallback;
        for (std::size_t i = before; i-- > 0;) {
            const auto& rec = log[i];
            if (rec.status != Status::succeeded) {
                continue;
            }
            for (const auto& out : rec.outputs) {
                if (out.lfn != file) {
                    continue;
                }
                if (!digest || out.digest == *digest) {
                    return i;
                }
                if (!fallback) {
                    fallback = i;
                }
            }
        }
        return fallback;
    };

    WorkflowDag dag;
    const auto root = producer(lfn, nullptr, log.size());
    if (!root) {
        const bool mentioned = std::any_of(log.begin(), log.end(), [&](const ExecutionRecord& rec) {
            auto has = [&](const std::vector<FileUse>& v) {
                return std::any_of(v.begin(), v.end(), [&](const FileUse& f) { return f.lfn == lfn; });
            };
            return has(rec.inputs) || has(rec.outputs);
        });
        if (!mentioned && !(known_source && known_source(lfn))) {
            throw UnknownFile(std::string(lfn));
        }
        dag.files.insert(std::string(lfn));
        return dag;
    }

    std::set<std::size_t> visited;
    std::deque<std::size_t> work { *root };
    while (!work.empty()) {
        const std::size_t at = work.front();
        work.pop_front();
        if (!visited.insert(at).second) {
            continue;
        }
        const auto& rec = log[at];
        const auto node = WorkflowDag::derivation_node(rec.record_id);
        dag.derivations[rec.record_id] = rec.tr_name + "(" + rec.dv_name + ")";
        for (const auto& out : rec.outputs) {
            dag.files.insert(out.lfn);
            dag.edges.emplace(node, WorkflowDag::file_node(out.lfn));
        }
        for (const auto& in : rec.inputs) {
            dag.files.insert(in.lfn);
            dag.edges.emplace(WorkflowDag::file_node(in.lfn), node);
            if (auto p = producer(in.lfn, &in.digest, at)) {
                dag.edges.emplace(WorkflowDag::derivation_node(log[*p].record_id), WorkflowDag::file_node(in.lfn));
                work.push_back(*p);
            }
        }
    }
    return dag;
}

namespace {

std::string quote(std::string_view s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') {
            out += '\\';
        }
        out += c;
    }
    out += '"';
    return out;
}

} // namespace

std::string export_dot(const WorkflowDag& dag)
{
    if (dag.empty()) {
        return "digraph provenance { }\n";
    }
    std::map<std::string, std::string> nodes;
    for (const auto& f : dag.files) {
        nodes[WorkflowDag::file_node(f)] = "[shape=ellipse, label=" + quote(f) + "]";
    }
    for (const auto& [id, label] : dag.derivations) {
        nodes[WorkflowDag::derivation_node(id)] = "[shape=box, label=" + quote(label) + "]";
    }
    std::string out = "digraph provenance {\n";
    for (const auto& [id, attrs] : nodes) {
        out += "  " + quote(id) + " " + attrs + ";\n";
    }
    for (const auto& [from, to] : dag.edges) {
        out += "  " + quote(from) + " -> " + quote(to) + ";\n";
    }
    out += "}\n";
    return out;
}

namespace {

class DotLexer {
public:
    explicit DotLexer(std::string_view text) : text_(text) {}

    // Returns the next token; quoted strings come back unescaped with quoted=true.
    std::string next(bool* quoted = nullptr)
    {
        skip_ws();
        if (quoted) {
            *quoted = false;
        }
        if (pos_ >= text_.size()) {
            return {};
        }
        const char c = text_[pos_];
        if (c == '"') {
            ++pos_;
            std::string out;
            while (pos_ < text_.size() && text_[pos_] != '"') {
                if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
                    ++pos_;
                }
                out += text_[pos_++];
            }
            if (pos_ >= text_.size()) {
                throw DotSyntaxError("unterminated string in DOT text");
            }
            ++pos_;
            if (quoted) {
                *quoted = true;
            }
            return out;
        }
        if (c == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
            pos_ += 2;
            return "->";
        }
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
            const auto start = pos_;
            while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                ++pos_;
            }
            return std::string(text_.substr(start, pos_ - start));
        }
        ++pos_;
        return std::string(1, c);
    }

    std::string peek()
    {
        const auto saved = pos_;
        auto tok = next();
        pos_ = saved;
        return tok;
    }

    bool at_end()
    {
        skip_ws();
        return pos_ >= text_.size();
    }

private:
    void skip_ws()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

void expect(DotLexer& lex, std::string_view want)
{
    const auto tok = lex.next();
    if (tok != want) {
        throw DotSyntaxError("expected '" + std::string(want) + "' in DOT text, found '" + tok + "'");
    }
}

void add_node(WorkflowDag& dag, const std::string& id, const std::string& label)
{
    if (id.starts_with("f:")) {
        dag.files.insert(id.substr(2));
        return;
    }
    if (id.starts_with("d:")) {
        if (auto rid = parse_int(std::string_view(id).substr(2))) {
            dag.derivations[*rid] = label;
            return;
        }
    }
    throw DotSyntaxError("unrecognized node id '" + id + "'");
}

} // namespace

WorkflowDag parse_dot(std::string_view text)
{
    DotLexer lex(text);
    expect(lex, "digraph");
    lex.next();
    expect(lex, "{");
    WorkflowDag dag;
    std::vector<std::pair<std::string, std::string>> edges;
    while (true) {
        bool quoted = false;
        auto tok = lex.next(&quoted);
        if (!quoted && tok == "}") {
            break;
        }
        if (tok.empty() && !quoted) {
            throw DotSyntaxError("unexpected end of DOT text");
        }
        if (lex.peek() == "->") {
            lex.next();
            auto to = lex.next();
            edges.emplace_back(tok, to);
        } else {
            std::string label;
            if (lex.peek() == "[") {
                lex.next();
                while (true) {
                    auto key = lex.next();
                    if (key == "]") {
                        break;
                    }
                    if (key == ",") {
                        continue;
                    }
                    expect(lex, "=");
                    auto value = lex.next();
                    if (key == "label") {
                        label = value;
                    }
                }
            }
            add_node(dag, tok, label);
        }
        if (lex.peek() == ";") {
            lex.next();
        }
    }
    if (!lex.at_end()) {
        throw DotSyntaxError("trailing text after DOT graph");
    }
    for (auto& [from, to] : edges) {
        for (const auto* id : { &from, &to }) {
            const bool known = id->starts_with("f:") ? dag.files.contains(id->substr(2))
                                                     : id->starts_with("d:")
                    && dag.derivations.contains(parse_int(std::string_view(*id).substr(2)).value_or(-1));
            if (!known) {
                add_node(dag, *id, "");
            }
        }
        dag.edges.emplace(std::move(from), std::move(to));
    }
    return dag;
}

} // namespace elab::provenance

#include "elab/service/html.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>

namespace elab::service {

namespace {

constexpr std::array allowed_tags { "a", "b", "blockquote", "br", "code", "em", "h1", "h2", "h3", "h4", "i", "li", "ol",
    "p", "pre", "span", "strong", "sub", "sup", "u", "ul" };

bool allowed(std::string_view tag)
{
    return std::find(allowed_tags.begin(), allowed_tags.end(), tag) != allowed_tags.end();
}

std::string lower(std::string_view s)
{
    std::string out(s);
    for (auto& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

bool safe_href(std::string_view href)
{
    const auto colon = href.find(':');
    if (colon == std::string_view::npos) {
        return true;
    }
    // A colon after the first '/', '?' or '#' is not a scheme separator.
    const auto path = href.find_first_of("/?#");
    if (path != std::string_view::npos && path < colon) {
        return true;
    }
    const auto scheme = lower(href.substr(0, colon));
    return scheme == "http" || scheme == "https" || scheme == "mailto";
}

bool name_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
}

struct Tag {
    bool closing = false;
    std::string name;
    std::optional<std::string> href;
    std::size_t end = 0; // one past '>'
};

/// Parses a tag starting at s[at] == '<'; nullopt if it is not one.
std::optional<Tag> parse_tag(std::string_view s, std::size_t at)
{
    Tag t;
    std::size_t i = at + 1;
    if (i < s.size() && s[i] == '/') {
        t.closing = true;
        ++i;
    }
    const std::size_t name_start = i;
    while (i < s.size() && name_char(s[i])) {
        ++i;
    }
    if (i == name_start || !std::isalpha(static_cast<unsigned char>(s[name_start]))) {
        return std::nullopt;
    }
    t.name = lower(s.substr(name_start, i - name_start));
    while (true) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) {
            ++i;
        }
        if (i >= s.size()) {
            return std::nullopt;
        }
        if (s[i] == '>') {
            t.end = i + 1;
            return t;
        }
        if (s[i] == '/' && i + 1 < s.size() && s[i + 1] == '>') {
            t.end = i + 2;
            return t;
        }
        if (t.closing) {
            return std::nullopt;
        }
        const std::size_t attr_start = i;
        while (i < s.size() && name_char(s[i])) {
            ++i;
        }
        if (i == attr_start) {
            return std::nullopt;
        }
        const auto attr = lower(s.substr(attr_start, i - attr_start));
        std::string value;
        if (i < s.size() && s[i] == '=') {
            ++i;
            if (i < s.size() && (s[i] == '"' || s[i] == '\'')) {
                const char q = s[i];
                const auto close = s.find(q, i + 1);
                if (close == std::string_view::npos) {
                    return std::nullopt;
                }
                value = std::string(s.substr(i + 1, close - i - 1));
                i = close + 1;
            } else {
                const std::size_t v = i;
                while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])) && s[i] != '>') {
                    ++i;
                }
                value = std::string(s.substr(v, i - v));
            }
        }
        if (attr == "href") {
            t.href = value;
        }
    }
}

} // namespace

std::string escape_html(std::string_view text)
{
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '&':
            out += "&amp;";
            break;
        case '"':
            out += "&quot;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

std::string sanitize_html(std::string_view html)
{
    std::string out;
    out.reserve(html.size());
    std::size_t i = 0;
    while (i < html.size()) {
        const char c = html[i];
        if (c == '>') {
            out += "&gt;";
            ++i;
            continue;
        }
        if (c != '<') {
            out += c;
            ++i;
            continue;
        }
        auto tag = parse_tag(html, i);
        if (!tag || !allowed(tag->name)) {
            out += "&lt;";
            ++i;
            continue;
        }
        out += tag->closing ? "</" : "<";
        out += tag->name;
        if (!tag->closing && tag->name == "a" && tag->href && safe_href(*tag->href)) {
            out += " href=\"";
            for (char h : *tag->href) {
                switch (h) {
                case '"':
                    out += "&quot;";
                    break;
                case '<':
                    out += "&lt;";
                    break;
                case '>':
                    out += "&gt;";
                    break;
                default:
                    out += h;
                }
            }
            out += '"';
        }
        out += '>';
        i = tag->end;
    }
    return out;
}

} // namespace elab::service

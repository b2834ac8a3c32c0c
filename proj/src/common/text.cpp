#include "elab/common/text.hpp"

#include "elab/common/error.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace elab {

std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_float_literal(double v)
{
    std::string s = format_double(v);
    if (std::isfinite(v) && s.find_first_of(".eE") == std::string::npos) {
        s += ".0";
    }
    return s;
}

std::optional<std::int64_t> parse_int(std::string_view s)
{
    std::int64_t v = 0;
    const char* first = s.data();
    if (!s.empty() && s.front() == '+') {
        ++first;
    }
    auto res = std::from_chars(first, s.data() + s.size(), v);
    if (res.ec != std::errc {} || res.ptr != s.data() + s.size() || first == s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

std::optional<std::uint64_t> parse_uint(std::string_view s)
{
    std::uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc {} || res.ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

std::optional<double> parse_double(std::string_view s)
{
    double v = 0;
    const char* first = s.data();
    if (!s.empty() && s.front() == '+') {
        ++first;
    }
    auto res = std::from_chars(first, s.data() + s.size(), v);
    if (res.ec != std::errc {} || res.ptr != s.data() + s.size() || first == s.data() + s.size()
        || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

std::vector<std::string_view> split_ws(std::string_view s)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f'; };
    while (i < s.size()) {
        while (i < s.size() && is_ws(s[i])) {
            ++i;
        }
        std::size_t j = i;
        while (j < s.size() && !is_ws(s[j])) {
            ++j;
        }
        if (j > i) {
            out.push_back(s.substr(i, j - i));
        }
        i = j;
    }
    return out;
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error("short write to " + path.string());
    }
}

std::int64_t now_ns()
{
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
        std::chrono::system_clock::now().time_since_epoch())
        .count();
}

std::string format_timestamp(std::int64_t ns)
{
    using namespace std::chrono;
    const auto tp = sys_time<nanoseconds>(nanoseconds(ns));
    const auto day = floor<days>(tp);
    const year_month_day ymd { day };
    const hh_mm_ss hms { floor<milliseconds>(tp - day) };
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
        static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
        static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
        static_cast<int>(hms.seconds().count()), static_cast<int>(hms.subseconds().count()));
    return buf;
}

} // namespace elab

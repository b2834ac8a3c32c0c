#include "elab/catalog/metadata.hpp"

#include "elab/common/text.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

namespace elab::catalog {

namespace {

bool digits(std::string_view s, std::size_t at, std::size_t n, int& out)
{
    if (at + n > s.size()) {
        return false;
    }
    out = 0;
    for (std::size_t i = at; i < at + n; ++i) {
        if (s[i] < '0' || s[i] > '9') {
            return false;
        }
        out = out * 10 + (s[i] - '0');
    }
    return true;
}

} // namespace

std::optional<Date> parse_date(std::string_view text)
{
    using namespace std::chrono;
    int y = 0;
    int mo = 0;
    int d = 0;
    if (!digits(text, 0, 4, y) || text.size() < 10 || text[4] != '-' || !digits(text, 5, 2, mo) || text[7] != '-'
        || !digits(text, 8, 2, d)) {
        return std::nullopt;
    }
    const year_month_day ymd { year { y }, month { static_cast<unsigned>(mo) }, day { static_cast<unsigned>(d) } };
    if (!ymd.ok()) {
        return std::nullopt;
    }
    Date out;
    out.epoch_seconds = sys_days { ymd }.time_since_epoch().count() * 86400LL;
    if (text.size() == 10) {
        return out;
    }
    int h = 0;
    int mi = 0;
    int s = 0;
    if ((text[10] != 'T' && text[10] != ' ') || !digits(text, 11, 2, h) || text.size() < 19 || text[13] != ':'
        || !digits(text, 14, 2, mi) || text[16] != ':' || !digits(text, 17, 2, s)) {
        return std::nullopt;
    }
    if (h > 23 || mi > 59 || s > 59) {
        return std::nullopt;
    }
    if (text.size() > 19) {
        // Fractional seconds are accepted and dropped.
        if (text[19] != '.' || text.size() == 20) {
            return std::nullopt;
        }
        for (std::size_t i = 20; i < text.size(); ++i) {
            if (text[i] < '0' || text[i] > '9') {
                return std::nullopt;
            }
        }
    }
    out.epoch_seconds += h * 3600LL + mi * 60LL + s;
    out.has_time = true;
    return out;
}

std::string format_date(const Date& d)
{
    using namespace std::chrono;
    const sys_seconds tp { seconds { d.epoch_seconds } };
    const auto dp = floor<days>(tp);
    const year_month_day ymd { dp };
    char buf[32];
    if (!d.has_time) {
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
            static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    } else {
        const hh_mm_ss hms { tp - dp };
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
            static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
            static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
            static_cast<int>(hms.seconds().count()));
    }
    return buf;
}

const char* to_string(MetadataType t)
{
    switch (t) {
    case MetadataType::integer:
        return "integer";
    case MetadataType::floating:
        return "float";
    case MetadataType::string:
        return "string";
    case MetadataType::date:
        return "date";
    case MetadataType::boolean:
        return "boolean";
    }
    return "?";
}

std::optional<MetadataType> parse_metadata_type(std::string_view s)
{
    for (auto t : { MetadataType::integer, MetadataType::floating, MetadataType::string, MetadataType::date,
             MetadataType::boolean }) {
        if (s == to_string(t)) {
            return t;
        }
    }
    return std::nullopt;
}

MetadataType value_type(const MetadataValue& v)
{
    return static_cast<MetadataType>(v.index());
}

void MetadataTuple::check() const
{
    if (name.empty()) {
        throw InvalidMetadata("metadata attribute name is empty");
    }
    if (values.empty()) {
        throw InvalidMetadata("metadata attribute '" + name + "' has no values");
    }
    for (const auto& v : values) {
        if (value_type(v) != type) {
            throw InvalidMetadata("metadata attribute '" + name + "' declared " + to_string(type) + " holds a "
                + to_string(value_type(v)) + " value");
        }
        if (const auto* d = std::get_if<double>(&v); d && !std::isfinite(*d)) {
            throw InvalidMetadata("metadata attribute '" + name + "' holds a non-finite float");
        }
    }
}

MetadataTuple MetadataTuple::integer(std::string name, std::vector<std::int64_t> values)
{
    return { std::move(name), MetadataType::integer, { values.begin(), values.end() } };
}

MetadataTuple MetadataTuple::floating(std::string name, std::vector<double> values)
{
    return { std::move(name), MetadataType::floating, { values.begin(), values.end() } };
}

MetadataTuple MetadataTuple::string(std::string name, std::vector<std::string> values)
{
    MetadataTuple t { std::move(name), MetadataType::string, {} };
    for (auto& v : values) {
        t.values.emplace_back(std::move(v));
    }
    return t;
}

MetadataTuple MetadataTuple::date(std::string name, std::vector<Date> values)
{
    return { std::move(name), MetadataType::date, { values.begin(), values.end() } };
}

MetadataTuple MetadataTuple::boolean(std::string name, bool value)
{
    return { std::move(name), MetadataType::boolean, { MetadataValue { value } } };
}

std::string format_value(const MetadataValue& v)
{
    struct Visitor {
        std::string operator()(std::int64_t i) const { return std::to_string(i); }
        std::string operator()(double d) const { return format_double(d); }
        std::string operator()(const std::string& s) const { return s; }
        std::string operator()(const Date& d) const { return format_date(d); }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
    };
    return std::visit(Visitor {}, v);
}

std::optional<MetadataValue> parse_value(MetadataType type, std::string_view text)
{
    switch (type) {
    case MetadataType::integer:
        if (auto v = parse_int(text)) {
            return MetadataValue { *v };
        }
        return std::nullopt;
    case MetadataType::floating:
        if (auto v = parse_double(text)) {
            return MetadataValue { *v };
        }
        return std::nullopt;
    case MetadataType::string:
        return MetadataValue { std::string(text) };
    case MetadataType::date:
        if (auto v = parse_date(text)) {
            return MetadataValue { *v };
        }
        return std::nullopt;
    case MetadataType::boolean:
        if (text == "true") {
            return MetadataValue { true };
        }
        if (text == "false") {
            return MetadataValue { false };
        }
        return std::nullopt;
    }
    return std::nullopt;
}

} // namespace elab::catalog

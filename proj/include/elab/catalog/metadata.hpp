#pragma once

#include "elab/common/error.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace elab::catalog {

enum class MetadataType { integer, floating, string, date, boolean };

/// Calendar timestamp (UTC), second resolution, with or without time-of-day.
struct Date {
    std::int64_t epoch_seconds = 0;
    bool has_time = false;

    auto operator<=>(const Date& o) const { return epoch_seconds <=> o.epoch_seconds; }
    bool operator==(const Date& o) const { return epoch_seconds == o.epoch_seconds && has_time == o.has_time; }
};

/// Accepts `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM:SS`, a space instead of `T`, and a
/// trailing fractional second (`2004-11-10 00:00:00.0`).
std::optional<Date> parse_date(std::string_view text);
std::string format_date(const Date& d);

using MetadataValue = std::variant<std::int64_t, double, std::string, Date, bool>;

class InvalidMetadata : public Error {
public:
    using Error::Error;
};

/// (attribute_name, type, attribute_values)
struct MetadataTuple {
    std::string name;
    MetadataType type = MetadataType::string;
    std::vector<MetadataValue> values;

    /// Throws InvalidMetadata unless the name is nonempty, values nonempty,
    /// and every value holds `type`.
    void check() const;

    static MetadataTuple integer(std::string name, std::vector<std::int64_t> values);
    static MetadataTuple floating(std::string name, std::vector<double> values);
    static MetadataTuple string(std::string name, std::vector<std::string> values);
    static MetadataTuple date(std::string name, std::vector<Date> values);
    static MetadataTuple boolean(std::string name, bool value);

    bool operator==(const MetadataTuple&) const = default;
};

/// One tuple per attribute name.
using Metadata = std::map<std::string, MetadataTuple>;

const char* to_string(MetadataType t);
std::optional<MetadataType> parse_metadata_type(std::string_view s);
MetadataType value_type(const MetadataValue& v);

/// Text form of one value; parse_value(type, format_value(v)) == v.
std::string format_value(const MetadataValue& v);
std::optional<MetadataValue> parse_value(MetadataType type, std::string_view text);

} // namespace elab::catalog

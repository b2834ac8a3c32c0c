#pragma once

#include "elab/catalog/metadata.hpp"
#include "elab/common/error.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace elab::cosmic {

/// Longest accepted time over threshold.
inline constexpr std::uint64_t max_pulse_width_ns = 10'000;

struct DetectorPulse {
    int channel = 1; // 1..4
    std::uint64_t rise_ns = 0;
    std::uint64_t fall_ns = 0;

    std::uint64_t width_ns() const { return fall_ns - rise_ns; }

    bool operator==(const DetectorPulse&) const = default;
};

struct Dataset {
    std::string detector_id;
    std::string school;
    std::string city;
    std::string state;
    double latitude = 0;
    double longitude = 0;
    double altitude_m = 0;
    std::vector<DetectorPulse> pulses; // ascending rise_ns

    bool operator==(const Dataset&) const = default;
};

/// Base for every rejection of an upload; `line` is 1-based, 0 when none applies.
class DatasetError : public Error {
public:
    DatasetError(std::size_t line, const std::string& message);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class EmptyFile : public DatasetError {
public:
    EmptyFile();
};

class MalformedLine : public DatasetError {
public:
    MalformedLine(std::size_t line, const std::string& why);
};

class ChannelOutOfRange : public DatasetError {
public:
    ChannelOutOfRange(std::size_t line, std::int64_t channel);
};

class NonMonotonicTime : public DatasetError {
public:
    NonMonotonicTime(std::size_t line, int channel);
    int channel() const { return channel_; }

private:
    int channel_;
};

class NegativeWidth : public DatasetError {
public:
    explicit NegativeWidth(std::size_t line);
};

/// Reads the detector text format:
///
///     detector <id> <school> <city> <state> <lat_deg> <lon_deg> <alt_m>
///     pulse <channel> <rise_ns> <fall_ns>
///
/// `#` starts a comment anywhere on a line. Pulses must be globally sorted by
/// rise time and strictly increasing per channel.
Dataset parse_dataset(std::string_view text);

/// Canonical text form; parse_dataset(format_dataset(d)) == d.
std::string format_dataset(const Dataset& d);

struct UploadResult {
    Dataset dataset;
    /// Catalog tuples extracted from the file (location, pulse count, time span).
    std::vector<catalog::MetadataTuple> metadata;
};

UploadResult validate_upload(std::string_view raw);

} // namespace elab::cosmic

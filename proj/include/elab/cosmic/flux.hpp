#pragma once

#include "elab/common/error.hpp"
#include "elab/cosmic/dataset.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace elab::cosmic {

struct FluxPoint {
    std::uint64_t start_ns = 0;
    std::uint64_t count = 0;
    double rate_hz = 0;
    double error_hz = 0;

    bool operator==(const FluxPoint&) const = default;
};

class EmptyDataset : public Error {
public:
    EmptyDataset() : Error("dataset has no pulses") {}
};

class InvalidBinWidth : public Error {
public:
    using Error::Error;
};

/// Trigger counts in consecutive bins of `bin_width_s` from the first pulse
/// through the last; rate = count/width, error = √count/width.
std::vector<FluxPoint> flux_study(const Dataset& ds, double bin_width_s, int coincidence_level = 1);

/// One JSON object per line.
std::string to_jsonl(const std::vector<FluxPoint>& series);
std::vector<FluxPoint> flux_from_jsonl(std::string_view text);

} // namespace elab::cosmic

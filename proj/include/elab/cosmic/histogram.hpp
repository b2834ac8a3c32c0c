#pragma once

#include "elab/common/error.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace elab::cosmic {

struct Histogram {
    std::string unit = "us";
    std::vector<double> edges; // bins + 1, uniform
    std::vector<std::uint64_t> counts;
    /// Values that landed in a bin, and all values offered.
    std::uint64_t entries = 0;
    std::uint64_t candidates = 0;

    std::size_t bins() const { return counts.size(); }
    double center(std::size_t i) const { return 0.5 * (edges[i] + edges[i + 1]); }

    bool operator==(const Histogram&) const = default;
};

class InvalidHistogram : public Error {
public:
    using Error::Error;
};

/// Right-closed bins over (0, range_ns], edges reported in microseconds.
Histogram make_histogram(const std::vector<std::uint64_t>& deltas_ns, std::uint64_t range_ns, int bins);

std::string to_json(const Histogram& h);
Histogram histogram_from_json(std::string_view text);

} // namespace elab::cosmic

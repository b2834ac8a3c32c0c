#pragma once

#include "elab/common/error.hpp"
#include "elab/cosmic/dataset.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace elab::cosmic {

struct GroupPulse {
    std::string detector_id;
    int channel = 1;
    std::uint64_t rise_ns = 0;
    std::uint64_t fall_ns = 0;

    bool operator==(const GroupPulse&) const = default;
};

struct CoincidenceGroup {
    std::vector<GroupPulse> pulses; // time order
    std::uint64_t spread_ns = 0;    // last rise − first rise
    std::vector<std::string> detectors; // sorted, distinct

    bool operator==(const CoincidenceGroup&) const = default;
};

class NeedTwoDatasets : public Error {
public:
    NeedTwoDatasets() : Error("a shower search needs at least two datasets") {}
};

class InvalidShowerParams : public Error {
public:
    using Error::Error;
};

/// Merged pulse stream ordered by (rise, dataset index, channel).
std::vector<GroupPulse> merge_pulses(const std::vector<Dataset>& datasets);

/// For each merged pulse i, the window [i, e_i] holds every pulse rising
/// within window_s of it. A window spanning ≥ min_detectors detectors is
/// reported unless the previous window already contains it, so only
/// maximal groups appear, in time order.
std::vector<CoincidenceGroup> shower_search(const std::vector<Dataset>& datasets, double window_s, int min_detectors);

std::string to_jsonl(const std::vector<CoincidenceGroup>& groups);
std::vector<CoincidenceGroup> groups_from_jsonl(std::string_view text);

} // namespace elab::cosmic

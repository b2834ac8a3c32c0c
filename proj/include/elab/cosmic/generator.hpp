#pragma once

#include "elab/common/error.hpp"
#include "elab/cosmic/dataset.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace elab::cosmic {

/// 2003-08-19T00:00:00Z
inline constexpr std::uint64_t default_start_ns = 1'061'251'200'000'000'000ULL;

struct GeneratorSpec {
    int detectors = 1;
    double duration_s = 0;
    double trigger_rate_hz = 0;
    /// When ≥0, exactly this many triggers per detector, spread uniformly
    /// over the duration instead of drawing the count from trigger_rate_hz.
    std::int64_t trigger_count = -1;
    double decay_fraction = 0;
    double tau_us = 2.2;
    double background_rate_hz = 0;
    int planted_showers = 0;
    std::uint64_t seed = 1;
    std::uint64_t start_ns = default_start_ns;
};

class InvalidSpec : public Error {
public:
    using Error::Error;
};

struct PlantedHit {
    std::string detector_id;
    int channel = 1;
    std::uint64_t rise_ns = 0;

    bool operator==(const PlantedHit&) const = default;
};

struct DetectorTruth {
    std::string detector_id;
    std::uint64_t triggers = 0;
    std::uint64_t decays = 0;
    std::uint64_t background = 0;
    std::uint64_t pulses = 0;
    std::vector<std::uint64_t> decay_deltas_ns;
};

struct GroundTruth {
    std::vector<DetectorTruth> detectors;
    std::vector<std::vector<PlantedHit>> planted; // one entry per shower
};

struct SyntheticData {
    std::vector<Dataset> datasets;
    GroundTruth truth;
};

/// Deterministic for a given spec. Each trigger puts near-simultaneous
/// pulses on channels 1 and 2; a decay adds one later pulse on one of them
/// with an exponentially distributed gap. Background pulses land uniformly on
/// channels 1–4, and each planted shower puts one pulse on every detector
/// within 50 ns.
SyntheticData generate_synthetic(const GeneratorSpec& spec);

/// Summary line per detector, then one line per planted shower.
std::string to_jsonl(const GroundTruth& truth);

} // namespace elab::cosmic

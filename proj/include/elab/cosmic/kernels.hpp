#pragma once

#include "elab/cosmic/dataset.hpp"

#include <cstdint>
#include <vector>

namespace elab::cosmic {

/// Hardware-scale window within which pulses on distinct channels form a trigger.
inline constexpr std::uint64_t default_trigger_window_ns = 100;
/// Minimum time over threshold of an accepted decay pulse when the energy check is on.
inline constexpr std::uint64_t energy_threshold_ns = 40;

struct Trigger {
    std::uint64_t time_ns = 0;  // earliest rise in the trigger
    unsigned channel_mask = 0;  // bit c set for channel c
    std::size_t next_index = 0; // first pulse after the trigger's own pulses

    bool operator==(const Trigger&) const = default;
};

/// Level 1: every pulse is a trigger on its own channel. Level ≥2: scanning
/// forward, the pulses within `window_ns` of pulse i form a trigger when
/// they span ≥ level distinct channels; the scan then resumes after them.
std::vector<Trigger> find_triggers(const std::vector<DetectorPulse>& pulses, int level,
    std::uint64_t window_ns = default_trigger_window_ns);

// The functions below run with OpenMP; namespace `reference` holds serial
// versions with identical results.

/// For each trigger, the gap to the earliest later pulse on one of its
/// channels within the gate. With `check_energy` a trigger whose earliest
/// such pulse is narrower than energy_threshold_ns yields nothing.
std::vector<std::uint64_t> decay_deltas(const std::vector<DetectorPulse>& pulses, const std::vector<Trigger>& triggers,
    std::uint64_t gate_ns, bool check_energy);

/// Counts values in (0, range_ns] into `bins` right-closed uniform bins.
std::vector<std::uint64_t> fill_histogram(const std::vector<std::uint64_t>& values, std::uint64_t range_ns, int bins);

/// Counts times into `n_bins` bins of width `width_ns` starting at `origin_ns`.
std::vector<std::uint64_t> bin_times(
    const std::vector<std::uint64_t>& times, std::uint64_t origin_ns, std::uint64_t width_ns, std::size_t n_bins);

namespace reference {

std::vector<std::uint64_t> decay_deltas(const std::vector<DetectorPulse>& pulses, const std::vector<Trigger>& triggers,
    std::uint64_t gate_ns, bool check_energy);
std::vector<std::uint64_t> fill_histogram(const std::vector<std::uint64_t>& values, std::uint64_t range_ns, int bins);
std::vector<std::uint64_t> bin_times(
    const std::vector<std::uint64_t>& times, std::uint64_t origin_ns, std::uint64_t width_ns, std::size_t n_bins);

} // namespace reference

} // namespace elab::cosmic

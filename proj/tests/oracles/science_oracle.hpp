#pragma once

// Quadratic reference implementations for the detector kernels.

#include "elab/cosmic/dataset.hpp"
#include "elab/cosmic/kernels.hpp"
#include "elab/cosmic/shower.hpp"

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace oracle {

/// Every pulse of every dataset in (rise, dataset, channel) order, by sorting
/// a flat copy.
inline std::vector<elab::cosmic::GroupPulse> all_pulses(const std::vector<elab::cosmic::Dataset>& ds)
{
    std::vector<std::tuple<std::uint64_t, std::size_t, int, std::uint64_t>> flat;
    for (std::size_t d = 0; d < ds.size(); ++d) {
        for (const auto& p : ds[d].pulses) flat.emplace_back(p.rise_ns, d, p.channel, p.fall_ns);
    }
    std::sort(flat.begin(), flat.end());
    std::vector<elab::cosmic::GroupPulse> out;
    for (const auto& [rise, d, ch, fall] : flat) out.push_back({ ds[d].detector_id, ch, rise, fall });
    return out;
}

/// All-pairs: the set of pulses within `window_ns` after each pulse, kept
/// when it spans enough detectors and no other such set contains it.
inline std::vector<elab::cosmic::CoincidenceGroup> brute_force_showers(
    const std::vector<elab::cosmic::Dataset>& ds, std::uint64_t window_ns, int min_detectors)
{
    const auto stream = all_pulses(ds);
    const std::size_t n = stream.size();
    std::vector<std::set<std::size_t>> sets(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (j >= i && stream[j].rise_ns - stream[i].rise_ns <= window_ns) sets[i].insert(j);
        }
    }
    std::vector<elab::cosmic::CoincidenceGroup> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::set<std::string> dets;
        for (auto j : sets[i]) dets.insert(stream[j].detector_id);
        if (static_cast<int>(dets.size()) < min_detectors) continue;
        bool contained = false;
        for (std::size_t k = 0; k < n && !contained; ++k) {
            contained = k != i && sets[k].size() > sets[i].size()
                && std::includes(sets[k].begin(), sets[k].end(), sets[i].begin(), sets[i].end());
        }
        if (contained) continue;
        elab::cosmic::CoincidenceGroup g;
        for (auto j : sets[i]) g.pulses.push_back(stream[j]);
        g.spread_ns = g.pulses.back().rise_ns - g.pulses.front().rise_ns;
        g.detectors.assign(dets.begin(), dets.end());
        out.push_back(std::move(g));
    }
    return out;
}

/// Random detectors with clustered pulse times so coincidences are common.
template <class Rng>
std::vector<elab::cosmic::Dataset> random_detectors(Rng& rng, std::size_t max_pulses)
{
    std::vector<elab::cosmic::Dataset> ds(std::uniform_int_distribution<std::size_t>(2, 5)(rng));
    const std::size_t total = std::uniform_int_distribution<std::size_t>(0, max_pulses)(rng);
    const std::uint64_t span = std::uniform_int_distribution<std::uint64_t>(200, 20000)(rng);
    std::vector<std::vector<std::pair<std::uint64_t, int>>> raw(ds.size());
    for (std::size_t k = 0; k < total; ++k) {
        const auto d = std::uniform_int_distribution<std::size_t>(0, ds.size() - 1)(rng);
        raw[d].emplace_back(std::uniform_int_distribution<std::uint64_t>(0, span)(rng), std::uniform_int_distribution<int>(1, 4)(rng));
    }
    for (std::size_t d = 0; d < ds.size(); ++d) {
        ds[d].detector_id = std::to_string(100 + d * 7);
        std::sort(raw[d].begin(), raw[d].end());
        std::set<std::pair<int, std::uint64_t>> used;
        for (const auto& [t, ch] : raw[d]) {
            // Strictly increasing per channel.
            if (!used.insert({ ch, t }).second) continue;
            ds[d].pulses.push_back({ ch, 1'000'000 + t, 1'000'000 + t + 30 });
        }
    }
    return ds;
}

/// Decay gap for each trigger by scanning every pulse.
inline std::vector<std::uint64_t> brute_force_deltas(const std::vector<elab::cosmic::DetectorPulse>& pulses,
    const std::vector<elab::cosmic::Trigger>& triggers, std::uint64_t gate_ns, bool check_energy)
{
    std::vector<std::uint64_t> out;
    for (const auto& t : triggers) {
        std::size_t best = pulses.size();
        for (std::size_t j = 0; j < pulses.size(); ++j) {
            const auto& p = pulses[j];
            const bool eligible = j >= t.next_index && p.rise_ns > t.time_ns && p.rise_ns - t.time_ns <= gate_ns
                && (t.channel_mask >> p.channel & 1u);
            if (eligible && (best == pulses.size() || p.rise_ns < pulses[best].rise_ns)) best = j;
        }
        if (best == pulses.size()) continue;
        if (check_energy && pulses[best].fall_ns - pulses[best].rise_ns < elab::cosmic::energy_threshold_ns) continue;
        out.push_back(pulses[best].rise_ns - t.time_ns);
    }
    return out;
}

/// Bin k holds values in (k·R/bins, (k+1)·R/bins], found by search.
inline std::vector<std::uint64_t> brute_force_histogram(const std::vector<std::uint64_t>& values, std::uint64_t range, int bins)
{
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(bins), 0);
    for (auto v : values) {
        for (int k = 0; k < bins; ++k) {
            const auto lo = static_cast<unsigned __int128>(k) * range;
            const auto hi = static_cast<unsigned __int128>(k + 1) * range;
            const auto x = static_cast<unsigned __int128>(v) * static_cast<unsigned>(bins);
            if (x > lo && x <= hi) {
                ++counts[static_cast<std::size_t>(k)];
                break;
            }
        }
    }
    return counts;
}

} // namespace oracle

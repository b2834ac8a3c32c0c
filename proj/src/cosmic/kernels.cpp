#include "elab/cosmic/kernels.hpp"

#include <bit>

namespace elab::cosmic {

namespace {

constexpr std::uint64_t none = 0;

std::uint64_t decay_for(const std::vector<DetectorPulse>& pulses, const Trigger& t, std::uint64_t gate_ns, bool check_energy)
{
    for (std::size_t j = t.next_index; j < pulses.size(); ++j) {
        const auto& p = pulses[j];
        if (p.rise_ns - t.time_ns > gate_ns) {
            break;
        }
        if (p.rise_ns <= t.time_ns || !(t.channel_mask & (1u << p.channel))) {
            continue;
        }
        if (check_energy && p.width_ns() < energy_threshold_ns) {
            return none;
        }
        return p.rise_ns - t.time_ns;
    }
    return none;
}

std::size_t bin_index(std::uint64_t v, std::uint64_t range_ns, int bins)
{
    return static_cast<std::size_t>((v * static_cast<std::uint64_t>(bins) - 1) / range_ns);
}

} // namespace

std::vector<Trigger> find_triggers(const std::vector<DetectorPulse>& pulses, int level, std::uint64_t window_ns)
{
    std::vector<Trigger> out;
    if (level <= 1) {
        out.reserve(pulses.size());
        for (std::size_t i = 0; i < pulses.size(); ++i) {
            out.push_back({ pulses[i].rise_ns, 1u << pulses[i].channel, i + 1 });
        }
        return out;
    }
    std::size_t i = 0;
    while (i < pulses.size()) {
        unsigned mask = 0;
        std::size_t j = i;
        while (j < pulses.size() && pulses[j].rise_ns - pulses[i].rise_ns <= window_ns) {
            mask |= 1u << pulses[j].channel;
            ++j;
        }
        if (std::popcount(mask) >= level) {
            out.push_back({ pulses[i].rise_ns, mask, j });
            i = j;
        } else {
            ++i;
        }
    }
    return out;
}

std::vector<std::uint64_t> decay_deltas(const std::vector<DetectorPulse>& pulses, const std::vector<Trigger>& triggers,
    std::uint64_t gate_ns, bool check_energy)
{
    const auto n = static_cast<std::int64_t>(triggers.size());
    std::vector<std::uint64_t> found(triggers.size(), none);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        found[i] = decay_for(pulses, triggers[i], gate_ns, check_energy);
    }
    std::vector<std::uint64_t> out;
    for (auto d : found) {
        if (d != none) {
            out.push_back(d);
        }
    }
    return out;
}

std::vector<std::uint64_t> fill_histogram(const std::vector<std::uint64_t>& values, std::uint64_t range_ns, int bins)
{
    const auto n = static_cast<std::int64_t>(values.size());
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(bins), 0);
    std::uint64_t* c = counts.data();
#pragma omp parallel for schedule(static) reduction(+ : c[:bins])
    for (std::int64_t i = 0; i < n; ++i) {
        const auto v = values[i];
        if (v > 0 && v <= range_ns) {
            ++c[bin_index(v, range_ns, bins)];
        }
    }
    return counts;
}

std::vector<std::uint64_t> bin_times(
    const std::vector<std::uint64_t>& times, std::uint64_t origin_ns, std::uint64_t width_ns, std::size_t n_bins)
{
    const auto n = static_cast<std::int64_t>(times.size());
    const auto nb = static_cast<std::int64_t>(n_bins);
    std::vector<std::uint64_t> counts(n_bins, 0);
    std::uint64_t* c = counts.data();
#pragma omp parallel for schedule(static) reduction(+ : c[:nb])
    for (std::int64_t i = 0; i < n; ++i) {
        const auto t = times[i];
        if (t >= origin_ns) {
            const auto k = (t - origin_ns) / width_ns;
            if (k < n_bins) {
                ++c[k];
            }
        }
    }
    return counts;
}

namespace reference {

std::vector<std::uint64_t> decay_deltas(const std::vector<DetectorPulse>& pulses, const std::vector<Trigger>& triggers,
    std::uint64_t gate_ns, bool check_energy)
{
    std::vector<std::uint64_t> out;
    for (const auto& t : triggers) {
        if (auto d = decay_for(pulses, t, gate_ns, check_energy); d != none) {
            out.push_back(d);
        }
    }
    return out;
}

std::vector<std::uint64_t> fill_histogram(const std::vector<std::uint64_t>& values, std::uint64_t range_ns, int bins)
{
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(bins), 0);
    for (auto v : values) {
        if (v > 0 && v <= range_ns) {
            ++counts[bin_index(v, range_ns, bins)];
        }
    }
    return counts;
}

std::vector<std::uint64_t> bin_times(
    const std::vector<std::uint64_t>& times, std::uint64_t origin_ns, std::uint64_t width_ns, std::size_t n_bins)
{
    std::vector<std::uint64_t> counts(n_bins, 0);
    for (auto t : times) {
        if (t < origin_ns) {
            continue;
        }
        const auto k = (t - origin_ns) / width_ns;
        if (k < n_bins) {
            ++counts[k];
        }
    }
    return counts;
}

} // namespace reference

} // namespace elab::cosmic

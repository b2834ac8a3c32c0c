#include "elab/cosmic/generator.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace elab::cosmic {

namespace {

// Distribution helpers over mt19937_64 so output does not depend on the
// standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)); }

    std::uint64_t between(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }

    double exponential(double mean) { return -std::log1p(-uniform()) * mean; }

private:
    std::mt19937_64 engine_;
};

std::uint64_t mix(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct Site {
    const char* school;
    const char* city;
    const char* state;
    double lat;
    double lon;
    double alt;
};

constexpr std::array<Site, 4> sites { {
    { "Fermilab", "Batavia", "IL", 41.8412, -88.2615, 226 },
    { "WALTA", "Seattle", "WA", 47.6553, -122.3035, 60 },
    { "Lincoln_High", "Lincoln", "NE", 40.8136, -96.7026, 358 },
    { "Crestview", "Tempe", "AZ", 33.4255, -111.94, 360 },
} };

Dataset make_detector(int index)
{
    const auto& s = sites[static_cast<std::size_t>(index) % sites.size()];
    Dataset d;
    d.detector_id = "det" + std::to_string(index + 1);
    d.school = s.school;
    d.city = s.city;
    d.state = s.state;
    d.latitude = s.lat;
    d.longitude = s.lon;
    d.altitude_m = s.alt;
    if (index >= static_cast<int>(sites.size())) {
        d.school += "_" + std::to_string(index + 1);
    }
    return d;
}

// Sorts by rise time and nudges any pulse that repeats an earlier rise time
// on its channel forward by whole nanoseconds.
void canonicalize(std::vector<DetectorPulse>& pulses)
{
    auto order = [](const DetectorPulse& a, const DetectorPulse& b) {
        return std::tie(a.rise_ns, a.channel, a.fall_ns) < std::tie(b.rise_ns, b.channel, b.fall_ns);
    };
    std::sort(pulses.begin(), pulses.end(), order);
    bool moved = true;
    while (moved) {
        moved = false;
        std::array<std::uint64_t, 5> last {};
        std::array<bool, 5> seen {};
        for (auto& p : pulses) {
            if (seen[p.channel] && p.rise_ns <= last[p.channel]) {
                const auto shift = last[p.channel] + 1 - p.rise_ns;
                p.rise_ns += shift;
                p.fall_ns += shift;
                moved = true;
            }
            seen[p.channel] = true;
            last[p.channel] = p.rise_ns;
        }
        if (moved) {
            std::sort(pulses.begin(), pulses.end(), order);
        }
    }
}

void check_spec(const GeneratorSpec& s)
{
    auto bad = [](const std::string& why) { throw InvalidSpec(why); };
    if (s.detectors < 1) {
        bad("detectors must be at least 1");
    }
    if (!(std::isfinite(s.duration_s) && s.duration_s >= 0)) {
        bad("duration must be non-negative");
    }
    if (!(std::isfinite(s.trigger_rate_hz) && s.trigger_rate_hz >= 0)) {
        bad("trigger rate must be non-negative");
    }
    if (!(std::isfinite(s.background_rate_hz) && s.background_rate_hz >= 0)) {
        bad("background rate must be non-negative");
    }
    if (!(s.decay_fraction >= 0 && s.decay_fraction <= 1)) {
        bad("decay fraction must lie in [0, 1]");
    }
    if (s.decay_fraction > 0 && !(std::isfinite(s.tau_us) && s.tau_us > 0)) {
        bad("tau must be positive");
    }
    if (s.planted_showers < 0) {
        bad("planted shower count must be non-negative");
    }
    if (s.trigger_count > 0 && s.duration_s == 0) {
        bad("a trigger count needs a positive duration");
    }
    const double expected = (s.trigger_count >= 0 ? static_cast<double>(s.trigger_count) : s.trigger_rate_hz * s.duration_s)
            * 3
        + s.background_rate_hz * s.duration_s + s.planted_showers;
    if (expected > 5e7) {
        bad("spec would generate more than 50 million pulses per detector");
    }
}

} // namespace

SyntheticData generate_synthetic(const GeneratorSpec& spec)
{
    check_spec(spec);
    SyntheticData out;
    const auto duration_ns = static_cast<std::uint64_t>(std::llround(spec.duration_s * 1e9));
    std::vector<std::vector<DetectorPulse>> pulses(static_cast<std::size_t>(spec.detectors));

    for (int d = 0; d < spec.detectors; ++d) {
        out.datasets.push_back(make_detector(d));
        DetectorTruth truth;
        truth.detector_id = out.datasets.back().detector_id;
        if (duration_ns == 0) {
            out.truth.detectors.push_back(std::move(truth));
            continue;
        }
        Rng rng(mix(spec.seed ^ mix(static_cast<std::uint64_t>(d) + 1)));
        auto& ps = pulses[static_cast<std::size_t>(d)];

        std::vector<std::uint64_t> trigger_times;
        if (spec.trigger_count >= 0) {
            for (std::int64_t k = 0; k < spec.trigger_count; ++k) {
                trigger_times.push_back(rng.below(duration_ns));
            }
            std::sort(trigger_times.begin(), trigger_times.end());
        } else if (spec.trigger_rate_hz > 0) {
            const double mean_gap_ns = 1e9 / spec.trigger_rate_hz;
            double t = rng.exponential(mean_gap_ns);
            while (t < static_cast<double>(duration_ns)) {
                trigger_times.push_back(static_cast<std::uint64_t>(t));
                t += rng.exponential(mean_gap_ns);
            }
        }
        for (auto t : trigger_times) {
            const auto t0 = spec.start_ns + t;
            for (int ch = 1; ch <= 2; ++ch) {
                const auto rise = t0 + rng.between(0, 8);
                ps.push_back({ ch, rise, rise + rng.between(60, 200) });
            }
            if (spec.decay_fraction > 0 && rng.uniform() < spec.decay_fraction) {
                const auto delta = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(rng.exponential(spec.tau_us * 1000))));
                const int ch = static_cast<int>(rng.between(1, 2));
                const auto rise = t0 + delta;
                ps.push_back({ ch, rise, rise + rng.between(20, 150) });
                truth.decay_deltas_ns.push_back(delta);
                ++truth.decays;
            }
        }
        truth.triggers = trigger_times.size();

        if (spec.background_rate_hz > 0) {
            const double mean_gap_ns = 1e9 / spec.background_rate_hz;
            double t = rng.exponential(mean_gap_ns);
            while (t < static_cast<double>(duration_ns)) {
                const auto rise = spec.start_ns + static_cast<std::uint64_t>(t);
                ps.push_back({ static_cast<int>(rng.between(1, 4)), rise, rise + rng.between(20, 200) });
                ++truth.background;
                t += rng.exponential(mean_gap_ns);
            }
        }
        out.truth.detectors.push_back(std::move(truth));
    }

    if (duration_ns > 0 && spec.planted_showers > 0) {
        Rng rng(mix(spec.seed ^ 0x5348'4f57'4552ULL));
        for (int k = 0; k < spec.planted_showers; ++k) {
            const auto base = spec.start_ns + rng.below(duration_ns);
            std::vector<PlantedHit> hits;
            for (int d = 0; d < spec.detectors; ++d) {
                const auto rise = base + rng.between(0, 50);
                const int ch = static_cast<int>(rng.between(1, 4));
                pulses[static_cast<std::size_t>(d)].push_back({ ch, rise, rise + rng.between(60, 200) });
                hits.push_back({ out.datasets[static_cast<std::size_t>(d)].detector_id, ch, rise });
            }
            out.truth.planted.push_back(std::move(hits));
        }
    }

    for (int d = 0; d < spec.detectors; ++d) {
        auto& ps = pulses[static_cast<std::size_t>(d)];
        canonicalize(ps);
        out.truth.detectors[static_cast<std::size_t>(d)].pulses = ps.size();
        out.datasets[static_cast<std::size_t>(d)].pulses = std::move(ps);
    }
    // Canonicalization may have nudged planted pulses; report where they ended up.
    for (auto& shower : out.truth.planted) {
        for (std::size_t d = 0; d < shower.size(); ++d) {
            const auto& ds = out.datasets[d].pulses;
            auto it = std::lower_bound(ds.begin(), ds.end(), shower[d].rise_ns,
                [](const DetectorPulse& p, std::uint64_t t) { return p.rise_ns < t; });
            while (it != ds.end() && it->channel != shower[d].channel) {
                ++it;
            }
            if (it != ds.end()) {
                shower[d].rise_ns = it->rise_ns;
            }
        }
    }
    return out;
}

std::string to_jsonl(const GroundTruth& truth)
{
    using json = nlohmann::ordered_json;
    std::string out;
    for (const auto& d : truth.detectors) {
        out += json { { "detector", d.detector_id }, { "triggers", d.triggers }, { "decays", d.decays },
            { "background", d.background }, { "pulses", d.pulses }, { "decay_deltas_ns", d.decay_deltas_ns } }
                   .dump();
        out += '\n';
    }
    for (std::size_t k = 0; k < truth.planted.size(); ++k) {
        json hits = json::array();
        for (const auto& h : truth.planted[k]) {
            hits.push_back(json { { "detector", h.detector_id }, { "channel", h.channel }, { "rise_ns", h.rise_ns } });
        }
        out += json { { "shower", k }, { "hits", hits } }.dump();
        out += '\n';
    }
    return out;
}

} // namespace elab::cosmic

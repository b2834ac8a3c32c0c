#include "elab/cosmic/lifetime.hpp"

#include "elab/cosmic/kernels.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace elab::cosmic {

namespace {

std::string join(const std::vector<std::pair<std::string, std::string>>& problems)
{
    std::string out;
    for (const auto& [field, msg] : problems) {
        out += (out.empty() ? "" : "; ") + field + ": " + msg;
    }
    return out;
}

} // namespace

InvalidParams::InvalidParams(std::vector<std::pair<std::string, std::string>> problems)
    : Error("invalid parameters: " + join(problems))
    , problems_(std::move(problems))
{
}

std::vector<std::pair<std::string, std::string>> check(const LifetimeParams& p)
{
    std::vector<std::pair<std::string, std::string>> out;
    if (p.coincidence_level < 1 || p.coincidence_level > 4) {
        out.emplace_back("coincidence_level", "must be between 1 and 4");
    }
    if (!(std::isfinite(p.gate_width_s) && p.gate_width_s > 0)) {
        out.emplace_back("gate_width", "must be positive");
    } else if (p.gate_width_s * 1e9 < 1 || p.gate_width_s > 1) {
        out.emplace_back("gate_width", "must lie between 1 ns and 1 s");
    }
    if (p.bins < 2) {
        out.emplace_back("bins", "must be at least 2");
    } else if (p.bins > 100'000) {
        out.emplace_back("bins", "must be at most 100000");
    }
    if (!(std::isfinite(p.fit_min_us) && p.fit_min_us > 0)) {
        out.emplace_back("fit_min", "must be positive");
    }
    if (!(std::isfinite(p.fit_min_us) && std::isfinite(p.fit_max_us) && p.fit_min_us < p.fit_max_us)) {
        out.emplace_back("fit_min", "must be below fit_max");
        out.emplace_back("fit_max", "must be above fit_min");
    } else if (std::isfinite(p.gate_width_s) && p.fit_max_us > p.gate_width_s * 1e6) {
        out.emplace_back("fit_max", "must not exceed the gate width");
    }
    return out;
}

std::uint64_t gate_ns(double gate_width_s)
{
    return static_cast<std::uint64_t>(std::llround(gate_width_s * 1e9));
}

std::uint64_t histogram_range_ns(std::uint64_t gate)
{
    return std::min(gate, histogram_cap_ns);
}

CandidateSet decay_candidates(const Dataset& ds, int coincidence_level, bool check_energy, double gate_width_s)
{
    CandidateSet c;
    c.gate_ns = gate_ns(gate_width_s);
    c.coincidence_level = coincidence_level;
    c.check_energy = check_energy;
    const auto triggers = find_triggers(ds.pulses, coincidence_level);
    c.triggers = triggers.size();
    c.deltas_ns = decay_deltas(ds.pulses, triggers, c.gate_ns, check_energy);
    if (c.deltas_ns.empty()) {
        throw NoCandidates();
    }
    return c;
}

Histogram candidate_histogram(const CandidateSet& c, int bins)
{
    return make_histogram(c.deltas_ns, histogram_range_ns(c.gate_ns), bins);
}

using json = nlohmann::ordered_json;

std::string to_json(const CandidateSet& c)
{
    json j { { "gate_ns", c.gate_ns }, { "coincidence_level", c.coincidence_level }, { "check_energy", c.check_energy },
        { "triggers", c.triggers }, { "deltas_ns", c.deltas_ns } };
    return j.dump() + "\n";
}

CandidateSet candidates_from_json(std::string_view text)
{
    try {
        const json j = json::parse(text);
        CandidateSet c;
        c.gate_ns = j.at("gate_ns").get<std::uint64_t>();
        c.coincidence_level = j.at("coincidence_level").get<int>();
        c.check_energy = j.at("check_energy").get<bool>();
        c.triggers = j.at("triggers").get<std::uint64_t>();
        c.deltas_ns = j.at("deltas_ns").get<std::vector<std::uint64_t>>();
        return c;
    } catch (const json::exception& e) {
        throw InvalidHistogram(std::string("malformed candidate file: ") + e.what());
    }
}

LifetimeResult lifetime_study(const Dataset& ds, const LifetimeParams& p)
{
    if (auto problems = check(p); !problems.empty()) {
        throw InvalidParams(std::move(problems));
    }
    LifetimeResult r;
    r.candidates = decay_candidates(ds, p.coincidence_level, p.check_second_pulse_energy, p.gate_width_s);
    r.histogram = candidate_histogram(r.candidates, p.bins);
    r.fit = fit_exponential(r.histogram, p.fit_min_us, p.fit_max_us);
    return r;
}

} // namespace elab::cosmic

#pragma once

#include "elab/common/error.hpp"
#include "elab/cosmic/dataset.hpp"
#include "elab/cosmic/fit.hpp"
#include "elab/cosmic/histogram.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace elab::cosmic {

/// Upper end of the plotted decay-time axis.
inline constexpr std::uint64_t histogram_cap_ns = 20'000;

struct LifetimeParams {
    int coincidence_level = 2;
    bool check_second_pulse_energy = false;
    double gate_width_s = 1e-4;
    int bins = 60;
    double fit_min_us = 0.2;
    double fit_max_us = 20.0;
};

/// Field name → message for every violated constraint; empty when valid.
std::vector<std::pair<std::string, std::string>> check(const LifetimeParams& p);

class InvalidParams : public Error {
public:
    explicit InvalidParams(std::vector<std::pair<std::string, std::string>> problems);
    const std::vector<std::pair<std::string, std::string>>& problems() const { return problems_; }

private:
    std::vector<std::pair<std::string, std::string>> problems_;
};

class NoCandidates : public Error {
public:
    NoCandidates() : Error("no decay candidates found") {}
};

std::uint64_t gate_ns(double gate_width_s);
/// (0, min(gate, 20 us)]
std::uint64_t histogram_range_ns(std::uint64_t gate_ns);

struct CandidateSet {
    std::uint64_t gate_ns = 0;
    int coincidence_level = 2;
    bool check_energy = false;
    std::uint64_t triggers = 0;
    std::vector<std::uint64_t> deltas_ns; // trigger order

    bool operator==(const CandidateSet&) const = default;
};

/// Triggers at the given level and the decay gap for each. Throws NoCandidates.
CandidateSet decay_candidates(const Dataset& ds, int coincidence_level, bool check_energy, double gate_width_s);

Histogram candidate_histogram(const CandidateSet& c, int bins);

std::string to_json(const CandidateSet& c);
CandidateSet candidates_from_json(std::string_view text);

struct LifetimeResult {
    CandidateSet candidates;
    Histogram histogram;
    FitResult fit;
};

LifetimeResult lifetime_study(const Dataset& ds, const LifetimeParams& p);

} // namespace elab::cosmic

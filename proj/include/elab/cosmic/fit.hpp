#pragma once

#include "elab/common/error.hpp"
#include "elab/cosmic/histogram.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace elab::cosmic {

inline constexpr int fit_max_iterations = 200;
inline constexpr double fit_tolerance = 1e-8;

/// N(t) = A·exp(−t/τ) + B fitted to binned counts.
struct FitResult {
    double A = 0;
    double tau_us = 0;
    double B = 0;
    double sigma_A = 0;
    double sigma_tau_us = 0;
    double sigma_B = 0;
    double chi2 = 0;
    int ndf = 0;
    std::uint64_t n_candidates = 0;
    bool converged = false;
    int iterations = 0;
    double fit_min_us = 0;
    double fit_max_us = 0;

    bool operator==(const FitResult&) const = default;
};

/// The fit together with the points and the weights of its final pass.
struct FitDetail {
    FitResult result;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> weights;
};

class NoSignal : public Error {
public:
    NoSignal() : Error("every count in the fit range is zero") {}
};

class InsufficientBins : public Error {
public:
    explicit InsufficientBins(std::size_t n)
        : Error("the fit range holds " + std::to_string(n) + " bins; at least 4 are needed")
    {
    }
};

class InvalidFitRange : public Error {
public:
    using Error::Error;
};

/// Damped Gauss–Newton on weighted squared residuals. The first pass weights
/// each point by 1/max(count,1); later passes reweight by 1/max(model,1)
/// until the weights settle. Starting values come from the data.
FitDetail fit_points(const std::vector<double>& x, const std::vector<double>& y);

/// Fits the bins whose centers lie in [fit_min_us, fit_max_us].
FitDetail fit_exponential_detail(const Histogram& h, double fit_min_us, double fit_max_us);
FitResult fit_exponential(const Histogram& h, double fit_min_us, double fit_max_us);

/// Weighted sum of squared residuals at (A, tau, B).
double fit_objective(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w,
    double A, double tau, double B);

std::string to_json(const FitResult& f);
FitResult fit_from_json(std::string_view text);

} // namespace elab::cosmic

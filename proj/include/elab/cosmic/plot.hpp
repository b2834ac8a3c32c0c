#pragma once

#include "elab/common/error.hpp"
#include "elab/cosmic/fit.hpp"
#include "elab/cosmic/flux.hpp"
#include "elab/cosmic/histogram.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace elab::cosmic {

class EmptyPlot : public Error {
public:
    EmptyPlot() : Error("nothing to plot") {}
};

struct PlotLabels {
    std::string title;
    std::string x_label;
    std::string y_label;
};

inline constexpr int fit_curve_samples = 200;

/// SVG with the histogram drawn as steps and, when given, the fit curve over
/// its range plus a τ ± σ legend. Each bin is also emitted as a `rect` of
/// class "bin" carrying data-lo/data-hi/data-count.
std::string render_histogram_plot(const Histogram& h, const std::optional<FitResult>& fit, const PlotLabels& labels);

/// SVG with one point and error bar per bin; each point is a `circle` of
/// class "point" carrying data-start-ns/data-rate/data-error.
std::string render_series_plot(const std::vector<FluxPoint>& series, const PlotLabels& labels);

/// Recovers the per-bin counts embedded by render_histogram_plot.
std::vector<std::uint64_t> embedded_counts(std::string_view svg);

/// The legend line, e.g. "τ = 2.2031 ± 0.0264 µs".
std::string tau_legend(const FitResult& fit);

} // namespace elab::cosmic

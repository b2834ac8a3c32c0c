#include "elab/cosmic/transformations.hpp"

#include "elab/common/text.hpp"
#include "elab/cosmic/dataset.hpp"
#include "elab/cosmic/fit.hpp"
#include "elab/cosmic/flux.hpp"
#include "elab/cosmic/histogram.hpp"
#include "elab/cosmic/lifetime.hpp"
#include "elab/cosmic/plot.hpp"
#include "elab/cosmic/shower.hpp"
#include "elab/vds/vds.hpp"

#include <algorithm>
#include <cmath>

namespace elab::cosmic {

namespace {

using catalog::MetadataTuple;
using planner::JobContext;
using planner::JobError;

const char* const lifetime_vdl = R"(# Muon lifetime study: decay candidates, their histogram, the fit and the plot.
TR DecayCandidates(
    input logical_file data,
    scalar integer coincidence_level = 2 @doc "Distinct channels that must fire within 100 ns to count as a muon",
    scalar boolean check_energy = false @doc "Reject a decay pulse narrower than 40 ns",
    scalar float gate_width = 0.0001 @doc "Longest wait after a muon for its decay, in seconds",
    output logical_file candidates) atomic "DecayCandidates"

TR histogram(
    input logical_file data,
    scalar integer bins = 60 @doc "Number of histogram bins",
    output logical_file plotdata) atomic "histogram"

TR ExpFit(
    input logical_file plotdata,
    scalar float fit_min = 0.2 @doc "Start of the fit range, in microseconds",
    scalar float fit_max = 20.0 @doc "End of the fit range, in microseconds",
    output logical_file fit) atomic "ExpFit"

TR LifetimePlot(
    input logical_file plotdata,
    input logical_file fit,
    output logical_file plot) atomic "LifetimePlot"

TR Lifetime(
    input logical_file data,
    scalar integer coincidence_level = 2 @doc "Distinct channels that must fire within 100 ns to count as a muon",
    scalar boolean check_energy = false @doc "Reject a decay pulse narrower than 40 ns",
    scalar float gate_width = 0.0001 @doc "Longest wait after a muon for its decay, in seconds",
    scalar integer bins = 60 @doc "Number of histogram bins",
    scalar float fit_min = 0.2 @doc "Start of the fit range, in microseconds",
    scalar float fit_max = 20.0 @doc "End of the fit range, in microseconds",
    output logical_file plotdata,
    output logical_file fit,
    output logical_file plot) {
  DecayCandidates(data = @data, coincidence_level = @coincidence_level, check_energy = @check_energy,
      gate_width = @gate_width, candidates = @candidates);
  histogram(data = @candidates, bins = @bins, plotdata = @plotdata);
  ExpFit(plotdata = @plotdata, fit_min = @fit_min, fit_max = @fit_max, fit = @fit);
  LifetimePlot(plotdata = @plotdata, fit = @fit, plot = @plot);
}

# Flux study: trigger rate over time.
TR FluxSeries(
    input logical_file data,
    scalar float bin_width = 60.0 @doc "Width of each time bin, in seconds",
    scalar integer coincidence_level = 1 @doc "Distinct channels that must fire within 100 ns to count as one particle",
    output logical_file series) atomic "FluxSeries"

TR FluxPlot(input logical_file series, output logical_file plot) atomic "FluxPlot"

TR Flux(
    input logical_file data,
    scalar float bin_width = 60.0 @doc "Width of each time bin, in seconds",
    scalar integer coincidence_level = 1 @doc "Distinct channels that must fire within 100 ns to count as one particle",
    output logical_file series,
    output logical_file plot) {
  FluxSeries(data = @data, bin_width = @bin_width, coincidence_level = @coincidence_level, series = @series);
  FluxPlot(series = @series, plot = @plot);
}
)";

std::string shower_vdl()
{
    std::string out = "\n# Shower study: coincidences across detectors.\n";
    for (int n = 2; n <= max_shower_inputs; ++n) {
        out += "TR ShowerSearch_" + std::to_string(n) + "(\n";
        for (int i = 1; i <= n; ++i) {
            out += "    input logical_file data" + std::to_string(i) + ",\n";
        }
        out += "    scalar float window = 0.000001 @doc \"Width of the coincidence window, in seconds\",\n"
               "    scalar integer min_detectors = 2 @doc \"Detectors that must fire within one window\",\n"
               "    output logical_file groups,\n"
               "    output logical_file plot) atomic \"ShowerSearch\"\n\n";
    }
    return out;
}

Dataset read_dataset(const JobContext& ctx, const std::string& param)
{
    return parse_dataset(read_file(ctx.input(param)));
}

std::vector<MetadataTuple> fit_metadata(const FitResult& f)
{
    std::vector<MetadataTuple> md;
    auto add_float = [&](const char* name, double v) {
        if (std::isfinite(v)) {
            md.push_back(MetadataTuple::floating(name, { v }));
        }
    };
    add_float("tau_us", f.tau_us);
    add_float("sigma_tau_us", f.sigma_tau_us);
    add_float("A", f.A);
    add_float("sigma_A", f.sigma_A);
    add_float("B", f.B);
    add_float("sigma_B", f.sigma_B);
    add_float("chi2", f.chi2);
    md.push_back(MetadataTuple::integer("ndf", { f.ndf }));
    md.push_back(MetadataTuple::integer("n_candidates", { static_cast<std::int64_t>(f.n_candidates) }));
    md.push_back(MetadataTuple::boolean("converged", f.converged));
    return md;
}

void run_decay_candidates(JobContext& ctx)
{
    const auto ds = read_dataset(ctx, "data");
    LifetimeParams p;
    p.coincidence_level = static_cast<int>(ctx.integer("coincidence_level"));
    p.check_second_pulse_energy = ctx.boolean("check_energy");
    p.gate_width_s = ctx.floating("gate_width");
    if (p.coincidence_level < 1 || p.coincidence_level > 4) {
        throw JobError("coincidence_level must be between 1 and 4");
    }
    if (!(p.gate_width_s * 1e9 >= 1 && p.gate_width_s <= 1)) {
        throw JobError("gate_width must lie between 1 ns and 1 s");
    }
    const auto c = decay_candidates(ds, p.coincidence_level, p.check_second_pulse_energy, p.gate_width_s);
    write_file(ctx.output("candidates"), to_json(c));
    ctx.output_metadata["candidates"] = { MetadataTuple::integer("n_candidates", { static_cast<std::int64_t>(c.deltas_ns.size()) }),
        MetadataTuple::integer("triggers", { static_cast<std::int64_t>(c.triggers) }) };
}

void run_histogram(JobContext& ctx)
{
    const auto c = candidates_from_json(read_file(ctx.input("data")));
    const auto bins = ctx.integer("bins");
    if (bins < 2 || bins > 100'000) {
        throw JobError("bins must lie between 2 and 100000");
    }
    const auto h = candidate_histogram(c, static_cast<int>(bins));
    write_file(ctx.output("plotdata"), to_json(h));
    ctx.output_metadata["plotdata"] = { MetadataTuple::integer("bins", { bins }),
        MetadataTuple::integer("entries", { static_cast<std::int64_t>(h.entries) }) };
}

void run_expfit(JobContext& ctx)
{
    const auto h = histogram_from_json(read_file(ctx.input("plotdata")));
    const auto f = fit_exponential(h, ctx.floating("fit_min"), ctx.floating("fit_max"));
    write_file(ctx.output("fit"), to_json(f));
    ctx.output_metadata["fit"] = fit_metadata(f);
}

void run_lifetime_plot(JobContext& ctx)
{
    const auto h = histogram_from_json(read_file(ctx.input("plotdata")));
    const auto f = fit_from_json(read_file(ctx.input("fit")));
    write_file(ctx.output("plot"),
        render_histogram_plot(h, f, { "Muon lifetime", "Decay time (µs)", "Candidates per bin" }));
    auto md = fit_metadata(f);
    md.push_back(MetadataTuple::string("type", { "Plot" }));
    md.push_back(MetadataTuple::string("study", { "lifetime" }));
    md.push_back(MetadataTuple::integer("bins", { static_cast<std::int64_t>(h.bins()) }));
    ctx.output_metadata["plot"] = std::move(md);
}

void run_flux_series(JobContext& ctx)
{
    const auto ds = read_dataset(ctx, "data");
    const auto level = ctx.integer("coincidence_level");
    if (level < 1 || level > 4) {
        throw JobError("coincidence_level must be between 1 and 4");
    }
    const auto series = flux_study(ds, ctx.floating("bin_width"), static_cast<int>(level));
    write_file(ctx.output("series"), to_jsonl(series));
    ctx.output_metadata["series"] = { MetadataTuple::integer("points", { static_cast<std::int64_t>(series.size()) }) };
}

void run_flux_plot(JobContext& ctx)
{
    const auto series = flux_from_jsonl(read_file(ctx.input("series")));
    write_file(ctx.output("plot"), render_series_plot(series, { "Cosmic-ray flux", "Time (s)", "Rate (Hz)" }));
    ctx.output_metadata["plot"] = { MetadataTuple::string("type", { "Plot" }), MetadataTuple::string("study", { "flux" }) };
}

void run_shower(JobContext& ctx)
{
    std::vector<Dataset> datasets;
    for (int i = 1; i <= max_shower_inputs; ++i) {
        const auto param = "data" + std::to_string(i);
        if (ctx.inputs.contains(param)) {
            datasets.push_back(read_dataset(ctx, param));
        }
    }
    const double window = ctx.floating("window");
    const auto groups = shower_search(datasets, window, static_cast<int>(ctx.integer("min_detectors")));
    write_file(ctx.output("groups"), to_jsonl(groups));

    // Spread of each group in 20 bins across the window.
    const auto window_ns = static_cast<std::uint64_t>(std::llround(window * 1e9));
    std::vector<std::uint64_t> spreads;
    for (const auto& g : groups) {
        spreads.push_back(g.spread_ns + 1);
    }
    Histogram h = make_histogram(spreads, std::max<std::uint64_t>(window_ns + 1, 2), 20);
    write_file(ctx.output("plot"), render_histogram_plot(h, std::nullopt, { "Shower candidates", "Time spread (µs)", "Groups" }));
    ctx.output_metadata["groups"] = { MetadataTuple::integer("groups", { static_cast<std::int64_t>(groups.size()) }) };
    ctx.output_metadata["plot"] = { MetadataTuple::string("type", { "Plot" }), MetadataTuple::string("study", { "shower" }),
        MetadataTuple::integer("groups", { static_cast<std::int64_t>(groups.size()) }) };
}

} // namespace

std::string library_vdl()
{
    return lifetime_vdl + shower_vdl();
}

planner::Registry make_registry()
{
    using catalog::ObjectKind;
    planner::Registry r;
    r.add("DecayCandidates", { run_decay_candidates, {} });
    r.add("histogram", { run_histogram, {} });
    r.add("ExpFit", { run_expfit, {} });
    r.add("LifetimePlot", { run_lifetime_plot, { { "plot", ObjectKind::plot } } });
    r.add("FluxSeries", { run_flux_series, {} });
    r.add("FluxPlot", { run_flux_plot, { { "plot", ObjectKind::plot } } });
    r.add("ShowerSearch", { run_shower, { { "plot", ObjectKind::plot } } });
    return r;
}

void install_library(vds::VirtualDataSystem& vds)
{
    vds.define(library_vdl());
}

} // namespace elab::cosmic

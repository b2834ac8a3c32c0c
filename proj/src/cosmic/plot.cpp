#include "elab/cosmic/plot.hpp"

#include "elab/common/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace elab::cosmic {

namespace {

constexpr double width = 720;
constexpr double height = 480;
constexpr double left = 80;
constexpr double right = 24;
constexpr double top = 48;
constexpr double bottom = 64;

std::string fixed(double v, int digits = 2)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string sig(double v, int digits = 5)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

std::string escape(std::string_view s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&':
            out += "&amp;";
            break;
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '"':
            out += "&quot;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

// A "nice" tick step giving roughly `n` ticks over [0, span].
double tick_step(double span, int n)
{
    if (!(span > 0)) {
        return 1;
    }
    const double raw = span / n;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double f = raw / mag;
    return (f < 1.5 ? 1 : f < 3.5 ? 2 : f < 7.5 ? 5 : 10) * mag;
}

struct Frame {
    double x0, x1, y0, y1;

    double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
    double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

std::string header(const PlotLabels& labels)
{
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(width, 0) + "\" height=\""
        + fixed(height, 0) + "\" viewBox=\"0 0 " + fixed(width, 0) + " " + fixed(height, 0)
        + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out += "<rect x=\"0\" y=\"0\" width=\"" + fixed(width, 0) + "\" height=\"" + fixed(height, 0) + "\" fill=\"white\"/>\n";
    out += "<text class=\"title\" x=\"" + fixed(width / 2) + "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">"
        + escape(labels.title) + "</text>\n";
    return out;
}

std::string axes(const Frame& f, const PlotLabels& labels)
{
    std::string out = "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n";
    out += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(height - bottom) + "\" x2=\"" + fixed(width - right)
        + "\" y2=\"" + fixed(height - bottom) + "\"/>\n";
    out += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(top) + "\" x2=\"" + fixed(left) + "\" y2=\""
        + fixed(height - bottom) + "\"/>\n";
    out += "</g>\n<g class=\"ticks\" font-size=\"11\">\n";
    const double xs = tick_step(f.x1 - f.x0, 6);
    for (double x = std::ceil(f.x0 / xs) * xs; x <= f.x1 + 1e-9 * xs; x += xs) {
        const double px = f.px(x);
        out += "<line x1=\"" + fixed(px) + "\" y1=\"" + fixed(height - bottom) + "\" x2=\"" + fixed(px) + "\" y2=\""
            + fixed(height - bottom + 5) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + fixed(px) + "\" y=\"" + fixed(height - bottom + 18) + "\" text-anchor=\"middle\">"
            + sig(x, 6) + "</text>\n";
    }
    const double ys = tick_step(f.y1 - f.y0, 5);
    for (double y = std::ceil(f.y0 / ys) * ys; y <= f.y1 + 1e-9 * ys; y += ys) {
        const double py = f.py(y);
        out += "<line x1=\"" + fixed(left - 5) + "\" y1=\"" + fixed(py) + "\" x2=\"" + fixed(left) + "\" y2=\""
            + fixed(py) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + fixed(left - 8) + "\" y=\"" + fixed(py + 4) + "\" text-anchor=\"end\">" + sig(y, 6)
            + "</text>\n";
    }
    out += "</g>\n";
    out += "<text class=\"x-label\" x=\"" + fixed((left + width - right) / 2) + "\" y=\"" + fixed(height - 20)
        + "\" text-anchor=\"middle\">" + escape(labels.x_label) + "</text>\n";
    out += "<text class=\"y-label\" x=\"20\" y=\"" + fixed((top + height - bottom) / 2)
        + "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " + fixed((top + height - bottom) / 2) + ")\">"
        + escape(labels.y_label) + "</text>\n";
    return out;
}

} // namespace

std::string tau_legend(const FitResult& fit)
{
    return "τ = " + sig(fit.tau_us) + " ± " + sig(fit.sigma_tau_us, 3) + " µs";
}

std::string render_histogram_plot(const Histogram& h, const std::optional<FitResult>& fit, const PlotLabels& labels)
{
    if (h.bins() == 0) {
        throw EmptyPlot();
    }
    double ymax = static_cast<double>(*std::max_element(h.counts.begin(), h.counts.end()));
    if (fit && std::isfinite(fit->A) && std::isfinite(fit->B) && std::isfinite(fit->tau_us) && fit->tau_us > 0) {
        ymax = std::max(ymax, fit->A * std::exp(-fit->fit_min_us / fit->tau_us) + fit->B);
    }
    const Frame f { h.edges.front(), h.edges.back(), 0, ymax > 0 ? ymax * 1.1 : 1 };

    std::string out = header(labels);
    out += axes(f, labels);

    std::string steps = "<polyline class=\"steps\" fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.5\" points=\"";
    std::string bins = "<g class=\"bins\" fill=\"transparent\" stroke=\"none\">\n";
    for (std::size_t i = 0; i < h.bins(); ++i) {
        const double c = static_cast<double>(h.counts[i]);
        const double x0 = f.px(h.edges[i]);
        const double x1 = f.px(h.edges[i + 1]);
        const double y = f.py(c);
        steps += (i ? " " : "") + fixed(x0) + "," + fixed(i ? y : f.py(0)) + " " + fixed(x0) + "," + fixed(y) + " "
            + fixed(x1) + "," + fixed(y);
        bins += "<rect class=\"bin\" x=\"" + fixed(x0) + "\" y=\"" + fixed(y) + "\" width=\"" + fixed(x1 - x0)
            + "\" height=\"" + fixed(f.py(0) - y) + "\" data-lo=\"" + format_double(h.edges[i]) + "\" data-hi=\""
            + format_double(h.edges[i + 1]) + "\" data-count=\"" + std::to_string(h.counts[i]) + "\"><title>"
            + sig(h.edges[i]) + "–" + sig(h.edges[i + 1]) + " " + escape(h.unit) + ": " + std::to_string(h.counts[i])
            + "</title></rect>\n";
    }
    steps += " " + fixed(f.px(h.edges.back())) + "," + fixed(f.py(0)) + "\"/>\n";
    bins += "</g>\n";
    out += steps;
    out += bins;

    if (fit && std::isfinite(fit->tau_us) && fit->tau_us > 0 && std::isfinite(fit->A) && std::isfinite(fit->B)) {
        std::string curve = "<polyline class=\"fit\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\" points=\"";
        for (int k = 0; k < fit_curve_samples; ++k) {
            const double x = fit->fit_min_us + (fit->fit_max_us - fit->fit_min_us) * k / (fit_curve_samples - 1);
            const double y = std::clamp(fit->A * std::exp(-x / fit->tau_us) + fit->B, f.y0, f.y1);
            curve += (k ? " " : "") + fixed(f.px(x)) + "," + fixed(f.py(y));
        }
        curve += "\"/>\n";
        out += curve;
        const double lx = width - right - 230;
        out += "<g class=\"legend\">\n";
        out += "<rect x=\"" + fixed(lx - 8) + "\" y=\"" + fixed(top + 4)
            + "\" width=\"228\" height=\"70\" fill=\"white\" stroke=\"#888\"/>\n";
        out += "<text class=\"tau\" x=\"" + fixed(lx) + "\" y=\"" + fixed(top + 22) + "\">" + tau_legend(*fit)
            + "</text>\n";
        out += "<text x=\"" + fixed(lx) + "\" y=\"" + fixed(top + 40) + "\">N(t) = A·exp(−t/τ) + B, χ²/ndf = "
            + sig(fit->chi2, 4) + "/" + std::to_string(fit->ndf) + "</text>\n";
        out += "<text x=\"" + fixed(lx) + "\" y=\"" + fixed(top + 58) + "\">" + std::to_string(fit->n_candidates)
            + " candidates" + (fit->converged ? "" : ", fit did not converge") + "</text>\n";
        out += "</g>\n";
    }
    out += "</svg>\n";
    return out;
}

std::string render_series_plot(const std::vector<FluxPoint>& series, const PlotLabels& labels)
{
    if (series.empty()) {
        throw EmptyPlot();
    }
    const auto origin = series.front().start_ns;
    const double span = series.size() > 1 ? static_cast<double>(series.back().start_ns - origin) * 1e-9 : 1.0;
    double ymax = 0;
    for (const auto& p : series) {
        ymax = std::max(ymax, p.rate_hz + p.error_hz);
    }
    const Frame f { 0, span > 0 ? span : 1, 0, ymax > 0 ? ymax * 1.1 : 1 };
    std::string out = header(labels);
    out += axes(f, labels);
    out += "<g class=\"points\" fill=\"#1f4e9c\" stroke=\"#1f4e9c\">\n";
    for (const auto& p : series) {
        const double x = f.px(static_cast<double>(p.start_ns - origin) * 1e-9);
        out += "<line x1=\"" + fixed(x) + "\" y1=\"" + fixed(f.py(std::max(p.rate_hz - p.error_hz, 0.0))) + "\" x2=\""
            + fixed(x) + "\" y2=\"" + fixed(f.py(p.rate_hz + p.error_hz)) + "\"/>\n";
        out += "<circle class=\"point\" cx=\"" + fixed(x) + "\" cy=\"" + fixed(f.py(p.rate_hz))
            + "\" r=\"2.5\" data-start-ns=\"" + std::to_string(p.start_ns) + "\" data-rate=\"" + format_double(p.rate_hz)
            + "\" data-error=\"" + format_double(p.error_hz) + "\"/>\n";
    }
    out += "</g>\n</svg>\n";
    return out;
}

std::vector<std::uint64_t> embedded_counts(std::string_view svg)
{
    std::vector<std::uint64_t> out;
    constexpr std::string_view marker = "class=\"bin\"";
    constexpr std::string_view attr = "data-count=\"";
    std::size_t pos = 0;
    while ((pos = svg.find(marker, pos)) != std::string_view::npos) {
        const auto close = svg.find('>', pos);
        const auto a = svg.find(attr, pos);
        if (a == std::string_view::npos || a > close) {
            break;
        }
        const auto start = a + attr.size();
        const auto end = svg.find('"', start);
        if (auto v = parse_uint(svg.substr(start, end - start))) {
            out.push_back(*v);
        }
        pos = end;
    }
    return out;
}

} // namespace elab::cosmic

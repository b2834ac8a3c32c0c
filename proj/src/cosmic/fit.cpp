#include "elab/cosmic/fit.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>

namespace elab::cosmic {

namespace {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

std::optional<Mat3> invert(const Mat3& m)
{
    const double c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    const double c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    const double c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    const double det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
    const double scale = std::abs(m[0][0] * m[1][1] * m[2][2]) + std::abs(m[0][1] * m[1][2] * m[2][0])
        + std::abs(m[0][2] * m[1][0] * m[2][1]);
    if (!std::isfinite(det) || det == 0 || std::abs(det) < 1e-14 * scale) {
        return std::nullopt;
    }
    Mat3 inv;
    inv[0][0] = c00 / det;
    inv[1][0] = c01 / det;
    inv[2][0] = c02 / det;
    inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
    inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
    inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
    inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
    inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
    inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
    return inv;
}

double model(const Vec3& p, double x)
{
    return p[0] * std::exp(-x / p[1]) + p[2];
}

double objective(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w, const Vec3& p)
{
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - model(p, x[i]);
        s += w[i] * r * r;
    }
    return s;
}

// Normal matrix JᵀWJ and gradient direction JᵀW·r at p.
void normal_equations(
    const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w, const Vec3& p, Mat3& n, Vec3& g)
{
    n = {};
    g = {};
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = std::exp(-x[i] / p[1]);
        const Vec3 j { e, p[0] * e * x[i] / (p[1] * p[1]), 1.0 };
        const double r = y[i] - (p[0] * e + p[2]);
        for (int a = 0; a < 3; ++a) {
            g[a] += w[i] * j[a] * r;
            for (int b = 0; b < 3; ++b) {
                n[a][b] += w[i] * j[a] * j[b];
            }
        }
    }
}

Vec3 initial_guess(const std::vector<double>& x, const std::vector<double>& y)
{
    const std::size_t n = x.size();
    const std::size_t k = std::max<std::size_t>(1, (n + 9) / 10);
    double tail = 0;
    for (std::size_t i = n - k; i < n; ++i) {
        tail += y[i];
    }
    const double b0 = tail / static_cast<double>(k);
    const double a0 = std::max(y[0] - b0, 1.0);
    const std::size_t mid = n / 2;
    const double y1 = y[0] - b0;
    double tau0 = x[n - 1] - x[0];
    // The middle bin may sit at or below the background estimate in sparse
    // data; step back toward the start until one rises above it.
    for (std::size_t j = mid; j > 0; --j) {
        const double y2 = y[j] - b0;
        if (y1 > 0 && y2 > 0 && y1 > y2) {
            tau0 = (x[j] - x[0]) / std::log(y1 / y2);
            break;
        }
    }
    if (!std::isfinite(tau0) || tau0 <= 0) {
        tau0 = std::max(x[n - 1] - x[0], 1e-3);
    }
    return { a0, tau0, b0 };
}

} // namespace

double fit_objective(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w,
    double A, double tau, double B)
{
    return objective(x, y, w, { A, tau, B });
}

FitDetail fit_points(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size()) {
        throw InvalidFitRange("fit points and counts differ in length");
    }
    if (x.size() < 4) {
        throw InsufficientBins(x.size());
    }
    if (std::all_of(y.begin(), y.end(), [](double v) { return v == 0; })) {
        throw NoSignal();
    }

    const std::size_t n = x.size();
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 1.0 / std::max(y[i], 1.0);
    }
    Vec3 p = initial_guess(x, y);
    int iterations = 0;
    bool converged = false;

    for (int pass = 0; pass < fit_max_iterations && iterations < fit_max_iterations; ++pass) {
        double chi = objective(x, y, w, p);
        double lambda = 1e-3;
        bool settled = false;
        while (iterations < fit_max_iterations) {
            ++iterations;
            Mat3 nm;
            Vec3 g;
            normal_equations(x, y, w, p, nm, g);
            Vec3 step {};
            Vec3 next = p;
            bool accepted = false;
            while (lambda < 1e16) {
                Mat3 damped = nm;
                for (int a = 0; a < 3; ++a) {
                    damped[a][a] += lambda * nm[a][a];
                }
                if (auto inv = invert(damped)) {
                    for (int a = 0; a < 3; ++a) {
                        step[a] = (*inv)[a][0] * g[0] + (*inv)[a][1] * g[1] + (*inv)[a][2] * g[2];
                        next[a] = p[a] + step[a];
                    }
                    if (next[1] > 0 && std::isfinite(next[0]) && std::isfinite(next[1]) && std::isfinite(next[2])) {
                        const double c = objective(x, y, w, next);
                        if (std::isfinite(c) && c <= chi) {
                            chi = c;
                            accepted = true;
                            break;
                        }
                    }
                }
                lambda *= 10;
            }
            if (!accepted) {
                // No damping lowers the objective: p is a minimum to working precision.
                settled = true;
                break;
            }
            double rel = 0;
            for (int a = 0; a < 3; ++a) {
                rel = std::max(rel, std::abs(step[a]) / std::max(std::abs(next[a]), 1e-12));
            }
            p = next;
            lambda = std::max(lambda / 10, 1e-12);
            if (rel < fit_tolerance) {
                settled = true;
                break;
            }
        }
        if (!settled) {
            break;
        }
        double change = 0;
        std::vector<double> reweighted(n);
        for (std::size_t i = 0; i < n; ++i) {
            reweighted[i] = 1.0 / std::max(model(p, x[i]), 1.0);
            change = std::max(change, std::abs(reweighted[i] - w[i]) / w[i]);
        }
        if (change < 1e-6) {
            converged = true;
            break;
        }
        w = std::move(reweighted);
    }

    FitDetail detail;
    auto& r = detail.result;
    r.A = p[0];
    r.tau_us = p[1];
    r.B = p[2];
    r.chi2 = objective(x, y, w, p);
    r.ndf = static_cast<int>(n) - 3;
    r.iterations = iterations;
    Mat3 nm;
    Vec3 g;
    normal_equations(x, y, w, p, nm, g);
    if (auto cov = invert(nm); cov && (*cov)[0][0] > 0 && (*cov)[1][1] > 0 && (*cov)[2][2] > 0) {
        r.sigma_A = std::sqrt((*cov)[0][0]);
        r.sigma_tau_us = std::sqrt((*cov)[1][1]);
        r.sigma_B = std::sqrt((*cov)[2][2]);
    } else {
        r.sigma_A = r.sigma_tau_us = r.sigma_B = nan;
        converged = false;
    }
    r.converged = converged && r.tau_us > 0 && r.sigma_tau_us > 0;
    detail.x = x;
    detail.y = y;
    detail.weights = std::move(w);
    return detail;
}

FitDetail fit_exponential_detail(const Histogram& h, double fit_min_us, double fit_max_us)
{
    if (!(fit_min_us < fit_max_us)) {
        throw InvalidFitRange("fit_min must be below fit_max");
    }
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < h.bins(); ++i) {
        const double c = h.center(i);
        if (c >= fit_min_us && c <= fit_max_us) {
            x.push_back(c);
            y.push_back(static_cast<double>(h.counts[i]));
        }
    }
    auto detail = fit_points(x, y);
    detail.result.n_candidates = h.candidates;
    detail.result.fit_min_us = fit_min_us;
    detail.result.fit_max_us = fit_max_us;
    return detail;
}

FitResult fit_exponential(const Histogram& h, double fit_min_us, double fit_max_us)
{
    return fit_exponential_detail(h, fit_min_us, fit_max_us).result;
}

using json = nlohmann::ordered_json;

namespace {

json number(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

double number_from(const json& j)
{
    return j.is_null() ? nan : j.get<double>();
}

} // namespace

std::string to_json(const FitResult& f)
{
    json j { { "A", number(f.A) }, { "tau_us", number(f.tau_us) }, { "B", number(f.B) }, { "sigma_A", number(f.sigma_A) },
        { "sigma_tau_us", number(f.sigma_tau_us) }, { "sigma_B", number(f.sigma_B) }, { "chi2", number(f.chi2) },
        { "ndf", f.ndf }, { "n_candidates", f.n_candidates }, { "converged", f.converged },
        { "iterations", f.iterations }, { "fit_min_us", number(f.fit_min_us) }, { "fit_max_us", number(f.fit_max_us) } };
    return j.dump() + "\n";
}

FitResult fit_from_json(std::string_view text)
{
    try {
        const json j = json::parse(text);
        FitResult f;
        f.A = number_from(j.at("A"));
        f.tau_us = number_from(j.at("tau_us"));
        f.B = number_from(j.at("B"));
        f.sigma_A = number_from(j.at("sigma_A"));
        f.sigma_tau_us = number_from(j.at("sigma_tau_us"));
        f.sigma_B = number_from(j.at("sigma_B"));
        f.chi2 = number_from(j.at("chi2"));
        f.ndf = j.at("ndf").get<int>();
        f.n_candidates = j.at("n_candidates").get<std::uint64_t>();
        f.converged = j.at("converged").get<bool>();
        f.iterations = j.at("iterations").get<int>();
        f.fit_min_us = number_from(j.at("fit_min_us"));
        f.fit_max_us = number_from(j.at("fit_max_us"));
        return f;
    } catch (const json::exception& e) {
        throw InvalidFitRange(std::string("malformed fit result: ") + e.what());
    }
}

} // namespace elab::cosmic

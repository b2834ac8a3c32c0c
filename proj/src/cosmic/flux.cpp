#include "elab/cosmic/flux.hpp"

#include "elab/cosmic/kernels.hpp"

#include <json.hpp>

#include <cmath>

namespace elab::cosmic {

std::vector<FluxPoint> flux_study(const Dataset& ds, double bin_width_s, int coincidence_level)
{
    if (!(std::isfinite(bin_width_s) && bin_width_s > 0)) {
        throw InvalidBinWidth("bin width must be positive");
    }
    const auto width_ns = static_cast<std::uint64_t>(std::llround(bin_width_s * 1e9));
    if (width_ns == 0) {
        throw InvalidBinWidth("bin width is below 1 ns");
    }
    if (ds.pulses.empty()) {
        throw EmptyDataset();
    }
    const auto origin = ds.pulses.front().rise_ns;
    const auto n_bins = static_cast<std::size_t>((ds.pulses.back().rise_ns - origin) / width_ns + 1);
    std::vector<std::uint64_t> times;
    for (const auto& t : find_triggers(ds.pulses, coincidence_level)) {
        times.push_back(t.time_ns);
    }
    const auto counts = bin_times(times, origin, width_ns, n_bins);
    const double w = static_cast<double>(width_ns) * 1e-9;
    std::vector<FluxPoint> out;
    out.reserve(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) {
        const double c = static_cast<double>(counts[k]);
        out.push_back({ origin + k * width_ns, counts[k], c / w, std::sqrt(c) / w });
    }
    return out;
}

using json = nlohmann::ordered_json;

std::string to_jsonl(const std::vector<FluxPoint>& series)
{
    std::string out;
    for (const auto& p : series) {
        out += json { { "start_ns", p.start_ns }, { "count", p.count }, { "rate_hz", p.rate_hz },
            { "error_hz", p.error_hz } }
                   .dump();
        out += '\n';
    }
    return out;
}

std::vector<FluxPoint> flux_from_jsonl(std::string_view text)
{
    std::vector<FluxPoint> out;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        const auto line = text.substr(start, end - start);
        start = end + 1;
        if (line.empty()) {
            continue;
        }
        try {
            const json j = json::parse(line);
            out.push_back({ j.at("start_ns").get<std::uint64_t>(), j.at("count").get<std::uint64_t>(),
                j.at("rate_hz").get<double>(), j.at("error_hz").get<double>() });
        } catch (const json::exception& e) {
            throw InvalidBinWidth(std::string("malformed flux series: ") + e.what());
        }
    }
    return out;
}

} // namespace elab::cosmic

#include "elab/cosmic/histogram.hpp"

#include "elab/cosmic/kernels.hpp"

#include <json.hpp>

#include <numeric>

namespace elab::cosmic {

using json = nlohmann::ordered_json;

Histogram make_histogram(const std::vector<std::uint64_t>& deltas_ns, std::uint64_t range_ns, int bins)
{
    if (bins < 2) {
        throw InvalidHistogram("a histogram needs at least 2 bins");
    }
    if (range_ns == 0) {
        throw InvalidHistogram("histogram range must be positive");
    }
    Histogram h;
    const double range_us = static_cast<double>(range_ns) / 1000.0;
    for (int i = 0; i <= bins; ++i) {
        h.edges.push_back(range_us * i / bins);
    }
    h.counts = fill_histogram(deltas_ns, range_ns, bins);
    h.entries = std::accumulate(h.counts.begin(), h.counts.end(), std::uint64_t { 0 });
    h.candidates = deltas_ns.size();
    return h;
}

std::string to_json(const Histogram& h)
{
    json j { { "unit", h.unit }, { "edges", h.edges }, { "counts", h.counts }, { "entries", h.entries },
        { "candidates", h.candidates } };
    return j.dump() + "\n";
}

Histogram histogram_from_json(std::string_view text)
{
    try {
        const json j = json::parse(text);
        Histogram h;
        h.unit = j.at("unit").get<std::string>();
        h.edges = j.at("edges").get<std::vector<double>>();
        h.counts = j.at("counts").get<std::vector<std::uint64_t>>();
        h.entries = j.at("entries").get<std::uint64_t>();
        h.candidates = j.at("candidates").get<std::uint64_t>();
        if (h.edges.size() != h.counts.size() + 1) {
            throw InvalidHistogram("histogram edges and counts disagree in length");
        }
        return h;
    } catch (const json::exception& e) {
        throw InvalidHistogram(std::string("malformed histogram: ") + e.what());
    }
}

} // namespace elab::cosmic

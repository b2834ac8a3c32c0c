#include "elab/cosmic/shower.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>

namespace elab::cosmic {

std::vector<GroupPulse> merge_pulses(const std::vector<Dataset>& datasets)
{
    struct Keyed {
        GroupPulse pulse;
        std::size_t dataset;
    };
    std::vector<Keyed> all;
    for (std::size_t d = 0; d < datasets.size(); ++d) {
        for (const auto& p : datasets[d].pulses) {
            all.push_back({ { datasets[d].detector_id, p.channel, p.rise_ns, p.fall_ns }, d });
        }
    }
    std::stable_sort(all.begin(), all.end(), [](const Keyed& a, const Keyed& b) {
        return std::tie(a.pulse.rise_ns, a.dataset, a.pulse.channel) < std::tie(b.pulse.rise_ns, b.dataset, b.pulse.channel);
    });
    std::vector<GroupPulse> out;
    out.reserve(all.size());
    for (auto& k : all) {
        out.push_back(std::move(k.pulse));
    }
    return out;
}

std::vector<CoincidenceGroup> shower_search(const std::vector<Dataset>& datasets, double window_s, int min_detectors)
{
    if (datasets.size() < 2) {
        throw NeedTwoDatasets();
    }
    if (!(std::isfinite(window_s) && window_s > 0)) {
        throw InvalidShowerParams("window must be positive");
    }
    if (min_detectors < 2) {
        throw InvalidShowerParams("min_detectors must be at least 2");
    }
    const auto window_ns = static_cast<std::uint64_t>(std::llround(window_s * 1e9));
    const auto stream = merge_pulses(datasets);
    const auto n = stream.size();

    // Detector ids as small integers for counting.
    std::vector<std::string> ids;
    for (const auto& d : datasets) {
        ids.push_back(d.detector_id);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::vector<std::size_t> det(n);
    for (std::size_t i = 0; i < n; ++i) {
        det[i] = static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), stream[i].detector_id) - ids.begin());
    }

    std::vector<std::size_t> end(n);
    for (std::size_t i = 0, e = 0; i < n; ++i) {
        e = std::max(e, i);
        while (e + 1 < n && stream[e + 1].rise_ns - stream[i].rise_ns <= window_ns) {
            ++e;
        }
        end[i] = e;
    }

    const auto ni = static_cast<std::int64_t>(n);
    std::vector<char> qualifies(n, 0);
#pragma omp parallel for schedule(dynamic, 256)
    for (std::int64_t i = 0; i < ni; ++i) {
        if (i > 0 && end[i - 1] >= end[i]) {
            continue;
        }
        std::vector<char> seen(ids.size(), 0);
        int distinct = 0;
        for (std::size_t j = static_cast<std::size_t>(i); j <= end[i] && distinct < min_detectors; ++j) {
            if (!seen[det[j]]) {
                seen[det[j]] = 1;
                ++distinct;
            }
        }
        qualifies[i] = distinct >= min_detectors;
    }

    std::vector<CoincidenceGroup> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (!qualifies[i]) {
            continue;
        }
        CoincidenceGroup g;
        std::set<std::string> dets;
        for (std::size_t j = i; j <= end[i]; ++j) {
            g.pulses.push_back(stream[j]);
            dets.insert(stream[j].detector_id);
        }
        g.spread_ns = stream[end[i]].rise_ns - stream[i].rise_ns;
        g.detectors.assign(dets.begin(), dets.end());
        out.push_back(std::move(g));
    }
    return out;
}

using json = nlohmann::ordered_json;

std::string to_jsonl(const std::vector<CoincidenceGroup>& groups)
{
    std::string out;
    for (const auto& g : groups) {
        json pulses = json::array();
        for (const auto& p : g.pulses) {
            pulses.push_back(json { { "detector", p.detector_id }, { "channel", p.channel }, { "rise_ns", p.rise_ns },
                { "fall_ns", p.fall_ns } });
        }
        out += json { { "spread_ns", g.spread_ns }, { "detectors", g.detectors }, { "pulses", pulses } }.dump();
        out += '\n';
    }
    return out;
}

std::vector<CoincidenceGroup> groups_from_jsonl(std::string_view text)
{
    std::vector<CoincidenceGroup> out;
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
            CoincidenceGroup g;
            g.spread_ns = j.at("spread_ns").get<std::uint64_t>();
            g.detectors = j.at("detectors").get<std::vector<std::string>>();
            for (const auto& p : j.at("pulses")) {
                g.pulses.push_back({ p.at("detector").get<std::string>(), p.at("channel").get<int>(),
                    p.at("rise_ns").get<std::uint64_t>(), p.at("fall_ns").get<std::uint64_t>() });
            }
            out.push_back(std::move(g));
        } catch (const json::exception& e) {
            throw InvalidShowerParams(std::string("malformed group file: ") + e.what());
        }
    }
    return out;
}

} // namespace elab::cosmic

#include "elab/cosmic/dataset.hpp"

#include "elab/common/text.hpp"

#include <array>
#include <optional>

namespace elab::cosmic {

DatasetError::DatasetError(std::size_t line, const std::string& message)
    : Error(line ? "line " + std::to_string(line) + ": " + message : message)
    , line_(line)
{
}

EmptyFile::EmptyFile() : DatasetError(0, "file contains no detector data") {}

MalformedLine::MalformedLine(std::size_t line, const std::string& why) : DatasetError(line, why) {}

ChannelOutOfRange::ChannelOutOfRange(std::size_t line, std::int64_t channel)
    : DatasetError(line, "channel " + std::to_string(channel) + " is outside 1-4")
{
}

NonMonotonicTime::NonMonotonicTime(std::size_t line, int channel)
    : DatasetError(line, "rise time on channel " + std::to_string(channel) + " does not increase")
    , channel_(channel)
{
}

NegativeWidth::NegativeWidth(std::size_t line) : DatasetError(line, "pulse falls before it rises") {}

Dataset parse_dataset(std::string_view text)
{
    Dataset d;
    bool have_header = false;
    bool any_content = false;
    std::array<std::optional<std::uint64_t>, 5> last_rise {};
    std::uint64_t last_global = 0;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        auto line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        const auto tok = split_ws(line);
        if (tok.empty()) {
            if (end == text.size()) {
                break;
            }
            continue;
        }
        any_content = true;
        if (tok[0] == "detector") {
            if (have_header) {
                throw MalformedLine(line_no, "second detector line");
            }
            if (tok.size() != 8) {
                throw MalformedLine(line_no, "detector line needs 7 fields");
            }
            const auto lat = parse_double(tok[5]);
            const auto lon = parse_double(tok[6]);
            const auto alt = parse_double(tok[7]);
            if (!lat || !lon || !alt) {
                throw MalformedLine(line_no, "detector coordinates are not numbers");
            }
            if (*lat < -90 || *lat > 90 || *lon < -180 || *lon > 180) {
                throw MalformedLine(line_no, "detector coordinates out of range");
            }
            d.detector_id = std::string(tok[1]);
            d.school = std::string(tok[2]);
            d.city = std::string(tok[3]);
            d.state = std::string(tok[4]);
            d.latitude = *lat;
            d.longitude = *lon;
            d.altitude_m = *alt;
            have_header = true;
        } else if (tok[0] == "pulse") {
            if (!have_header) {
                throw MalformedLine(line_no, "pulse before the detector line");
            }
            if (tok.size() != 4) {
                throw MalformedLine(line_no, "pulse line needs 3 fields");
            }
            const auto channel = parse_int(tok[1]);
            const auto rise = parse_uint(tok[2]);
            const auto fall = parse_uint(tok[3]);
            if (!channel || !rise || !fall) {
                throw MalformedLine(line_no, "pulse fields are not integers");
            }
            if (*channel < 1 || *channel > 4) {
                throw ChannelOutOfRange(line_no, *channel);
            }
            const int ch = static_cast<int>(*channel);
            if (*fall < *rise) {
                throw NegativeWidth(line_no);
            }
            if (*fall - *rise >= max_pulse_width_ns) {
                throw MalformedLine(line_no, "time over threshold of 10 us or more");
            }
            if ((!d.pulses.empty() && *rise < last_global) || (last_rise[ch] && *rise <= *last_rise[ch])) {
                throw NonMonotonicTime(line_no, ch);
            }
            last_rise[ch] = *rise;
            last_global = *rise;
            d.pulses.push_back({ ch, *rise, *fall });
        } else {
            throw MalformedLine(line_no, "unknown record '" + std::string(tok[0]) + "'");
        }
        if (end == text.size()) {
            break;
        }
    }
    if (!any_content) {
        throw EmptyFile();
    }
    return d;
}

std::string format_dataset(const Dataset& d)
{
    std::string out = "detector " + d.detector_id + " " + d.school + " " + d.city + " " + d.state + " "
        + format_double(d.latitude) + " " + format_double(d.longitude) + " " + format_double(d.altitude_m) + "\n";
    out.reserve(out.size() + d.pulses.size() * 40);
    for (const auto& p : d.pulses) {
        out += "pulse ";
        out += std::to_string(p.channel);
        out += ' ';
        out += std::to_string(p.rise_ns);
        out += ' ';
        out += std::to_string(p.fall_ns);
        out += '\n';
    }
    return out;
}

UploadResult validate_upload(std::string_view raw)
{
    using catalog::MetadataTuple;
    UploadResult r { parse_dataset(raw), {} };
    const auto& d = r.dataset;
    auto& md = r.metadata;
    md.push_back(MetadataTuple::string("type", { "Dataset" }));
    md.push_back(MetadataTuple::string("detector", { d.detector_id }));
    md.push_back(MetadataTuple::string("school", { d.school }));
    md.push_back(MetadataTuple::string("city", { d.city }));
    md.push_back(MetadataTuple::string("state", { d.state }));
    md.push_back(MetadataTuple::floating("latitude", { d.latitude }));
    md.push_back(MetadataTuple::floating("longitude", { d.longitude }));
    md.push_back(MetadataTuple::floating("altitude_m", { d.altitude_m }));
    md.push_back(MetadataTuple::integer("pulses", { static_cast<std::int64_t>(d.pulses.size()) }));
    if (!d.pulses.empty()) {
        const auto first = d.pulses.front().rise_ns;
        const auto last = d.pulses.back().rise_ns;
        const catalog::Date start { static_cast<std::int64_t>(first / 1'000'000'000ULL), true };
        const catalog::Date end { static_cast<std::int64_t>(last / 1'000'000'000ULL), true };
        md.push_back(MetadataTuple::date("date", { start }));
        md.push_back(MetadataTuple::date("end_date", { end }));
        md.push_back(MetadataTuple::floating("duration_s", { static_cast<double>(last - first) * 1e-9 }));
    }
    return r;
}

} // namespace elab::cosmic

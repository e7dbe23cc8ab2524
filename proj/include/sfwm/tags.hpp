#pragma once

// Time-tag streams: detector events (channel, integer ticks) and their text
// and binary file formats.
//
// Text format (UTF-8): one `channel<TAB>ticks` record per line. Lines starting
// with `#` are comments, except the headers
//     #tick_ps <picoseconds>          tick duration (default 81)
//     #rep_period_ticks <ticks>       pump repetition period, may be fractional
//     #duration_ticks <ticks>         acquisition length
//
// Binary format (little-endian): magic "TTAG1", u32 tick duration in
// femtoseconds, then 9-byte records of (u8 channel, u64 ticks).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "sfwm/error.hpp"

namespace sfwm {

inline constexpr double kDefaultTickSeconds = 81e-12;

struct TagRecord {
    std::uint8_t channel = 0;
    std::uint64_t ticks = 0;

    friend bool operator==(const TagRecord&, const TagRecord&) = default;
};

inline bool tag_before(const TagRecord& a, const TagRecord& b) {
    return std::tie(a.ticks, a.channel) < std::tie(b.ticks, b.channel);
}

struct TagStream {
    std::vector<TagRecord> records;  // ordered by (ticks, channel)
    double tick_seconds = kDefaultTickSeconds;
    std::optional<double> rep_period_ticks;
    std::optional<std::uint64_t> duration_ticks;
    std::size_t reordered = 0;  // records that arrived out of order

    std::vector<std::uint64_t> times(std::uint8_t channel) const {
        std::vector<std::uint64_t> out;
        for (const auto& r : records)
            if (r.channel == channel) out.push_back(r.ticks);
        return out;
    }

    std::size_t count(std::uint8_t channel) const {
        return static_cast<std::size_t>(
            std::count_if(records.begin(), records.end(), [&](const TagRecord& r) { return r.channel == channel; }));
    }

    /// Acquisition length: declared duration if present, else the span of the
    /// recorded tags.
    double acquisition_seconds() const {
        if (duration_ticks) return static_cast<double>(*duration_ticks) * tick_seconds;
        if (records.empty()) return 0.0;
        return static_cast<double>(records.back().ticks - records.front().ticks + 1) * tick_seconds;
    }

    /// Sorts records into stream order and counts those that were out of order.
    void normalize() {
        for (std::size_t i = 1; i < records.size(); ++i)
            if (tag_before(records[i], records[i - 1])) ++reordered;
        if (reordered > 0) std::stable_sort(records.begin(), records.end(), tag_before);
    }
};

struct TagParseOptions {
    std::vector<std::uint8_t> channels{1, 2, 3};
};

namespace detail {

inline bool channel_declared(const TagParseOptions& opt, long value) {
    return std::any_of(opt.channels.begin(), opt.channels.end(),
                       [&](std::uint8_t c) { return static_cast<long>(c) == value; });
}

}  // namespace detail

inline TagStream parse_tags_text(std::string_view text, const TagParseOptions& options = {}) {
    TagStream stream;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& msg) {
        return ParseError("tag line " + std::to_string(line_no) + ": " + msg, line_no);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream hs(line.substr(1));
            std::string key;
            hs >> key;
            double value = 0.0;
            if (key == "tick_ps" || key == "rep_period_ticks" || key == "duration_ticks") {
                if (!(hs >> value) || !(value > 0.0)) throw fail("header '" + key + "' needs a positive value");
                if (key == "tick_ps") stream.tick_seconds = value * 1e-12;
                else if (key == "rep_period_ticks") stream.rep_period_ticks = value;
                else stream.duration_ticks = static_cast<std::uint64_t>(std::llround(value));
            }
            continue;
        }
        std::istringstream fields(line);
        std::string ch_text, ts_text, extra;
        fields >> ch_text >> ts_text;
        if (ts_text.empty() || (fields >> extra)) throw fail("expected 'channel<TAB>ticks'");
        long channel = 0;
        long long ticks = 0;
        try {
            std::size_t u1 = 0, u2 = 0;
            channel = std::stol(ch_text, &u1);
            ticks = std::stoll(ts_text, &u2);
            if (u1 != ch_text.size() || u2 != ts_text.size()) throw std::invalid_argument(line);
        } catch (const std::exception&) {
            throw fail("malformed record");
        }
        if (ticks < 0) throw fail("negative timestamp");
        if (!detail::channel_declared(options, channel))
            throw fail("unknown channel " + std::to_string(channel));
        stream.records.push_back({static_cast<std::uint8_t>(channel), static_cast<std::uint64_t>(ticks)});
    }
    stream.normalize();
    return stream;
}

inline constexpr std::string_view kBinaryMagic = "TTAG1";
inline constexpr std::size_t kBinaryRecordSize = 9;

inline TagStream parse_tags_binary(std::string_view bytes, const TagParseOptions& options = {}) {
    if (bytes.size() < kBinaryMagic.size() + 4 || bytes.substr(0, kBinaryMagic.size()) != kBinaryMagic)
        throw ParseError("binary tags: missing TTAG1 header at byte 0", 0);
    auto u8 = [&](std::size_t at) { return static_cast<std::uint8_t>(bytes[at]); };
    std::size_t pos = kBinaryMagic.size();
    std::uint32_t tick_fs = 0;
    for (int b = 0; b < 4; ++b) tick_fs |= static_cast<std::uint32_t>(u8(pos + b)) << (8 * b);
    if (tick_fs == 0) throw ParseError("binary tags: zero tick duration at byte 5", pos);
    pos += 4;

    TagStream stream;
    stream.tick_seconds = static_cast<double>(tick_fs) * 1e-15;
    const std::size_t body = bytes.size() - pos;
    if (body % kBinaryRecordSize != 0)
        throw ParseError("binary tags: truncated record at byte " +
                             std::to_string(pos + body / kBinaryRecordSize * kBinaryRecordSize),
                         pos + body / kBinaryRecordSize * kBinaryRecordSize);
    stream.records.reserve(body / kBinaryRecordSize);
    for (; pos < bytes.size(); pos += kBinaryRecordSize) {
        const std::uint8_t channel = u8(pos);
        if (!detail::channel_declared(options, channel))
            throw ParseError("binary tags: unknown channel " + std::to_string(channel) + " at byte " +
                                 std::to_string(pos),
                             pos);
        std::uint64_t ticks = 0;
        for (int b = 0; b < 8; ++b) ticks |= static_cast<std::uint64_t>(u8(pos + 1 + b)) << (8 * b);
        stream.records.push_back({channel, ticks});
    }
    stream.normalize();
    return stream;
}

/// Detects the binary magic; anything else is read as text.
inline TagStream parse_tags(std::string_view data, const TagParseOptions& options = {}) {
    if (data.substr(0, kBinaryMagic.size()) == kBinaryMagic) return parse_tags_binary(data, options);
    return parse_tags_text(data, options);
}

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline TagStream load_tags(const std::string& path, const TagParseOptions& options = {}) {
    return parse_tags(read_file_bytes(path), options);
}

inline std::string format_tags_text(const TagStream& stream) {
    std::ostringstream os;
    os.precision(17);
    os << "#tick_ps " << stream.tick_seconds * 1e12 << '\n';
    if (stream.rep_period_ticks) os << "#rep_period_ticks " << *stream.rep_period_ticks << '\n';
    if (stream.duration_ticks) os << "#duration_ticks " << *stream.duration_ticks << '\n';
    for (const auto& r : stream.records) os << static_cast<int>(r.channel) << '\t' << r.ticks << '\n';
    return os.str();
}

inline std::string format_tags_binary(const TagStream& stream) {
    std::string out(kBinaryMagic);
    const auto tick_fs = static_cast<std::uint32_t>(std::llround(stream.tick_seconds * 1e15));
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((tick_fs >> (8 * b)) & 0xFF));
    out.reserve(out.size() + stream.records.size() * kBinaryRecordSize);
    for (const auto& r : stream.records) {
        out.push_back(static_cast<char>(r.channel));
        for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((r.ticks >> (8 * b)) & 0xFF));
    }
    return out;
}

}  // namespace sfwm

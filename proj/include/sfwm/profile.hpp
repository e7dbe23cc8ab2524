#pragma once

// Taper geometry: measured diameter-vs-position samples and their
// discretization into N equal segments.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sfwm/dispersion.hpp"
#include "sfwm/error.hpp"

namespace sfwm {

struct ProfileSample {
    double z;          // m
    double diameter;   // m
};

class TaperProfile {
public:
    TaperProfile(std::vector<ProfileSample> samples, std::string label = {})
        : samples_(std::move(samples)), label_(std::move(label)) {
        if (samples_.size() < 2) throw ValidationError("taper profile needs at least 2 samples");
        for (std::size_t i = 0; i < samples_.size(); ++i) {
            if (!(samples_[i].diameter > 0.0))
                throw ValidationError("profile row " + std::to_string(i + 1) + ": diameter must be positive");
            if (i > 0 && !(samples_[i].z > samples_[i - 1].z))
                throw ValidationError("profile row " + std::to_string(i + 1) +
                                      ": z must be strictly increasing");
        }
    }

    const std::vector<ProfileSample>& samples() const { return samples_; }
    const std::string& label() const { return label_; }
    double z_begin() const { return samples_.front().z; }
    double z_end() const { return samples_.back().z; }
    double span() const { return z_end() - z_begin(); }

    double min_diameter() const {
        return std::min_element(samples_.begin(), samples_.end(),
                                [](auto& a, auto& b) { return a.diameter < b.diameter; })->diameter;
    }
    double max_diameter() const {
        return std::max_element(samples_.begin(), samples_.end(),
                                [](auto& a, auto& b) { return a.diameter < b.diameter; })->diameter;
    }

    /// Piecewise-linear diameter at z (clamped to the sampled span).
    double diameter_at(double z) const {
        if (z <= samples_.front().z) return samples_.front().diameter;
        if (z >= samples_.back().z) return samples_.back().diameter;
        auto it = std::upper_bound(samples_.begin(), samples_.end(), z,
                                   [](double v, const ProfileSample& s) { return v < s.z; });
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        const double t = (z - lo.z) / (hi.z - lo.z);
        return lo.diameter + t * (hi.diameter - lo.diameter);
    }

    /// 64-bit FNV-1a over the raw sample bytes; identifies the profile in
    /// output metadata.
    std::uint64_t hash() const {
        std::uint64_t h = 1469598103934665603ull;
        for (const auto& s : samples_) {
            for (double v : {s.z, s.diameter}) {
                unsigned char bytes[sizeof(double)];
                std::memcpy(bytes, &v, sizeof v);
                for (unsigned char b : bytes) {
                    h ^= b;
                    h *= 1099511628211ull;
                }
            }
        }
        return h;
    }

private:
    std::vector<ProfileSample> samples_;
    std::string label_;
};

/// Parse the two-column profile format: one `z_meters diameter_meters` pair
/// per line separated by whitespace, `#` starting a comment.
inline TaperProfile parse_profile(std::string_view text, std::string label = {}) {
    std::vector<ProfileSample> samples;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = detail::trim(std::string_view(raw).substr(0, hash));
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string zs, ds, extra;
        fields >> zs >> ds;
        if (ds.empty() || (fields >> extra))
            throw ParseError("profile line " + std::to_string(line_no) + ": expected two columns", line_no);
        double z = 0.0, d = 0.0;
        try {
            std::size_t uz = 0, ud = 0;
            z = std::stod(zs, &uz);
            d = std::stod(ds, &ud);
            if (uz != zs.size() || ud != ds.size()) throw std::invalid_argument(line);
        } catch (const std::exception&) {
            throw ParseError("profile line " + std::to_string(line_no) + ": malformed number", line_no);
        }
        if (!samples.empty() && !(z > samples.back().z)) {
            throw ValidationError("profile line " + std::to_string(line_no) +
                                  ": z not strictly increasing (first offending row)");
        }
        samples.push_back({z, d});
    }
    if (samples.empty()) throw ValidationError("profile contains no samples");
    return TaperProfile(std::move(samples), std::move(label));
}

inline TaperProfile load_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open profile file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_profile(buf.str(), path);
}

/// N equal segments of length l; each carries the cross-section at its
/// midpoint. Segment 0 is the input end.
struct SegmentedProfile {
    double segment_length;
    std::vector<CrossSection> segments;

    std::size_t count() const { return segments.size(); }
};

inline SegmentedProfile segment(const TaperProfile& profile, std::size_t n,
                                const SellmeierGlass& core = fused_silica(),
                                CrossSection::Cladding cladding = kAir) {
    if (n < 1) throw DomainError("segment count must be at least 1");
    SegmentedProfile out{profile.span() / static_cast<double>(n), {}};
    out.segments.reserve(n);
    for (std::size_t q = 0; q < n; ++q) {
        const double z = profile.z_begin() + (static_cast<double>(q) + 0.5) * out.segment_length;
        out.segments.emplace_back(profile.diameter_at(z), core, cladding);
    }
    return out;
}

}  // namespace sfwm

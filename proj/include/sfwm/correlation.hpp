#pragma once

// Single-pass correlation analyses over a time-ordered tag stream:
// two-channel coincidence histograms and the heralded autocorrelation
// histogram indexed by herald separation.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "sfwm/error.hpp"
#include "sfwm/rates.hpp"
#include "sfwm/tags.hpp"

namespace sfwm {

/// Counts versus delay t_b - t_a. Bin k (k = -K..K) is centered on k *
/// bin_width ticks and spans [k w - w/2, k w + w/2).
struct CoincidenceHistogram {
    std::int64_t bin_width = 1;
    std::int64_t range = 0;  // K * bin_width
    std::vector<std::uint64_t> counts;

    std::int64_t half_bins() const { return range / bin_width; }
    std::int64_t center(std::size_t index) const {
        return (static_cast<std::int64_t>(index) - half_bins()) * bin_width;
    }
    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (auto c : counts) t += c;
        return t;
    }
};

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    const std::int64_t q = a / b;
    return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

/// Every (a, b) pair with a on `channel_a`, b on `channel_b` and
/// |t_b - t_a| <= range. A record never pairs with itself.
inline CoincidenceHistogram coincidence_histogram(const TagStream& stream, std::uint8_t channel_a,
                                                  std::uint8_t channel_b, std::int64_t bin_width,
                                                  std::int64_t range) {
    if (bin_width < 1) throw DomainError("bin width must be at least one tick");
    if (range < 0 || range % bin_width != 0) throw DomainError("range must be a non-negative multiple of bin width");

    CoincidenceHistogram hist;
    hist.bin_width = bin_width;
    hist.range = range;
    hist.counts.assign(static_cast<std::size_t>(2 * hist.half_bins() + 1), 0);

    // Indices into the stream keep self-pairs identifiable when a == b.
    std::vector<std::size_t> a_idx, b_idx;
    for (std::size_t i = 0; i < stream.records.size(); ++i) {
        if (stream.records[i].channel == channel_a) a_idx.push_back(i);
        if (stream.records[i].channel == channel_b) b_idx.push_back(i);
    }
    const auto t = [&](std::size_t i) { return static_cast<std::int64_t>(stream.records[i].ticks); };
    std::size_t lo = 0;
    for (std::size_t ia : a_idx) {
        const std::int64_t ta = t(ia);
        while (lo < b_idx.size() && t(b_idx[lo]) < ta - range) ++lo;
        for (std::size_t j = lo; j < b_idx.size(); ++j) {
            const std::int64_t delay = t(b_idx[j]) - ta;
            if (delay > range) break;
            if (b_idx[j] == ia) continue;
            const std::int64_t k = floor_div(2 * delay + bin_width, 2 * bin_width);
            ++hist.counts[static_cast<std::size_t>(k + hist.half_bins())];
        }
    }
    return hist;
}

struct PeakAccidentals {
    double peak_counts = 0.0;
    double accidental_counts = 0.0;  // mean over the +-1, +-2 period windows
    double peak_rate = 0.0;          // Hz
    double accidental_rate = 0.0;    // Hz
    double car = 0.0;
};

/// Sum of counts in bins whose center lies within +-window/2 of `center`.
inline double window_counts(const CoincidenceHistogram& hist, double center, double window) {
    double sum = 0.0;
    for (std::size_t k = 0; k < hist.counts.size(); ++k)
        if (2.0 * std::abs(static_cast<double>(hist.center(k)) - center) <= window)
            sum += static_cast<double>(hist.counts[k]);
    return sum;
}

inline PeakAccidentals peak_and_accidentals(const CoincidenceHistogram& hist, double rep_period, double window,
                                            double acquisition_seconds) {
    if (!(rep_period > 0.0) || !(window > 0.0)) throw DomainError("rep period and window must be positive");
    if (!(acquisition_seconds > 0.0)) throw DomainError("acquisition time must be positive");
    PeakAccidentals out;
    out.peak_counts = window_counts(hist, 0.0, window);
    double acc = 0.0;
    for (double m : {-2.0, -1.0, 1.0, 2.0}) acc += window_counts(hist, m * rep_period, window);
    out.accidental_counts = acc / 4.0;
    out.peak_rate = out.peak_counts / acquisition_seconds;
    out.accidental_rate = out.accidental_counts / acquisition_seconds;
    out.car = car(out.peak_rate, out.accidental_rate);
    return out;
}

/// Heralded autocorrelation versus herald separation m:
///   g2(m) = [sum_i A_i B_{i+m}] * H / (sum A * sum B)
/// where A_i (B_i) flags a click on arm A (B) within +-window/2 of herald i.
struct HeraldedG2Histogram {
    std::int64_t window = 0;
    std::uint64_t heralds = 0;
    std::uint64_t heralded_a = 0;
    std::uint64_t heralded_b = 0;
    std::vector<std::uint64_t> coincidences;  // numerator counts per m
    std::vector<double> g2;
    std::vector<double> sigma;  // Poisson estimate from the retained counts
};

/// Per-herald click flags on one arm.
inline std::vector<std::uint8_t> heralded_flags(const std::vector<std::uint64_t>& heralds,
                                                const std::vector<std::uint64_t>& arm, std::int64_t window) {
    std::vector<std::uint8_t> flags(heralds.size(), 0);
    std::size_t lo = 0;
    for (std::size_t i = 0; i < heralds.size(); ++i) {
        const auto th = static_cast<std::int64_t>(heralds[i]);
        while (lo < arm.size() && 2 * (th - static_cast<std::int64_t>(arm[lo])) > window) ++lo;
        if (lo < arm.size() && 2 * std::abs(static_cast<std::int64_t>(arm[lo]) - th) <= window) flags[i] = 1;
    }
    return flags;
}

inline HeraldedG2Histogram heralded_g2(const TagStream& stream, std::uint8_t herald, std::uint8_t channel_a,
                                       std::uint8_t channel_b, std::int64_t window, std::size_t max_separation) {
    if (window < 1) throw DomainError("coincidence window must be at least one tick");
    const auto h = stream.times(herald);
    const auto a = heralded_flags(h, stream.times(channel_a), window);
    const auto b = heralded_flags(h, stream.times(channel_b), window);

    HeraldedG2Histogram out;
    out.window = window;
    out.heralds = h.size();
    for (std::size_t i = 0; i < h.size(); ++i) {
        out.heralded_a += a[i];
        out.heralded_b += b[i];
    }
    if (out.heralds == 0) throw DomainError("heralded g2 undefined: no herald events");
    if (out.heralded_a == 0 || out.heralded_b == 0)
        throw DomainError("heralded g2 undefined: no heralded clicks on one arm");

    const double norm = static_cast<double>(out.heralds) /
                        (static_cast<double>(out.heralded_a) * static_cast<double>(out.heralded_b));
    for (std::size_t m = 0; m <= max_separation; ++m) {
        std::uint64_t n = 0;
        for (std::size_t i = 0; i + m < h.size(); ++i) n += a[i] & b[i + m];
        out.coincidences.push_back(n);
        const double g = static_cast<double>(n) * norm;
        out.g2.push_back(g);
        const double rel = 1.0 / std::max<double>(static_cast<double>(n), 1.0) +
                           1.0 / static_cast<double>(out.heralded_a) + 1.0 / static_cast<double>(out.heralded_b);
        out.sigma.push_back((n > 0 ? g : norm) * std::sqrt(rel));
    }
    return out;
}

}  // namespace sfwm

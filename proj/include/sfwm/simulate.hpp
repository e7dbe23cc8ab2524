#pragma once

// Monte-Carlo source of time tags for a pulsed pair source with a heralding
// detector and a beam-splitter-divided signal arm.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "sfwm/error.hpp"
#include "sfwm/tags.hpp"

namespace sfwm {

enum class PairStatistics {
    Poisson,
    Thermal,
    Single,  // at most one pair per pulse, with probability mean_pairs
};

struct SimulationConfig {
    double rep_period = 54e-9;          // s
    double mean_pairs = 0.05;           // pairs per pulse
    PairStatistics statistics = PairStatistics::Poisson;
    double signal_transmittance = 0.1;  // signal photon reaches the splitter and is detected
    double herald_transmittance = 0.05;
    double splitter_ratio = 0.47;       // fraction of signal photons sent to channel A
    std::array<double, 3> dark_rates{0.0, 0.0, 0.0};  // Hz, indexed A, herald, B
    double dead_time = 15e-6;           // s, non-paralyzable
    double jitter = 0.0;                // s, Gaussian std per click
    double tick = kDefaultTickSeconds;  // s
    double duration = 1e-3;             // s
    double start_offset = 1e-9;         // s, time of the first pulse
    std::uint64_t seed = 1;
    std::uint8_t channel_a = 1;
    std::uint8_t channel_herald = 2;
    std::uint8_t channel_b = 3;

    std::uint64_t pulses() const { return static_cast<std::uint64_t>(std::floor(duration / rep_period)); }

    void validate() const {
        auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
        if (!prob(signal_transmittance) || !prob(herald_transmittance) || !prob(splitter_ratio))
            throw DomainError("transmittances and splitter ratio must lie in [0, 1]");
        if (!(mean_pairs >= 0.0) || !std::isfinite(mean_pairs)) throw DomainError("mean pairs must be >= 0");
        if (statistics == PairStatistics::Single && mean_pairs > 1.0)
            throw DomainError("single-pair statistics need mean pairs <= 1");
        if (!(rep_period > 0.0) || !(tick > 0.0) || !(duration >= 0.0))
            throw DomainError("rep period and tick must be positive, duration non-negative");
        if (!(dead_time >= 0.0) || !(jitter >= 0.0) || !(start_offset >= 0.0))
            throw DomainError("dead time, jitter and start offset must be non-negative");
        for (double r : dark_rates)
            if (!(r >= 0.0)) throw DomainError("dark count rates must be non-negative");
    }
};

/// Generates the stream. Per pulse the pair number is Poisson, thermal or
/// at most one, with mean `mean_pairs`; each idler reaches the herald detector with
/// `herald_transmittance`, each signal is detected with `signal_transmittance`
/// and routed to A with probability `splitter_ratio`. A detector reports at
/// most one click per pulse (the earliest). Dark counts are uniform Poisson
/// processes. Dead time is applied per detector after merging, then times are
/// quantized to ticks. The random sequence does not depend on dead time.
inline TagStream simulate_tags(const SimulationConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::poisson_distribution<std::uint32_t> poisson(config.mean_pairs > 0.0 ? config.mean_pairs : 1.0);
    std::geometric_distribution<std::uint32_t> thermal(1.0 / (1.0 + config.mean_pairs));

    const std::uint64_t pulses = config.pulses();
    const double span = static_cast<double>(pulses) * config.rep_period;
    std::array<std::vector<double>, 3> clicks;  // A, herald, B

    auto jittered = [&](double t) { return config.jitter > 0.0 ? t + config.jitter * gauss(rng) : t; };

    if (config.mean_pairs > 0.0) {
        for (std::uint64_t k = 0; k < pulses; ++k) {
            std::uint32_t n = 0;
            switch (config.statistics) {
                case PairStatistics::Poisson: n = poisson(rng); break;
                case PairStatistics::Thermal: n = thermal(rng); break;
                case PairStatistics::Single: n = unit(rng) < config.mean_pairs ? 1 : 0; break;
            }
            if (n == 0) continue;
            const double t_pulse = config.start_offset + static_cast<double>(k) * config.rep_period;
            std::array<double, 3> first;
            first.fill(std::numeric_limits<double>::infinity());
            for (std::uint32_t p = 0; p < n; ++p) {
                if (unit(rng) < config.herald_transmittance) first[1] = std::min(first[1], jittered(t_pulse));
                if (unit(rng) < config.signal_transmittance) {
                    const int arm = unit(rng) < config.splitter_ratio ? 0 : 2;
                    first[arm] = std::min(first[arm], jittered(t_pulse));
                }
            }
            for (int d = 0; d < 3; ++d)
                if (std::isfinite(first[d])) clicks[d].push_back(first[d]);
        }
    }

    const double window_end = config.start_offset + span;
    for (int d = 0; d < 3; ++d) {
        if (config.dark_rates[d] <= 0.0 || span <= 0.0) continue;
        std::poisson_distribution<std::uint64_t> dark_count(config.dark_rates[d] * window_end);
        const std::uint64_t n = dark_count(rng);
        for (std::uint64_t j = 0; j < n; ++j) clicks[d].push_back(unit(rng) * window_end);
    }

    const std::array<std::uint8_t, 3> channel{config.channel_a, config.channel_herald, config.channel_b};
    TagStream stream;
    stream.tick_seconds = config.tick;
    stream.rep_period_ticks = config.rep_period / config.tick;
    stream.duration_ticks = static_cast<std::uint64_t>(std::ceil(window_end / config.tick));
    for (int d = 0; d < 3; ++d) {
        auto& times = clicks[d];
        std::sort(times.begin(), times.end());
        double free_at = -std::numeric_limits<double>::infinity();
        for (double t : times) {
            if (t < free_at) continue;
            free_at = t + config.dead_time;
            const double ticks = std::floor(std::max(t, 0.0) / config.tick);
            stream.records.push_back({channel[d], static_cast<std::uint64_t>(ticks)});
        }
    }
    std::sort(stream.records.begin(), stream.records.end(), tag_before);
    return stream;
}

}  // namespace sfwm

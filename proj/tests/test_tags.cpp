#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sfwm/correlation.hpp"
#include "sfwm/simulate.hpp"
#include "sfwm/tags.hpp"

using namespace sfwm;

namespace {

TagStream random_stream(std::size_t n, std::uint64_t seed) {
    // bursts of nearby tags so that many delays fall inside small ranges
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> ch(1, 3);
    std::uniform_int_distribution<std::uint64_t> gap(0, 400);
    std::uniform_int_distribution<std::uint64_t> jump(0, 5000);
    std::bernoulli_distribution burst_end(0.1);
    TagStream s;
    std::uint64_t t = 1000;
    for (std::size_t k = 0; k < n; ++k) {
        t += burst_end(rng) ? jump(rng) : gap(rng) / 20;
        s.records.push_back({static_cast<std::uint8_t>(ch(rng)), t});
    }
    s.normalize();
    return s;
}

TagStream shifted(TagStream s, std::uint64_t by) {
    for (auto& r : s.records) r.ticks += by;
    return s;
}

SimulationConfig ideal(double mu, std::uint64_t pulses) {
    SimulationConfig c;
    c.mean_pairs = mu;
    c.dead_time = 0.0;
    c.signal_transmittance = 0.8;
    c.herald_transmittance = 0.5;
    c.duration = c.rep_period * static_cast<double>(pulses) + 0.5 * c.rep_period;
    return c;
}

int stats_index(PairStatistics s) {
    return s == PairStatistics::Poisson ? 0 : s == PairStatistics::Thermal ? 1 : 2;
}

double binomial_sigma(double n, double p) { return std::sqrt(n * p * (1.0 - p)); }

}  // namespace

// ---------------------------------------------------------------------------
// parsing
// ---------------------------------------------------------------------------

TEST(TagText, TwoRecordExample) {
    const auto s = parse_tags_text("1\t3\n2\t0\n");
    ASSERT_EQ(s.records.size(), 2u);
    EXPECT_EQ(s.records[0], (TagRecord{2, 0}));
    EXPECT_EQ(s.records[1], (TagRecord{1, 3}));
    EXPECT_EQ(s.reordered, 1u);
}

TEST(TagText, EmptyInputIsEmptyStream) {
    const auto s = parse_tags_text("");
    EXPECT_TRUE(s.records.empty());
    EXPECT_EQ(s.acquisition_seconds(), 0.0);
}

TEST(TagText, Headers) {
    const auto s = parse_tags_text("#tick_ps 100\n#rep_period_ticks 540\n#duration_ticks 1000\n# note\n1 5\r\n");
    EXPECT_NEAR(s.tick_seconds, 100e-12, 1e-24);
    EXPECT_EQ(*s.rep_period_ticks, 540.0);
    EXPECT_EQ(*s.duration_ticks, 1000u);
    EXPECT_NEAR(s.acquisition_seconds(), 1000 * 100e-12, 1e-20);
}

TEST(TagText, ErrorsCarryLineNumbers) {
    auto line_of = [](const char* text) {
        try {
            parse_tags_text(text);
        } catch (const ParseError& e) {
            return e.location();
        }
        return std::size_t{0};
    };
    EXPECT_EQ(line_of("1 0\n9 10\n"), 2u);       // undeclared channel
    EXPECT_EQ(line_of("1 0\n1 -4\n"), 2u);       // negative timestamp
    EXPECT_EQ(line_of("1 x\n"), 1u);             // malformed
    EXPECT_EQ(line_of("1 2 3\n"), 1u);           // extra field
    EXPECT_EQ(line_of("#tick_ps 0\n1 1\n"), 1u);  // bad header
}

TEST(TagText, CustomChannelSet) {
    TagParseOptions opt;
    opt.channels = {5, 7};
    EXPECT_NO_THROW(parse_tags_text("5 1\n7 2\n", opt));
    EXPECT_THROW(parse_tags_text("1 1\n", opt), ParseError);
}

TEST(TagFormats, TextRoundTrip) {
    auto s = random_stream(500, 3);
    s.rep_period_ticks = 666.5;
    s.duration_ticks = 10000000;
    const auto back = parse_tags_text(format_tags_text(s));
    EXPECT_EQ(back.records, s.records);
    EXPECT_EQ(back.rep_period_ticks, s.rep_period_ticks);
    EXPECT_EQ(back.duration_ticks, s.duration_ticks);
    EXPECT_DOUBLE_EQ(back.tick_seconds, s.tick_seconds);
}

TEST(TagFormats, BinaryRoundTrip) {
    const auto s = random_stream(500, 4);
    const auto bytes = format_tags_binary(s);
    EXPECT_EQ(bytes.size(), 9 + 9 * s.records.size());
    const auto back = parse_tags(bytes);
    EXPECT_EQ(back.records, s.records);
    EXPECT_DOUBLE_EQ(back.tick_seconds, s.tick_seconds);
}

TEST(TagFormats, BinaryErrorsCarryByteOffsets) {
    const auto s = random_stream(3, 5);
    auto bytes = format_tags_binary(s);
    try {
        parse_tags_binary(bytes.substr(0, bytes.size() - 4));
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.location(), 9u + 18u);
    }
    bytes[9 + 9] = 42;
    try {
        parse_tags_binary(bytes);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.location(), 18u);
    }
    EXPECT_THROW(parse_tags_binary("TTAG"), ParseError);
    EXPECT_THROW(parse_tags_binary(std::string("TTAG1\0\0\0\0", 9)), ParseError);
}

TEST(TagFormats, MissingFileIsIoError) { EXPECT_THROW(load_tags("/nonexistent/tags.txt"), IoError); }

// ---------------------------------------------------------------------------
// coincidence histogram
// ---------------------------------------------------------------------------

TEST(Histogram, EqualsBruteForce) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto s = random_stream(10000, seed);
        for (auto [a, b] : {std::pair{1, 2}, std::pair{2, 1}, std::pair{1, 1}, std::pair{3, 2}}) {
            for (auto [bin, range] : {std::pair{1, 50}, std::pair{3, 300}, std::pair{10, 2000}}) {
                const auto h = coincidence_histogram(s, a, b, bin, range);
                EXPECT_EQ(h.counts, oracle::brute_histogram(s, a, b, bin, range))
                    << seed << " " << a << b << " " << bin << " " << range;
            }
        }
    }
}

TEST(Histogram, InvariantUnderTimeShift) {
    const auto s = random_stream(3000, 9);
    const auto a = coincidence_histogram(s, 1, 2, 7, 700);
    const auto b = coincidence_histogram(shifted(s, 123457), 1, 2, 7, 700);
    EXPECT_EQ(a.counts, b.counts);
}

TEST(Histogram, NeverPairsARecordWithItself) {
    TagStream one;
    one.records = {{1, 100}};
    EXPECT_EQ(coincidence_histogram(one, 1, 1, 1, 10).total(), 0u);
    TagStream two;
    two.records = {{1, 100}, {1, 100}};
    const auto h = coincidence_histogram(two, 1, 1, 1, 10);
    EXPECT_EQ(h.total(), 2u);
    EXPECT_EQ(h.counts[10], 2u);
}

TEST(Histogram, EmptyWhenNothingInRange) {
    TagStream s;
    s.records = {{1, 0}, {2, 100000}};
    const auto h = coincidence_histogram(s, 1, 2, 10, 1000);
    EXPECT_EQ(h.total(), 0u);
    EXPECT_EQ(h.counts.size(), 201u);
}

TEST(Histogram, BinEdgesHalfOpen) {
    TagStream s;
    s.records = {{1, 100}, {2, 104}, {2, 105}, {2, 95}, {2, 94}};
    const auto h = coincidence_histogram(s, 1, 2, 10, 20);
    // bin 0 spans [-5, 5)
    EXPECT_EQ(h.counts[2], 2u);  // +4, -5
    EXPECT_EQ(h.counts[3], 1u);  // +5
    EXPECT_EQ(h.counts[1], 1u);  // -6
}

TEST(Histogram, RejectsBadBinning) {
    TagStream s;
    EXPECT_THROW(coincidence_histogram(s, 1, 2, 0, 10), DomainError);
    EXPECT_THROW(coincidence_histogram(s, 1, 2, 3, 10), DomainError);
    EXPECT_THROW(coincidence_histogram(s, 1, 2, 2, -2), DomainError);
}

TEST(PeakAccidentals, WindowCoveringEverythingGivesUnitCar) {
    auto c = ideal(0.1, 20000);
    c.seed = 8;
    const auto s = simulate_tags(c);
    const auto h = coincidence_histogram(s, 1, 2, 10, 2000);
    const auto pa = peak_and_accidentals(h, *s.rep_period_ticks, 1e6, s.acquisition_seconds());
    EXPECT_EQ(pa.peak_counts, static_cast<double>(h.total()));
    EXPECT_EQ(pa.car, 1.0);
}

TEST(PeakAccidentals, MatchesPulseStatistics) {
    auto c = ideal(0.05, 2000000);
    c.signal_transmittance = 0.1;
    c.herald_transmittance = 0.05;
    const double n = static_cast<double>(c.pulses());
    const auto s = simulate_tags(c);
    const auto h = coincidence_histogram(s, 1, 2, 10, 2000);
    const auto pa = peak_and_accidentals(h, *s.rep_period_ticks, 10, s.acquisition_seconds());
    const auto p = oracle::pulse_statistics(0.05, 0, 0.05, 0.1, c.splitter_ratio);
    EXPECT_NEAR(pa.peak_counts, n * p.ah, 3 * binomial_sigma(n, p.ah));
    const double acc = n * p.a * p.h;
    EXPECT_NEAR(pa.accidental_counts, acc, 3 * std::sqrt(acc / 4.0));
    EXPECT_GT(pa.car, 5.0);
}

TEST(PeakAccidentals, Validation) {
    CoincidenceHistogram h;
    h.counts = {0};
    EXPECT_THROW(peak_and_accidentals(h, 0, 10, 1), DomainError);
    EXPECT_THROW(peak_and_accidentals(h, 10, 10, 0), DomainError);
    EXPECT_THROW(peak_and_accidentals(h, 10, 10, 1), DomainError);  // no accidentals
}

// ---------------------------------------------------------------------------
// heralded g2
// ---------------------------------------------------------------------------

TEST(HeraldedG2, EqualsBruteForce) {
    auto c = ideal(0.3, 3000);
    c.dark_rates = {2e5, 2e5, 2e5};
    c.jitter = 300e-12;
    c.seed = 17;
    const auto s = simulate_tags(c);
    ASSERT_LE(s.records.size(), 10000u);
    ASSERT_GE(s.records.size(), 1000u);
    for (std::int64_t window : {1, 5, 20}) {
        const auto g = heralded_g2(s, 2, 1, 3, window, 8);
        const auto b = oracle::brute_g2(s, 2, 1, 3, window, 8);
        EXPECT_EQ(g.heralds, b.heralds);
        EXPECT_EQ(g.heralded_a, b.a);
        EXPECT_EQ(g.heralded_b, b.b);
        EXPECT_EQ(g.coincidences, b.numerators);
        for (std::size_t m = 0; m <= 8; ++m)
            EXPECT_DOUBLE_EQ(g.g2[m], static_cast<double>(b.numerators[m]) * static_cast<double>(b.heralds) /
                                          (static_cast<double>(b.a) * static_cast<double>(b.b)));
    }
}

TEST(HeraldedG2, EqualsBruteForceOnRandomStreams) {
    const auto s = random_stream(10000, 21);
    const auto g = heralded_g2(s, 2, 1, 3, 15, 5);
    const auto b = oracle::brute_g2(s, 2, 1, 3, 15, 5);
    EXPECT_EQ(g.coincidences, b.numerators);
    EXPECT_EQ(g.heralded_a, b.a);
    EXPECT_EQ(g.heralded_b, b.b);
}

TEST(HeraldedG2, InvariantUnderTimeShift) {
    const auto s = random_stream(5000, 22);
    EXPECT_EQ(heralded_g2(s, 2, 1, 3, 9, 4).coincidences, heralded_g2(shifted(s, 99991), 2, 1, 3, 9, 4).coincidences);
}

TEST(HeraldedG2, UndefinedWithoutHeraldsOrArmClicks) {
    TagStream s;
    s.records = {{1, 10}, {3, 10}};
    EXPECT_THROW(heralded_g2(s, 2, 1, 3, 5, 2), DomainError);
    s.records = {{2, 10}, {3, 10}};
    EXPECT_THROW(heralded_g2(s, 2, 1, 3, 5, 2), DomainError);
    EXPECT_THROW(heralded_g2(s, 2, 1, 3, 0, 2), DomainError);
}

TEST(HeraldedG2, SinglePairSourceNeverGivesHeraldedTwofold) {
    auto c = ideal(0.5, 200000);
    c.statistics = PairStatistics::Single;
    const auto g = heralded_g2(simulate_tags(c), 2, 1, 3, 10, 3);
    EXPECT_EQ(g.coincidences[0], 0u);
    EXPECT_EQ(g.g2[0], 0.0);
    EXPECT_GT(g.coincidences[1], 0u);
}

TEST(HeraldedG2, MatchesMultiPairPrediction) {
    for (auto stats : {PairStatistics::Poisson, PairStatistics::Thermal}) {
        auto c = ideal(0.05, 2000000);
        c.statistics = stats;
        const auto s = simulate_tags(c);
        const auto g = heralded_g2(s, 2, 1, 3, 10, 5);
        const auto p = oracle::pulse_statistics(0.05, stats_index(stats), 0.5, 0.8, c.splitter_ratio);
        const double n = static_cast<double>(c.pulses());
        EXPECT_NEAR(static_cast<double>(g.heralds), n * p.h, 3 * binomial_sigma(n, p.h));
        EXPECT_NEAR(static_cast<double>(g.heralded_a), n * p.ah, 3 * binomial_sigma(n, p.ah));
        EXPECT_NEAR(static_cast<double>(g.heralded_b), n * p.bh, 3 * binomial_sigma(n, p.bh));
        EXPECT_NEAR(static_cast<double>(g.coincidences[0]), n * p.abh, 3 * binomial_sigma(n, p.abh));
        const double predicted = p.abh * p.h / (p.ah * p.bh);
        EXPECT_NEAR(g.g2[0], predicted, 3 * g.sigma[0]);
        for (std::size_t m = 1; m <= 5; ++m) EXPECT_NEAR(g.g2[m], 1.0, 3 * g.sigma[m]) << m;
    }
}

// ---------------------------------------------------------------------------
// simulator
// ---------------------------------------------------------------------------

TEST(Simulator, DeterministicForSeed) {
    auto c = ideal(0.2, 20000);
    c.dark_rates = {1e4, 1e4, 1e4};
    c.jitter = 50e-12;
    c.dead_time = 1e-6;
    const auto a = simulate_tags(c);
    const auto b = simulate_tags(c);
    EXPECT_EQ(a.records, b.records);
    c.seed = 2;
    EXPECT_NE(simulate_tags(c).records, a.records);
}

TEST(Simulator, NoPairsNoDarksIsEmpty) {
    const auto s = simulate_tags(ideal(0.0, 10000));
    EXPECT_TRUE(s.records.empty());
    ASSERT_TRUE(s.rep_period_ticks.has_value());
    EXPECT_NEAR(*s.rep_period_ticks, 54e-9 / 81e-12, 1e-9);
}

TEST(Simulator, LosslessClicksShareTheirPulse) {
    auto c = ideal(0.01, 200000);
    c.signal_transmittance = 1.0;
    c.herald_transmittance = 1.0;
    const auto s = simulate_tags(c);
    const auto h = s.times(2);
    std::vector<std::uint64_t> signal;
    for (const auto& r : s.records)
        if (r.channel != 2 && (signal.empty() || signal.back() != r.ticks)) signal.push_back(r.ticks);
    EXPECT_EQ(h, signal);
    const double n = static_cast<double>(c.pulses());
    const double p = 1.0 - std::exp(-0.01);
    EXPECT_NEAR(static_cast<double>(h.size()), n * p, 3 * binomial_sigma(n, p));
}

TEST(Simulator, TicksAreOrderedAndInsideAcquisition) {
    auto c = ideal(0.3, 50000);
    c.dark_rates = {1e5, 1e5, 1e5};
    c.jitter = 1e-9;
    const auto s = simulate_tags(c);
    for (std::size_t i = 1; i < s.records.size(); ++i) EXPECT_FALSE(tag_before(s.records[i], s.records[i - 1]));
    ASSERT_TRUE(s.duration_ticks.has_value());
    EXPECT_LT(s.records.back().ticks, *s.duration_ticks);
    EXPECT_EQ(s.reordered, 0u);
}

TEST(Simulator, DarkCountRate) {
    auto c = ideal(0.0, 0);
    c.duration = 0.2;
    c.dark_rates = {0.0, 5e4, 0.0};
    const auto s = simulate_tags(c);
    const double expected = 5e4 * (c.duration + c.start_offset);
    EXPECT_NEAR(static_cast<double>(s.count(2)), expected, 3 * std::sqrt(expected));
    EXPECT_EQ(s.count(1), 0u);
    EXPECT_EQ(s.count(3), 0u);
}

TEST(Simulator, DeadTimeNeverIncreasesCounts) {
    auto c = ideal(0.5, 100000);
    c.dark_rates = {3e5, 3e5, 3e5};
    std::array<std::size_t, 3> previous{SIZE_MAX, SIZE_MAX, SIZE_MAX};
    for (double dead : {0.0, 10e-9, 100e-9, 1e-6, 15e-6}) {
        c.dead_time = dead;
        const auto s = simulate_tags(c);
        for (std::uint8_t ch = 1; ch <= 3; ++ch) {
            EXPECT_LE(s.count(ch), previous[ch - 1]) << dead;
            previous[ch - 1] = s.count(ch);
            const auto t = s.times(ch);
            const auto dead_ticks = static_cast<std::uint64_t>(dead / c.tick);
            for (std::size_t i = 1; i < t.size(); ++i) ASSERT_GE(t[i] - t[i - 1] + 1, dead_ticks);
        }
    }
}

TEST(Simulator, ThermalSinglesMatchGeneratingFunction) {
    auto c = ideal(0.2, 1000000);
    c.statistics = PairStatistics::Thermal;
    const auto s = simulate_tags(c);
    const auto p = oracle::pulse_statistics(0.2, 1, 0.5, 0.8, c.splitter_ratio);
    const double n = static_cast<double>(c.pulses());
    EXPECT_NEAR(static_cast<double>(s.count(2)), n * p.h, 3 * binomial_sigma(n, p.h));
    EXPECT_NEAR(static_cast<double>(s.count(1)), n * p.a, 3 * binomial_sigma(n, p.a));
    EXPECT_NEAR(static_cast<double>(s.count(3)), n * p.b, 3 * binomial_sigma(n, p.b));
}

TEST(Simulator, RejectsInvalidConfig) {
    SimulationConfig c;
    c.signal_transmittance = 1.5;
    EXPECT_THROW(simulate_tags(c), DomainError);
    c = {};
    c.mean_pairs = -1;
    EXPECT_THROW(simulate_tags(c), DomainError);
    c = {};
    c.statistics = PairStatistics::Single;
    c.mean_pairs = 1.5;
    EXPECT_THROW(simulate_tags(c), DomainError);
    c = {};
    c.dark_rates[1] = -1;
    EXPECT_THROW(simulate_tags(c), DomainError);
}

TEST(Simulator, BinaryAndTextOutputsAgree) {
    auto c = ideal(0.2, 5000);
    c.dark_rates = {1e5, 1e5, 1e5};
    const auto s = simulate_tags(c);
    EXPECT_EQ(parse_tags(format_tags_binary(s)).records, parse_tags(format_tags_text(s)).records);
}

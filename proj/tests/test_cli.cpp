#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "app.hpp"

using namespace sfwm;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run sfwm_run(std::vector<std::string> args) {
    args.insert(args.begin(), "sfwm");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("sfwm_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::vector<std::vector<double>> csv_rows(const std::string& text, std::size_t skip_lines, std::size_t skip_cols) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    for (std::size_t n = 0; std::getline(in, line); ++n) {
        if (n < skip_lines || line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        for (std::size_t c = 0; std::getline(ls, cell, ','); ++c)
            if (c >= skip_cols) row.push_back(std::strtod(cell.c_str(), nullptr));
        rows.push_back(row);
    }
    return rows;
}

std::vector<std::string> small_jsi(const fs::path& dir) {
    return {"jsi", "--signal_points", "16", "--idler_points", "16", "--output_dir", dir.string()};
}

}  // namespace

TEST(Cli, HelpExitsZero) {
    const auto r = sfwm_run({"--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("modes"), std::string::npos);
    const auto sub = sfwm_run({"jsi", "--help"});
    EXPECT_EQ(sub.code, 0);
    EXPECT_NE(sub.out.find("--diameter_nm"), std::string::npos);
}

TEST(Cli, VersionEmbedsSchema) {
    const auto r = sfwm_run({"--version"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("config schema 1"), std::string::npos);
}

TEST(Cli, NoCommandIsUsageError) { EXPECT_EQ(sfwm_run({}).code, 2); }

TEST(Cli, ModesTableMatchesSolver) {
    const auto dir = scratch("modes");
    const auto r = sfwm_run({"modes", "--points", "7", "--output_dir", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = csv_rows(slurp(dir / "neff.csv"), 1, 0);
    ASSERT_EQ(rows.size(), 7u);
    const CrossSection cs(890.0 * 1e-9, fused_silica(), kAir);  // same arithmetic as the CLI
    for (const auto& row : rows) {
        EXPECT_EQ(row[2], solve_neff(cs, omega_from_wavelength(row[0]), kHE11));
        EXPECT_GT(row[2], 1.0);
        EXPECT_LT(row[2], cs.core_index(row[0]));
    }
    EXPECT_NEAR(rows.front()[0], 800e-9, 1e-20);
    EXPECT_NEAR(rows.back()[0], 1400e-9, 1e-20);
}

TEST(Cli, BelowCutoffIsDomainError) {
    const auto dir = scratch("cutoff");
    const auto r = sfwm_run({"modes", "--mode", "TE01", "--diameter_nm", "300", "--output_dir", dir.string()});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("TE01"), std::string::npos) << r.err;
}

TEST(Cli, ConfigFileLayeredUnderFlags) {
    const auto dir = scratch("layers");
    spit(dir / "c.json", R"({"schema_version": 1, "points": 3, "diameter_nm": 900})");
    ASSERT_EQ(sfwm_run({"modes", "--config", (dir / "c.json").string(), "--output_dir", dir.string()}).code, 0);
    EXPECT_EQ(csv_rows(slurp(dir / "neff.csv"), 1, 0).size(), 3u);
    ASSERT_EQ(
        sfwm_run({"modes", "--config", (dir / "c.json").string(), "--points", "5", "--output_dir", dir.string()}).code,
        0);
    EXPECT_EQ(csv_rows(slurp(dir / "neff.csv"), 1, 0).size(), 5u);
}

TEST(Cli, ConfigErrors) {
    const auto dir = scratch("config_errors");
    spit(dir / "unknown.json", R"({"diameter": 900})");
    spit(dir / "version.json", R"({"schema_version": 2})");
    spit(dir / "broken.json", R"({"points": )");
    spit(dir / "array.json", R"([1, 2])");
    spit(dir / "type.json", R"({"points": "many"})");
    for (const char* f : {"unknown.json", "version.json", "broken.json", "array.json", "type.json"})
        EXPECT_EQ(sfwm_run({"modes", "--config", (dir / f).string(), "--output_dir", dir.string()}).code, 2) << f;
    EXPECT_EQ(sfwm_run({"modes", "--config", (dir / "missing.json").string()}).code, 4);
    EXPECT_EQ(sfwm_run({"modes", "--diameter_nm", "abc"}).code, 2);
    EXPECT_EQ(sfwm_run({"modes", "--diameter_nm", "-5"}).code, 2);
    EXPECT_EQ(sfwm_run({"modes", "--no_such_flag", "1"}).code, 2);
    EXPECT_EQ(sfwm_run({"jsi", "--overlap", "sometimes"}).code, 2);
    EXPECT_EQ(sfwm_run({"modes", "--mode", "XX11"}).code, 2);
    EXPECT_EQ(sfwm_run({"jsi", "--signal_mode", "TE11"}).code, 2);
    EXPECT_EQ(sfwm_run({"tags", "coincidences"}).code, 2);  // input required
}

TEST(Cli, ProfileErrors) {
    const auto dir = scratch("profile_errors");
    auto args = small_jsi(dir);
    args.insert(args.end(), {"--profile", (dir / "missing.txt").string()});
    const auto missing = sfwm_run(args);
    EXPECT_EQ(missing.code, 4);
    EXPECT_NE(missing.err.find("missing.txt"), std::string::npos);

    spit(dir / "bad.txt", "0 900e-9\n0.014 nine\n");
    args.back() = (dir / "bad.txt").string();
    EXPECT_EQ(sfwm_run(args).code, 5);
    spit(dir / "descending.txt", "0.01 900e-9\n0 900e-9\n");
    args.back() = (dir / "descending.txt").string();
    EXPECT_EQ(sfwm_run(args).code, 5);
}

TEST(Cli, JsiWritesAllOutputs) {
    const auto dir = scratch("jsi");
    const auto r = sfwm_run(small_jsi(dir));
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* f : {"phase_matching.csv", "pump.csv", "jsi.csv", "jsa.json", "marginals.csv", "schmidt.json"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    const auto jsa = Json::parse(slurp(dir / "jsa.json"));
    EXPECT_EQ(jsa["schema_version"], 1);
    EXPECT_EQ(jsa["axes"]["signal_omega_rad_s"].size(), 16u);
    const auto schmidt = Json::parse(slurp(dir / "schmidt.json"));
    EXPECT_GE(schmidt["schmidt_number"].get<double>(), 1.0);
    const auto jsi = csv_rows(slurp(dir / "jsi.csv"), 3, 2);
    ASSERT_EQ(jsi.size(), 16u);
    double peak = 0.0;
    for (const auto& row : jsi)
        for (double v : row) peak = std::max(peak, v);
    EXPECT_EQ(peak, 1.0);
}

TEST(Cli, UniformWaistIndependentOfSegmentCount) {
    const auto one = scratch("jsi_n1");
    const auto hundred = scratch("jsi_n100");
    auto a = small_jsi(one);
    a.insert(a.end(), {"--segments", "1"});
    auto b = small_jsi(hundred);
    b.insert(b.end(), {"--segments", "100"});
    ASSERT_EQ(sfwm_run(a).code, 0);
    ASSERT_EQ(sfwm_run(b).code, 0);
    for (const char* f : {"phase_matching.csv", "jsi.csv"}) {
        const auto x = csv_rows(slurp(one / f), 3, 2);
        const auto y = csv_rows(slurp(hundred / f), 3, 2);
        ASSERT_EQ(x.size(), y.size());
        for (std::size_t s = 0; s < x.size(); ++s)
            for (std::size_t i = 0; i < x[s].size(); ++i) EXPECT_NEAR(x[s][i], y[s][i], 1e-9) << f;
    }
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
    const auto a = scratch("repeat_a");
    const auto b = scratch("repeat_b");
    auto args_a = small_jsi(a);
    auto args_b = small_jsi(b);
    args_a.insert(args_a.end(), {"--profile", SFWM_DATA_DIR "/profiles/measured_waist.txt", "--segments", "20"});
    args_b.insert(args_b.end(), {"--profile", SFWM_DATA_DIR "/profiles/measured_waist.txt", "--segments", "20",
                                 "--threads", "3"});
    ASSERT_EQ(sfwm_run(args_a).code, 0);
    ASSERT_EQ(sfwm_run(args_b).code, 0);
    for (const char* f : {"phase_matching.csv", "pump.csv", "jsi.csv", "jsa.json", "marginals.csv"})
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    // schmidt.json names the output directory nowhere, so it must match too
    EXPECT_EQ(slurp(a / "schmidt.json"), slurp(b / "schmidt.json"));

    for (const char* fmt : {"text", "binary"}) {
        const std::vector<std::string> sim = {"tags", "simulate", "--dark_rate_a_hz", "1000", "--jitter_ps", "50",
                                              "--format", fmt, "--seed", "7"};
        auto sa = sim, sb = sim;
        sa.insert(sa.end(), {"--output_dir", a.string()});
        sb.insert(sb.end(), {"--output_dir", b.string()});
        ASSERT_EQ(sfwm_run(sa).code, 0);
        ASSERT_EQ(sfwm_run(sb).code, 0);
        const char* f = std::string(fmt) == "text" ? "tags.txt" : "tags.ttag";
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
        EXPECT_FALSE(slurp(a / f).empty());
    }
}

TEST(Cli, SimulateThenCoincidencesShowsPulseComb) {
    const auto dir = scratch("comb");
    ASSERT_EQ(sfwm_run({"tags", "simulate", "--duration_s", "0.05", "--dead_time_us", "0", "--output_dir",
                        dir.string()})
                  .code,
              0);
    const auto r = sfwm_run({"tags", "coincidences", "--input", (dir / "tags.txt").string(), "--channel_a", "1",
                             "--channel_b", "2", "--range_ticks", "3000", "--output_dir", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = Json::parse(slurp(dir / "coincidences.json"));
    const double period = 54e-9 / 81e-12;
    const auto& delays = j["delay_ticks"];
    const auto& counts = j["counts"];
    std::uint64_t zero = 0, other_max = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        const double d = delays[k].get<double>();
        const auto c = counts[k].get<std::uint64_t>();
        if (c == 0) continue;
        // every populated bin sits on the comb
        const double m = std::round(d / period);
        EXPECT_LE(std::abs(d - m * period), 10.0) << d;
        if (d == 0.0) zero = c;
        else other_max = std::max(other_max, c);
    }
    EXPECT_GT(zero, other_max);
    EXPECT_GT(j["car"].get<double>(), 1.0);
}

TEST(Cli, G2hOnSinglePairSourceIsZero) {
    const auto dir = scratch("g2h");
    ASSERT_EQ(sfwm_run({"tags", "simulate", "--statistics", "single", "--mean_pairs", "0.5",
                        "--signal_transmittance", "0.9", "--herald_transmittance", "0.9", "--dead_time_us", "0",
                        "--duration_s", "0.01", "--format", "binary", "--output_dir", dir.string()})
                  .code,
              0);
    const auto r = sfwm_run({"tags", "g2h", "--input", (dir / "tags.ttag").string(), "--output_dir", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = Json::parse(slurp(dir / "g2h.json"));
    EXPECT_EQ(j["g2"][0].get<double>(), 0.0);
    EXPECT_NEAR(j["g2"][1].get<double>(), 1.0, 0.05);
}

TEST(Cli, MalformedTagsAreDataErrors) {
    const auto dir = scratch("bad_tags");
    spit(dir / "t.txt", "1 10\n2 x\n");
    const auto r = sfwm_run({"tags", "g2h", "--input", (dir / "t.txt").string(), "--output_dir", dir.string()});
    EXPECT_EQ(r.code, 5);
    EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
    EXPECT_EQ(sfwm_run({"tags", "g2h", "--input", (dir / "none.txt").string()}).code, 4);
}

TEST(Cli, FitPowerRecoversNoiselessScan) {
    const auto dir = scratch("fit");
    std::string csv = "power_mW,rate_Hz\n";
    for (int k = 0; k < 10; ++k) {
        const double p = 20.0 + k * 100.0 / 9.0;
        std::ostringstream row;
        row.precision(17);
        row << p << "," << 400.0 + 57.0 * p + 4.3 * p * p << "\n";
        csv += row.str();
    }
    spit(dir / "scan.csv", csv);
    const auto r = sfwm_run({"tags", "fit-power", "--input", (dir / "scan.csv").string(), "--output_dir", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = Json::parse(slurp(dir / "fit.json"));
    EXPECT_NEAR(j["D_hz"].get<double>(), 400.0, 1e-6);
    EXPECT_NEAR(j["b_hz_per_mW"].get<double>(), 57.0, 1e-8);
    EXPECT_NEAR(j["a_hz_per_mW2"].get<double>(), 4.3, 1e-10);
    EXPECT_EQ(j["curves"]["power_mW"].size(), 101u);
}

TEST(Cli, RatesReport) {
    const auto dir = scratch("rates");
    ASSERT_EQ(sfwm_run({"rates", "--output_dir", dir.string()}).code, 0);
    const auto j = Json::parse(slurp(dir / "rates.json"));
    EXPECT_NEAR(j["internal_rate_hz"].get<double>(), 3.3642e6, 1.0);
    EXPECT_NEAR(j["scenarios"]["loss_split_between_channels"]["observed_rate_hz"].get<double>(),
                3.3642e6 * std::pow(10.0, -1.7), 1e-3);
    EXPECT_NEAR(j["scenarios"]["loss_per_channel_plus_detector_efficiency"]["observed_rate_hz"].get<double>(),
                3.3642e6 * std::pow(10.0, -3.4) * 0.4 * 0.12, 1e-4);
    EXPECT_NEAR(j["photons_per_pulse_from_power"].get<double>(), 3.50475e10, 1e6);
}

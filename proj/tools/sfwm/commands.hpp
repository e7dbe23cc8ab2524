#pragma once

// Command implementations. Each takes a resolved Config, writes its data
// files under `output_dir` and a short summary to `log`.

#include <chrono>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "config.hpp"
#include "sfwm/biphoton.hpp"
#include "sfwm/correlation.hpp"
#include "sfwm/dispersion.hpp"
#include "sfwm/io.hpp"
#include "sfwm/profile.hpp"
#include "sfwm/rates.hpp"
#include "sfwm/simulate.hpp"
#include "sfwm/tags.hpp"

namespace sfwm::cli {

inline KeySpec out_dir_key() { return {"output_dir", KeyType::String, "out", "directory for output files"}; }

// ---------------------------------------------------------------------------
// Schemas
// ---------------------------------------------------------------------------

inline const Schema& modes_schema() {
    static const Schema s{
        {"glass", KeyType::String, "", "glass file for the core (empty: built-in fused silica)"},
        {"diameter_nm", KeyType::Number, 890.0, "fiber diameter", Range::Positive},
        {"lambda_min_nm", KeyType::Number, 800.0, "shortest wavelength", Range::Positive},
        {"lambda_max_nm", KeyType::Number, 1400.0, "longest wavelength", Range::Positive},
        {"points", KeyType::Integer, 64, "number of wavelengths", Range::Positive},
        {"mode", KeyType::String, "HE11", "mode label, e.g. HE11, TE01, EH11"},
        out_dir_key(),
    };
    return s;
}

inline const Schema& jsi_schema() {
    static const Schema s{
        {"glass", KeyType::String, "", "glass file for the core (empty: built-in fused silica)"},
        {"profile", KeyType::String, "", "taper profile file (empty: uniform waist from diameter_nm, length_mm)"},
        {"diameter_nm", KeyType::Number, 900.0, "uniform waist diameter", Range::Positive},
        {"length_mm", KeyType::Number, 14.0, "uniform waist length", Range::Positive},
        {"segments", KeyType::Integer, 100, "number of segments N", Range::Positive},
        {"pump_wavelength_nm", KeyType::Number, 1062.0, "pump central wavelength", Range::Positive},
        {"pump_fwhm_nm", KeyType::Number, 2.0, "pump spectral intensity FWHM", Range::Positive},
        {"pulse_duration_ps", KeyType::Number, 100.0, "pump pulse duration", Range::Positive},
        {"rep_rate_mhz", KeyType::Number, 18.0, "pump repetition rate", Range::Positive},
        {"avg_power_mw", KeyType::Number, 118.0, "pump average power", Range::Positive},
        {"transform_limited", KeyType::Boolean, false, "require pulse_duration = 2 sqrt(ln 2)/sigma"},
        {"signal_min_nm", KeyType::Number, 850.0, "signal window start", Range::Positive},
        {"signal_max_nm", KeyType::Number, 950.0, "signal window end", Range::Positive},
        {"idler_min_nm", KeyType::Number, 1250.0, "idler window start", Range::Positive},
        {"idler_max_nm", KeyType::Number, 1400.0, "idler window end", Range::Positive},
        {"signal_points", KeyType::Integer, 256, "signal grid size", Range::Positive},
        {"idler_points", KeyType::Integer, 256, "idler grid size", Range::Positive},
        {"pump_mode", KeyType::String, "HE11", "pump mode label"},
        {"signal_mode", KeyType::String, "HE11", "signal mode label"},
        {"idler_mode", KeyType::String, "HE11", "idler mode label"},
        {"overlap", KeyType::String, "per-cell", "overlap evaluation", Range::Any, {"per-cell", "grid-center"}},
        {"table_nodes", KeyType::Integer, 96, "n_eff table nodes per segment diameter", Range::Positive},
        {"threads", KeyType::Integer, 0, "worker threads (0: all cores)", Range::NonNegative},
        out_dir_key(),
    };
    return s;
}

inline const Schema& rates_schema() {
    static const Schema s{
        {"efficiency", KeyType::Number, 7e-10, "pair conversion efficiency per pump photon", Range::Positive},
        {"photons_per_pulse", KeyType::Number, 2.67e8, "pump photons per pulse", Range::NonNegative},
        {"rep_rate_mhz", KeyType::Number, 18.0, "pump repetition rate", Range::Positive},
        {"avg_power_mw", KeyType::Number, 118.0, "pump average power", Range::Positive},
        {"pump_wavelength_nm", KeyType::Number, 1062.0, "pump wavelength", Range::Positive},
        {"loss_db", KeyType::Number, -17.0, "quoted loss figure", Range::NonPositive},
        {"signal_qe", KeyType::Number, 0.40, "signal detector efficiency", Range::Probability},
        {"idler_qe", KeyType::Number, 0.12, "idler detector efficiency", Range::Probability},
        {"reported_internal_hz", KeyType::Number, 3e6, "reference internal rate to compare against",
         Range::NonNegative},
        {"reported_observed_hz", KeyType::Number, 60.0, "reference observed rate to compare against",
         Range::NonNegative},
        out_dir_key(),
    };
    return s;
}

inline const Schema& simulate_schema() {
    static const Schema s{
        {"rep_period_ns", KeyType::Number, 54.0, "pump repetition period", Range::Positive},
        {"mean_pairs", KeyType::Number, 0.05, "mean pairs per pulse", Range::NonNegative},
        {"statistics", KeyType::String, "poisson", "pair-number statistics", Range::Any, {"poisson", "thermal", "single"}},
        {"signal_transmittance", KeyType::Number, 0.1, "signal detection probability", Range::Probability},
        {"herald_transmittance", KeyType::Number, 0.05, "herald detection probability", Range::Probability},
        {"splitter_ratio", KeyType::Number, 0.47, "fraction of signal photons sent to channel A",
         Range::Probability},
        {"dark_rate_a_hz", KeyType::Number, 0.0, "dark counts on channel A", Range::NonNegative},
        {"dark_rate_herald_hz", KeyType::Number, 0.0, "dark counts on the herald channel", Range::NonNegative},
        {"dark_rate_b_hz", KeyType::Number, 0.0, "dark counts on channel B", Range::NonNegative},
        {"dead_time_us", KeyType::Number, 15.0, "detector dead time", Range::NonNegative},
        {"jitter_ps", KeyType::Number, 0.0, "Gaussian timing jitter (std)", Range::NonNegative},
        {"tick_ps", KeyType::Number, 81.0, "time-tag resolution", Range::Positive},
        {"duration_s", KeyType::Number, 1e-3, "acquisition time", Range::Positive},
        {"start_offset_ns", KeyType::Number, 1.0, "time of the first pulse", Range::NonNegative},
        {"seed", KeyType::Integer, 1, "random seed", Range::NonNegative},
        {"format", KeyType::String, "text", "tag file format", Range::Any, {"text", "binary"}},
        out_dir_key(),
    };
    return s;
}

inline const Schema& coincidences_schema() {
    static const Schema s{
        {"input", KeyType::String, "", "tag file (text or binary)"},
        {"channel_a", KeyType::Integer, 1, "start channel", Range::NonNegative},
        {"channel_b", KeyType::Integer, 2, "stop channel", Range::NonNegative},
        {"bin_ticks", KeyType::Integer, 10, "histogram bin width", Range::Positive},
        {"range_ticks", KeyType::Integer, 2000, "histogram half range (multiple of bin_ticks)", Range::NonNegative},
        {"window_ticks", KeyType::Integer, 10, "peak and accidental window", Range::Positive},
        {"rep_period_ticks", KeyType::Number, 0.0, "repetition period (0: from the tag file header)",
         Range::NonNegative},
        out_dir_key(),
    };
    return s;
}

inline const Schema& g2h_schema() {
    static const Schema s{
        {"input", KeyType::String, "", "tag file (text or binary)"},
        {"herald", KeyType::Integer, 2, "herald channel", Range::NonNegative},
        {"channel_a", KeyType::Integer, 1, "first split arm", Range::NonNegative},
        {"channel_b", KeyType::Integer, 3, "second split arm", Range::NonNegative},
        {"window_ticks", KeyType::Integer, 10, "coincidence window around each herald", Range::Positive},
        {"max_separation", KeyType::Integer, 20, "largest herald separation m", Range::NonNegative},
        out_dir_key(),
    };
    return s;
}

inline const Schema& fit_power_schema() {
    static const Schema s{
        {"input", KeyType::String, "", "power scan CSV (power_mW,rate_Hz)"},
        {"weighting", KeyType::String, "none", "least-squares weighting", Range::Any, {"none", "poisson"}},
        {"integration_time_s", KeyType::Number, 1.0, "integration time per point (Poisson weights)",
         Range::Positive},
        out_dir_key(),
    };
    return s;
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

inline SellmeierGlass core_glass(const Config& cfg) {
    const auto path = cfg.string("glass");
    return path.empty() ? fused_silica() : load_glass(path);
}

inline std::string required_input(const Config& cfg) {
    auto path = cfg.string("input");
    if (path.empty()) throw ConfigError("key 'input' is required");
    return path;
}

inline ModeLabel mode_label(const Config& cfg, const std::string& key) {
    try {
        return parse_mode_label(cfg.string(key));
    } catch (const ParseError& e) {
        throw ConfigError("key '" + key + "': " + e.what());
    }
}

inline std::uint8_t channel_id(const Config& cfg, const std::string& key) {
    const auto v = cfg.integer(key);
    if (v > 255) throw ConfigError("key '" + key + "' must be a channel id in 0..255");
    return static_cast<std::uint8_t>(v);
}

/// Profile contents that fail validation are a data problem, not a
/// parameter problem.
inline TaperProfile profile_from_config(const Config& cfg) {
    const auto path = cfg.string("profile");
    if (path.empty()) {
        const double d = cfg.number("diameter_nm") * 1e-9;
        const double len = cfg.number("length_mm") * 1e-3;
        return TaperProfile({{0.0, d}, {len, d}}, "uniform");
    }
    try {
        return load_profile(path);
    } catch (const ValidationError& e) {
        throw ParseError(path + ": " + e.what(), 0);
    }
}

inline TagStream tags_from_config(const Config& cfg) {
    const auto path = required_input(cfg);
    try {
        return load_tags(path);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what(), e.location());
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline void cmd_modes(const Config& cfg, std::ostream& log) {
    const auto glass = core_glass(cfg);
    const CrossSection cs(cfg.number("diameter_nm") * 1e-9, glass, kAir);
    const auto label = mode_label(cfg, "mode");
    const double lo = cfg.number("lambda_min_nm") * 1e-9;
    const double hi = cfg.number("lambda_max_nm") * 1e-9;
    const auto n = static_cast<std::size_t>(cfg.integer("points"));
    if (!(hi > lo) && n > 1) throw ConfigError("lambda_max_nm must exceed lambda_min_nm");

    std::string csv = "wavelength_m,omega_rad_s,n_eff,beta_rad_m,v_number\n";
    for (std::size_t k = 0; k < n; ++k) {
        const double lambda = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
        const double omega = omega_from_wavelength(lambda);
        const double neff = solve_neff(cs, omega, label);
        const auto g = guide_parameters(cs, omega);
        csv += format_number(lambda) + "," + format_number(omega) + "," + format_number(neff) + "," +
               format_number(omega * neff / kSpeedOfLight) + "," + format_number(g.v) + "\n";
    }
    const auto path = output_path(cfg, "neff.csv");
    write_file(path, csv);
    log << "modes: " << n << " points of " << to_string(label) << " at d = " << cfg.number("diameter_nm")
        << " nm written to " << path << "\n";
}

inline void cmd_jsi(const Config& cfg, std::ostream& log) {
    const auto start = std::chrono::steady_clock::now();
    const auto glass = core_glass(cfg);
    const auto profile = profile_from_config(cfg);
    const auto segmented = segment(profile, static_cast<std::size_t>(cfg.integer("segments")), glass, kAir);

    PumpSpec pump;
    pump.center_wavelength = cfg.number("pump_wavelength_nm") * 1e-9;
    pump.sigma = PumpSpec::sigma_from_fwhm(pump.center_wavelength, cfg.number("pump_fwhm_nm") * 1e-9);
    pump.pulse_duration = cfg.number("pulse_duration_ps") * 1e-12;
    pump.rep_rate = cfg.number("rep_rate_mhz") * 1e6;
    pump.avg_power = cfg.number("avg_power_mw") * 1e-3;
    pump.transform_limited = cfg.boolean("transform_limited");

    if (!(cfg.number("signal_max_nm") > cfg.number("signal_min_nm")) ||
        !(cfg.number("idler_max_nm") > cfg.number("idler_min_nm")))
        throw ConfigError("wavelength windows need max > min");
    const auto grid = SpectralGrid::from_wavelengths(
        cfg.number("signal_min_nm") * 1e-9, cfg.number("signal_max_nm") * 1e-9,
        static_cast<std::size_t>(cfg.integer("signal_points")), cfg.number("idler_min_nm") * 1e-9,
        cfg.number("idler_max_nm") * 1e-9, static_cast<std::size_t>(cfg.integer("idler_points")));

    ModeSet modes{mode_label(cfg, "pump_mode"), mode_label(cfg, "signal_mode"), mode_label(cfg, "idler_mode")};
    PhaseMatchingOptions options;
    options.overlap = cfg.string("overlap") == "per-cell" ? OverlapEvaluation::PerCell : OverlapEvaluation::GridCenter;
    options.table_nodes = static_cast<std::size_t>(cfg.integer("table_nodes"));
    options.threads = static_cast<unsigned>(cfg.integer("threads"));

    const auto result = compute_jsa(segmented, pump, grid, modes, options, profile.hash());
    const auto& jsa = result.jsa;

    write_file(output_path(cfg, "phase_matching.csv"), grid_csv(grid, normalized_intensity(result.phase_matching)));
    write_file(output_path(cfg, "pump.csv"), grid_csv(grid, normalized_intensity(result.pump)));
    write_file(output_path(cfg, "jsi.csv"), grid_csv(grid, normalized_intensity(jsa.amplitude)));
    write_file(output_path(cfg, "jsa.json"), jsa_json(jsa).dump() + "\n");

    const auto m = marginals(jsa);
    write_file(output_path(cfg, "marginals.csv"), marginals_csv(jsa, m));
    const auto schmidt = schmidt_analysis(jsa);
    const auto peak = jsi_peak(jsa);

    Json summary = schmidt_json(schmidt);
    summary["jsi_peak"] = {{"signal_wavelength_m", peak.signal_wavelength},
                           {"idler_wavelength_m", peak.idler_wavelength}};
    summary["profile"] = {{"label", profile.label()},
                          {"hash", format_hash(profile.hash())},
                          {"segments", segmented.count()},
                          {"segment_length_m", segmented.segment_length}};
    summary["warnings"] = jsa.metadata.warnings;
    write_file(output_path(cfg, "schmidt.json"), summary.dump(2) + "\n");

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log << "jsi: " << grid.signal.size() << "x" << grid.idler.size() << " grid, N = " << segmented.count()
        << ", peak at signal " << peak.signal_wavelength * 1e9 << " nm, idler " << peak.idler_wavelength * 1e9
        << " nm, K = " << schmidt.schmidt_number << " (" << secs << " s)\n";
    for (const auto& w : jsa.metadata.warnings) log << "warning: " << w << "\n";
}

inline void cmd_rates(const Config& cfg, std::ostream& log) {
    PumpSpec pump;
    pump.rep_rate = cfg.number("rep_rate_mhz") * 1e6;
    pump.avg_power = cfg.number("avg_power_mw") * 1e-3;
    pump.center_wavelength = cfg.number("pump_wavelength_nm") * 1e-9;
    const double photons = cfg.number("photons_per_pulse");
    const double eff = cfg.number("efficiency");
    const auto scenarios = budget_scenarios(cfg.number("loss_db"), cfg.number("signal_qe"), cfg.number("idler_qe"));
    const auto split = pair_rates(eff, pump, photons, scenarios.total_split);
    const auto each = pair_rates(eff, pump, photons, scenarios.per_channel);
    // same dB readings taken as optical loss only, detector efficiencies on top
    const double sqe = cfg.number("signal_qe"), iqe = cfg.number("idler_qe");
    const auto split_qe = pair_rates(eff, pump, photons,
                                     LossBudget::compose(scenarios.total_split.signal_db, sqe,
                                                         scenarios.total_split.idler_db, iqe));
    const auto each_qe = pair_rates(eff, pump, photons,
                                    LossBudget::compose(scenarios.per_channel.signal_db, sqe,
                                                        scenarios.per_channel.idler_db, iqe));
    const double implied = photons_per_pulse_from_power(pump);
    const double ref_int = cfg.number("reported_internal_hz");
    const double ref_obs = cfg.number("reported_observed_hz");
    auto ratio = [](double a, double b) { return b > 0.0 ? Json(a / b) : Json(nullptr); };

    Json report{{"schema_version", kSchemaVersion},
                {"kind", "rate_budget"},
                {"parameters", cfg.values()},
                {"internal_rate_hz", split.internal},
                {"internal_vs_reported", ratio(split.internal, ref_int)},
                {"scenarios",
                 {{"loss_split_between_channels",
                   {{"signal_db", scenarios.total_split.signal_db},
                    {"idler_db", scenarios.total_split.idler_db},
                    {"observed_rate_hz", split.observed},
                    {"observed_vs_reported", ratio(split.observed, ref_obs)}}},
                  {"loss_applied_per_channel",
                   {{"signal_db", scenarios.per_channel.signal_db},
                    {"idler_db", scenarios.per_channel.idler_db},
                    {"observed_rate_hz", each.observed},
                    {"observed_vs_reported", ratio(each.observed, ref_obs)}}},
                  {"loss_split_plus_detector_efficiency",
                   {{"observed_rate_hz", split_qe.observed}, {"observed_vs_reported", ratio(split_qe.observed, ref_obs)}}},
                  {"loss_per_channel_plus_detector_efficiency",
                   {{"observed_rate_hz", each_qe.observed},
                    {"observed_vs_reported", ratio(each_qe.observed, ref_obs)}}}}},
                {"photons_per_pulse_from_power", implied},
                {"photons_per_pulse_vs_power", ratio(photons, implied)}};
    const auto path = output_path(cfg, "rates.json");
    write_file(path, report.dump(2) + "\n");
    log << "rates: internal " << split.internal << " /s; observed " << split.observed << " /s (loss split), "
        << each.observed << " /s (loss per channel); with detector efficiencies " << split_qe.observed << " and "
        << each_qe.observed << " /s; reported observed " << ref_obs << " /s\n"
        << "rates: photons per pulse given " << photons << ", implied by power " << implied << "\n";
}

inline SimulationConfig simulation_from_config(const Config& cfg) {
    SimulationConfig sim;
    sim.rep_period = cfg.number("rep_period_ns") * 1e-9;
    sim.mean_pairs = cfg.number("mean_pairs");
    const auto stats = cfg.string("statistics");
    sim.statistics = stats == "poisson"   ? PairStatistics::Poisson
                     : stats == "thermal" ? PairStatistics::Thermal
                                          : PairStatistics::Single;
    sim.signal_transmittance = cfg.number("signal_transmittance");
    sim.herald_transmittance = cfg.number("herald_transmittance");
    sim.splitter_ratio = cfg.number("splitter_ratio");
    sim.dark_rates = {cfg.number("dark_rate_a_hz"), cfg.number("dark_rate_herald_hz"), cfg.number("dark_rate_b_hz")};
    sim.dead_time = cfg.number("dead_time_us") * 1e-6;
    sim.jitter = cfg.number("jitter_ps") * 1e-12;
    sim.tick = cfg.number("tick_ps") * 1e-12;
    sim.duration = cfg.number("duration_s");
    sim.start_offset = cfg.number("start_offset_ns") * 1e-9;
    sim.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
    return sim;
}

inline void cmd_simulate(const Config& cfg, std::ostream& log) {
    const auto sim = simulation_from_config(cfg);
    const auto stream = simulate_tags(sim);
    const bool binary = cfg.string("format") == "binary";
    const auto path = output_path(cfg, binary ? "tags.ttag" : "tags.txt");
    write_file(path, binary ? format_tags_binary(stream) : format_tags_text(stream));
    log << "simulate: " << sim.pulses() << " pulses, " << stream.records.size() << " tags (A " << stream.count(1)
        << ", herald " << stream.count(2) << ", B " << stream.count(3) << ") written to " << path << "\n";
}

inline void cmd_coincidences(const Config& cfg, std::ostream& log) {
    const auto stream = tags_from_config(cfg);
    const auto a = channel_id(cfg, "channel_a");
    const auto b = channel_id(cfg, "channel_b");
    const auto hist = coincidence_histogram(stream, a, b, cfg.integer("bin_ticks"), cfg.integer("range_ticks"));
    double period = cfg.number("rep_period_ticks");
    if (period == 0.0) {
        if (!stream.rep_period_ticks)
            throw ConfigError("rep_period_ticks not given and the tag file has no #rep_period_ticks header");
        period = *stream.rep_period_ticks;
    }
    const auto pa = peak_and_accidentals(hist, period, static_cast<double>(cfg.integer("window_ticks")),
                                         stream.acquisition_seconds());
    Json params = cfg.values();
    params["rep_period_ticks"] = period;
    params["tick_s"] = stream.tick_seconds;
    params["acquisition_s"] = stream.acquisition_seconds();
    params["reordered_records"] = stream.reordered;
    write_file(output_path(cfg, "coincidences.csv"), histogram_csv(hist, stream.tick_seconds, params));
    write_file(output_path(cfg, "coincidences.json"),
               histogram_json(hist, stream.tick_seconds, pa, params).dump(2) + "\n");
    log << "coincidences: " << hist.total() << " pairs in range, peak " << pa.peak_rate << " /s, accidentals "
        << pa.accidental_rate << " /s, CAR " << pa.car << "\n";
    if (stream.reordered > 0) log << "warning: " << stream.reordered << " records were out of order\n";
}

inline void cmd_g2h(const Config& cfg, std::ostream& log) {
    const auto stream = tags_from_config(cfg);
    const auto g = heralded_g2(stream, channel_id(cfg, "herald"), channel_id(cfg, "channel_a"),
                               channel_id(cfg, "channel_b"), cfg.integer("window_ticks"),
                               static_cast<std::size_t>(cfg.integer("max_separation")));
    Json params = cfg.values();
    params["tick_s"] = stream.tick_seconds;
    params["reordered_records"] = stream.reordered;
    write_file(output_path(cfg, "g2h.csv"), g2_csv(g, params));
    write_file(output_path(cfg, "g2h.json"), g2_json(g, params).dump(2) + "\n");
    log << "g2h: " << g.heralds << " heralds, g2(0) = " << g.g2[0] << " +- " << g.sigma[0] << "\n";
}

inline void cmd_fit_power(const Config& cfg, std::ostream& log) {
    const auto path = required_input(cfg);
    const auto points = load_power_scan(path);
    const auto weighting = cfg.string("weighting") == "poisson" ? FitWeighting::Poisson : FitWeighting::None;
    const auto fit = fit_power_scan(points, weighting, cfg.number("integration_time_s"));
    write_file(output_path(cfg, "fit.json"), fit_json(fit, points, cfg.values()).dump(2) + "\n");
    log << "fit-power: D = " << fit.dark << " Hz, b = " << fit.linear * 1e-3 << " Hz/mW, a = " << fit.quadratic * 1e-6
        << " Hz/mW^2\n";
}

}  // namespace sfwm::cli

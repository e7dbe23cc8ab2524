#pragma once

// Output file writers. Numbers are printed in shortest round-trip form so a
// given result always produces the same bytes.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <ios>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"
#include "sfwm/biphoton.hpp"
#include "sfwm/correlation.hpp"
#include "sfwm/error.hpp"
#include "sfwm/rates.hpp"
#include "sfwm/version.hpp"

namespace sfwm {

using Json = nlohmann::ordered_json;

inline std::string format_number(double x) {
    std::array<char, 32> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    if (ec != std::errc{}) throw Error("number formatting failed");
    return std::string(buf.data(), end);
}

inline std::string format_hash(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << content;
    if (!out) throw IoError("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Spectral grids
// ---------------------------------------------------------------------------

/// Grid CSV:
///   idler_omega_rad_s,,<w_i...>
///   idler_wavelength_m,,<l_i...>
///   signal_omega_rad_s,signal_wavelength_m,<blank per column>
///   <w_s>,<l_s>,<values...>     one row per signal frequency
inline std::string grid_csv(const SpectralGrid& grid, const RealGrid& values) {
    std::string out = "idler_omega_rad_s,";
    for (double w : grid.idler) out += "," + format_number(w);
    out += "\nidler_wavelength_m,";
    for (double w : grid.idler) out += "," + format_number(wavelength_from_omega(w));
    out += "\nsignal_omega_rad_s,signal_wavelength_m";
    for (std::size_t i = 0; i < grid.idler.size(); ++i) out += ",";
    out += "\n";
    for (Eigen::Index s = 0; s < values.rows(); ++s) {
        const double ws = grid.signal[static_cast<std::size_t>(s)];
        out += format_number(ws) + "," + format_number(wavelength_from_omega(ws));
        for (Eigen::Index i = 0; i < values.cols(); ++i) out += "," + format_number(values(s, i));
        out += "\n";
    }
    return out;
}

/// |values|^2 scaled to unit peak.
inline RealGrid normalized_intensity(const ComplexGrid& values) {
    RealGrid m = values.cwiseAbs2();
    const double peak = m.maxCoeff();
    if (peak > 0.0) m /= peak;
    return m;
}

inline Json axes_json(const SpectralGrid& grid) {
    Json axes;
    auto wl = [](const std::vector<double>& w) {
        std::vector<double> l;
        for (double x : w) l.push_back(wavelength_from_omega(x));
        return l;
    };
    axes["signal_omega_rad_s"] = grid.signal;
    axes["signal_wavelength_m"] = wl(grid.signal);
    axes["idler_omega_rad_s"] = grid.idler;
    axes["idler_wavelength_m"] = wl(grid.idler);
    return axes;
}

inline Json matrix_json(const RealGrid& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline const char* to_string(OverlapEvaluation e) {
    return e == OverlapEvaluation::PerCell ? "per-cell" : "grid-center";
}

inline Json pump_json(const PumpSpec& p) {
    return Json{{"center_wavelength_m", p.center_wavelength},
                {"sigma_rad_s", p.sigma},
                {"pulse_duration_s", p.pulse_duration},
                {"rep_rate_hz", p.rep_rate},
                {"avg_power_w", p.avg_power},
                {"transform_limited", p.transform_limited}};
}

inline Json jsa_metadata_json(const JsaMetadata& m) {
    Json j;
    j["pump"] = pump_json(m.pump);
    j["profile_hash"] = format_hash(m.profile_hash);
    j["segments"] = m.segments;
    j["segment_length_m"] = m.segment_length;
    j["modes"] = {{"pump", to_string(m.modes.pump)},
                  {"signal", to_string(m.modes.signal)},
                  {"idler", to_string(m.modes.idler)}};
    j["field_model"] = ModeSolution::kFieldModel;
    j["overlap_evaluation"] = to_string(m.overlap);
    j["overlap_error_bound"] = m.overlap_error_bound;
    j["tolerances"] = {{"neff_root", 1e-10}, {"mode_normalization", 1e-6}, {"neff_table_nodes", m.table_nodes}};
    j["raw_peak_intensity"] = m.peak_intensity;
    j["warnings"] = m.warnings;
    return j;
}

/// JSA container: amplitude scaled so the peak |F| is 1; the raw peak
/// intensity is kept in the metadata.
inline Json jsa_json(const JsaGrid& jsa) {
    const double peak = jsa.metadata.peak_intensity;
    const double scale = peak > 0.0 ? 1.0 / std::sqrt(peak) : 1.0;
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["software_version"] = kSoftwareVersion;
    j["kind"] = "joint_spectral_amplitude";
    j["layout"] = "rows follow the signal axis, columns the idler axis";
    j["axes"] = axes_json(jsa.grid);
    j["real"] = matrix_json(jsa.amplitude.real() * scale);
    j["imag"] = matrix_json(jsa.amplitude.imag() * scale);
    j["intensity"] = matrix_json(normalized_intensity(jsa.amplitude));
    j["metadata"] = jsa_metadata_json(jsa.metadata);
    return j;
}

inline std::string marginals_csv(const JsaGrid& jsa, const Marginals& m) {
    std::string out = "arm,omega_rad_s,wavelength_m,probability\n";
    auto emit = [&](const char* arm, const std::vector<double>& axis, const std::vector<double>& p) {
        for (std::size_t k = 0; k < axis.size(); ++k)
            out += std::string(arm) + "," + format_number(axis[k]) + "," +
                   format_number(wavelength_from_omega(axis[k])) + "," + format_number(p[k]) + "\n";
    };
    emit("signal", jsa.grid.signal, m.signal);
    emit("idler", jsa.grid.idler, m.idler);
    return out;
}

inline Json schmidt_json(const SchmidtAnalysis& s, std::size_t keep = 32) {
    std::vector<double> head(s.coefficients.begin(),
                             s.coefficients.begin() + static_cast<std::ptrdiff_t>(std::min(keep, s.coefficients.size())));
    return Json{{"schema_version", kSchemaVersion},
                {"schmidt_number", s.schmidt_number},
                {"heralded_purity", s.purity},
                {"coefficients", head},
                {"coefficients_total", s.coefficients.size()}};
}

// ---------------------------------------------------------------------------
// Tag analyses
// ---------------------------------------------------------------------------

inline std::string params_comment(const Json& params) {
    std::string out;
    for (const auto& [k, v] : params.items()) out += "# " + k + "=" + (v.is_string() ? v.get<std::string>() : v.dump()) + "\n";
    return out;
}

inline std::string histogram_csv(const CoincidenceHistogram& h, double tick_seconds, const Json& params) {
    std::string out = params_comment(params);
    out += "delay_ticks,delay_s,counts\n";
    for (std::size_t k = 0; k < h.counts.size(); ++k)
        out += std::to_string(h.center(k)) + "," + format_number(static_cast<double>(h.center(k)) * tick_seconds) +
               "," + std::to_string(h.counts[k]) + "\n";
    return out;
}

inline Json histogram_json(const CoincidenceHistogram& h, double tick_seconds, const PeakAccidentals& pa,
                           const Json& params) {
    std::vector<std::int64_t> delays;
    for (std::size_t k = 0; k < h.counts.size(); ++k) delays.push_back(h.center(k));
    return Json{{"schema_version", kSchemaVersion},
                {"kind", "coincidence_histogram"},
                {"parameters", params},
                {"tick_s", tick_seconds},
                {"bin_width_ticks", h.bin_width},
                {"delay_ticks", delays},
                {"counts", h.counts},
                {"peak_counts", pa.peak_counts},
                {"accidental_counts", pa.accidental_counts},
                {"peak_rate_hz", pa.peak_rate},
                {"accidental_rate_hz", pa.accidental_rate},
                {"car", pa.car}};
}

inline std::string g2_csv(const HeraldedG2Histogram& g, const Json& params) {
    std::string out = params_comment(params);
    out += "separation,coincidences,g2,sigma\n";
    for (std::size_t m = 0; m < g.g2.size(); ++m)
        out += std::to_string(m) + "," + std::to_string(g.coincidences[m]) + "," + format_number(g.g2[m]) + "," +
               format_number(g.sigma[m]) + "\n";
    return out;
}

inline Json g2_json(const HeraldedG2Histogram& g, const Json& params) {
    return Json{{"schema_version", kSchemaVersion},
                {"kind", "heralded_g2"},
                {"parameters", params},
                {"window_ticks", g.window},
                {"heralds", g.heralds},
                {"heralded_a", g.heralded_a},
                {"heralded_b", g.heralded_b},
                {"coincidences", g.coincidences},
                {"g2", g.g2},
                {"sigma", g.sigma}};
}

/// Fit report with the decomposed curves sampled over the measured range.
inline Json fit_json(const PowerScanFit& fit, const std::vector<PowerScanPoint>& points, const Json& params,
                     std::size_t samples = 101) {
    double lo = points.front().power, hi = lo;
    for (const auto& p : points) {
        lo = std::min(lo, p.power);
        hi = std::max(hi, p.power);
    }
    Json curves = {{"power_mW", Json::array()}, {"total_hz", Json::array()}, {"sfwm_hz", Json::array()},
                   {"raman_hz", Json::array()}};
    for (std::size_t k = 0; k < samples; ++k) {
        const double p = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(samples - 1);
        curves["power_mW"].push_back(p * 1e3);
        curves["total_hz"].push_back(fit.total(p));
        curves["sfwm_hz"].push_back(fit.sfwm(p));
        curves["raman_hz"].push_back(fit.raman(p));
    }
    Json data = Json::array();
    for (const auto& p : points)
        data.push_back({{"power_mW", p.power * 1e3}, {"rate_hz", p.rate}, {"residual_hz", p.rate - fit.total(p.power)}});
    Json cov = Json::array();
    for (int r = 0; r < 3; ++r) cov.push_back({fit.covariance(r, 0), fit.covariance(r, 1), fit.covariance(r, 2)});
    return Json{{"schema_version", kSchemaVersion},
                {"kind", "power_scan_fit"},
                {"parameters", params},
                {"model", "D + b P + a P^2"},
                {"D_hz", fit.dark},
                {"b_hz_per_mW", fit.linear * 1e-3},
                {"a_hz_per_mW2", fit.quadratic * 1e-6},
                {"stderr", {{"D_hz", std::sqrt(fit.covariance(0, 0))},
                            {"b_hz_per_mW", std::sqrt(fit.covariance(1, 1)) * 1e-3},
                            {"a_hz_per_mW2", std::sqrt(fit.covariance(2, 2)) * 1e-6}}},
                {"covariance_order", {"D_hz", "b_hz_per_W", "a_hz_per_W2"}},
                {"covariance", cov},
                {"residual_norm", fit.residual_norm},
                {"data", data},
                {"curves", curves}};
}

}  // namespace sfwm

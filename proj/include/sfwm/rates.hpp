#pragma once

// Pair-rate bookkeeping and the power-scan decomposition D + bP + aP^2
// (dark counts, linear Raman background, quadratic SFWM).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sfwm/biphoton.hpp"
#include "sfwm/error.hpp"

namespace sfwm {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

/// Channel transmittances in dB. The dB values are channel totals (optics,
/// filters and detector quantum efficiency); the detector efficiencies are
/// carried for reporting and for `compose`.
struct LossBudget {
    double signal_db = 0.0;
    double idler_db = 0.0;
    double signal_detector_efficiency = 0.40;
    double idler_detector_efficiency = 0.12;

    /// Total budget from optical losses plus detector efficiencies.
    static LossBudget compose(double signal_optical_db, double signal_qe, double idler_optical_db,
                              double idler_qe) {
        LossBudget b{signal_optical_db + linear_to_db(signal_qe), idler_optical_db + linear_to_db(idler_qe),
                     signal_qe, idler_qe};
        b.validate();
        return b;
    }

    void validate() const {
        if (!(signal_db <= 0.0) || !(idler_db <= 0.0))
            throw ValidationError("loss budget dB values must be <= 0");
        for (double e : {signal_detector_efficiency, idler_detector_efficiency})
            if (!(e > 0.0 && e <= 1.0)) throw ValidationError("detector efficiencies must lie in (0, 1]");
    }

    double signal_transmittance() const { return db_to_linear(signal_db); }
    double idler_transmittance() const { return db_to_linear(idler_db); }
};

struct PairRates {
    double internal = 0.0;  // pairs/s generated in the fiber
    double observed = 0.0;  // coincidences/s after channel losses
};

/// R_internal = eta_conv * photons_per_pulse * rep_rate and
/// R_observed = R_internal * eta_s * eta_i.
inline PairRates pair_rates(double conversion_efficiency, const PumpSpec& pump, double photons_per_pulse,
                            const LossBudget& budget) {
    if (!(conversion_efficiency > 0.0)) throw DomainError("conversion efficiency must be positive");
    if (!(photons_per_pulse >= 0.0)) throw DomainError("photons per pulse must be non-negative");
    if (!(pump.rep_rate > 0.0)) throw DomainError("repetition rate must be positive");
    budget.validate();
    PairRates r;
    r.internal = conversion_efficiency * photons_per_pulse * pump.rep_rate;
    r.observed = r.internal * budget.signal_transmittance() * budget.idler_transmittance();
    return r;
}

/// Two readings of a quoted total loss: split evenly between the channels, or
/// applied to each channel.
struct BudgetScenarios {
    LossBudget total_split;
    LossBudget per_channel;
};

inline BudgetScenarios budget_scenarios(double loss_db, double signal_qe = 0.40, double idler_qe = 0.12) {
    return {LossBudget{0.5 * loss_db, 0.5 * loss_db, signal_qe, idler_qe},
            LossBudget{loss_db, loss_db, signal_qe, idler_qe}};
}

/// Photons per pulse implied by average power and repetition rate.
inline double photons_per_pulse_from_power(const PumpSpec& pump) {
    constexpr double kPlanck = 6.62607015e-34;
    const double photon_energy = kPlanck * kSpeedOfLight / pump.center_wavelength;
    return pump.avg_power / pump.rep_rate / photon_energy;
}

inline double car(double peak_rate, double accidental_rate) {
    if (!(accidental_rate > 0.0)) throw DomainError("CAR undefined for a non-positive accidental rate");
    return peak_rate / accidental_rate;
}

// ---------------------------------------------------------------------------
// Power scan
// ---------------------------------------------------------------------------

struct PowerScanPoint {
    double power;  // W
    double rate;   // Hz
};

enum class FitWeighting {
    None,     // ordinary least squares
    Poisson,  // variance = rate / integration_time
};

struct PowerScanFit {
    double dark = 0.0;       // D, Hz
    double quadratic = 0.0;  // a, Hz/W^2 (SFWM)
    double linear = 0.0;     // b, Hz/W (Raman)
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();  // order (D, b, a)
    double residual_norm = 0.0;

    double total(double p) const { return dark + linear * p + quadratic * p * p; }
    double sfwm(double p) const { return quadratic * p * p; }
    double raman(double p) const { return linear * p; }
};

inline PowerScanFit fit_power_scan(const std::vector<PowerScanPoint>& points,
                                   FitWeighting weighting = FitWeighting::None, double integration_time = 1.0) {
    std::set<double> distinct;
    for (const auto& p : points) distinct.insert(p.power);
    if (distinct.size() < 3) throw DomainError("power scan fit needs at least 3 distinct powers");

    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd x(n, 3);
    Eigen::VectorXd y(n);
    Eigen::VectorXd sqrt_w = Eigen::VectorXd::Ones(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& pt = points[static_cast<std::size_t>(k)];
        x(k, 0) = 1.0;
        x(k, 1) = pt.power;
        x(k, 2) = pt.power * pt.power;
        y[k] = pt.rate;
        if (weighting == FitWeighting::Poisson) {
            if (!(pt.rate > 0.0) || !(integration_time > 0.0))
                throw DomainError("Poisson weighting needs positive rates and integration time");
            sqrt_w[k] = std::sqrt(integration_time / pt.rate);
        }
    }
    const Eigen::MatrixXd xw = sqrt_w.asDiagonal() * x;
    const Eigen::VectorXd yw = sqrt_w.asDiagonal() * y;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xw);
    if (qr.rank() < 3) throw DomainError("power scan design matrix is rank deficient");
    const Eigen::Vector3d beta = qr.solve(yw);

    PowerScanFit fit;
    fit.dark = beta[0];
    fit.linear = beta[1];
    fit.quadratic = beta[2];
    const Eigen::VectorXd resid = yw - xw * beta;
    fit.residual_norm = resid.norm();

    const Eigen::Matrix3d normal_inv = (xw.transpose() * xw).inverse();
    if (weighting == FitWeighting::Poisson) {
        fit.covariance = normal_inv;
    } else if (n > 3) {
        fit.covariance = normal_inv * (resid.squaredNorm() / static_cast<double>(n - 3));
    }
    if (!std::isfinite(fit.dark) || !std::isfinite(fit.linear) || !std::isfinite(fit.quadratic))
        throw DomainError("power scan fit produced non-finite parameters");
    return fit;
}

/// Reads the `power_mW,rate_Hz` CSV (header line required) into SI units.
inline std::vector<PowerScanPoint> parse_power_scan_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    std::vector<PowerScanPoint> out;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line != "power_mW,rate_Hz")
                throw ParseError("line " + std::to_string(line_no) + ": expected header 'power_mW,rate_Hz'", line_no);
            header = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ParseError("line " + std::to_string(line_no) + ": expected two comma-separated values", line_no);
        try {
            std::size_t u1 = 0, u2 = 0;
            const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
            const double p = std::stod(a, &u1);
            const double r = std::stod(b, &u2);
            if (u1 != a.size() || u2 != b.size()) throw std::invalid_argument(line);
            out.push_back({p * 1e-3, r});
        } catch (const std::exception&) {
            throw ParseError("line " + std::to_string(line_no) + ": malformed number", line_no);
        }
    }
    if (!header) throw ParseError("power scan CSV is missing its header", line_no);
    return out;
}

inline std::vector<PowerScanPoint> load_power_scan(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open power scan file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_power_scan_csv(buf.str());
}

}  // namespace sfwm

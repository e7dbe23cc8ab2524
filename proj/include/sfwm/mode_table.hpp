#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include "sfwm/constants.hpp"
#include "sfwm/dispersion.hpp"
#include "sfwm/error.hpp"

namespace sfwm {

/// Tabulated n_eff(omega) for one mode of one cross-section, interpolated by a
/// monotone cubic Hermite spline. Node slopes come from the characteristic
/// equation and are limited (Fritsch-Carlson) only where they would break
/// monotonicity of the data. Immutable after construction.
class NeffTable {
public:
    NeffTable(const CrossSection& cs, std::vector<double> omega_grid, ModeLabel label = kHE11)
        : label_(label), diameter_(cs.diameter()), omega_(std::move(omega_grid)) {
        if (omega_.empty()) throw DomainError("n_eff table needs at least one frequency");
        for (std::size_t i = 1; i < omega_.size(); ++i)
            if (!(omega_[i] > omega_[i - 1])) throw DomainError("n_eff table grid must be strictly increasing");

        neff_.resize(omega_.size());
        slope_.resize(omega_.size());
        std::vector<double> failed;
        for (std::size_t i = 0; i < omega_.size(); ++i) {
            try {
                neff_[i] = solve_neff(cs, omega_[i], label);
                if (omega_.size() > 1) slope_[i] = neff_slope(cs, omega_[i], label, neff_[i]);
            } catch (const NoGuidedMode&) {
                failed.push_back(omega_[i]);
            }
        }
        if (!failed.empty()) {
            std::ostringstream os;
            os << "mode " << to_string(label) << " below cutoff at " << failed.size()
               << " table frequencies (rad/s):";
            for (double w : failed) os << ' ' << w;
            throw NoGuidedMode(os.str());
        }
        limit_slopes();
    }

    ModeLabel label() const { return label_; }
    double diameter() const { return diameter_; }
    const std::vector<double>& omegas() const { return omega_; }
    const std::vector<double>& values() const { return neff_; }
    double omega_min() const { return omega_.front(); }
    double omega_max() const { return omega_.back(); }

    double neff(double omega) const {
        if (!(omega >= omega_.front() && omega <= omega_.back())) {
            std::ostringstream os;
            os << "n_eff table queried at " << omega << " rad/s outside [" << omega_.front() << ", "
               << omega_.back() << "]; extrapolation is not supported";
            throw DomainError(os.str());
        }
        if (omega_.size() == 1) return neff_.front();
        auto it = std::upper_bound(omega_.begin(), omega_.end(), omega);
        std::size_t k = it == omega_.end() ? omega_.size() - 2
                                           : static_cast<std::size_t>(it - omega_.begin()) - 1;
        const double h = omega_[k + 1] - omega_[k];
        const double t = (omega - omega_[k]) / h;
        const double t2 = t * t;
        const double t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1;
        const double h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2;
        const double h11 = t3 - t2;
        return h00 * neff_[k] + h10 * h * slope_[k] + h01 * neff_[k + 1] + h11 * h * slope_[k + 1];
    }

    /// Propagation constant k(omega) = omega n_eff(omega) / c, rad/m.
    double wavenumber(double omega) const { return omega * neff(omega) / kSpeedOfLight; }

private:
    void limit_slopes() {
        const std::size_t n = omega_.size();
        if (n < 2) return;
        std::vector<double> secant(n - 1);
        for (std::size_t k = 0; k + 1 < n; ++k)
            secant[k] = (neff_[k + 1] - neff_[k]) / (omega_[k + 1] - omega_[k]);
        for (std::size_t k = 1; k + 1 < n; ++k)
            if (secant[k - 1] * secant[k] <= 0.0) slope_[k] = 0.0;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            if (secant[k] == 0.0) {
                slope_[k] = slope_[k + 1] = 0.0;
                continue;
            }
            double alpha = slope_[k] / secant[k];
            double beta = slope_[k + 1] / secant[k];
            if (alpha < 0.0) slope_[k] = alpha = 0.0;
            if (beta < 0.0) slope_[k + 1] = beta = 0.0;
            const double mag = alpha * alpha + beta * beta;
            if (mag > 9.0) {
                const double tau = 3.0 / std::sqrt(mag);
                slope_[k] = tau * alpha * secant[k];
                slope_[k + 1] = tau * beta * secant[k];
            }
        }
    }

    ModeLabel label_;
    double diameter_;
    std::vector<double> omega_;
    std::vector<double> neff_;
    std::vector<double> slope_;
};

inline NeffTable neff_table(const CrossSection& cs, std::vector<double> omega_grid, ModeLabel label = kHE11) {
    return NeffTable(cs, std::move(omega_grid), label);
}

/// `count` points uniform in omega over [omega_lo, omega_hi].
inline std::vector<double> uniform_omega_grid(double omega_lo, double omega_hi, std::size_t count) {
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = omega_lo;
        return out;
    }
    for (std::size_t i = 0; i < count; ++i)
        out[i] = omega_lo + (omega_hi - omega_lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    out.back() = omega_hi;
    return out;
}

}  // namespace sfwm

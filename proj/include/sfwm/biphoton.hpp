#pragma once

// Joint spectral amplitude of SFWM photon pairs in a fiber of varying
// diameter: per-segment wave-vector mismatch and four-mode overlap, the
// segmented phase-matching sum, the pump convolution and their product.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "sfwm/constants.hpp"
#include "sfwm/dispersion.hpp"
#include "sfwm/error.hpp"
#include "sfwm/mode_table.hpp"
#include "sfwm/parallel.hpp"
#include "sfwm/profile.hpp"
#include "sfwm/quadrature.hpp"
#include "sfwm/version.hpp"

namespace sfwm {

using ComplexGrid = Eigen::MatrixXcd;  // rows: signal axis, columns: idler axis
using RealGrid = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Pump and grids
// ---------------------------------------------------------------------------

struct PumpSpec {
    double center_wavelength = 1062e-9;  // m
    double sigma = 0.0;                  // rad/s, std of the Gaussian amplitude
    double pulse_duration = 100e-12;     // s
    double rep_rate = 18e6;              // Hz
    double avg_power = 0.118;            // W
    bool transform_limited = false;

    double center_omega() const { return omega_from_wavelength(center_wavelength); }

    /// sigma such that |E_p(omega)|^2 has the given FWHM in wavelength.
    static double sigma_from_fwhm(double center_wavelength, double fwhm_wavelength) {
        const double fwhm_omega = kTwoPi * kSpeedOfLight * fwhm_wavelength / (center_wavelength * center_wavelength);
        return fwhm_omega / (2.0 * std::sqrt(std::log(2.0)));
    }

    static double transform_limited_duration(double sigma) { return 2.0 * std::sqrt(std::log(2.0)) / sigma; }

    void validate() const {
        if (!(center_wavelength > 0 && sigma > 0 && pulse_duration > 0 && rep_rate > 0 && avg_power > 0))
            throw ValidationError("pump parameters must all be positive");
        if (transform_limited) {
            const double expected = transform_limited_duration(sigma);
            if (std::abs(pulse_duration - expected) > 1e-6 * expected)
                throw ValidationError("transform-limited pump needs pulse_duration = 2 sqrt(ln 2)/sigma");
        }
    }
};

struct SpectralGrid {
    std::vector<double> signal;  // rad/s, strictly increasing
    std::vector<double> idler;   // rad/s, strictly increasing

    void validate() const {
        for (const auto* axis : {&signal, &idler}) {
            if (axis->size() < 2) throw ValidationError("spectral grid axes need at least 2 points");
            for (std::size_t i = 1; i < axis->size(); ++i)
                if (!((*axis)[i] > (*axis)[i - 1]))
                    throw ValidationError("spectral grid axes must be strictly increasing");
        }
    }

    /// Grid uniform in omega spanning the given wavelength windows.
    static SpectralGrid from_wavelengths(double signal_min, double signal_max, std::size_t signal_points,
                                         double idler_min, double idler_max, std::size_t idler_points) {
        SpectralGrid g{uniform_omega_grid(omega_from_wavelength(signal_max), omega_from_wavelength(signal_min),
                                          signal_points),
                       uniform_omega_grid(omega_from_wavelength(idler_max), omega_from_wavelength(idler_min),
                                          idler_points)};
        g.validate();
        return g;
    }
};

struct ModeSet {
    ModeLabel pump = kHE11;
    ModeLabel signal = kHE11;
    ModeLabel idler = kHE11;
};

// ---------------------------------------------------------------------------
// Overlap integral and wave-vector mismatch
// ---------------------------------------------------------------------------

/// 2*pi * int f_p(rho)^2 f_s(rho) f_i(rho) rho drho on the given quadrature
/// (real fields).
template <class Pump, class Signal, class Idler>
double overlap_integral(const RadialQuadrature& quad, Pump&& pump, Signal&& signal, Idler&& idler) {
    double sum = 0.0;
    for (std::size_t j = 0; j < quad.size(); ++j) {
        const double r = quad.rho[j];
        const double p = pump(r);
        sum += quad.weight[j] * p * p * signal(r) * idler(r);
    }
    return sum;
}

/// Four-mode overlap (1/m^2). All modes must belong to the same cross-section;
/// `pump_a` and `pump_b` are the two annihilated pump photons.
inline double overlap_integral(const ModeSolution& pump_a, const ModeSolution& pump_b,
                               const ModeSolution& signal, const ModeSolution& idler) {
    for (const auto* m : {&pump_b, &signal, &idler}) {
        if (m->radius() != pump_a.radius())
            throw DomainError("overlap integral needs all modes at the same cross-section");
    }
    const double decay = std::min({pump_a.w(), pump_b.w(), signal.w(), idler.w()});
    const RadialQuadrature quad(pump_a.radius(), decay, 48, 16, 24.0);
    double sum = 0.0;
    for (std::size_t j = 0; j < quad.size(); ++j) {
        const double r = quad.rho[j];
        sum += quad.weight[j] * pump_a.field(r) * pump_b.field(r) * signal.field(r) * idler.field(r);
    }
    return sum;
}

/// dk = k_p(w_p) + k_p(w_s + w_i - w_p) - k_s(w_s) - k_i(w_i), rad/m.
inline double delta_k(const NeffTable& pump, const NeffTable& signal, const NeffTable& idler,
                      double omega_p, double omega_s, double omega_i) {
    return pump.wavenumber(omega_p) + pump.wavenumber(omega_s + omega_i - omega_p) -
           signal.wavenumber(omega_s) - idler.wavenumber(omega_i);
}

/// Same mismatch evaluated with direct mode solves (no tables).
inline double delta_k(const CrossSection& cs, double omega_p, double omega_s, double omega_i,
                      const ModeSet& modes = {}) {
    auto k = [&](double w, ModeLabel m) { return w * solve_neff(cs, w, m) / kSpeedOfLight; };
    return k(omega_p, modes.pump) + k(omega_s + omega_i - omega_p, modes.pump) - k(omega_s, modes.signal) -
           k(omega_i, modes.idler);
}

inline double sinc(double x) {
    if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

// ---------------------------------------------------------------------------
// Phase-matching function
// ---------------------------------------------------------------------------

enum class OverlapEvaluation {
    PerCell,     // eta_q at each grid point's own (w_s, w_i)
    GridCenter,  // eta_q once per segment at the grid center
};

struct PhaseMatchingOptions {
    OverlapEvaluation overlap = OverlapEvaluation::PerCell;
    std::size_t table_nodes = 96;
    unsigned threads = 0;  // 0: hardware concurrency
};

struct PhaseMatching {
    ComplexGrid values;
    // GridCenter mode: max relative deviation of eta between the grid center
    // and the grid corners over all segments. Zero in PerCell mode.
    double overlap_error_bound = 0.0;
};

namespace detail {

/// Precomputed optics of one distinct segment diameter on a given grid.
struct SegmentOptics {
    std::vector<std::shared_ptr<const NeffTable>> tables;  // pump, signal, idler
    double k_pump = 0.0;
    std::vector<double> k_signal;
    std::vector<double> k_idler;
    // eta(s, i) = sum_j signal_field(s, j) * idler_field(i, j); quadrature
    // weights and the squared pump field are folded into signal_field.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> signal_field;
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> idler_field;
    double eta_center = 0.0;
    double eta_spread = 0.0;

    const NeffTable& pump() const { return *tables[0]; }
};

inline SegmentOptics build_segment_optics(const CrossSection& cs, const SpectralGrid& grid, double omega_p,
                                          const ModeSet& modes, const PhaseMatchingOptions& options) {
    const double lo_sum = grid.signal.front() + grid.idler.front() - omega_p;
    const double hi_sum = grid.signal.back() + grid.idler.back() - omega_p;
    double lo = std::min({grid.signal.front(), grid.idler.front(), omega_p, lo_sum});
    double hi = std::max({grid.signal.back(), grid.idler.back(), omega_p, hi_sum});
    const double pad = 0.005 * (hi - lo);
    lo -= pad;
    hi += pad;

    SegmentOptics out;
    const auto nodes = uniform_omega_grid(lo, hi, std::max<std::size_t>(options.table_nodes, 2));
    std::map<std::string, std::shared_ptr<const NeffTable>> by_label;
    for (ModeLabel m : {modes.pump, modes.signal, modes.idler}) {
        auto& slot = by_label[to_string(m)];
        if (!slot) slot = std::make_shared<const NeffTable>(cs, nodes, m);
        out.tables.push_back(slot);
    }
    const NeffTable& tp = *out.tables[0];
    const NeffTable& ts = *out.tables[1];
    const NeffTable& ti = *out.tables[2];

    out.k_pump = tp.wavenumber(omega_p);
    out.k_signal.resize(grid.signal.size());
    out.k_idler.resize(grid.idler.size());
    for (std::size_t s = 0; s < grid.signal.size(); ++s) out.k_signal[s] = ts.wavenumber(grid.signal[s]);
    for (std::size_t i = 0; i < grid.idler.size(); ++i) out.k_idler[i] = ti.wavenumber(grid.idler[i]);

    // One quadrature shared by all fields, sized for the slowest decay (the
    // lowest frequency in the table).
    const GuideParameters g_lo = guide_parameters(cs, lo);
    double decay = std::numeric_limits<double>::infinity();
    for (const auto& t : out.tables) {
        const double n = t->neff(lo);
        decay = std::min(decay, g_lo.radius * g_lo.k0 * std::sqrt(n * n - g_lo.n_clad * g_lo.n_clad));
    }
    const RadialQuadrature quad(cs.radius(), decay);
    const auto q = static_cast<Eigen::Index>(quad.size());

    auto samples = [&](const NeffTable& table, double omega) {
        return mode_at(cs, omega, table.label(), table.neff(omega), &quad).sample_values();
    };
    const auto pump_field = samples(tp, omega_p);
    Eigen::VectorXd pump_weight(q);
    for (Eigen::Index j = 0; j < q; ++j) pump_weight[j] = quad.weight[j] * pump_field[j] * pump_field[j];

    auto fill = [&](const std::vector<double>& axis, const NeffTable& table, auto& dest, bool weighted) {
        dest.resize(static_cast<Eigen::Index>(axis.size()), q);
        for (std::size_t a = 0; a < axis.size(); ++a) {
            const auto f = samples(table, axis[a]);
            for (Eigen::Index j = 0; j < q; ++j)
                dest(static_cast<Eigen::Index>(a), j) = weighted ? pump_weight[j] * f[j] : f[j];
        }
    };

    if (options.overlap == OverlapEvaluation::PerCell) {
        fill(grid.signal, ts, out.signal_field, true);
        fill(grid.idler, ti, out.idler_field, false);
    } else {
        auto eta_at = [&](double ws, double wi) {
            const auto fs = samples(ts, ws);
            const auto fi = samples(ti, wi);
            double sum = 0.0;
            for (Eigen::Index j = 0; j < q; ++j) sum += pump_weight[j] * fs[j] * fi[j];
            return sum;
        };
        const double ws_c = 0.5 * (grid.signal.front() + grid.signal.back());
        const double wi_c = 0.5 * (grid.idler.front() + grid.idler.back());
        out.eta_center = eta_at(ws_c, wi_c);
        for (double ws : {grid.signal.front(), grid.signal.back()})
            for (double wi : {grid.idler.front(), grid.idler.back()})
                out.eta_spread = std::max(out.eta_spread, std::abs(eta_at(ws, wi) - out.eta_center) / out.eta_center);
    }
    return out;
}

}  // namespace detail

/// Segmented phase-matching sum over the N cross-sections (segment 0 at the
/// input end):
///   J = sum_q l sinc(dk_q l/2) exp(i dk_q l/2) exp(i sum_{n>q} dk_n l) eta_q
/// evaluated at the central pump frequency omega_p.
inline PhaseMatching phase_matching(const SegmentedProfile& segmented, const SpectralGrid& grid, double omega_p,
                                    const ModeSet& modes = {}, const PhaseMatchingOptions& options = {}) {
    grid.validate();
    if (segmented.count() == 0) throw DomainError("segmented profile has no segments");

    // Distinct diameters share optics.
    std::vector<double> diameters;
    std::vector<std::size_t> segment_kind(segmented.count());
    for (std::size_t q = 0; q < segmented.count(); ++q) {
        const double d = segmented.segments[q].diameter();
        auto it = std::find(diameters.begin(), diameters.end(), d);
        if (it == diameters.end()) {
            diameters.push_back(d);
            it = diameters.end() - 1;
        }
        segment_kind[q] = static_cast<std::size_t>(it - diameters.begin());
    }
    std::vector<std::size_t> representative(diameters.size());
    for (std::size_t q = segmented.count(); q-- > 0;) representative[segment_kind[q]] = q;

    std::vector<detail::SegmentOptics> optics(diameters.size());
    parallel_for(diameters.size(), options.threads, [&](std::size_t k) {
        const std::size_t q = representative[k];
        try {
            optics[k] = detail::build_segment_optics(segmented.segments[q], grid, omega_p, modes, options);
        } catch (const NoGuidedMode& e) {
            std::ostringstream os;
            os << "segment " << q << " (diameter " << diameters[k] * 1e9 << " nm): " << e.what();
            throw NoGuidedMode(os.str());
        }
    });

    PhaseMatching result;
    for (const auto& o : optics) result.overlap_error_bound = std::max(result.overlap_error_bound, o.eta_spread);

    const auto ns = static_cast<Eigen::Index>(grid.signal.size());
    const auto ni = static_cast<Eigen::Index>(grid.idler.size());
    result.values.resize(ns, ni);
    const double l = segmented.segment_length;
    const bool per_cell = options.overlap == OverlapEvaluation::PerCell;

    parallel_for(static_cast<std::size_t>(ns), options.threads, [&](std::size_t srow) {
        const auto s = static_cast<Eigen::Index>(srow);
        std::vector<double> dk(optics.size());
        std::vector<double> eta(optics.size());
        for (Eigen::Index i = 0; i < ni; ++i) {
            const double ws = grid.signal[srow];
            const double wi = grid.idler[static_cast<std::size_t>(i)];
            for (std::size_t k = 0; k < optics.size(); ++k) {
                const auto& o = optics[k];
                dk[k] = o.k_pump + o.pump().wavenumber(ws + wi - omega_p) - o.k_signal[srow] -
                        o.k_idler[static_cast<std::size_t>(i)];
                eta[k] = per_cell ? o.signal_field.row(s).dot(o.idler_field.row(i)) : o.eta_center;
            }
            std::complex<double> sum = 0.0;
            double tail_phase = 0.0;
            for (std::size_t q = segmented.count(); q-- > 0;) {
                const std::size_t k = segment_kind[q];
                const double half = 0.5 * dk[k] * l;
                sum += l * sinc(half) * eta[k] * std::polar(1.0, half + tail_phase);
                tail_phase += dk[k] * l;
            }
            result.values(s, i) = sum;
        }
    });
    return result;
}

// ---------------------------------------------------------------------------
// Pump function
// ---------------------------------------------------------------------------

/// Gaussian pump spectral amplitude with unit peak.
inline double pump_amplitude(const PumpSpec& pump, double omega) {
    const double x = (omega - pump.center_omega()) / pump.sigma;
    return std::exp(-0.5 * x * x);
}

/// Closed form of int E_p(w) E_p(S - w) dw for the Gaussian pump, S = w_s + w_i.
inline double pump_convolution_closed_form(const PumpSpec& pump, double omega_sum) {
    const double x = (omega_sum - 2.0 * pump.center_omega()) / pump.sigma;
    return pump.sigma * std::sqrt(kPi) * std::exp(-0.25 * x * x);
}

/// Numerical convolution by the trapezoidal rule (step sigma/8, +-12 sigma
/// around the integrand's center S/2).
inline double pump_convolution(const PumpSpec& pump, double omega_sum) {
    const double w0 = pump.center_omega();
    const double sigma = pump.sigma;
    const double center = 0.5 * omega_sum;
    constexpr int half_points = 96;
    const double h = sigma / 8.0;
    double sum = 0.0;
    for (int j = -half_points; j <= half_points; ++j) {
        const double w = center + j * h;
        const double a = (w - w0) / sigma;
        const double b = (omega_sum - w - w0) / sigma;
        const double weight = (j == -half_points || j == half_points) ? 0.5 : 1.0;
        sum += weight * std::exp(-0.5 * (a * a + b * b));
    }
    return sum * h;
}

struct PumpFunction {
    ComplexGrid values;
    // |I| at the smallest and largest sum frequency on the grid (the two
    // corners) over the grid peak. I depends on w_s + w_i only, so this
    // measures how much of its support the grid spans.
    double boundary_ratio = 0.0;
    bool support_covered() const { return boundary_ratio < 1e-6; }
};

inline PumpFunction pump_function(const PumpSpec& pump, const SpectralGrid& grid) {
    pump.validate();
    grid.validate();
    const auto ns = static_cast<Eigen::Index>(grid.signal.size());
    const auto ni = static_cast<Eigen::Index>(grid.idler.size());
    PumpFunction out;
    out.values.resize(ns, ni);
    double peak = 0.0;
    for (Eigen::Index s = 0; s < ns; ++s) {
        for (Eigen::Index i = 0; i < ni; ++i) {
            const double v = pump_convolution(pump, grid.signal[static_cast<std::size_t>(s)] +
                                                        grid.idler[static_cast<std::size_t>(i)]);
            out.values(s, i) = v;
            peak = std::max(peak, v);
        }
    }
    const double edge = std::max(std::abs(out.values(0, 0)), std::abs(out.values(ns - 1, ni - 1)));
    out.boundary_ratio = peak > 0.0 ? edge / peak : 1.0;
    return out;
}

// ---------------------------------------------------------------------------
// Joint spectral amplitude
// ---------------------------------------------------------------------------

struct JsaMetadata {
    PumpSpec pump;
    std::uint64_t profile_hash = 0;
    std::size_t segments = 0;
    double segment_length = 0.0;
    ModeSet modes;
    OverlapEvaluation overlap = OverlapEvaluation::PerCell;
    double overlap_error_bound = 0.0;
    std::size_t table_nodes = 0;
    double peak_intensity = 0.0;  // raw max |F|^2 before export normalization
    std::vector<std::string> warnings;
};

struct JsaGrid {
    SpectralGrid grid;
    ComplexGrid amplitude;
    JsaMetadata metadata;

    RealGrid intensity() const { return amplitude.cwiseAbs2(); }
};

/// F = I * J together with its two factors.
struct JsaComputation {
    ComplexGrid phase_matching;
    ComplexGrid pump;
    JsaGrid jsa;
};

inline JsaComputation compute_jsa(const SegmentedProfile& segmented, const PumpSpec& pump, const SpectralGrid& grid,
                                  const ModeSet& modes = {}, const PhaseMatchingOptions& options = {},
                                  std::uint64_t profile_hash = 0) {
    pump.validate();
    auto pm = phase_matching(segmented, grid, pump.center_omega(), modes, options);
    auto pf = pump_function(pump, grid);

    JsaComputation out;
    out.jsa.grid = grid;
    out.jsa.amplitude = pf.values.cwiseProduct(pm.values);
    if (!out.jsa.amplitude.allFinite()) throw DomainError("joint spectral amplitude has non-finite entries");

    auto& meta = out.jsa.metadata;
    meta.pump = pump;
    meta.profile_hash = profile_hash;
    meta.segments = segmented.count();
    meta.segment_length = segmented.segment_length;
    meta.modes = modes;
    meta.overlap = options.overlap;
    meta.overlap_error_bound = pm.overlap_error_bound;
    meta.table_nodes = options.table_nodes;
    meta.peak_intensity = out.jsa.amplitude.cwiseAbs2().maxCoeff();
    if (!pf.support_covered()) {
        std::ostringstream os;
        os << "grid does not span the pump-function support (corner/peak = " << pf.boundary_ratio << ")";
        meta.warnings.push_back(os.str());
    }
    out.phase_matching = std::move(pm.values);
    out.pump = std::move(pf.values);
    return out;
}

inline JsaGrid jsa(const SegmentedProfile& segmented, const PumpSpec& pump, const SpectralGrid& grid,
                   const ModeSet& modes = {}, const PhaseMatchingOptions& options = {},
                   std::uint64_t profile_hash = 0) {
    return compute_jsa(segmented, pump, grid, modes, options, profile_hash).jsa;
}

// ---------------------------------------------------------------------------
// Derived analyses
// ---------------------------------------------------------------------------

struct SchmidtAnalysis {
    std::vector<double> coefficients;  // descending, sum to 1
    double schmidt_number = 0.0;
    double purity = 0.0;
};

/// Schmidt decomposition of the discretized amplitude (uniform grids, so the
/// constant measure drops out of the normalized spectrum).
inline SchmidtAnalysis schmidt_analysis(const ComplexGrid& amplitude) {
    if (!amplitude.allFinite()) throw DomainError("Schmidt analysis needs a finite amplitude");
    if (amplitude.cwiseAbs2().sum() == 0.0) throw DomainError("Schmidt analysis of an all-zero amplitude");
    Eigen::BDCSVD<ComplexGrid> svd(amplitude);
    const Eigen::VectorXd sv = svd.singularValues();
    SchmidtAnalysis out;
    double total = 0.0;
    for (Eigen::Index j = 0; j < sv.size(); ++j) total += sv[j] * sv[j];
    double sum_sq = 0.0;
    for (Eigen::Index j = 0; j < sv.size(); ++j) {
        const double lambda = sv[j] * sv[j] / total;
        out.coefficients.push_back(lambda);
        sum_sq += lambda * lambda;
    }
    std::sort(out.coefficients.begin(), out.coefficients.end(), std::greater<>());
    out.schmidt_number = 1.0 / sum_sq;
    out.purity = sum_sq;
    return out;
}

inline SchmidtAnalysis schmidt_analysis(const JsaGrid& jsa) { return schmidt_analysis(jsa.amplitude); }

struct Marginals {
    std::vector<double> signal;  // over grid.signal, sums to 1
    std::vector<double> idler;   // over grid.idler, sums to 1
};

inline Marginals marginals(const JsaGrid& jsa) {
    const RealGrid jsi = jsa.intensity();
    const double total = jsi.sum();
    if (!(total > 0.0)) throw DomainError("marginals of an all-zero JSA");
    Marginals m;
    for (Eigen::Index s = 0; s < jsi.rows(); ++s) m.signal.push_back(jsi.row(s).sum() / total);
    for (Eigen::Index i = 0; i < jsi.cols(); ++i) m.idler.push_back(jsi.col(i).sum() / total);
    return m;
}

/// Location of the JSI maximum.
struct JsiPeak {
    Eigen::Index signal_index = 0;
    Eigen::Index idler_index = 0;
    double signal_wavelength = 0.0;
    double idler_wavelength = 0.0;
};

inline JsiPeak jsi_peak(const JsaGrid& jsa) {
    JsiPeak p;
    jsa.intensity().maxCoeff(&p.signal_index, &p.idler_index);
    p.signal_wavelength = wavelength_from_omega(jsa.grid.signal[static_cast<std::size_t>(p.signal_index)]);
    p.idler_wavelength = wavelength_from_omega(jsa.grid.idler[static_cast<std::size_t>(p.idler_index)]);
    return p;
}

}  // namespace sfwm

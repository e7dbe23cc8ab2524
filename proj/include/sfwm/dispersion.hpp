#pragma once

// Material dispersion and guided modes of a two-layer step-index circular
// waveguide (glass core, air or glass cladding).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "sfwm/constants.hpp"
#include "sfwm/error.hpp"
#include "sfwm/quadrature.hpp"

namespace sfwm {

// ---------------------------------------------------------------------------
// Sellmeier glasses
// ---------------------------------------------------------------------------

struct SellmeierTerm {
    double b;       // dimensionless oscillator strength
    double c_um2;   // resonance wavelength squared, um^2
};

class SellmeierGlass {
public:
    SellmeierGlass(std::string name, std::vector<SellmeierTerm> terms,
                   double valid_min_um, double valid_max_um)
        : name_(std::move(name)), terms_(std::move(terms)),
          valid_min_um_(valid_min_um), valid_max_um_(valid_max_um) {
        if (terms_.empty()) throw ValidationError("glass '" + name_ + "': no Sellmeier terms");
        for (const auto& t : terms_) {
            if (!(t.b >= 0.0) || !(t.c_um2 > 0.0))
                throw ValidationError("glass '" + name_ + "': Sellmeier terms need B >= 0 and C > 0");
        }
        if (!(valid_min_um_ > 0.0) || !(valid_max_um_ > valid_min_um_))
            throw ValidationError("glass '" + name_ + "': empty validity interval");
    }

    const std::string& name() const { return name_; }
    const std::vector<SellmeierTerm>& terms() const { return terms_; }
    double valid_min_um() const { return valid_min_um_; }
    double valid_max_um() const { return valid_max_um_; }

    bool covers(double wavelength_m) const {
        const double um = wavelength_m * 1e6;
        return um >= valid_min_um_ && um <= valid_max_um_;
    }

private:
    std::string name_;
    std::vector<SellmeierTerm> terms_;
    double valid_min_um_;
    double valid_max_um_;
};

/// Fused silica, Malitson (1965) three-term fit, valid 0.21-3.71 um.
inline SellmeierGlass fused_silica() {
    return SellmeierGlass("fused_silica_malitson",
                          {{0.6961663, 0.0684043 * 0.0684043},
                           {0.4079426, 0.1162414 * 0.1162414},
                           {0.8974794, 9.896161 * 9.896161}},
                          0.21, 3.71);
}

inline double refractive_index(const SellmeierGlass& glass, double wavelength_m) {
    if (!glass.covers(wavelength_m)) {
        std::ostringstream os;
        os << "wavelength " << wavelength_m * 1e6 << " um outside validity interval ["
           << glass.valid_min_um() << ", " << glass.valid_max_um() << "] um of glass '"
           << glass.name() << "'";
        throw DomainError(os.str());
    }
    const double l2 = wavelength_m * 1e6 * wavelength_m * 1e6;
    double sum = 1.0;
    for (const auto& t : glass.terms()) sum += t.b * l2 / (l2 - t.c_um2);
    return std::sqrt(sum);
}

namespace detail {

inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

inline std::vector<double> parse_number_list(const std::string& text, std::size_t line) {
    std::string spaced = text;
    std::replace(spaced.begin(), spaced.end(), ',', ' ');
    std::istringstream is(spaced);
    std::vector<double> out;
    std::string token;
    while (is >> token) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(token, &used));
            if (used != token.size()) throw std::invalid_argument(token);
        } catch (const std::exception&) {
            throw ParseError("line " + std::to_string(line) + ": not a number: '" + token + "'", line);
        }
    }
    return out;
}

}  // namespace detail

/// Parse a glass definition. Format (one `key = value` per line, `#` starts a
/// comment):
///
///     name     = fused_silica_malitson
///     B        = 0.6961663, 0.4079426, 0.8974794
///     C_um2    = 0.00467914826, 0.0135120631, 97.9340025
///     valid_um = 0.21, 3.71
inline SellmeierGlass parse_glass(std::string_view text) {
    std::string name;
    std::vector<double> b;
    std::vector<double> c;
    std::vector<double> valid;
    bool seen_name = false, seen_b = false, seen_c = false, seen_valid = false;

    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = detail::trim(std::string_view(raw).substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("line " + std::to_string(line_no) + ": expected 'key = value'", line_no);
        const std::string key = detail::trim(std::string_view(line).substr(0, eq));
        const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
        if (key == "name") {
            name = value;
            seen_name = true;
        } else if (key == "B") {
            b = detail::parse_number_list(value, line_no);
            seen_b = true;
        } else if (key == "C_um2") {
            c = detail::parse_number_list(value, line_no);
            seen_c = true;
        } else if (key == "valid_um") {
            valid = detail::parse_number_list(value, line_no);
            seen_valid = true;
            if (valid.size() != 2)
                throw ParseError("line " + std::to_string(line_no) + ": valid_um needs two values", line_no);
        } else {
            throw ParseError("line " + std::to_string(line_no) + ": unknown key '" + key + "'", line_no);
        }
    }
    if (!seen_name || !seen_b || !seen_c || !seen_valid)
        throw ParseError("glass definition needs name, B, C_um2 and valid_um", line_no);
    if (b.size() != c.size())
        throw ValidationError("glass '" + name + "': B and C_um2 lists differ in length");

    std::vector<SellmeierTerm> terms;
    for (std::size_t i = 0; i < b.size(); ++i) terms.push_back({b[i], c[i]});
    return SellmeierGlass(name, std::move(terms), valid[0], valid[1]);
}

inline SellmeierGlass load_glass(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open glass file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_glass(buf.str());
}

// ---------------------------------------------------------------------------
// Cross sections and mode labels
// ---------------------------------------------------------------------------

struct ConstantIndex {
    double n = 1.0;
};

inline constexpr ConstantIndex kAir{1.0};

class CrossSection {
public:
    using Cladding = std::variant<ConstantIndex, SellmeierGlass>;

    CrossSection(double diameter_m, SellmeierGlass core, Cladding cladding = kAir)
        : diameter_(diameter_m), core_(std::move(core)), cladding_(std::move(cladding)) {
        if (!(diameter_ > 0.0)) throw ValidationError("cross-section diameter must be positive");
    }

    double diameter() const { return diameter_; }
    double radius() const { return 0.5 * diameter_; }
    const SellmeierGlass& core_glass() const { return core_; }
    const Cladding& cladding() const { return cladding_; }

    double core_index(double wavelength_m) const { return refractive_index(core_, wavelength_m); }

    double cladding_index(double wavelength_m) const {
        if (const auto* c = std::get_if<ConstantIndex>(&cladding_)) return c->n;
        return refractive_index(std::get<SellmeierGlass>(cladding_), wavelength_m);
    }

    CrossSection with_diameter(double diameter_m) const {
        return CrossSection(diameter_m, core_, cladding_);
    }

private:
    double diameter_;
    SellmeierGlass core_;
    Cladding cladding_;
};

enum class ModeFamily { HE, EH, TE, TM };

/// Mode designation: family, azimuthal order and radial order (e.g. HE11).
struct ModeLabel {
    ModeFamily family = ModeFamily::HE;
    int azimuthal = 1;
    int radial = 1;

    friend bool operator==(const ModeLabel&, const ModeLabel&) = default;
};

inline constexpr ModeLabel kHE11{ModeFamily::HE, 1, 1};

inline std::string to_string(ModeLabel label) {
    static constexpr const char* names[] = {"HE", "EH", "TE", "TM"};
    std::string s = names[static_cast<int>(label.family)];
    const bool short_form = label.azimuthal < 10 && label.radial < 10;
    s += std::to_string(label.azimuthal);
    if (!short_form) s += ",";
    s += std::to_string(label.radial);
    return s;
}

/// Accepts "HE11", "TE01" or, for orders >= 10, "EH12,3".
inline ModeLabel parse_mode_label(std::string_view text) {
    auto fail = [&] { return ParseError("bad mode label '" + std::string(text) + "'", 0); };
    if (text.size() < 4) throw fail();
    ModeLabel label;
    const auto family = text.substr(0, 2);
    if (family == "HE") label.family = ModeFamily::HE;
    else if (family == "EH") label.family = ModeFamily::EH;
    else if (family == "TE") label.family = ModeFamily::TE;
    else if (family == "TM") label.family = ModeFamily::TM;
    else throw fail();
    const auto rest = text.substr(2);
    const auto comma = rest.find(',');
    auto to_int = [&](std::string_view s) {
        if (s.empty() || !std::all_of(s.begin(), s.end(), [](char ch) { return ch >= '0' && ch <= '9'; }))
            throw fail();
        return std::stoi(std::string(s));
    };
    if (comma == std::string_view::npos) {
        if (rest.size() != 2) throw fail();
        label.azimuthal = to_int(rest.substr(0, 1));
        label.radial = to_int(rest.substr(1, 1));
    } else {
        label.azimuthal = to_int(rest.substr(0, comma));
        label.radial = to_int(rest.substr(comma + 1));
    }
    const bool transverse = label.family == ModeFamily::TE || label.family == ModeFamily::TM;
    if (transverse != (label.azimuthal == 0) || label.radial < 1) throw fail();
    return label;
}

// ---------------------------------------------------------------------------
// Characteristic equation
// ---------------------------------------------------------------------------

/// Waveguide parameters at one frequency.
struct GuideParameters {
    double wavelength;
    double k0;          // vacuum wavenumber, rad/m
    double radius;
    double n_core;
    double n_clad;
    double v;           // normalized frequency V = a k0 NA
};

inline GuideParameters guide_parameters(const CrossSection& cs, double omega) {
    if (!(omega > 0.0)) throw DomainError("angular frequency must be positive");
    GuideParameters g{};
    g.wavelength = wavelength_from_omega(omega);
    g.k0 = omega / kSpeedOfLight;
    g.radius = cs.radius();
    g.n_core = cs.core_index(g.wavelength);
    g.n_clad = cs.cladding_index(g.wavelength);
    if (!(g.n_core > g.n_clad)) {
        std::ostringstream os;
        os << "guidance condition violated at " << g.wavelength * 1e9 << " nm: core index " << g.n_core
           << " <= cladding index " << g.n_clad;
        throw DomainError(os.str());
    }
    g.v = g.radius * g.k0 * std::sqrt(g.n_core * g.n_core - g.n_clad * g.n_clad);
    return g;
}

/// Value of the characteristic function together with the magnitude of its
/// largest term, so callers can judge a residual relative to its scale.
struct CharacteristicValue {
    double value;
    double scale;
};

/// Pole-free form of the full-vector eigenvalue equation, as a function of the
/// transverse core parameter u (w follows from u^2 + w^2 = V^2).
///   HE_vm: J_{v-1}(u) - u J_v(u) [v/u^2 - (1+r)/2 K~ - S] = 0
///   EH_vm: J_{v+1}(u) - u J_v(u) [v/u^2 + (1+r)/2 K~ - S] = 0
///   TE_0m: J_1(u) w K_0(w) + u J_0(u) K_1(w) = 0
///   TM_0m: n1^2 J_1(u) w K_0(w) + n2^2 u J_0(u) K_1(w) = 0
/// with r = n2^2/n1^2, K~ = K'_v(w)/(w K_v(w)) and
/// S = sqrt(((1-r)/2 K~)^2 + v^2 (n_eff/n1)^2 (1/u^2 + 1/w^2)^2).
inline CharacteristicValue characteristic(const GuideParameters& g, ModeLabel label, double u) {
    const double w = std::sqrt(std::max(g.v * g.v - u * u, 0.0));
    const double n1sq = g.n_core * g.n_core;
    const double n2sq = g.n_clad * g.n_clad;
    switch (label.family) {
        case ModeFamily::TE:
        case ModeFamily::TM: {
            const double j0 = std::cyl_bessel_j(0.0, u);
            const double j1 = std::cyl_bessel_j(1.0, u);
            const double k0 = std::cyl_bessel_k(0.0, w);
            const double k1 = std::cyl_bessel_k(1.0, w);
            const double p = (label.family == ModeFamily::TE ? 1.0 : n1sq) * j1 * w * k0;
            const double q = (label.family == ModeFamily::TE ? 1.0 : n2sq) * u * j0 * k1;
            return {p + q, std::max(std::abs(p), std::abs(q))};
        }
        case ModeFamily::HE:
        case ModeFamily::EH: {
            const double nu = label.azimuthal;
            const double r = n2sq / n1sq;
            const double kv = std::cyl_bessel_k(nu, w);
            const double kprime = -std::cyl_bessel_k(nu - 1.0, w) - nu / w * kv;
            const double kt = kprime / (w * kv);
            const double neff_sq = n1sq - (u / (g.radius * g.k0)) * (u / (g.radius * g.k0));
            const double inv = 1.0 / (u * u) + 1.0 / (w * w);
            const double s = std::sqrt(0.25 * (1.0 - r) * (1.0 - r) * kt * kt +
                                       nu * nu * (neff_sq / n1sq) * inv * inv);
            const double jv = std::cyl_bessel_j(nu, u);
            const bool he = label.family == ModeFamily::HE;
            const double lead = std::cyl_bessel_j(he ? nu - 1.0 : nu + 1.0, u);
            const double bracket = nu / (u * u) + (he ? -1.0 : 1.0) * 0.5 * (1.0 + r) * kt - s;
            const double tail = u * jv * bracket;
            return {lead - tail, std::max(std::abs(lead), std::abs(tail))};
        }
    }
    return {0.0, 0.0};
}

inline double u_from_neff(const GuideParameters& g, double neff) {
    return g.radius * g.k0 * std::sqrt(std::max(g.n_core * g.n_core - neff * neff, 0.0));
}

inline double neff_from_u(const GuideParameters& g, double u) {
    const double x = u / (g.radius * g.k0);
    return std::sqrt(g.n_core * g.n_core - x * x);
}

// ---------------------------------------------------------------------------
// Mode solutions
// ---------------------------------------------------------------------------

/// Guided mode at one frequency and cross-section. The transverse profile is
/// u(rho) = sqrt(<|e_r|^2 + |e_phi|^2>_phi), normalized so the integral of
/// u^2 over the plane is one (units 1/m).
class ModeSolution {
public:
    static constexpr const char* kFieldModel =
        "azimuthal mean of transverse intensity |e_r|^2+|e_phi|^2, exact vector mode";

    /// Builds the mode for a known root. Normalization and samples use
    /// `quadrature` when given, otherwise a grid fitted to this mode's decay.
    ModeSolution(ModeLabel label, double omega, const GuideParameters& g, double neff,
                 const RadialQuadrature* quadrature = nullptr)
        : label_(label), omega_(omega), neff_(neff), radius_(g.radius),
          n_core_(g.n_core), n_clad_(g.n_clad) {
        u_ = u_from_neff(g, neff);
        w_ = std::sqrt(std::max(g.v * g.v - u_ * u_, 0.0));
        if (!(u_ > 0.0) || !(w_ > 0.0))
            throw NoGuidedMode("mode " + to_string(label) + " has no bound solution at this n_eff");
        if (label.family == ModeFamily::HE || label.family == ModeFamily::EH) {
            const double nu = label.azimuthal;
            const double b1 = (std::cyl_bessel_j(nu - 1.0, u_) - std::cyl_bessel_j(nu + 1.0, u_)) /
                              (2.0 * u_ * std::cyl_bessel_j(nu, u_));
            const double b2 = -(std::cyl_bessel_k(nu - 1.0, w_) + std::cyl_bessel_k(nu + 1.0, w_)) /
                              (2.0 * w_ * std::cyl_bessel_k(nu, w_));
            const double f2 = (g.v / (u_ * w_)) * (g.v / (u_ * w_)) * nu / (b1 + b2);
            a1_ = 0.5 * (f2 - 1.0);
            a2_ = 0.5 * (f2 + 1.0);
        }
        const RadialQuadrature own = quadrature ? RadialQuadrature{} : RadialQuadrature(radius_, w_);
        const RadialQuadrature& quad = quadrature ? *quadrature : own;
        double norm = 0.0;
        radial_.reserve(quad.size());
        for (std::size_t i = 0; i < quad.size(); ++i) {
            const double intensity = raw_intensity(quad.rho[i]);
            norm += quad.weight[i] * intensity;
            radial_.push_back(intensity);
        }
        scale_ = 1.0 / std::sqrt(norm);
        rho_ = quad.rho;
        for (auto& v : radial_) v = scale_ * std::sqrt(v);
    }

    ModeLabel label() const { return label_; }
    double omega() const { return omega_; }
    double n_eff() const { return neff_; }
    double beta() const { return omega_ * neff_ / kSpeedOfLight; }
    double radius() const { return radius_; }
    double core_index() const { return n_core_; }
    double cladding_index() const { return n_clad_; }
    double u() const { return u_; }
    double w() const { return w_; }

    /// Normalized transverse profile at radius rho (m), units 1/m.
    double field(double rho) const { return scale_ * std::sqrt(raw_intensity(rho)); }

    /// Radial samples of the normalized profile on the normalization grid.
    const std::vector<double>& sample_radii() const { return rho_; }
    const std::vector<double>& sample_values() const { return radial_; }

private:
    double raw_intensity(double rho) const {
        const double r = rho / radius_;
        const bool core = r < 1.0;
        switch (label_.family) {
            case ModeFamily::TE:
            case ModeFamily::TM: {
                double e = core ? std::cyl_bessel_j(1.0, u_ * r) / std::cyl_bessel_j(1.0, u_)
                                : std::cyl_bessel_k(1.0, w_ * r) / std::cyl_bessel_k(1.0, w_);
                // TM: n^2 e_r is continuous across the boundary.
                if (label_.family == ModeFamily::TM && !core)
                    e *= (n_core_ * n_core_) / (n_clad_ * n_clad_);
                return e * e;
            }
            case ModeFamily::HE:
            case ModeFamily::EH: {
                const double nu = label_.azimuthal;
                double er, ephi;
                if (core) {
                    const double lo = std::cyl_bessel_j(nu - 1.0, u_ * r);
                    const double hi = std::cyl_bessel_j(nu + 1.0, u_ * r);
                    const double den = std::cyl_bessel_j(nu, u_);
                    er = (a1_ * lo + a2_ * hi) / den;
                    ephi = (a1_ * lo - a2_ * hi) / den;
                } else {
                    const double lo = std::cyl_bessel_k(nu - 1.0, w_ * r);
                    const double hi = std::cyl_bessel_k(nu + 1.0, w_ * r);
                    const double den = std::cyl_bessel_k(nu, w_) * w_ / u_;
                    er = (a1_ * lo - a2_ * hi) / den;
                    ephi = (a1_ * lo + a2_ * hi) / den;
                }
                // cos^2 and sin^2 average to 1/2 over the azimuth
                return 0.5 * (er * er + ephi * ephi);
            }
        }
        return 0.0;
    }

    ModeLabel label_;
    double omega_;
    double neff_;
    double radius_;
    double n_core_;
    double n_clad_;
    double u_ = 0.0;
    double w_ = 0.0;
    double a1_ = 0.0;
    double a2_ = 0.0;
    double scale_ = 1.0;
    std::vector<double> rho_;
    std::vector<double> radial_;
};

namespace detail {

/// Bisection on a sign-change bracket in u. Returns the final bracket.
inline std::pair<double, double> refine_root(const GuideParameters& g, ModeLabel label, double lo,
                                             double hi) {
    double flo = characteristic(g, label, lo).value;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fmid = characteristic(g, label, mid).value;
        if (fmid == 0.0) return {mid, mid};
        if ((fmid < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    return {lo, hi};
}

}  // namespace detail

/// Effective index of `label` at `omega`. Throws NoGuidedMode below cutoff and
/// ConvergenceError if the refined bracket does not shrink to 1e-10 in n_eff.
inline double solve_neff(const CrossSection& cs, double omega, ModeLabel label) {
    const GuideParameters g = guide_parameters(cs, omega);
    const bool transverse = label.family == ModeFamily::TE || label.family == ModeFamily::TM;
    if (transverse != (label.azimuthal == 0) || label.radial < 1)
        throw DomainError("inconsistent mode label " + to_string(label));

    // Bracket on a scan uniform in u over (0, V), which is an n_eff scan from
    // the core index down to the cladding index.
    const auto points = std::max<std::size_t>(512, static_cast<std::size_t>(std::ceil(8.0 * g.v / kPi)));
    std::vector<double> us;
    us.reserve(points + 1);
    us.push_back(g.v * 1e-6);
    for (std::size_t j = 1; j < points; ++j) us.push_back(g.v * static_cast<double>(j) / points);
    us.push_back(g.v * (1.0 - 1e-10));

    int found = 0;
    double prev = characteristic(g, label, us.front()).value;
    for (std::size_t j = 1; j < us.size(); ++j) {
        const double cur = characteristic(g, label, us[j]).value;
        if (!std::isfinite(cur)) {
            prev = cur;
            continue;
        }
        if (std::isfinite(prev) && (cur < 0.0) != (prev < 0.0)) {
            if (++found == label.radial) {
                const auto [lo, hi] = detail::refine_root(g, label, us[j - 1], us[j]);
                const double u = 0.5 * (lo + hi);
                const double neff = neff_from_u(g, u);
                const double spread = std::abs(neff_from_u(g, lo) - neff_from_u(g, hi));
                const auto res = characteristic(g, label, u);
                if (!(spread <= 1e-10) || !(std::abs(res.value) <= 1e-8 * std::max(res.scale, 1e-300)))
                    throw ConvergenceError("root refinement for " + to_string(label) + " did not converge");
                return neff;
            }
        }
        prev = cur;
    }
    std::ostringstream os;
    os << "no guided mode " << to_string(label) << " at " << g.wavelength * 1e9 << " nm for diameter "
       << cs.diameter() * 1e9 << " nm (V = " << g.v << ")";
    throw NoGuidedMode(os.str());
}

inline ModeSolution mode_at(const CrossSection& cs, double omega, ModeLabel label, double neff,
                            const RadialQuadrature* quadrature = nullptr) {
    return ModeSolution(label, omega, guide_parameters(cs, omega), neff, quadrature);
}

inline ModeSolution solve_mode(const CrossSection& cs, double omega, ModeLabel label = kHE11) {
    return mode_at(cs, omega, label, solve_neff(cs, omega, label));
}

/// d n_eff / d omega at a solved root, by implicit differentiation of the
/// characteristic function F(n_eff, omega) = 0.
inline double neff_slope(const CrossSection& cs, double omega, ModeLabel label, double neff) {
    auto f = [&](double n, double om) {
        const GuideParameters g = guide_parameters(cs, om);
        return characteristic(g, label, u_from_neff(g, n)).value;
    };
    const GuideParameters g0 = guide_parameters(cs, omega);
    const double hn = 1e-4 * std::min(g0.n_core - neff, neff - g0.n_clad);
    const double hw = 1e-6 * omega;
    const double df_dn = (f(neff + hn, omega) - f(neff - hn, omega)) / (2.0 * hn);
    const double df_dw = (f(neff, omega + hw) - f(neff, omega - hw)) / (2.0 * hw);
    return -df_dw / df_dn;
}

}  // namespace sfwm

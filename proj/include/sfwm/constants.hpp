#pragma once

#include <numbers>

namespace sfwm {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s, exact
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double omega_from_wavelength(double wavelength_m) {
    return kTwoPi * kSpeedOfLight / wavelength_m;
}

inline constexpr double wavelength_from_omega(double omega) {
    return kTwoPi * kSpeedOfLight / omega;
}

}  // namespace sfwm

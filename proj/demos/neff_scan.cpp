// Prints the HE11 effective index of a fused-silica nanofiber in air for a
// few waist diameters at the pump, signal and idler wavelengths.
#include <cstdio>

#include "sfwm/sfwm.hpp"

int main() {
    using namespace sfwm;
    const double wavelengths_nm[] = {1062.0, 856.4, 1398.0};
    std::printf("%10s", "d [nm]");
    for (double w : wavelengths_nm) std::printf("  n_eff(%6.1f)", w);
    std::printf("\n");
    for (double d = 700.0; d <= 1100.0; d += 50.0) {
        const CrossSection cs(d * 1e-9, fused_silica());
        std::printf("%10.0f", d);
        for (double w : wavelengths_nm) {
            try {
                std::printf("  %13.6f", solve_neff(cs, omega_from_wavelength(w * 1e-9), kHE11));
            } catch (const NoGuidedMode&) {
                std::printf("  %13s", "-");
            }
        }
        std::printf("\n");
    }
}

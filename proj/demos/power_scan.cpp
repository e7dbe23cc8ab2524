// Fits D + b P + a P^2 to a power-scan CSV (power_mW,rate_Hz) and prints how
// the count rate splits into dark, linear (Raman) and quadratic (SFWM) parts.
#include <cmath>
#include <cstdio>
#include <exception>

#include "sfwm/sfwm.hpp"

int main(int argc, char** argv) {
    using namespace sfwm;
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s scan.csv\n", argv[0]);
        return 2;
    }
    try {
        const auto points = load_power_scan(argv[1]);
        const auto fit = fit_power_scan(points);
        std::printf("D = %.1f +- %.1f Hz\n", fit.dark, std::sqrt(fit.covariance(0, 0)));
        std::printf("b = %.2f +- %.2f Hz/mW\n", fit.linear * 1e-3, std::sqrt(fit.covariance(1, 1)) * 1e-3);
        std::printf("a = %.3f +- %.3f Hz/mW^2\n", fit.quadratic * 1e-6, std::sqrt(fit.covariance(2, 2)) * 1e-6);
        std::printf("\n%10s %12s %12s %8s %8s %8s\n", "P [mW]", "measured", "model", "dark", "raman", "sfwm");
        for (const auto& p : points) {
            const double total = fit.total(p.power);
            std::printf("%10.2f %12.1f %12.1f %7.1f%% %7.1f%% %7.1f%%\n", p.power * 1e3, p.rate, total,
                        100.0 * fit.dark / total, 100.0 * fit.raman(p.power) / total,
                        100.0 * fit.sfwm(p.power) / total);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    }
}

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "sfwm/constants.hpp"

namespace sfwm {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussLegendre(std::size_t order) : nodes(order), weights(order) {
        const std::size_t half = (order + 1) / 2;
        for (std::size_t i = 0; i < half; ++i) {
            double x = std::cos(kPi * (static_cast<double>(i) + 0.75) /
                                (static_cast<double>(order) + 0.5));
            double dp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p0 = 1.0;
                double p1 = x;
                for (std::size_t k = 2; k <= order; ++k) {
                    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = pk;
                }
                dp = order * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            const double w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
    }
};

/// Quadrature for integrals of the form 2*pi * int f(rho) rho drho over the
/// plane, for fields that are smooth inside a core of radius `radius` and
/// decay like exp(-decay * rho / radius) outside it. Weights already include
/// the 2*pi*rho area element.
struct RadialQuadrature {
    std::vector<double> rho;
    std::vector<double> weight;

    RadialQuadrature() = default;

    RadialQuadrature(double radius, double decay, std::size_t core_order = 24,
                     std::size_t panel_order = 10, double decay_lengths = 21.0) {
        const GaussLegendre core(core_order);
        for (std::size_t i = 0; i < core_order; ++i) {
            const double r = 0.5 * radius * (core.nodes[i] + 1.0);
            rho.push_back(r);
            weight.push_back(0.5 * radius * core.weights[i] * kTwoPi * r);
        }
        // Cladding: panels 1.5 decay lengths wide, out to `decay_lengths`
        // lengths where the intensity is below exp(-2 * decay_lengths).
        const GaussLegendre panel(panel_order);
        const double width = 1.5 * radius / decay;
        const auto panels = static_cast<std::size_t>(std::ceil(decay_lengths / 1.5));
        for (std::size_t p = 0; p < panels; ++p) {
            const double lo = radius + static_cast<double>(p) * width;
            for (std::size_t i = 0; i < panel_order; ++i) {
                const double r = lo + 0.5 * width * (panel.nodes[i] + 1.0);
                rho.push_back(r);
                weight.push_back(0.5 * width * panel.weights[i] * kTwoPi * r);
            }
        }
    }

    std::size_t size() const { return rho.size(); }
};

}  // namespace sfwm

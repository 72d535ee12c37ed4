#pragma once

#include <cmath>

#include "orbindex/util.hpp"

namespace orbindex {

// Eigenfunction-expansion reference solutions on the exactly solvable spaces.
// These follow a completely different evaluation path from the parametrix
// kernels (dual lattice / spherical harmonics instead of geodesic images).

// Round sphere of radius r, heat convention dp/dt = (1/2) Lap p:
//   p(t, d) = sum_l (2l+1) exp(-l(l+1) t / (2 r^2)) P_l(cos(d/r)) / (4 pi r^2)
inline double sphere_spectral_density(double r, double t, double d) {
    double tp = t / (r * r);
    double x = std::cos(d / r);
    double total = 0.0;
    for (int l = 0;; ++l) {
        double amp = (2.0 * l + 1.0) * std::exp(-0.5 * l * (l + 1.0) * tp);
        if (amp < 1e-18 && l > 2) break;
        total += amp * std::legendre(l, x);
        if (l > 4000) break;
    }
    return total / (4.0 * pi * r * r);
}

// The alternating sum loses all significance once the target value drops far
// below the partial sums; comparisons must skip such cells.
inline bool sphere_spectral_valid(double r, double t, double d) {
    return std::exp(-d * d / (2.0 * t)) >= 1e-9 * r * r;
}

// Flat torus via the dual lattice (Poisson dual of the image sum):
//   p(t, dx, dy) = (1/A) sum_k exp(-|k*|^2 t / 2) cos(k* . delta)
inline double torus_spectral_density(double l1, double l2, double t, double dx, double dy) {
    double total = 0.0;
    int n1 = static_cast<int>(std::ceil(l1 / (2.0 * pi) * std::sqrt(2.0 * 41.0 / t))) + 1;
    int n2 = static_cast<int>(std::ceil(l2 / (2.0 * pi) * std::sqrt(2.0 * 41.0 / t))) + 1;
    for (int a = -n1; a <= n1; ++a)
        for (int b = -n2; b <= n2; ++b) {
            double k1 = 2.0 * pi * a / l1, k2 = 2.0 * pi * b / l2;
            total += std::exp(-0.5 * t * (k1 * k1 + k2 * k2)) * std::cos(k1 * dx + k2 * dy);
        }
    return total / (l1 * l2);
}

} // namespace orbindex

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace orbindex {

inline constexpr double pi = 3.14159265358979323846;

// Deterministic shortest-faithful double formatting; used for every number
// that ends up in a report so output bytes depend only on the values.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    for (int prec = 1; prec <= 16; ++prec) {
        char cand[40];
        std::snprintf(cand, sizeof(cand), "%.*g", prec, v);
        if (std::strtod(cand, nullptr) == v) return cand;
    }
    return buf;
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// C^2 quintic step: 0 below a, 1 above b. Closed-form first two derivatives
// so parametrix defects stay evaluable through the cutoff region.
inline double smoothstep(double x, double a, double b) {
    if (x <= a) return 0.0;
    if (x >= b) return 1.0;
    double u = (x - a) / (b - a);
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

inline double smoothstep_d1(double x, double a, double b) {
    if (x <= a || x >= b) return 0.0;
    double w = b - a, u = (x - a) / w;
    return 30.0 * u * u * (1.0 + u * (-2.0 + u)) / w;
}

inline double smoothstep_d2(double x, double a, double b) {
    if (x <= a || x >= b) return 0.0;
    double w = b - a, u = (x - a) / w;
    return 60.0 * u * (1.0 + u * (-3.0 + 2.0 * u)) / (w * w);
}

} // namespace orbindex

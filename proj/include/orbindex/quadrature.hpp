#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "orbindex/util.hpp"

namespace orbindex {

struct Quad1d {
    std::vector<double> x, w;
};

// Gauss-Legendre nodes on [-1,1] by Newton iteration on P_n.
inline Quad1d gauss_legendre(int n) {
    Quad1d q;
    q.x.resize(n);
    q.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        q.x[i] = -z;
        q.x[n - 1 - i] = z;
        q.w[i] = q.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
    return q;
}

inline Quad1d gauss_legendre_ab(int n, double a, double b) {
    Quad1d q = gauss_legendre(n);
    for (int i = 0; i < n; ++i) {
        q.x[i] = 0.5 * (a + b) + 0.5 * (b - a) * q.x[i];
        q.w[i] *= 0.5 * (b - a);
    }
    return q;
}

// Nodes for int_0^t f(s) ds under s = t sin^2(psi); clusters toward both
// endpoints, which the sharp-product integrands need.
inline Quad1d time_quad(int n, double t) {
    Quad1d g = gauss_legendre_ab(n, 0.0, 0.5 * pi);
    Quad1d q;
    q.x.resize(n);
    q.w.resize(n);
    for (int i = 0; i < n; ++i) {
        double psi = g.x[i], s = std::sin(psi);
        q.x[i] = t * s * s;
        q.w[i] = g.w[i] * t * 2.0 * s * std::cos(psi);
    }
    return q;
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double fa, double fm, double fb, double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-12, int depth = 30) {
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth);
}

// Natural cubic spline on a strictly increasing grid.
class CubicSpline {
public:
    CubicSpline() = default;
    CubicSpline(std::vector<double> xs, std::vector<double> ys) : x_(std::move(xs)), y_(std::move(ys)) {
        int n = static_cast<int>(x_.size());
        require(n >= 3, "spline needs >= 3 nodes");
        m_.assign(n, 0.0);
        std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), d(n, 0.0);
        b[0] = 1.0;
        b[n - 1] = 1.0;
        for (int i = 1; i < n - 1; ++i) {
            double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
            a[i] = h0 / 6.0;
            b[i] = (h0 + h1) / 3.0;
            c[i] = h1 / 6.0;
            d[i] = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
        }
        for (int i = 1; i < n; ++i) {
            double f = a[i] / b[i - 1];
            b[i] -= f * c[i - 1];
            d[i] -= f * d[i - 1];
        }
        m_[n - 1] = d[n - 1] / b[n - 1];
        for (int i = n - 2; i >= 0; --i) m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
    }

    double operator()(double x) const { return eval(x, nullptr); }

    double eval(double x, double* deriv) const {
        int n = static_cast<int>(x_.size());
        int i = locate(x);
        double h = x_[i + 1] - x_[i];
        double A = (x_[i + 1] - x) / h, B = (x - x_[i]) / h;
        double v = A * y_[i] + B * y_[i + 1] +
                   ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
        if (deriv) {
            *deriv = (y_[i + 1] - y_[i]) / h +
                     (-(3.0 * A * A - 1.0) * m_[i] + (3.0 * B * B - 1.0) * m_[i + 1]) * h / 6.0;
        }
        return v;
    }

    double deriv2(double x) const {
        int i = locate(x);
        double h = x_[i + 1] - x_[i];
        double A = (x_[i + 1] - x) / h, B = (x - x_[i]) / h;
        return A * m_[i] + B * m_[i + 1];
    }

    double xmin() const { return x_.front(); }
    double xmax() const { return x_.back(); }
    bool empty() const { return x_.empty(); }

private:
    int locate(double x) const {
        int n = static_cast<int>(x_.size());
        if (x <= x_[0]) return 0;
        if (x >= x_[n - 1]) return n - 2;
        int lo = 0, hi = n - 1;
        while (hi - lo > 1) {
            int mid = (lo + hi) / 2;
            (x_[mid] <= x ? lo : hi) = mid;
        }
        return lo;
    }

    std::vector<double> x_, y_, m_;
};

} // namespace orbindex

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "orbindex/catalog.hpp"
#include "orbindex/geometry.hpp"
#include "orbindex/quadrature.hpp"

namespace orbindex {

// Scalar heat kernels for the model bases, convention dp/dt = (1/2) Lap p.
//
// Flat pieces are exact lattice image sums. Curved pieces run through the
// unit-sphere machinery: a second order radial parametrix H = G (u0 + t u1),
// its defect R = (d/dt - Lap/2) H, two rungs of the successive approximation
// p ~ H - H#R + (H#R)#R evaluated with Gamma-normalized quadratures (every
// exponential has a non-positive argument), and semigroup doubling past
// TMAX. Radii scale in: p_r(t,d) = r^-2 p_1(t/r^2, d/r).

namespace unitsphere {

inline constexpr double ETA_LO = 0.75 * pi;   // parametrix cutoff shoulder
inline constexpr double ETA_HI = 0.95 * pi;
inline constexpr double DMAX = 0.999 * pi;    // table edge, clamped beyond
inline constexpr double SERIES_D = 0.1;       // series/closed-form crossover

// radial coefficient bundle at geodesic distance d on the unit sphere
struct Radial {
    double u0, u0p, u0pp;
    double u1, u1p, u1pp;
    double cu0p, cu1p;   // cot(d) u0', cot(d) u1' (finite at d = 0)
    double dcm1;         // d cot(d) - 1
};

// I(d) = int_0^d g, g = Lap(u0)/u0; feeds u1 = u0 I / (2d)
inline const CubicSpline& transport_integral() {
    static const CubicSpline spl = [] {
        auto g_of = [](double d) {
            if (d < SERIES_D) {
                double d2 = d * d;
                return 1.0 / 3.0 + d2 / 60.0 + d2 * d2 / 378.0 + d2 * d2 * d2 / 2700.0;
            }
            double s = std::sin(d), c = std::cos(d);
            double cot = c / s, id = 1.0 / d;
            double w1 = 0.5 * (id - cot);
            double w1p = 0.5 * (1.0 / (s * s) - id * id);
            return w1p + w1 * w1 + cot * w1;
        };
        int n = 480;
        double lo = 0.04, hi = 0.97 * pi;
        std::vector<double> xs(n + 1), ys(n + 1);
        Quad1d gl = gauss_legendre(5);
        double acc = lo / 3.0 + std::pow(lo, 3) / 180.0 + std::pow(lo, 5) / 1890.0 +
                     std::pow(lo, 7) / 18900.0;
        xs[0] = lo;
        ys[0] = acc;
        for (int k = 0; k < n; ++k) {
            double a = lo + (hi - lo) * k / n, b = lo + (hi - lo) * (k + 1) / n;
            for (int j = 0; j < 5; ++j)
                acc += 0.5 * (b - a) * gl.w[j] * g_of(0.5 * (a + b) + 0.5 * (b - a) * gl.x[j]);
            xs[k + 1] = b;
            ys[k + 1] = acc;
        }
        return CubicSpline(xs, ys);
    }();
    return spl;
}

inline Radial radial(double d) {
    Radial r;
    if (d < SERIES_D) {
        double d2 = d * d, d4 = d2 * d2, d6 = d4 * d2;
        r.u0 = 1.0 + d2 / 12.0 + d4 / 160.0 + 61.0 * d6 / 120960.0 +
               1261.0 * d4 * d4 / 29030400.0;
        r.u0p = d / 6.0 + d * d2 / 40.0 + 61.0 * d * d4 / 20160.0 +
                1261.0 * d * d6 / 3628800.0;
        r.u0pp = 1.0 / 6.0 + 3.0 * d2 / 40.0 + 61.0 * d4 / 4032.0 + 1261.0 * d6 / 518400.0;
        r.u1 = 1.0 / 6.0 + d2 / 60.0 + 31.0 * d4 / 20160.0 + 17.0 * d6 / 113400.0;
        r.u1p = d / 30.0 + 31.0 * d * d2 / 5040.0 + 17.0 * d * d4 / 18900.0;
        r.u1pp = 1.0 / 30.0 + 31.0 * d2 / 1680.0 + 17.0 * d4 / 3780.0;
        r.cu0p = 1.0 / 6.0 - 11.0 * d2 / 360.0 - 109.0 * d4 / 12096.0 -
                 1139.0 * d6 / 725760.0;
        r.cu1p = 1.0 / 30.0 - 5.0 * d2 / 1008.0 - 143.0 * d4 / 75600.0 - 23.0 * d6 / 45360.0;
        r.dcm1 = -d2 / 3.0 - d4 / 45.0 - 2.0 * d6 / 945.0 - d4 * d4 / 4725.0;
        return r;
    }
    double s = std::sin(d), c = std::cos(d);
    double cot = c / s, csc2 = 1.0 + cot * cot, id = 1.0 / d;
    r.u0 = std::sqrt(d / s);
    double w1 = 0.5 * (id - cot);
    double w1p = 0.5 * (csc2 - id * id);
    double w1pp = id * id * id - csc2 * cot;
    r.u0p = r.u0 * w1;
    r.u0pp = r.u0 * (w1p + w1 * w1);
    double g = w1p + w1 * w1 + cot * w1;
    double gp = w1pp + 2.0 * w1 * w1p - csc2 * w1 + cot * w1p;
    double I = transport_integral()(d);
    r.u1 = r.u0 * I / (2.0 * d);
    r.u1p = r.u1 * (w1 - id) + r.u0 * g / (2.0 * d);
    r.u1pp = r.u1p * (w1 - id) + r.u1 * (w1p + id * id) +
             (r.u0 / (2.0 * d)) * (g * w1 + gp - g * id);
    r.cu0p = cot * r.u0p;
    r.cu1p = cot * r.u1p;
    r.dcm1 = d * cot - 1.0;
    return r;
}

inline double eta(double d) { return 1.0 - smoothstep(d, ETA_LO, ETA_HI); }
inline double eta_d1(double d) { return -smoothstep_d1(d, ETA_LO, ETA_HI); }
inline double eta_d2(double d) { return -smoothstep_d2(d, ETA_LO, ETA_HI); }

inline double gaussian(double t, double d) {
    return std::exp(-d * d / (2.0 * t)) / (2.0 * pi * t);
}

// U = (u0 + t u1) eta, the Gamma-normalized parametrix profile
inline double u_factor(double t, double d) {
    if (d >= ETA_HI) return 0.0;
    Radial r = radial(d);
    return (r.u0 + t * r.u1) * eta(d);
}

// Psi = (d/dt - Lap_d/2) H / G. The 1/t block proportional to u0 cancels
// identically through d u0' = -u0 (d cot d - 1)/2 and is dropped up front;
// what remains of it rides on eta' alone.
inline double psi(double t, double d) {
    if (d >= ETA_HI) return 0.0;
    Radial r = radial(d);
    double e = eta(d);
    double val = e * (r.u1 - 0.5 * (r.u0pp + t * r.u1pp + r.cu0p + t * r.cu1p) +
                      d * r.u1p + 0.5 * r.u1 * r.dcm1);
    double e1 = eta_d1(d);
    if (e1 != 0.0) {
        double e2 = eta_d2(d);
        double cot = std::cos(d) / std::sin(d);   // shoulder only, d ~ 2.4..3
        double U0 = r.u0 + t * r.u1;
        double U0p = r.u0p + t * r.u1p;
        val += -0.5 * (2.0 * U0p * e1 + U0 * e2 + cot * U0 * e1) +
               d * r.u0 * e1 / t + d * r.u1 * e1;
    }
    return val;
}

inline double parametrix(double t, double d) { return gaussian(t, d) * u_factor(t, d); }
inline double defect(double t, double d) { return gaussian(t, d) * psi(t, d); }

} // namespace unitsphere

// --- Gamma-normalized sharp product against the defect kernel ----------------

struct SharpGrid {
    int nt = 12;    // time nodes per half interval
    int nr = 24;    // radial nodes
    int nphi = 24;  // angular trapezoid panels on the half period
};

// (L # R)(s, d0) / G(s, d0) on the unit sphere, with R = G Psi the parametrix
// defect and L supplied normalized, Lnorm(tau, th) = L(tau, th)/G(tau, th).
// Each time half integrates in polar coordinates about the sharp peak; the
// combined Gaussian exponent is non-positive by the triangle inequality.
inline double sharp_normalized(const std::function<double(double, double)>& Lnorm,
                               double s, double d0, const SharpGrid& grid = {}) {
    double cd0 = std::cos(d0), sd0 = std::sin(d0);
    Quad1d tq = time_quad(grid.nt, 0.5 * s);
    int m = grid.nphi;
    std::vector<double> cphi(m + 1), wphi(m + 1);
    for (int j = 0; j <= m; ++j) {
        cphi[j] = std::cos(pi * j / m);
        wphi[j] = (j == 0 || j == m) ? pi / m : 2.0 * pi / m;   // doubled: even in phi
    }
    double acc = 0.0;
    for (int it = 0; it < grid.nt; ++it) {
        double sg = tq.x[it], wt = tq.w[it];
        double width = std::sqrt(2.0 * sg);
        double ximax = std::min(6.0, pi / width);
        Quad1d rq = gauss_legendre_ab(grid.nr, 0.0, ximax);
        double pref = wt * s / (2.0 * pi * sg * (s - sg));
        for (int ir = 0; ir < grid.nr; ++ir) {
            double th = width * rq.x[ir];
            double wr = pref * rq.w[ir] * width * std::sin(th);
            double base = d0 * d0 / (2.0 * s);
            // peak on the defect side, polar about y
            double ps = unitsphere::psi(sg, th);
            if (ps != 0.0) {
                double ct = std::cos(th), st = std::sin(th);
                double wA = wr * ps;
                for (int j = 0; j <= m; ++j) {
                    double c1 = std::clamp(cd0 * ct + sd0 * st * cphi[j], -1.0, 1.0);
                    double th1 = std::acos(c1);
                    double E = std::min(0.0, base - th1 * th1 / (2.0 * (s - sg)) -
                                                 th * th / (2.0 * sg));
                    acc += wA * wphi[j] * std::exp(E) * Lnorm(s - sg, th1);
                }
            }
            // peak on the L side, polar about x (the sigma -> s - sigma half)
            double lv = Lnorm(sg, th);
            if (lv != 0.0) {
                double ct = std::cos(th), st = std::sin(th);
                double wB = wr * lv;
                for (int j = 0; j <= m; ++j) {
                    double c2 = std::clamp(cd0 * ct + sd0 * st * cphi[j], -1.0, 1.0);
                    double th2 = std::acos(c2);
                    double E = std::min(0.0, base - th * th / (2.0 * sg) -
                                                 th2 * th2 / (2.0 * (s - sg)));
                    acc += wB * wphi[j] * std::exp(E) * unitsphere::psi(s - sg, th2);
                }
            }
        }
    }
    return acc;
}

// --- unit sphere kernel tables ------------------------------------------------

// Normalized profiles P(t', .) = p/G on the unit sphere, built once per time
// and cached. Direct construction P = U - sharp(U) + sharp(sharp(U)) holds to
// TMAX; larger times double recursively through the semigroup identity. All
// building happens under the lock; prepare the needed times before fanning
// out worker threads.
class UnitSphereHeat {
public:
    static UnitSphereHeat& instance() {
        static UnitSphereHeat u;
        return u;
    }

    // largest time built by the parametrix directly; wider times come from
    // semigroup doubling, which also heals the Born truncation near the cut locus
    static constexpr double TMAX = 0.2;

    const CubicSpline& ln_profile(double tp) {
        require(tp > 0.0, "heat profile needs t > 0");
        std::lock_guard<std::recursive_mutex> lk(mu_);
        long long key = llround_key(tp);
        auto it = prof_.find(key);
        if (it != prof_.end()) return it->second;
        CubicSpline spl = (tp <= TMAX * (1.0 + 1e-12)) ? build_direct(tp) : build_doubled(tp);
        return prof_.emplace(key, std::move(spl)).first->second;
    }

    double density(double tp, double dp) {
        const CubicSpline& spl = ln_profile(tp);
        return unitsphere::gaussian(tp, dp) * std::exp(spl(std::min(dp, unitsphere::DMAX)));
    }

    // d/d(dp) of ln p; the Gaussian part -dp/tp is analytic
    double dlog_radial(double tp, double dp) {
        const CubicSpline& spl = ln_profile(tp);
        double der = 0.0;
        spl.eval(std::min(dp, unitsphere::DMAX), &der);
        return der - dp / tp;
    }

    // first correction profile, interpolated from the (s, d) table
    double gamma1_tabled(double tau, double theta) {
        ensure_gamma();
        theta = std::min(theta, unitsphere::DMAX);
        if (tau <= 0.0) return 0.0;
        int ns = static_cast<int>(gs_.size());
        if (tau >= gs_.back()) return gspl_.back()(theta);
        int j = static_cast<int>(std::upper_bound(gs_.begin(), gs_.end(), tau) - gs_.begin()) - 1;
        int lo = std::clamp(j - 1, 0, ns - 4);
        double v = 0.0;
        for (int a = lo; a < lo + 4; ++a) {
            double l = 1.0;
            for (int b = lo; b < lo + 4; ++b)
                if (b != a) l *= (tau - gs_[b]) / (gs_[a] - gs_[b]);
            v += l * gspl_[a](theta);
        }
        return v;
    }

    void ensure_gamma() {
        std::lock_guard<std::recursive_mutex> lk(mu_);
        if (!gspl_.empty()) return;
        auto U = [](double tau, double th) { return unitsphere::u_factor(tau, th); };
        std::vector<double> dn = dgrid(GAMMA_ND);
        gs_.push_back(0.0);
        gspl_.push_back(even_spline(dn, std::vector<double>(dn.size(), 0.0)));
        for (int k = 1; k <= GAMMA_NS; ++k) {
            double sv = TMAX * k / GAMMA_NS;
            std::vector<double> vals(dn.size());
            for (size_t i = 0; i < dn.size(); ++i)
                vals[i] = -sharp_normalized(U, sv, dn[i]);
            gs_.push_back(sv);
            gspl_.push_back(even_spline(dn, vals));
        }
    }

    // mirrored through zero so the even symmetry of the kernel survives the fit
    static CubicSpline even_spline(const std::vector<double>& xs, const std::vector<double>& ys) {
        size_t n = xs.size();
        std::vector<double> X, Y;
        X.reserve(2 * n - 1);
        Y.reserve(2 * n - 1);
        for (size_t i = n - 1; i >= 1; --i) {
            X.push_back(-xs[i]);
            Y.push_back(ys[i]);
        }
        for (size_t i = 0; i < n; ++i) {
            X.push_back(xs[i]);
            Y.push_back(ys[i]);
        }
        return CubicSpline(std::move(X), std::move(Y));
    }

private:
    UnitSphereHeat() = default;

    static constexpr int GAMMA_NS = 20;
    static constexpr int GAMMA_ND = 48;
    static constexpr int PROF_ND = 72;
    static constexpr double PFLOOR = 1e-14;

    static long long llround_key(double tp) { return std::llround(tp * 1e12); }

    static std::vector<double> dgrid(int n) {
        std::vector<double> d(n);
        for (int i = 0; i < n; ++i) d[i] = unitsphere::DMAX * i / (n - 1);
        return d;
    }

    CubicSpline build_direct(double tp) {
        ensure_gamma();
        auto U = [](double tau, double th) { return unitsphere::u_factor(tau, th); };
        auto G1 = [this](double tau, double th) { return gamma1_tabled(tau, th); };
        SharpGrid fine{};
        SharpGrid coarse{10, 18, 16};   // second correction is already ~1e-3 relative
        std::vector<double> dn = dgrid(PROF_ND);
        std::vector<double> vals(dn.size());
        for (size_t i = 0; i < dn.size(); ++i) {
            double P = unitsphere::u_factor(tp, dn[i]);
            // corrections scale like tp^2 and tp^4; below these cuts they sit
            // under the spline noise floor
            if (tp >= 1e-4) P -= sharp_normalized(U, tp, dn[i], fine);
            if (tp >= 0.02) P -= sharp_normalized(G1, tp, dn[i], coarse);
            vals[i] = std::log(std::max(P, PFLOOR));
        }
        return even_spline(dn, vals);
    }

    // P(2a, d0) = int (1/pi a) exp(d0^2/4a - th1^2/2a - th2^2/2a) P(a,th1) P(a,th2) dz
    CubicSpline build_doubled(double tp) {
        double a = 0.5 * tp;
        const CubicSpline& half = ln_profile(a);
        int nu = 48, nv = 96;
        Quad1d uq = gauss_legendre_ab(nu, -1.0, 1.0);
        std::vector<double> dn = dgrid(PROF_ND);
        std::vector<double> vals(dn.size());
        for (size_t i = 0; i < dn.size(); ++i) {
            double d0 = dn[i], cd0 = std::cos(d0), sd0 = std::sin(d0);
            double base = d0 * d0 / (4.0 * a);
            double acc = 0.0;
            for (int iu = 0; iu < nu; ++iu) {
                double ct = uq.x[iu], st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
                double th2 = std::acos(ct);
                double p2 = std::exp(half(std::min(th2, unitsphere::DMAX)));
                double wrow = uq.w[iu] * p2 / (pi * a);
                for (int j = 0; j <= nv; ++j) {
                    double phi = pi * j / nv;
                    double wj = (j == 0 || j == nv) ? pi / nv : 2.0 * pi / nv;
                    double c1 = std::clamp(cd0 * ct + sd0 * st * std::cos(phi), -1.0, 1.0);
                    double th1 = std::acos(c1);
                    double E = std::min(0.0, base - (th1 * th1 + th2 * th2) / (2.0 * a));
                    acc += wrow * wj * std::exp(E) * std::exp(half(std::min(th1, unitsphere::DMAX)));
                }
            }
            vals[i] = std::log(std::max(acc, PFLOOR));
        }
        return even_spline(dn, vals);
    }

    std::recursive_mutex mu_;
    std::vector<double> gs_;
    std::vector<CubicSpline> gspl_;
    std::map<long long, CubicSpline> prof_;
};

// --- kernels on the model bases -----------------------------------------------

class HeatKernel {
public:
    virtual ~HeatKernel() = default;
    virtual double density(double t, const MPoint& x, const MPoint& y) const = 0;
    // gradient of ln p(t, ., y) at x in the columns of fx
    virtual Eigen::Vector2d log_gradient_x(double t, const MPoint& x, const Frame& fx,
                                           const MPoint& y) const = 0;
    // build every table a later threaded phase will read
    virtual void prepare(const std::vector<double>& times) const { (void)times; }
};

class TorusHeat : public HeatKernel {
public:
    explicit TorusHeat(std::shared_ptr<const FlatTorus> T) : T_(std::move(T)) {}

    double density(double t, const MPoint& x, const MPoint& y) const override {
        double rmax = T_->distance(x, y) + 8.6 * std::sqrt(t);
        double acc = 0.0;
        for (const auto& im : T_->images_near(y, x, rmax))
            acc += unitsphere::gaussian(t, (im - x).norm());
        return acc;
    }

    Eigen::Vector2d log_gradient_x(double t, const MPoint& x, const Frame& fx,
                                   const MPoint& y) const override {
        double rmax = T_->distance(x, y) + 8.6 * std::sqrt(t);
        double tot = 0.0;
        Eigen::Vector3d g3 = Eigen::Vector3d::Zero();
        for (const auto& im : T_->images_near(y, x, rmax)) {
            double w = unitsphere::gaussian(t, (im - x).norm());
            tot += w;
            g3 += w * (im - x) / t;
        }
        return Eigen::Vector2d(fx.col(0).dot(g3 / tot), fx.col(1).dot(g3 / tot));
    }

private:
    std::shared_ptr<const FlatTorus> T_;
};

class SphereHeat : public HeatKernel {
public:
    explicit SphereHeat(std::shared_ptr<const RoundSphere> S)
        : S_(std::move(S)), r_(S_->radius()), r2_(r_ * r_) {}

    double density(double t, const MPoint& x, const MPoint& y) const override {
        return UnitSphereHeat::instance().density(t / r2_, S_->distance(x, y) / r_) / r2_;
    }

    Eigen::Vector2d log_gradient_x(double t, const MPoint& x, const Frame& fx,
                                   const MPoint& y) const override {
        double d = S_->distance(x, y);
        if (d < 1e-12) return Eigen::Vector2d::Zero();
        double dl = UnitSphereHeat::instance().dlog_radial(t / r2_, d / r_) / r_;
        return (dl / d) * (-S_->log_map(x, fx, y));
    }

    void prepare(const std::vector<double>& times) const override {
        for (double t : times) UnitSphereHeat::instance().ln_profile(t / r2_);
    }

private:
    std::shared_ptr<const RoundSphere> S_;
    double r_, r2_;
};

// Exact image sum over the deck group; the base is the unit-sphere quotient.
class QuotientHeat : public HeatKernel {
public:
    explicit QuotientHeat(std::shared_ptr<const QuotientSphere> Q) : Q_(std::move(Q)) {
        require(std::abs(Q_->cover().radius() - 1.0) < 1e-12, "quotient tables assume unit cover");
    }

    double density(double t, const MPoint& x, const MPoint& y) const override {
        auto& uh = UnitSphereHeat::instance();
        double acc = 0.0;
        for (int j = 0; j < Q_->order(); ++j)
            acc += uh.density(t, Q_->cover().distance(x, Q_->rotate(y, j)));
        return acc;
    }

    Eigen::Vector2d log_gradient_x(double t, const MPoint& x, const Frame& fx,
                                   const MPoint& y) const override {
        auto& uh = UnitSphereHeat::instance();
        double tot = 0.0;
        Eigen::Vector2d g = Eigen::Vector2d::Zero();
        for (int j = 0; j < Q_->order(); ++j) {
            MPoint yj = Q_->rotate(y, j);
            double d = Q_->cover().distance(x, yj);
            double w = uh.density(t, d);
            tot += w;
            if (d > 1e-12) g += w * (uh.dlog_radial(t, d) / d) * (-Q_->cover().log_map(x, fx, yj));
        }
        return g / tot;
    }

    void prepare(const std::vector<double>& times) const override {
        for (double t : times) UnitSphereHeat::instance().ln_profile(t);
    }

private:
    std::shared_ptr<const QuotientSphere> Q_;
};

// Depth-0 patched parametrix assembled from the space's charts: each chart
// contributes its lift Gaussians with the chart's radial profile, weighted by
// the partition at y. Pairs beyond the working radius read exactly zero, so
// the far field is truncated at relative e^{-32}; shooting charts carry only
// their transverse Jacobian (no u1), good to O(t) there.
class PatchedHeat : public HeatKernel {
public:
    explicit PatchedHeat(const SOneSpace& sp) : sp_(sp) {}

    double density(double t, const MPoint& x, const MPoint& y) const override {
        double rmax = 8.0 * std::sqrt(t);
        std::vector<double> w = sp_.partition(y);
        double acc = 0.0;
        for (size_t a = 0; a < sp_.charts.size(); ++a) {
            if (w[a] == 0.0) continue;
            const OrbifoldChart& ch = sp_.charts[a];
            for (const LiftTerm& lt : ch.lift_terms(x, y, rmax))
                acc += w[a] * term_density(ch, t, lt);
        }
        return acc;
    }

    Eigen::Vector2d log_gradient_x(double t, const MPoint& x, const Frame& fx,
                                   const MPoint& y) const override {
        double h = 1e-4;
        Eigen::Vector2d g;
        for (int i = 0; i < 2; ++i) {
            Eigen::Vector2d dv = Eigen::Vector2d::Zero();
            dv(i) = h;
            double fp = density(t, sp_.base->exp_step(x, fx, dv, nullptr), y);
            double fm = density(t, sp_.base->exp_step(x, fx, -dv, nullptr), y);
            require(fp > 0.0 && fm > 0.0, "log gradient outside the kernel support");
            g(i) = (std::log(fp) - std::log(fm)) / (2.0 * h);
        }
        return g;
    }

private:
    double term_density(const OrbifoldChart& ch, double t, const LiftTerm& lt) const {
        if (ch.profile == "flat") return unitsphere::gaussian(t, lt.d);
        if (ch.profile == "shoot") return unitsphere::gaussian(t, lt.d) * lt.u0;
        double R2 = ch.profile_radius * ch.profile_radius;
        return unitsphere::gaussian(t, lt.d) *
               unitsphere::u_factor(t / R2, lt.d / ch.profile_radius);
    }

    SOneSpace sp_;
};

inline std::unique_ptr<HeatKernel> make_heat_kernel(const SOneSpace& sp) {
    if (auto T = std::dynamic_pointer_cast<const FlatTorus>(sp.base)) {
        return std::make_unique<TorusHeat>(T);
    }
    if (auto S = std::dynamic_pointer_cast<const RoundSphere>(sp.base)) {
        return std::make_unique<SphereHeat>(S);
    }
    if (auto Q = std::dynamic_pointer_cast<const QuotientSphere>(sp.base)) {
        return std::make_unique<QuotientHeat>(Q);
    }
    return std::make_unique<PatchedHeat>(sp);
}

} // namespace orbindex

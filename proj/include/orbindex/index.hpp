#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "orbindex/catalog.hpp"
#include "orbindex/clifford.hpp"
#include "orbindex/heatkernel.hpp"
#include "orbindex/stochastic.hpp"

namespace orbindex {

// --- Fourier machinery --------------------------------------------------------

// Section of the pulled-back bundle in the trivialized picture: a base point
// and a fiber angle. The circle action translates the angle.
using FiberSection = std::function<Eigen::VectorXcd(const MPoint&, double)>;

// P_m picks the component transforming as e^{im zeta} along the orbits, by
// trapezoidal quadrature of (1/2pi) int (e^{-i zeta'})* f e^{im zeta'} dzeta'.
// On the circle the trapezoid rule is exact for fiber dependence band-limited
// below K/2, so the projector is exactly idempotent there and kills the pure
// modes e^{in zeta} for n != m, |n| <= K/2 - 1.
struct FourierProjector {
    int K = 32;
    // the action on the trivialized total space; rotating by dz carries
    // (x, zeta) to act(x, zeta, dz)
    std::function<std::pair<MPoint, double>(const MPoint&, double, double)> act =
        [](const MPoint& x, double zeta, double dz) { return std::make_pair(x, zeta + dz); };

    Eigen::VectorXcd component(const FiberSection& f, int m, const MPoint& x, double zeta) const {
        Eigen::VectorXcd acc;
        for (int j = 0; j < K; ++j) {
            double dz = 2.0 * pi * j / K;
            auto [xr, zr] = act(x, zeta, -dz);
            Eigen::VectorXcd v = f(xr, zr) * (std::exp(cplx(0.0, m * dz)) / double(K));
            acc = (j == 0) ? v : (acc + v).eval();
        }
        return acc;
    }

    FiberSection project(FiberSection f, int m) const {
        return [P = *this, f = std::move(f), m](const MPoint& x, double zeta) {
            return P.component(f, m, x, zeta);
        };
    }
};

inline FiberSection fourier_project(FiberSection f, int m, int K = 32) {
    require(K >= 4 * (std::abs(m) + 1), "fourier_project needs K >= 4(|m|+1)");
    FourierProjector P;
    P.K = K;
    return P.project(std::move(f), m);
}

// The m-th Fourier sector seen from the base. Its sections ride the
// connection omega0 = dzeta + a, so the sector couples like an extra line
// twist: the potential shifts by m a and the curvature by i m d(omega0).
// Empty unless p | m; for m = 0 this is the input twist.
inline TwistBundle fourier_twist(const SOneSpace& sp, const TwistBundle& tw, int m) {
    require(m % sp.p == 0, "empty Fourier sector: p does not divide m");
    if (m == 0) return tw;
    TwistBundle out = tw;
    out.chern = tw.chern - m / (2.0 * pi) * sp.domega0_factor * sp.base->area();
    out.curv12 = [f = tw.curv12, s = m * sp.domega0_factor](const MPoint& x) {
        return f(x) + cplx(0.0, s);
    };
    out.potential_im = [f = tw.potential_im, a = sp.omega0_potential, m](const MPoint& x) {
        return Eigen::Vector2d(f(x) + double(m) * a(x));
    };
    out.needs_anchor_alignment = tw.needs_anchor_alignment || sp.domega0_factor != 0.0;
    return out;
}

// --- geometric side -------------------------------------------------------------

// (p/2pi) int_X Ahat(H) ^ ch xi ^ omega0. The orbit integral of omega0 gives
// the fiber length 2pi/p, the rest is the degree-2 part over the base.
inline double geometric_index(const SOneSpace& sp, const TwistBundle& tw, int quad_level = 16) {
    auto [ahat, ch] = chern_weil_forms(sp, tw);
    double base = 0;
    for (const auto& nd : sp.base->quadrature(quad_level))
        base += nd.w * (ahat.deg0 * ch.deg2(nd.x) + ahat.deg2(nd.x) * ch.deg0);
    return sp.p / (2.0 * pi) * sp.fiber_length() * base;
}

// (1/2pi) p delta_{p|m} int_X Ahat(H) ^ ch xi ^ e^{-m d(omega0)/2pi} ^ omega0.
// Vanishes outright when p does not divide m; m = 0 is the geometric index.
inline double index_density_m(const SOneSpace& sp, const TwistBundle& tw, int m,
                              int quad_level = 16) {
    if (m % sp.p != 0) return 0.0;
    auto [ahat, ch] = chern_weil_forms(sp, tw);
    const double e2 = -(m / (2.0 * pi)) * sp.domega0_factor;  // degree-2 of the exponential
    double base = 0;
    for (const auto& nd : sp.base->quadrature(quad_level))
        base += nd.w * (ahat.deg0 * ch.deg2(nd.x) + ahat.deg2(nd.x) * ch.deg0 +
                        ahat.deg0 * ch.deg0 * e2);
    return sp.p / (2.0 * pi) * sp.fiber_length() * base;
}

// --- analytic side --------------------------------------------------------------

namespace indexdetail {

// bridge drift times for duration t at step h, plus t itself for the diagonal;
// prepare is cached by the kernels, so repeated calls cost nothing
inline void prepare_bridge(const HeatKernel& ker, double t, double h) {
    const long K = std::max<long>(2, std::lround(t / h));
    std::vector<double> times{t};
    for (long k = 0; k + 1 < K; ++k) times.push_back(t - (t / K) * k);
    ker.prepare(times);
}

}  // namespace indexdetail

struct DensityEstimate {
    double value = 0;
    double se = 0;
    long paths = 0;
    long invalid = 0;
};

// Raw path-value moments of the supertrace functional at x, without the
// kernel factor. Chunks of a larger batch are obtained through first_path, so
// a work partition reproduces the serial draw for every path index.
struct PathMoments {
    double sum = 0;
    double sumsq = 0;
    long used = 0;
    long invalid = 0;
};

inline PathMoments supertrace_moments(const SOneSpace& sp, const HeatKernel& ker,
                                      const SpinRep& rep, const TwistBundle& tw, double t,
                                      const MPoint& x, long n_paths, const RandomSource& src,
                                      double h, std::uint64_t first_path = 0,
                                      double drift_sign = 1.0) {
    require(n_paths > 0 && h > 0, "supertrace_moments needs paths and a step");
    const Surface& M = *sp.base;
    indexdetail::prepare_bridge(ker, t, h);
    PathMoments out;
    for (long i = 0; i < n_paths; ++i) {
        auto g = src.engine_for_path(first_path + static_cast<std::uint64_t>(i));
        auto path = sample_bridge(M, ker, x, x, t, h, g, drift_sign);
        if (tw.needs_anchor_alignment) align_to_anchor(M, path, tw.gauge_anchor);
        auto ts = evolve_transport(M, path, rep, tw);
        if (!ts.valid) {
            ++out.invalid;
            continue;
        }
        double v = (ts.R * supertrace(rep, CMat(ts.M * ts.tau))).real();
        out.sum += v;
        out.sumsq += v * v;
        ++out.used;
    }
    return out;
}

inline DensityEstimate moments_to_density(const PathMoments& pm, double pxx) {
    DensityEstimate out;
    out.paths = pm.used;
    out.invalid = pm.invalid;
    const double mean = pm.sum / pm.used;
    const double var =
        std::max(0.0, pm.sumsq / pm.used - mean * mean) / std::max<long>(1, pm.used - 1);
    out.value = mean * pxx;
    out.se = std::sqrt(var) * pxx;
    return out;
}

// I(t,x) = Re E_{x,x;t}[R str(M tau)] p_M(t,x,x). Gauges with a singular
// locus (the sphere potentials) are sampled at their regular anchor instead;
// the round bases carry an isometry through every point, so the aligned
// estimate is the estimate at x. More than 1% invalid paths rejects the run.
inline DensityEstimate supertrace_density(const SOneSpace& sp, const HeatKernel& ker,
                                          const SpinRep& rep, const TwistBundle& tw, double t,
                                          const MPoint& x, long n_paths, const RandomSource& src,
                                          double h = 0, std::uint64_t first_path = 0,
                                          double drift_sign = 1.0) {
    require(n_paths > 0, "supertrace_density needs paths");
    if (h <= 0) h = t / 200;
    PathMoments pm = supertrace_moments(sp, ker, rep, tw, t, x, n_paths, src, h, first_path,
                                        drift_sign);
    if (pm.invalid * 100 > n_paths)
        throw std::runtime_error("supertrace_density: more than 1% of bridge paths invalid");
    return moments_to_density(pm, ker.density(t, x, x));
}

struct NodeDensity {
    MPoint x;
    double w = 0;
    double value = 0;
    double se = 0;
};

struct IndexEstimate {
    double value = 0;
    double se = 0;
    long paths = 0;
    double t = 0;
    std::vector<NodeDensity> density;
    int relocated = 0;  // nodes nudged off an isotropy locus
};

// Quadrature nodes with singular-stratum nodes nudged onto the principal
// stratum; the integral only sees the principal part, so a small relocation
// changes nothing at the quadrature's own accuracy.
struct QuadPlan {
    std::vector<QuadNode> nodes;
    int relocated = 0;
};

inline QuadPlan principal_nodes(const SOneSpace& sp, int quad_level) {
    QuadPlan plan;
    for (const auto& nd : sp.base->quadrature(quad_level)) {
        MPoint x = nd.x;
        for (int tries = 0; sp.isotropy_order(x) > sp.p && tries < 8; ++tries) {
            Frame f = sp.base->reference_frame(x);
            x = sp.base->exp_step(x, f, Eigen::Vector2d(1e-3 * sp.base->diameter(), 0), nullptr);
            sp.base->fold(x);
            if (tries == 0) ++plan.relocated;
        }
        plan.nodes.push_back({x, nd.w});
    }
    return plan;
}

// McKean-Singer: the index is the base integral of I(t, .) at any t > 0.
// Node j draws the path indices [j N, (j+1) N), so estimates are independent
// across nodes and reproducible for any work partition.
inline IndexEstimate mckean_singer_index(const SOneSpace& sp, const HeatKernel& ker,
                                         const SpinRep& rep, const TwistBundle& tw, double t,
                                         int quad_level, long n_per_node, const RandomSource& src,
                                         double h = 0) {
    require(sp.spin_ok, "no spin structure on this space");
    QuadPlan plan = principal_nodes(sp, quad_level);
    IndexEstimate est;
    est.t = t;
    est.relocated = plan.relocated;
    double var = 0;
    std::uint64_t next = 0;
    for (const auto& nd : plan.nodes) {
        auto d = supertrace_density(sp, ker, rep, tw, t, nd.x, n_per_node, src, h, next);
        next += static_cast<std::uint64_t>(n_per_node);
        est.value += nd.w * d.value;
        var += nd.w * nd.w * d.se * d.se;
        est.paths += d.paths;
        est.density.push_back({nd.x, nd.w, d.value, d.se});
    }
    est.se = std::sqrt(var);
    return est;
}

// --- self-adjointness check -----------------------------------------------------

struct SymmetryReport {
    int pairs = 0;
    double worst = 0;    // largest entry of |K(x,y) - K(y,x)^dagger| over pairs
    double worst_z = 0;  // the same in pooled standard-error units
    double invalid_fraction = 0;
    bool rejected = false;  // too many invalid paths to trust the estimate
    bool ok = false;        // not rejected and worst_z < 3
};

// Estimates the kernel matrix K(x,y) = p(t,x,y) E_{x,y;t}[R M tau] on each
// pair in both directions and compares K(x,y) against K(y,x)^dagger entry by
// entry. The two directions draw disjoint path indices. A negated drift is
// the designated fault injection: it breaks the endpoint contract, floods the
// batch with invalid paths, and the report comes back rejected.
inline SymmetryReport kernel_symmetry_check(const SOneSpace& sp, const HeatKernel& ker,
                                            const SpinRep& rep, const TwistBundle& tw, double t,
                                            const std::vector<std::pair<MPoint, MPoint>>& pairs,
                                            long n_paths, const RandomSource& src, double h = 0,
                                            double drift_sign = 1.0) {
    require(n_paths > 1, "kernel_symmetry_check needs paths");
    const Surface& M = *sp.base;
    if (h <= 0) h = t / 200;
    indexdetail::prepare_bridge(ker, t, h);
    SymmetryReport out;
    out.pairs = static_cast<int>(pairs.size());

    struct Batch {
        CMat mean;
        Eigen::MatrixXd se2;  // entrywise squared standard error
        long used = 0;
    };
    std::uint64_t next = 0;
    long bad = 0, total = 0;
    auto batch = [&](const MPoint& from, const MPoint& to) {
        CMat acc = CMat::Zero(rep.dim, rep.dim);
        Eigen::MatrixXd acc2 = Eigen::MatrixXd::Zero(rep.dim, rep.dim);
        Batch b;
        for (long i = 0; i < n_paths; ++i) {
            auto g = src.engine_for_path(next + static_cast<std::uint64_t>(i));
            auto path = sample_bridge(M, ker, from, to, t, h, g, drift_sign);
            auto ts = evolve_transport(M, path, rep, tw);
            ++total;
            if (!ts.valid) {
                ++bad;
                continue;
            }
            CMat v = ts.R * CMat(ts.M * ts.tau);
            acc += v;
            acc2 += v.cwiseAbs2();
            ++b.used;
        }
        next += static_cast<std::uint64_t>(n_paths);
        if (b.used < 2) return b;
        const double pk = ker.density(t, from, to);
        b.mean = (acc / double(b.used)) * pk;
        Eigen::MatrixXd var =
            (acc2 / double(b.used) - (acc / double(b.used)).cwiseAbs2()).cwiseMax(0.0);
        b.se2 = var / double(b.used - 1) * (pk * pk);
        return b;
    };

    for (const auto& [xa, xb] : pairs) {
        Batch fwd = batch(xa, xb);
        Batch rev = batch(xb, xa);
        if (fwd.used < 2 || rev.used < 2) {
            out.rejected = true;
            continue;
        }
        for (int i = 0; i < rep.dim; ++i)
            for (int j = 0; j < rep.dim; ++j) {
                double d = std::abs(fwd.mean(i, j) - std::conj(rev.mean(j, i)));
                double se = std::sqrt(fwd.se2(i, j) + rev.se2(j, i));
                out.worst = std::max(out.worst, d);
                out.worst_z = std::max(out.worst_z, se > 0 ? d / se : (d > 0 ? 1e9 : 0.0));
            }
    }
    out.invalid_fraction = total ? double(bad) / double(total) : 1.0;
    if (bad * 100 > total) out.rejected = true;
    out.ok = !out.rejected && out.worst_z < 3.0;
    return out;
}

// --- two-sided report -----------------------------------------------------------

struct IndexReport {
    std::string space;
    double twist_chern = 0;
    double t = 0;
    IndexEstimate analytic;
    double geometric = 0;
    long nearest = 0;
    bool verdict = false;
    std::uint64_t seed = 0;
    double wall_seconds = 0;
};

inline IndexReport run_index_report(const SOneSpace& sp, const HeatKernel& ker,
                                    const SpinRep& rep, const TwistBundle& tw, double t,
                                    int quad_level, long n_per_node, const RandomSource& src,
                                    double h = 0) {
    const auto t0 = std::chrono::steady_clock::now();
    IndexReport out;
    out.space = sp.name;
    out.twist_chern = tw.chern;
    out.t = t;
    out.seed = src.seed;
    out.analytic = mckean_singer_index(sp, ker, rep, tw, t, quad_level, n_per_node, src, h);
    out.geometric = geometric_index(sp, tw);
    out.nearest = std::llround(out.geometric);
    const bool integral = std::abs(out.geometric - double(out.nearest)) <= 1e-6;
    out.verdict =
        integral && std::abs(out.analytic.value - out.geometric) <= 3.0 * out.analytic.se;
    out.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace orbindex

#pragma once

// Geodesic random walks, guided Brownian bridges, and the multiplicative
// functionals they carry (frame holonomy, twist holonomy, curvature factor).
// Paths live on the base surface; frames ride along by parallel transport, so
// frames[k] already encodes the stochastic parallel transport up to step k.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "orbindex/catalog.hpp"
#include "orbindex/clifford.hpp"
#include "orbindex/geometry.hpp"
#include "orbindex/heatkernel.hpp"
#include "orbindex/rng.hpp"

namespace orbindex {

// One sampled path on a uniform grid. steps[k] is the tangent increment in
// the columns of frames[k], recorded before folding, so the path can be
// replayed exactly even across fundamental-domain identifications.
struct BridgePath {
    std::vector<double> times;
    std::vector<MPoint> points;
    std::vector<Frame> frames;
    std::vector<Eigen::Vector2d> steps;
    MPoint x = MPoint::Zero(), y = MPoint::Zero();
    bool conditioned = false;
    double max_drift = 0;    // largest |h * drift| seen before capping
    double snap_length = 0;  // length of the forced final step of a bridge
    int rejects = 0;         // noise draws resampled at the injectivity floor
    bool valid = true;
};

namespace pathdetail {

// fresh distribution per call: no cached spare normal, so a path's draw
// sequence depends only on its engine state
inline Eigen::Vector2d gauss2(std::mt19937_64& g) {
    std::normal_distribution<double> n;
    return {n(g), n(g)};
}

}  // namespace pathdetail

inline BridgePath sample_path(const Surface& M, const MPoint& x0, double T, double h,
                              std::mt19937_64& g) {
    require(T > 0 && h > 0, "sample_path needs T, h > 0");
    BridgePath p;
    const int K = std::max(1, static_cast<int>(std::llround(T / h)));
    const double hk = T / K, sh = std::sqrt(hk);
    const double floor = M.injectivity_floor();
    p.x = x0;
    p.times.resize(K + 1);
    p.points.resize(K + 1);
    p.frames.resize(K + 1);
    p.steps.resize(K);
    p.points[0] = x0;
    p.frames[0] = M.reference_frame(x0);
    for (int k = 0; k < K; ++k) {
        p.times[k] = hk * k;
        Eigen::Vector2d v;
        for (int tries = 0;; ++tries) {
            v = sh * pathdetail::gauss2(g);
            if (v.norm() < floor) break;
            ++p.rejects;
            require(tries < 64, "unit step rejection loop stuck");
        }
        p.steps[k] = v;
        Frame fn;
        MPoint xn = M.exp_step(p.points[k], p.frames[k], v, &fn);
        M.fold(xn, &fn);
        p.points[k + 1] = xn;
        p.frames[k + 1] = fn;
    }
    p.times[K] = T;
    p.y = p.points[K];
    return p;
}

// Guided bridge from x0 to y over [0, T]: Euler steps with the exact kernel
// drift grad_x ln p(T - s, X_s, y), then one forced geodesic step onto y.
// drift_sign exists for fault-injection tests only.
inline BridgePath sample_bridge(const Surface& M, const HeatKernel& ker, const MPoint& x0,
                                const MPoint& y, double T, double h, std::mt19937_64& g,
                                double drift_sign = 1.0) {
    require(T > 0 && h > 0, "sample_bridge needs T, h > 0");
    BridgePath p;
    const int K = std::max(2, static_cast<int>(std::llround(T / h)));
    const double hk = T / K, sh = std::sqrt(hk);
    const double floor = M.injectivity_floor();
    p.x = x0;
    p.y = y;
    p.conditioned = true;
    p.times.resize(K + 1);
    p.points.resize(K + 1);
    p.frames.resize(K + 1);
    p.steps.resize(K);
    p.points[0] = x0;
    p.frames[0] = M.reference_frame(x0);
    const double cap = 0.5 * floor;
    for (int k = 0; k + 1 < K; ++k) {
        p.times[k] = hk * k;
        const double tau = T - hk * k;  // time to go at the step start
        Eigen::Vector2d vd =
            hk * drift_sign * ker.log_gradient_x(tau, p.points[k], p.frames[k], y);
        if (!vd.allFinite()) {
            // kernel underflow: the guide lost the target; finish as a free
            // walk and report the path invalid
            p.valid = false;
            vd.setZero();
        }
        p.max_drift = std::max(p.max_drift, vd.norm());
        if (vd.norm() > cap) vd *= cap / vd.norm();
        Eigen::Vector2d v;
        for (int tries = 0;; ++tries) {
            v = vd + sh * pathdetail::gauss2(g);
            if (v.norm() < floor) break;
            ++p.rejects;
            require(tries < 64, "bridge step rejection loop stuck");
        }
        p.steps[k] = v;
        Frame fn;
        MPoint xn = M.exp_step(p.points[k], p.frames[k], v, &fn);
        M.fold(xn, &fn);
        p.points[k + 1] = xn;
        p.frames[k + 1] = fn;
    }
    p.times[K - 1] = hk * (K - 1);
    Eigen::Vector2d vs = M.log_map(p.points[K - 1], p.frames[K - 1], y);
    p.snap_length = vs.norm();
    p.steps[K - 1] = vs;
    Frame fn;
    MPoint xn = M.exp_step(p.points[K - 1], p.frames[K - 1], vs, &fn);
    M.fold(xn, &fn);
    (void)xn;  // lands on y up to roundoff; store y itself
    p.points[K] = y;
    p.frames[K] = fn;
    p.times[K] = T;
    // 6 sqrt(h) is ~6 sigma of the pre-snap marginal: exceeding it means the
    // drift failed to guide the path home
    if (p.snap_length >= std::min(floor, 6.0 * std::sqrt(hk))) p.valid = false;
    return p;
}

// Move a sphere-based path so its start point sits at the gauge anchor, as
// if it had been sampled there. Monopole potentials are regular at their
// anchor. After the rigid rotation the frames are turned in-plane by one
// common angle to restore frames[0] = reference_frame(points[0]); transport
// commutes with a constant in-plane rotation, so the family stays
// transported, and the step coordinates are counter-rotated to keep each
// displacement intact.
inline void align_to_anchor(const Surface& M, BridgePath& path, const MPoint& anchor) {
    Eigen::Matrix3d U =
        Eigen::Quaterniond::FromTwoVectors(path.points[0], anchor).toRotationMatrix();
    for (auto& q : path.points) q = U * q;
    for (auto& fr : path.frames) fr = U * fr;
    path.x = U * path.x;
    path.y = U * path.y;

    Eigen::Matrix2d a = path.frames[0].transpose() * M.reference_frame(path.points[0]);
    double gamma = std::atan2(a(1, 0), a(0, 0));
    Eigen::Matrix2d r2;
    r2 << std::cos(gamma), -std::sin(gamma), std::sin(gamma), std::cos(gamma);
    for (auto& fr : path.frames) fr = fr * r2;
    for (auto& v : path.steps) v = r2.transpose() * v;
}

// Multiplicative factors along one path. tau is the inverse stochastic
// parallel transport on the twisted spinor fiber at the endpoint fiber of the
// start point, split into its spin part exp(bivector_action(v)) and the
// abelian twist phase. M solves dM/ds = -1/2 M c1 c2 L12 along the path and
// m[i] are its iterated integrals (m[0] = I, m[i] = O(s^i)) for the truncated
// estimator. R = exp(-1/8 int S).
struct TransportState {
    CMat tau;
    CMat spin_part;
    cplx twist_phase = 1.0;
    CMat M;
    std::vector<CMat> m;
    RMat v;
    double R = 1.0;
    bool valid = true;
};

inline TransportState evolve_transport(const Surface& M, const BridgePath& path,
                                       const SpinRep& rep, const TwistBundle& twist,
                                       int order = 2) {
    require(rep.n == 2, "transport is specialized to surfaces");
    require(twist.rank == 1, "transport is specialized to line twists");
    require(order >= 1, "keep at least m[0], m[1]");
    const int K = static_cast<int>(path.steps.size());
    TransportState ts;
    const CMat id = CMat::Identity(rep.dim, rep.dim);
    const CMat c12 = rep.gen[0] * rep.gen[1];
    ts.M = id;
    ts.m.assign(order + 1, CMat::Zero(rep.dim, rep.dim));
    ts.m[0] = id;

    auto amat = [&](const MPoint& q) -> CMat { return -0.5 * twist.curv12(q) * c12; };

    double phi = 0, curv_int = 0;
    CMat a1 = amat(path.points[0]);
    double s1 = M.scalar_curvature(path.points[0]);
    std::vector<CMat> k1(order + 1), k2(order + 1), k3(order + 1), k4(order + 1);
    for (int k = 0; k < K; ++k) {
        const double hk = path.times[k + 1] - path.times[k];
        const CMat a0 = a1;
        a1 = amat(path.points[k + 1]);
        const CMat am = 0.5 * (a0 + a1);
        const double s0 = s1;
        s1 = M.scalar_curvature(path.points[k + 1]);
        curv_int += 0.5 * hk * (s0 + s1);

        // twist phase, midpoint rule; step components are parallel so they
        // read the same in the transported frame at the midpoint
        Frame fm;
        MPoint xm = M.exp_step(path.points[k], path.frames[k], 0.5 * path.steps[k], &fm);
        M.fold(xm, &fm);
        Frame rm = M.reference_frame(xm);
        MPoint w = fm * path.steps[k];
        Eigen::Vector2d vref(rm.col(0).dot(w), rm.col(1).dot(w));
        phi += twist.potential_im(xm).dot(vref);

        // RK4 for Y' = Y A(s), A linear on the step; m[i]' = m[i-1] A rides
        // the same stages with m[0] constant
        const CMat b1 = ts.M * a0;
        const CMat b2 = (ts.M + 0.5 * hk * b1) * am;
        const CMat b3 = (ts.M + 0.5 * hk * b2) * am;
        const CMat b4 = (ts.M + hk * b3) * a1;
        k1[0].setZero(rep.dim, rep.dim);
        k2[0].setZero(rep.dim, rep.dim);
        k3[0].setZero(rep.dim, rep.dim);
        k4[0].setZero(rep.dim, rep.dim);
        for (int i = 1; i <= order; ++i) k1[i] = ts.m[i - 1] * a0;
        for (int i = 1; i <= order; ++i) k2[i] = (ts.m[i - 1] + 0.5 * hk * k1[i - 1]) * am;
        for (int i = 1; i <= order; ++i) k3[i] = (ts.m[i - 1] + 0.5 * hk * k2[i - 1]) * am;
        for (int i = 1; i <= order; ++i) k4[i] = (ts.m[i - 1] + hk * k3[i - 1]) * a1;
        ts.M += (hk / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        for (int i = 1; i <= order; ++i)
            ts.m[i] += (hk / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    ts.R = std::exp(-curv_int / 8.0);
    ts.twist_phase = std::exp(cplx(0.0, phi));

    // frame holonomy in reference components; tau carries the inverse
    const Frame& fT = path.frames[K];
    Frame rT = M.reference_frame(path.points[K]);
    const double o00 = rT.col(0).dot(fT.col(0));
    const double o10 = rT.col(1).dot(fT.col(0));
    const double beta = std::atan2(o10, o00);
    ts.v = RMat::Zero(2, 2);
    ts.v(0, 1) = beta;
    ts.v(1, 0) = -beta;
    ts.spin_part = spin_exponential(rep, ts.v);
    ts.tau = ts.twist_phase * ts.spin_part;

    if (!path.valid) ts.valid = false;
    if (!std::isfinite(ts.R) || !ts.M.allFinite()) ts.valid = false;
    if ((ts.tau * ts.tau.adjoint() - id).cwiseAbs().maxCoeff() > 1e-6) ts.valid = false;
    return ts;
}

struct FiberEstimate {
    Eigen::VectorXcd mean;
    double se = 0;  // pooled componentwise standard error
    int paths = 0;
    int invalid = 0;
};

// Unconditioned Feynman-Kac evaluation of the twisted Dirac heat semigroup,
// theta(t, x) = E[ R M tau theta0(X_t) ].
inline FiberEstimate feynman_kac_solve(const Surface& M, const SpinRep& rep,
                                       const TwistBundle& twist,
                                       const std::function<Eigen::VectorXcd(const MPoint&)>& theta0,
                                       double t, const MPoint& x, int n_paths,
                                       const RandomSource& src, double h = 0) {
    if (h <= 0) h = t / 200.0;
    FiberEstimate est;
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(rep.dim);
    Eigen::VectorXd acc2 = Eigen::VectorXd::Zero(rep.dim);
    for (int i = 0; i < n_paths; ++i) {
        auto g = src.engine_for_path(static_cast<std::uint64_t>(i));
        BridgePath path = sample_path(M, x, t, h, g);
        TransportState ts = evolve_transport(M, path, rep, twist);
        if (!ts.valid) {
            ++est.invalid;
            continue;
        }
        Eigen::VectorXcd val = ts.R * (ts.M * ts.tau * theta0(path.points.back()));
        acc += val;
        acc2 += val.cwiseAbs2();
        ++est.paths;
    }
    require(est.paths > 0, "all paths invalid");
    est.mean = acc / static_cast<double>(est.paths);
    double var = 0;
    for (int c = 0; c < rep.dim; ++c)
        var += std::max(0.0, acc2(c) / est.paths - std::norm(est.mean(c)));
    est.se = std::sqrt(var / est.paths);
    return est;
}

// Scalar specialization: plain heat semigroup, E[f(X_t)]. Returns (mean, se).
inline std::pair<double, double> feynman_kac_scalar(const Surface& M,
                                                    const std::function<double(const MPoint&)>& f,
                                                    double t, const MPoint& x, int n_paths,
                                                    const RandomSource& src, double h = 0) {
    if (h <= 0) h = t / 200.0;
    double sum = 0, sum2 = 0;
    for (int i = 0; i < n_paths; ++i) {
        auto g = src.engine_for_path(static_cast<std::uint64_t>(i));
        BridgePath path = sample_path(M, x, t, h, g);
        const double val = f(path.points.back());
        sum += val;
        sum2 += val * val;
    }
    const double mean = sum / n_paths;
    const double var = std::max(0.0, sum2 / n_paths - mean * mean);
    return {mean, std::sqrt(var / n_paths)};
}

// Crossing-corrected mean first-exit time from the geodesic ball B(x0, r).
// The Brownian-bridge factor exp(-2 d1 d2 / h) restores excursions across the
// boundary between grid points; without it the estimate is biased high by
// O(sqrt h). Returns (mean, se).
inline std::pair<double, double> mean_exit_time(const Surface& M, const MPoint& x0, double r,
                                                double h, int n_paths, const RandomSource& src) {
    require(r < M.injectivity_floor(), "exit ball must be embedded");
    const double tcap = 40.0 * r * r;
    const double sh = std::sqrt(h);
    double sum = 0, sum2 = 0;
    for (int i = 0; i < n_paths; ++i) {
        auto g = src.engine_for_path(static_cast<std::uint64_t>(i));
        MPoint x = x0;
        Frame f = M.reference_frame(x0);
        double texit = tcap, din = 0;
        for (double s = 0; s < tcap; s += h) {
            Eigen::Vector2d v = sh * pathdetail::gauss2(g);
            Frame fn;
            MPoint xn = M.exp_step(x, f, v, &fn);
            M.fold(xn, &fn);
            const double dnext = M.distance(x0, xn);
            if (dnext >= r) {
                texit = s + h;
                break;
            }
            const double pcross = std::exp(-2.0 * (r - din) * (r - dnext) / h);
            std::uniform_real_distribution<double> u;
            if (u(g) < pcross) {
                texit = s + 0.5 * h;
                break;
            }
            x = xn;
            f = fn;
            din = dnext;
        }
        sum += texit;
        sum2 += texit * texit;
    }
    const double mean = sum / n_paths;
    const double var = std::max(0.0, sum2 / n_paths - mean * mean);
    return {mean, std::sqrt(var / n_paths)};
}

}  // namespace orbindex

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "orbindex/quadrature.hpp"
#include "orbindex/util.hpp"

namespace orbindex {

// A point on a model surface. Interpretation is per-space:
//   flat torus / circle: coordinates in the fundamental domain, third entry 0
//   sphere family:       ambient R^3 vector of length r (quotients store the
//                        upstairs representative)
//   revolution surface:  (rho, phi, 0)
using MPoint = Eigen::Vector3d;

// Orthonormal tangent frame, columns = frame vectors. Flat/revolution spaces
// use the top 2x2 block in coordinate bases; spheres use ambient tangents.
using Frame = Eigen::Matrix<double, 3, 2>;

struct QuadNode {
    MPoint x;
    double w;
};

class Surface {
public:
    virtual ~Surface() = default;
    virtual std::string kind() const = 0;
    virtual int dim() const { return 2; }
    virtual double area() const = 0;
    virtual double diameter() const = 0;
    virtual double distance(const MPoint& x, const MPoint& y) const = 0;
    // Geodesic step of frame-coordinates displacement v from x; if f_out is
    // given the frame is parallel-transported along the segment.
    virtual MPoint exp_step(const MPoint& x, const Frame& f, const Eigen::Vector2d& v,
                            Frame* f_out = nullptr) const = 0;
    virtual Frame reference_frame(const MPoint& x) const = 0;
    virtual double scalar_curvature(const MPoint& x) const = 0;
    virtual double injectivity_floor() const = 0;
    virtual void fold(MPoint& x, Frame* f = nullptr) const { (void)x; (void)f; }
    virtual std::vector<QuadNode> quadrature(int level) const = 0;
    // frame coordinates of the initial velocity of the minimizing geodesic
    // from x to y; |log_map| = distance(x, y)
    virtual Eigen::Vector2d log_map(const MPoint& x, const Frame& f, const MPoint& y) const = 0;
};

// ---------------------------------------------------------------------------

class Circle final : public Surface {
public:
    explicit Circle(double length) : length_(length) { require(length > 0, "circle length > 0"); }

    std::string kind() const override { return "circle"; }
    int dim() const override { return 1; }
    double area() const override { return length_; }
    double diameter() const override { return 0.5 * length_; }
    double length() const { return length_; }

    double distance(const MPoint& x, const MPoint& y) const override {
        double d = std::fmod(std::abs(x(0) - y(0)), length_);
        return std::min(d, length_ - d);
    }

    MPoint exp_step(const MPoint& x, const Frame&, const Eigen::Vector2d& v, Frame* f_out) const override {
        MPoint out(x(0) + v(0), 0, 0);
        if (f_out) *f_out = Frame::Identity();
        return out;
    }

    Frame reference_frame(const MPoint&) const override { return Frame::Identity(); }
    double scalar_curvature(const MPoint&) const override { return 0.0; }
    double injectivity_floor() const override { return 0.45 * length_; }

    void fold(MPoint& x, Frame* = nullptr) const override {
        x(0) = x(0) - length_ * std::floor(x(0) / length_);
    }

    std::vector<QuadNode> quadrature(int level) const override {
        int n = std::max(8, level);
        std::vector<QuadNode> q;
        q.reserve(n);
        for (int i = 0; i < n; ++i)
            q.push_back({MPoint(length_ * (i + 0.5) / n, 0, 0), length_ / n});
        return q;
    }

    Eigen::Vector2d log_map(const MPoint& x, const Frame& f, const MPoint& y) const override {
        double d = y(0) - x(0);
        d -= length_ * std::round(d / length_);
        return f.transpose() * Eigen::Vector3d(d, 0, 0);
    }

private:
    double length_;
};

// ---------------------------------------------------------------------------

class FlatTorus final : public Surface {
public:
    FlatTorus(double l1, double l2) : l1_(l1), l2_(l2) {
        require(l1 > 0 && l2 > 0, "torus moduli must be positive");
    }

    std::string kind() const override { return "flat-torus"; }
    double area() const override { return l1_ * l2_; }
    double diameter() const override { return 0.5 * std::hypot(l1_, l2_); }
    double l1() const { return l1_; }
    double l2() const { return l2_; }

    double distance(const MPoint& x, const MPoint& y) const override {
        double dx = wrap(x(0) - y(0), l1_), dy = wrap(x(1) - y(1), l2_);
        return std::hypot(dx, dy);
    }

    MPoint exp_step(const MPoint& x, const Frame& f, const Eigen::Vector2d& v, Frame* f_out) const override {
        Eigen::Vector3d step = f.col(0) * v(0) + f.col(1) * v(1);
        if (f_out) *f_out = f;
        return x + step;
    }

    Frame reference_frame(const MPoint&) const override {
        Frame f = Frame::Zero();
        f(0, 0) = 1;
        f(1, 1) = 1;
        return f;
    }

    double scalar_curvature(const MPoint&) const override { return 0.0; }
    double injectivity_floor() const override { return 0.45 * std::min(l1_, l2_); }

    void fold(MPoint& x, Frame* = nullptr) const override {
        x(0) -= l1_ * std::floor(x(0) / l1_);
        x(1) -= l2_ * std::floor(x(1) / l2_);
    }

    std::vector<QuadNode> quadrature(int level) const override {
        int n = std::max(4, level);
        std::vector<QuadNode> q;
        q.reserve(n * n);
        double w = area() / (n * n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                q.push_back({MPoint(l1_ * (i + 0.5) / n, l2_ * (j + 0.5) / n, 0), w});
        return q;
    }

    Eigen::Vector2d log_map(const MPoint& x, const Frame& f, const MPoint& y) const override {
        return f.transpose() * Eigen::Vector3d(wrap(y(0) - x(0), l1_), wrap(y(1) - x(1), l2_), 0);
    }

    // lattice translates of y within rmax of x (image sum support)
    std::vector<MPoint> images_near(const MPoint& y, const MPoint& x, double rmax) const {
        std::vector<MPoint> out;
        int k1 = static_cast<int>(std::ceil(rmax / l1_)) + 1;
        int k2 = static_cast<int>(std::ceil(rmax / l2_)) + 1;
        for (int a = -k1; a <= k1; ++a)
            for (int b = -k2; b <= k2; ++b) {
                MPoint p(y(0) + a * l1_, y(1) + b * l2_, 0);
                if ((p - x).norm() <= rmax) out.push_back(p);
            }
        return out;
    }

private:
    static double wrap(double d, double L) {
        d = std::fmod(d, L);
        if (d > 0.5 * L) d -= L;
        if (d < -0.5 * L) d += L;
        return d;
    }

    double l1_, l2_;
};

// ---------------------------------------------------------------------------

class RoundSphere final : public Surface {
public:
    explicit RoundSphere(double r) : r_(r) { require(r > 0, "sphere radius > 0"); }

    std::string kind() const override { return "round-sphere"; }
    double area() const override { return 4.0 * pi * r_ * r_; }
    double diameter() const override { return pi * r_; }
    double radius() const { return r_; }

    double distance(const MPoint& x, const MPoint& y) const override {
        double c = x.dot(y) / (r_ * r_);
        double s = x.cross(y).norm() / (r_ * r_);
        return r_ * std::atan2(s, c);
    }

    MPoint exp_step(const MPoint& x, const Frame& f, const Eigen::Vector2d& v, Frame* f_out) const override {
        Eigen::Vector3d u = f.col(0) * v(0) + f.col(1) * v(1);
        double len = u.norm();
        if (len < 1e-300) {
            if (f_out) *f_out = f;
            return x;
        }
        Eigen::Vector3d axis = x.cross(u).normalized();
        Eigen::AngleAxisd rot(len / r_, axis);
        if (f_out) {
            f_out->col(0) = rot * f.col(0);
            f_out->col(1) = rot * f.col(1);
        }
        return rot * x;
    }

    Frame reference_frame(const MPoint& x) const override {
        Eigen::Vector3d n = x.normalized();
        Frame f;
        if (std::abs(n(2)) < 0.999999) {
            Eigen::Vector3d ephi = Eigen::Vector3d::UnitZ().cross(n).normalized();
            Eigen::Vector3d etheta = ephi.cross(n);   // toward increasing colatitude
            f.col(0) = etheta;
            f.col(1) = ephi;
        } else {
            Eigen::Vector3d e1 = (Eigen::Vector3d::UnitX() - n * n(0)).normalized();
            f.col(0) = e1;
            f.col(1) = n.cross(e1);
        }
        return f;
    }

    double scalar_curvature(const MPoint&) const override { return 2.0 / (r_ * r_); }
    double injectivity_floor() const override { return 0.9 * pi * r_; }

    Eigen::Vector2d log_map(const MPoint& x, const Frame& f, const MPoint& y) const override {
        double d = distance(x, y);
        if (d < 1e-15) return Eigen::Vector2d::Zero();
        Eigen::Vector3d w = y - x * (x.dot(y) / (r_ * r_));
        double n = w.norm();
        if (n < 1e-13) {
            // antipodal: any direction minimizes, pick the first frame leg
            return Eigen::Vector2d(d, 0);
        }
        return f.transpose() * (w * (d / n));
    }

    std::vector<QuadNode> quadrature(int level) const override {
        int ntheta = std::max(4, level);
        int nphi = 2 * ntheta;
        Quad1d g = gauss_legendre(ntheta);   // in cos(theta)
        std::vector<QuadNode> q;
        q.reserve(ntheta * nphi);
        for (int i = 0; i < ntheta; ++i) {
            double ct = g.x[i], st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
            for (int j = 0; j < nphi; ++j) {
                double phi = 2.0 * pi * (j + 0.5) / nphi;
                MPoint x(r_ * st * std::cos(phi), r_ * st * std::sin(phi), r_ * ct);
                q.push_back({x, g.w[i] * (2.0 * pi / nphi) * r_ * r_});
            }
        }
        return q;
    }

private:
    double r_;
};

// ---------------------------------------------------------------------------
// Global quotient S^2(1)/Z_q, Z_q rotating about the z-axis. Points keep an
// upstairs representative; fold() reduces into the wedge phi in [0, 2pi/q).

class QuotientSphere final : public Surface {
public:
    explicit QuotientSphere(int q) : q_(q), up_(1.0) {
        require(q >= 1, "quotient order >= 1");
    }

    std::string kind() const override { return "quotient-sphere"; }
    double area() const override { return up_.area() / q_; }
    double diameter() const override { return up_.diameter(); }
    int order() const { return q_; }
    const RoundSphere& cover() const { return up_; }

    MPoint rotate(const MPoint& y, int j) const {
        double a = 2.0 * pi * j / q_;
        Eigen::AngleAxisd rot(a, Eigen::Vector3d::UnitZ());
        return rot * y;
    }

    double distance(const MPoint& x, const MPoint& y) const override {
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < q_; ++j) best = std::min(best, up_.distance(x, rotate(y, j)));
        return best;
    }

    MPoint exp_step(const MPoint& x, const Frame& f, const Eigen::Vector2d& v, Frame* f_out) const override {
        return up_.exp_step(x, f, v, f_out);
    }

    Frame reference_frame(const MPoint& x) const override { return up_.reference_frame(x); }

    double scalar_curvature(const MPoint&) const override { return 2.0; }

    double injectivity_floor() const override { return 0.9 * pi / q_; }

    void fold(MPoint& x, Frame* f = nullptr) const override {
        double phi = std::atan2(x(1), x(0));
        if (phi < 0) phi += 2.0 * pi;
        int j = static_cast<int>(std::floor(phi / (2.0 * pi / q_)));
        if (j == 0) return;
        Eigen::AngleAxisd rot(-2.0 * pi * j / q_, Eigen::Vector3d::UnitZ());
        x = rot * x;
        if (f) {
            f->col(0) = rot * f->col(0);
            f->col(1) = rot * f->col(1);
        }
    }

    std::vector<QuadNode> quadrature(int level) const override {
        // upstairs nodes with weight 1/q integrate orbifold functions
        std::vector<QuadNode> q = up_.quadrature(level);
        for (auto& n : q) n.w /= q_;
        return q;
    }

    std::vector<MPoint> cone_points() const {
        if (q_ == 1) return {};
        return {MPoint(0, 0, 1), MPoint(0, 0, -1)};
    }

    Eigen::Vector2d log_map(const MPoint& x, const Frame& f, const MPoint& y) const override {
        int best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (int j = 0; j < q_; ++j) {
            double d = up_.distance(x, rotate(y, j));
            if (d < bd) {
                bd = d;
                best = j;
            }
        }
        return up_.log_map(x, f, rotate(y, best));
    }

private:
    int q_;
    RoundSphere up_;
};

// ---------------------------------------------------------------------------
// Teardrop of cone order q: surface of revolution (rho, phi) with profile
//   h(rho) = sin(rho) * (1/q + (1 - 1/q) * step(rho; blend))
// Exactly the unit round cap of a Z_q quotient near rho = 0, exactly the unit
// round sphere past the blend, C^2 in between with closed-form S(x).

class Teardrop final : public Surface {
public:
    explicit Teardrop(int q) : q_(q) {
        require(q >= 2, "teardrop cone order >= 2");
        area_ = 2.0 * pi * adaptive_simpson([this](double r) { return profile(r); }, 0.0, pi, 1e-12);
    }

    static constexpr double blend_lo = 0.3 * pi;
    static constexpr double blend_hi = 0.6 * pi;

    std::string kind() const override { return "teardrop"; }
    double area() const override { return area_; }
    double diameter() const override { return pi; }
    int order() const { return q_; }

    double profile(double rho) const {
        double f = 1.0 / q_ + (1.0 - 1.0 / q_) * smoothstep(rho, blend_lo, blend_hi);
        return std::sin(rho) * f;
    }

    double profile_d1(double rho) const {
        double f = 1.0 / q_ + (1.0 - 1.0 / q_) * smoothstep(rho, blend_lo, blend_hi);
        double f1 = (1.0 - 1.0 / q_) * smoothstep_d1(rho, blend_lo, blend_hi);
        return std::cos(rho) * f + std::sin(rho) * f1;
    }

    double profile_d2(double rho) const {
        double f = 1.0 / q_ + (1.0 - 1.0 / q_) * smoothstep(rho, blend_lo, blend_hi);
        double f1 = (1.0 - 1.0 / q_) * smoothstep_d1(rho, blend_lo, blend_hi);
        double f2 = (1.0 - 1.0 / q_) * smoothstep_d2(rho, blend_lo, blend_hi);
        return -std::sin(rho) * f + 2.0 * std::cos(rho) * f1 + std::sin(rho) * f2;
    }

    double scalar_curvature(const MPoint& x) const override {
        double rho = x(0);
        if (rho < 1e-8 || rho > pi - 1e-8) return 2.0;   // round at both ends
        return -2.0 * profile_d2(rho) / profile(rho);
    }

    double distance(const MPoint& x, const MPoint& y) const override;

    MPoint exp_step(const MPoint& x, const Frame& f, const Eigen::Vector2d& v, Frame* f_out) const override;

    Frame reference_frame(const MPoint&) const override {
        // frame angle is tracked against (e_rho, e_phi); stored as 2x2 block
        Frame f = Frame::Zero();
        f(0, 0) = 1;
        f(1, 1) = 1;
        return f;
    }

    double injectivity_floor() const override { return 0.15; }

    void fold(MPoint& x, Frame* = nullptr) const override {
        x(1) -= 2.0 * pi * std::floor(x(1) / (2.0 * pi));
    }

    std::vector<QuadNode> quadrature(int level) const override {
        // split at the blend boundaries: integrands are smooth per piece but
        // only C^0 across them
        int nr = std::max(6, level);
        int nphi = 2 * nr;
        const double cuts[4] = {0.0, blend_lo, blend_hi, pi};
        std::vector<QuadNode> q;
        for (int piece = 0; piece < 3; ++piece) {
            int np = std::max(4, static_cast<int>(std::lround(nr * (cuts[piece + 1] - cuts[piece]) / pi)));
            Quad1d g = gauss_legendre_ab(np, cuts[piece], cuts[piece + 1]);
            for (int i = 0; i < np; ++i)
                for (int j = 0; j < nphi; ++j)
                    q.push_back({MPoint(g.x[i], 2.0 * pi * (j + 0.5) / nphi, 0),
                                 g.w[i] * (2.0 * pi / nphi) * profile(g.x[i])});
        }
        return q;
    }

    // Shoot the geodesic with initial frame angle alpha for length s, return
    // endpoint and transported-frame angle defect; used for local distances,
    // the exponential map, and transverse Jacobi data.
    struct ShootResult {
        double rho, phi, alpha_dir;   // endpoint and the direction angle there
        double transport_rot;         // parallel-transport rotation vs coordinate frame
        double jacobi;                // transverse Jacobi field J(s), J(0)=0, J'(0)=1
    };
    ShootResult shoot(double rho0, double phi0, double dir, double s) const;

    // boundary-value distance for near pairs; converged flag out
    double shoot_distance(const MPoint& x, const MPoint& y, bool* ok, double* u0_out = nullptr,
                          double* dir_out = nullptr) const;

    Eigen::Vector2d log_map(const MPoint& x, const Frame& f, const MPoint& y) const override;

private:
    int q_;
    double area_;
};

inline Teardrop::ShootResult Teardrop::shoot(double rho0, double phi0, double dir, double s) const {
    // state: rho, phi, v = (vr, vphi_arc) unit velocity in the orthonormal
    // frame, transport angle, Jacobi field (J, J')
    double rho = rho0, phi = phi0;
    double vr = std::cos(dir), vp = std::sin(dir);
    double trans = 0.0, J = 0.0, Jp = 1.0;
    int n = std::max(16, static_cast<int>(std::ceil(s / 0.004)));
    double ds = s / n;
    auto deriv = [this](double st[6], double out[6]) {
        double h = profile(st[0]), h1 = profile_d1(st[0]);
        double vr_ = st[2], vp_ = st[3];
        out[0] = vr_;
        out[1] = vp_ / h;
        out[2] = (h1 / h) * vp_ * vp_;      // d vr/ds
        out[3] = -(h1 / h) * vr_ * vp_;     // d vphi/ds (orthonormal components)
        out[4] = -(h1 / h) * vp_;           // transport angle vs coordinate frame
        out[5] = 0.0;                       // Jacobi data carried separately
    };
    // Jacobi equation J'' + K J = 0 handled alongside with K = -h''/h
    double st[6] = {rho, phi, vr, vp, trans, 0.0};
    double Jc = J, Jpc = Jp;
    for (int i = 0; i < n; ++i) {
        auto rk_step = [&](double in[6], double& j_in, double& jp_in) {
            double k1[6], k2[6], k3[6], k4[6], tmp[6];
            auto kmat = [&](double at[6]) { return -profile_d2(at[0]) / profile(at[0]); };
            deriv(in, k1);
            double K1 = kmat(in);
            double j1 = jp_in, jp1 = -K1 * j_in;
            for (int k = 0; k < 6; ++k) tmp[k] = in[k] + 0.5 * ds * k1[k];
            deriv(tmp, k2);
            double K2 = kmat(tmp);
            double j2 = jp_in + 0.5 * ds * jp1, jp2 = -K2 * (j_in + 0.5 * ds * j1);
            for (int k = 0; k < 6; ++k) tmp[k] = in[k] + 0.5 * ds * k2[k];
            deriv(tmp, k3);
            double K3 = kmat(tmp);
            double j3 = jp_in + 0.5 * ds * jp2, jp3 = -K3 * (j_in + 0.5 * ds * j2);
            for (int k = 0; k < 6; ++k) tmp[k] = in[k] + ds * k3[k];
            deriv(tmp, k4);
            double K4 = kmat(tmp);
            double j4 = jp_in + ds * jp3, jp4 = -K4 * (j_in + ds * j3);
            for (int k = 0; k < 6; ++k) in[k] += ds / 6.0 * (k1[k] + 2 * k2[k] + 2 * k3[k] + k4[k]);
            j_in += ds / 6.0 * (j1 + 2 * j2 + 2 * j3 + j4);
            jp_in += ds / 6.0 * (jp1 + 2 * jp2 + 2 * jp3 + jp4);
        };
        rk_step(st, Jc, Jpc);
    }
    ShootResult out;
    out.rho = st[0];
    out.phi = st[1];
    out.alpha_dir = std::atan2(st[3], st[2]);
    out.transport_rot = st[4];
    out.jacobi = Jc;
    return out;
}

inline double Teardrop::shoot_distance(const MPoint& x, const MPoint& y, bool* ok, double* u0_out,
                                       double* dir_out) const {
    double h0 = profile(0.5 * (x(0) + y(0)));
    double dphi = y(1) - x(1);
    dphi -= 2.0 * pi * std::round(dphi / (2.0 * pi));
    double drho = y(0) - x(0);
    double s = std::hypot(drho, h0 * dphi);
    double dir = std::atan2(h0 * dphi, drho);
    if (s < 1e-12) {
        if (ok) *ok = true;
        if (u0_out) *u0_out = 1.0;
        if (dir_out) *dir_out = 0.0;
        return 0.0;
    }
    bool converged = false;
    ShootResult r{};
    for (int it = 0; it < 30; ++it) {
        r = shoot(x(0), x(1), dir, s);
        double mr = y(0) - r.rho;
        double mp = y(1) - r.phi;
        mp -= 2.0 * pi * std::round(mp / (2.0 * pi));
        double hm = profile(r.rho);
        Eigen::Vector2d miss(mr, hm * mp);
        if (miss.norm() < 1e-11) {
            converged = true;
            break;
        }
        // miss decomposed on the arrival direction and its normal
        Eigen::Vector2d tdir(std::cos(r.alpha_dir), std::sin(r.alpha_dir));
        Eigen::Vector2d ndir(-tdir(1), tdir(0));
        double ds_corr = miss.dot(tdir);
        double dn = miss.dot(ndir);
        s += ds_corr;
        if (std::abs(r.jacobi) > 1e-9) dir += dn / r.jacobi;
        if (s <= 1e-12 || s > 1.05 * pi) break;
    }
    if (ok) *ok = converged;
    if (u0_out) *u0_out = (converged && r.jacobi > 1e-12) ? std::sqrt(s / r.jacobi) : 1.0;
    if (dir_out) *dir_out = dir;
    return s;
}

inline Eigen::Vector2d Teardrop::log_map(const MPoint& x, const Frame& f, const MPoint& y) const {
    double dphi = y(1) - x(1);
    dphi -= 2.0 * pi * std::round(dphi / (2.0 * pi));
    Eigen::Vector2d u;
    if (std::abs(dphi) < 1e-12) {
        u = Eigen::Vector2d(y(0) - x(0), 0.0);
    } else if (x(0) < blend_lo && y(0) < blend_lo) {
        require(x(0) > 1e-9, "teardrop log is multivalued at the cone point");
        RoundSphere up(1.0);
        auto lift = [](double rho, double pt) {
            return MPoint(std::sin(rho) * std::cos(pt), std::sin(rho) * std::sin(pt), std::cos(rho));
        };
        double pxt = x(1) / q_;
        MPoint xl = lift(x(0), pxt);
        int best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (int j = 0; j < q_; ++j) {
            double d = up.distance(xl, lift(y(0), (y(1) + 2.0 * pi * j) / q_));
            if (d < bd) {
                bd = d;
                best = j;
            }
        }
        MPoint yl = lift(y(0), (y(1) + 2.0 * pi * best) / q_);
        Eigen::Vector3d w = yl - xl * xl.dot(yl);
        w *= bd / std::max(w.norm(), 1e-300);
        Eigen::Vector3d etheta(std::cos(x(0)) * std::cos(pxt), std::cos(x(0)) * std::sin(pxt), -std::sin(x(0)));
        Eigen::Vector3d ephi(-std::sin(pxt), std::cos(pxt), 0);
        u = Eigen::Vector2d(w.dot(etheta), w.dot(ephi));
    } else {
        RoundSphere up(1.0);
        auto lift = [](double rho, double pt) {
            return MPoint(std::sin(rho) * std::cos(pt), std::sin(rho) * std::sin(pt), std::cos(rho));
        };
        bool bulk_ok = false;
        if (x(0) > blend_hi && y(0) > blend_hi) {
            double d = up.distance(lift(x(0), x(1)), lift(y(0), y(1)));
            if (d < pi - blend_hi) bulk_ok = true;
        }
        if (bulk_ok) {
            MPoint xl = lift(x(0), x(1)), yl = lift(y(0), y(1));
            double d = up.distance(xl, yl);
            Eigen::Vector3d w = yl - xl * xl.dot(yl);
            w *= d / std::max(w.norm(), 1e-300);
            Eigen::Vector3d etheta(std::cos(x(0)) * std::cos(x(1)), std::cos(x(0)) * std::sin(x(1)), -std::sin(x(0)));
            Eigen::Vector3d ephi(-std::sin(x(1)), std::cos(x(1)), 0);
            u = Eigen::Vector2d(w.dot(etheta), w.dot(ephi));
        } else {
            bool okf = false;
            double dir = 0;
            double s = shoot_distance(x, y, &okf, nullptr, &dir);
            require(okf, "teardrop log: pair outside the supported evaluation domain");
            u = s * Eigen::Vector2d(std::cos(dir), std::sin(dir));
        }
    }
    return f.transpose() * Eigen::Vector3d(u(0), u(1), 0);
}

inline double Teardrop::distance(const MPoint& x, const MPoint& y) const {
    double dphi = y(1) - x(1);
    dphi -= 2.0 * pi * std::round(dphi / (2.0 * pi));
    if (std::abs(dphi) < 1e-12) return std::abs(y(0) - x(0));   // meridians are geodesics

    auto cap_point = [](double rho, double phi_t) {
        return MPoint(std::sin(rho) * std::cos(phi_t), std::sin(rho) * std::sin(phi_t), std::cos(rho));
    };
    if (x(0) < blend_lo && y(0) < blend_lo) {
        // upstairs round cap: minimum over the q rotated images
        RoundSphere up(1.0);
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < q_; ++j)
            best = std::min(best, up.distance(cap_point(x(0), x(1) / q_),
                                              cap_point(y(0), (y(1) + 2.0 * pi * j) / q_)));
        return best;
    }
    if (x(0) > blend_hi && y(0) > blend_hi) {
        RoundSphere up(1.0);
        double d = up.distance(cap_point(x(0), x(1)), cap_point(y(0), y(1)));
        // the south region below the blend is geodesically convex
        if (d < pi - blend_hi) return d;
    }
    bool ok = false;
    double d = shoot_distance(x, y, &ok);
    require(ok, "teardrop distance: pair outside the supported evaluation domain");
    return d;
}

inline MPoint Teardrop::exp_step(const MPoint& x, const Frame& f, const Eigen::Vector2d& v,
                                 Frame* f_out) const {
    double len = v.norm();
    if (len < 1e-300) {
        if (f_out) *f_out = f;
        return x;
    }
    // frame columns live in the (e_rho, e_phi) coordinate basis
    Eigen::Vector2d u = f.block<2, 2>(0, 0) * v;
    double dir = std::atan2(u(1), u(0));
    ShootResult r = shoot(x(0), x(1), dir, len);
    if (f_out) {
        double c = std::cos(r.transport_rot), s = std::sin(r.transport_rot);
        Eigen::Matrix2d rot;
        rot << c, -s, s, c;
        Frame nf = Frame::Zero();
        nf.block<2, 2>(0, 0) = rot * f.block<2, 2>(0, 0);
        *f_out = nf;
    }
    return MPoint(r.rho, r.phi, 0);
}

} // namespace orbindex

#pragma once

#include <cctype>
#include <complex>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "orbindex/geometry.hpp"

namespace orbindex {

using cplx = std::complex<double>;

// One Gaussian term of a chart parametrix: the lift distance to one chart
// group image, with an optional precomputed transverse Van Vleck factor
// (shooting charts fill it; profile charts leave it to the kernel).
struct LiftTerm {
    double d = 0;
    double u0 = 1;
    bool has_u0 = false;
};

// Parametrix chart on the base. Each chart supplies its own lift geometry as
// the list of image distances within a working radius, plus the radial
// coefficient profile applying inside it:
//   profile "flat":  u0 = 1, u1 = 0 exactly
//   profile "round": round sphere of profile_radius
//   profile "shoot": u0 supplied per term, u1 = 0, depth-0 only
struct OrbifoldChart {
    std::string name;
    int group_order = 1;
    MPoint center;
    double psi_lo = 0, psi_hi = 0;   // cutoff radii around center, psi = 1 below lo
    std::string profile = "flat";
    double profile_radius = 1.0;

    // lift distances d(x-tilde, gamma y-tilde) not exceeding rmax
    std::function<std::vector<LiftTerm>(const MPoint& x, const MPoint& y, double rmax)> lift_terms;
    // distance to the chart center when the global metric cannot be used
    // (e.g. the center is a cone point); default M.distance(center, .)
    std::function<double(const MPoint&)> center_distance;

    double psi(const Surface& M, const MPoint& x) const {
        double d = center_distance ? center_distance(x) : M.distance(center, x);
        return 1.0 - smoothstep(d, psi_lo, psi_hi);
    }
};

// Partition weight rho_alpha on the base, one entry per chart; must sum to 1.
using Partition = std::function<std::vector<double>(const MPoint&)>;

// Hermitian twist bundle data in the oriented reference frame. curv12 is the
// curvature acting on the rank-1 fiber, anti-hermitian. potential_im gives A
// as i * (p1 e1* + p2 e2*) in the gauge whose regular point is gauge_anchor.
struct TwistBundle {
    int rank = 1;
    double chern = 0;
    std::function<cplx(const MPoint&)> curv12;
    std::function<Eigen::Vector2d(const MPoint&)> potential_im;
    MPoint gauge_anchor;   // potential is regular away from the antipodal locus
    bool needs_anchor_alignment = false;   // sphere gauges: rotate start point here
};

struct SOneSpace {
    std::string name;
    std::shared_ptr<const Surface> base;
    int p = 1;                  // generic fiber multiplicity of the lift
    double domega0_factor = 0;  // d(omega0) = factor * dvol on the base
    bool spin_ok = true;
    std::function<int(const MPoint&)> isotropy_order;
    std::vector<OrbifoldChart> charts;
    Partition partition;
    // connection potential: omega0 = dzeta + a with a evaluated in the
    // reference frame; defined away from the potential's singular locus
    std::function<Eigen::Vector2d(const MPoint&)> omega0_potential;

    double fiber_length() const { return 2.0 * pi / p; }
};

// --- twists -----------------------------------------------------------------

// constant-curvature line bundle on the torus, F12 = i*B with B = -2 pi c / Area;
// Landau gauge A = i B x dy in unfolded coordinates
inline TwistBundle magnetic_twist(const FlatTorus& torus, double c) {
    TwistBundle tw;
    tw.chern = c;
    double B = -2.0 * pi * c / torus.area();
    tw.curv12 = [B](const MPoint&) { return cplx(0.0, B); };
    tw.potential_im = [B](const MPoint& x) { return Eigen::Vector2d(0.0, B * x(0)); };
    tw.gauge_anchor = MPoint(0, 0, 0);
    return tw;
}

// O(k) monopole bundle, F12 = -i k / (2 r^2), integral first Chern class k.
// North gauge A = -i (k/2)(1 - cos th) dphi, singular only at the south pole.
inline TwistBundle monopole_twist(const RoundSphere& sph, int k) {
    TwistBundle tw;
    tw.chern = k;
    double r = sph.radius();
    tw.curv12 = [k, r](const MPoint&) { return cplx(0.0, -k / (2.0 * r * r)); };
    tw.potential_im = [k, r](const MPoint& x) {
        double ct = x(2) / r;
        double st = std::sqrt(std::max(1e-300, 1.0 - ct * ct));
        // component along e_phi of the reference frame
        return Eigen::Vector2d(0.0, -(k / 2.0) * (1.0 - ct) / (r * st));
    };
    tw.gauge_anchor = MPoint(0, 0, r);
    tw.needs_anchor_alignment = true;
    return tw;
}

inline TwistBundle trivial_twist() {
    TwistBundle tw;
    tw.chern = 0;
    tw.curv12 = [](const MPoint&) { return cplx(0.0, 0.0); };
    tw.potential_im = [](const MPoint&) { return Eigen::Vector2d::Zero(); };
    tw.gauge_anchor = MPoint(0, 0, 0);
    return tw;
}

// --- catalog ----------------------------------------------------------------

namespace detail {

inline OrbifoldChart plane_chart(std::shared_ptr<const FlatTorus> torus) {
    OrbifoldChart ch;
    ch.name = "plane";
    ch.group_order = 1;
    ch.center = MPoint(0.5 * torus->l1(), 0.5 * torus->l2(), 0);
    ch.psi_lo = 1e9;   // single global chart, psi = 1 everywhere
    ch.psi_hi = 2e9;
    ch.center_distance = [](const MPoint&) { return 0.0; };
    ch.profile = "flat";
    ch.lift_terms = [torus](const MPoint& x, const MPoint& y, double rmax) {
        std::vector<LiftTerm> out;
        for (const auto& im : torus->images_near(y, x, rmax)) out.push_back({(im - x).norm(), 1.0, false});
        return out;
    };
    return ch;
}

inline OrbifoldChart sphere_chart(std::shared_ptr<const RoundSphere> sph) {
    OrbifoldChart ch;
    ch.name = "sphere";
    ch.group_order = 1;
    ch.center = MPoint(0, 0, sph->radius());
    ch.psi_lo = 1e9;
    ch.psi_hi = 2e9;
    ch.center_distance = [](const MPoint&) { return 0.0; };
    ch.profile = "round";
    ch.profile_radius = sph->radius();
    ch.lift_terms = [sph](const MPoint& x, const MPoint& y, double rmax) {
        std::vector<LiftTerm> out;
        double d = sph->distance(x, y);
        if (d <= rmax) out.push_back({d, 1.0, false});
        return out;
    };
    return ch;
}

inline OrbifoldChart quotient_chart(std::shared_ptr<const QuotientSphere> qs) {
    OrbifoldChart ch;
    ch.name = "global-quotient";
    ch.group_order = qs->order();
    ch.center = MPoint(0, 0, 1);
    ch.psi_lo = 1e9;
    ch.psi_hi = 2e9;
    ch.center_distance = [](const MPoint&) { return 0.0; };
    ch.profile = "round";
    ch.profile_radius = 1.0;
    ch.lift_terms = [qs](const MPoint& x, const MPoint& y, double rmax) {
        std::vector<LiftTerm> out;
        for (int j = 0; j < qs->order(); ++j) {
            double d = qs->cover().distance(x, qs->rotate(y, j));
            if (d <= rmax) out.push_back({d, 1.0, false});
        }
        return out;
    };
    return ch;
}

} // namespace detail

inline SOneSpace make_flat_torus(double l1, double l2) {
    auto torus = std::make_shared<FlatTorus>(l1, l2);
    SOneSpace sp;
    sp.name = "flat-torus";
    sp.base = torus;
    sp.p = 1;
    sp.domega0_factor = 0.0;
    sp.spin_ok = true;
    sp.isotropy_order = [](const MPoint&) { return 1; };
    sp.charts = {detail::plane_chart(torus)};
    sp.partition = [](const MPoint&) { return std::vector<double>{1.0}; };
    sp.omega0_potential = [](const MPoint&) { return Eigen::Vector2d::Zero(); };
    return sp;
}

// omega0 potential on a round base: a = lambda r^2 (1 - cos th) dphi satisfies
// da = lambda dvol and is regular away from the south pole
inline std::function<Eigen::Vector2d(const MPoint&)> round_omega0_potential(double r, double lambda) {
    return [r, lambda](const MPoint& x) {
        double ct = x(2) / r;
        double st = std::sqrt(std::max(1e-300, 1.0 - ct * ct));
        return Eigen::Vector2d(0.0, lambda * r * r * (1.0 - ct) / (r * st));
    };
}

inline SOneSpace make_hopf() {
    auto sph = std::make_shared<RoundSphere>(0.5);
    SOneSpace sp;
    sp.name = "hopf";
    sp.base = sph;
    sp.p = 1;
    sp.domega0_factor = 2.0;
    sp.spin_ok = true;
    sp.isotropy_order = [](const MPoint&) { return 1; };
    sp.charts = {detail::sphere_chart(sph)};
    sp.partition = [](const MPoint&) { return std::vector<double>{1.0}; };
    sp.omega0_potential = round_omega0_potential(0.5, 2.0);
    return sp;
}

inline SOneSpace make_hopf_p2() {
    auto sph = std::make_shared<RoundSphere>(0.25);
    SOneSpace sp;
    sp.name = "hopf-p2";
    sp.base = sph;
    sp.p = 2;
    sp.domega0_factor = 4.0;
    sp.spin_ok = true;
    sp.isotropy_order = [](const MPoint&) { return 2; };
    sp.charts = {detail::sphere_chart(sph)};
    sp.partition = [](const MPoint&) { return std::vector<double>{1.0}; };
    sp.omega0_potential = round_omega0_potential(0.25, 4.0);
    return sp;
}

inline SOneSpace make_lens(int q) {
    require(q >= 1, "lens order >= 1");
    auto sph = std::make_shared<RoundSphere>(0.5 * q);
    SOneSpace sp;
    sp.name = "lens-" + std::to_string(q);
    sp.base = sph;
    sp.p = 1;
    sp.domega0_factor = 2.0 / q;
    sp.spin_ok = true;
    sp.isotropy_order = [](const MPoint&) { return 1; };
    sp.charts = {detail::sphere_chart(sph)};
    sp.partition = [](const MPoint&) { return std::vector<double>{1.0}; };
    sp.omega0_potential = round_omega0_potential(0.5 * q, 2.0 / q);
    return sp;
}

inline SOneSpace make_football(int q) {
    require(q >= 1, "football order >= 1");
    auto qs = std::make_shared<QuotientSphere>(q);
    SOneSpace sp;
    sp.name = "football-" + std::to_string(q);
    sp.base = qs;
    sp.p = 1;
    sp.domega0_factor = 0.0;   // metric-robustness model, product connection
    sp.spin_ok = (q == 1);
    sp.isotropy_order = [q](const MPoint& x) {
        return (q > 1 && std::abs(std::abs(x(2)) - 1.0) < 1e-12) ? q : 1;
    };
    sp.charts = {detail::quotient_chart(qs)};
    sp.partition = [](const MPoint&) { return std::vector<double>{1.0}; };
    sp.omega0_potential = [](const MPoint&) { return Eigen::Vector2d::Zero(); };
    return sp;
}

inline SOneSpace make_teardrop(int q) {
    require(q >= 2, "teardrop cone order >= 2");
    auto td = std::make_shared<Teardrop>(q);
    SOneSpace sp;
    sp.name = "teardrop-" + std::to_string(q);
    sp.base = td;
    sp.p = 1;
    sp.domega0_factor = 0.0;
    sp.spin_ok = false;
    sp.isotropy_order = [q](const MPoint& x) { return x(0) < 1e-12 ? q : 1; };

    // three radial charts: exact cone cap, smooth blend annulus, round bulk
    OrbifoldChart cap;
    cap.name = "cone-cap";
    cap.group_order = q;
    cap.center = MPoint(0, 0, 0);
    cap.psi_lo = 0.28 * pi;
    cap.psi_hi = 0.299 * pi;
    cap.profile = "round";
    cap.profile_radius = 1.0;
    cap.center_distance = [](const MPoint& x) { return x(0); };
    auto lift_pt = [](double rho, double phi) {
        return MPoint(std::sin(rho) * std::cos(phi), std::sin(rho) * std::sin(phi), std::cos(rho));
    };
    cap.lift_terms = [q, lift_pt](const MPoint& x, const MPoint& y, double rmax) {
        // upstairs round cap with phi-tilde = phi / q
        RoundSphere up(1.0);
        MPoint xl = lift_pt(x(0), x(1) / q);
        std::vector<LiftTerm> out;
        for (int j = 0; j < q; ++j) {
            double d = up.distance(xl, lift_pt(y(0), (y(1) + 2.0 * pi * j) / q));
            if (d <= rmax) out.push_back({d, 1.0, false});
        }
        return out;
    };

    OrbifoldChart blend;
    blend.name = "blend";
    blend.group_order = 1;
    blend.center = MPoint(0.44 * pi, 0, 0);   // annulus in rho, handled by partition
    blend.psi_lo = 1e9;
    blend.psi_hi = 2e9;
    blend.profile = "shoot";
    blend.center_distance = [](const MPoint&) { return 0.0; };
    blend.lift_terms = [td](const MPoint& x, const MPoint& y, double rmax) {
        std::vector<LiftTerm> out;
        double dphi = y(1) - x(1);
        dphi -= 2.0 * pi * std::round(dphi / (2.0 * pi));
        double rough = std::hypot(y(0) - x(0), td->profile(0.5 * (x(0) + y(0))) * dphi);
        if (rough > 1.3 * rmax + 0.05) return out;
        bool ok = false;
        double u0 = 1.0;
        double d = td->shoot_distance(x, y, &ok, &u0);
        if (!ok) {
            // chordal fallback, only reachable for marginal far pairs
            d = rough;
            u0 = 1.0;
        }
        if (d <= rmax) out.push_back({d, u0, true});
        return out;
    };

    OrbifoldChart bulk;
    bulk.name = "round-bulk";
    bulk.group_order = 1;
    bulk.center = MPoint(pi, 0, 0);
    bulk.psi_lo = 1e9;
    bulk.psi_hi = 2e9;
    bulk.profile = "round";
    bulk.profile_radius = 1.0;
    bulk.center_distance = [](const MPoint&) { return 0.0; };
    bulk.lift_terms = [lift_pt](const MPoint& x, const MPoint& y, double rmax) {
        // the south region is exactly the unit round sphere
        RoundSphere up(1.0);
        std::vector<LiftTerm> out;
        double d = up.distance(lift_pt(x(0), x(1)), lift_pt(y(0), y(1)));
        if (d <= rmax) out.push_back({d, 1.0, false});
        return out;
    };

    sp.charts = {cap, blend, bulk};
    sp.partition = [](const MPoint& x) {
        double rho = x(0);
        double wcap = 1.0 - smoothstep(rho, 0.16 * pi, 0.28 * pi);
        double wbulk = smoothstep(rho, 0.50 * pi, 0.62 * pi);
        return std::vector<double>{wcap, 1.0 - wcap - wbulk, wbulk};
    };
    sp.omega0_potential = [](const MPoint&) { return Eigen::Vector2d::Zero(); };
    return sp;
}

// --- characteristic forms -----------------------------------------------------

// Even-degree form on the base, kept as the degree-0 scalar plus the degree-2
// coefficient against the metric volume form. Enough for n = 2: the higher
// terms of the genus series start in degree 4.
struct EvenForm {
    double deg0 = 0;
    std::function<double(const MPoint&)> deg2;
};

// Ahat-genus of the horizontal bundle and the Chern character of the twist,
// evaluated from curvature data. Ahat = 1 - p1/24 + ... has no degree-2 term,
// so on a surface it is the constant 1; ch = rank + (i/2pi) tr F + ....
inline std::pair<EvenForm, EvenForm> chern_weil_forms(const SOneSpace& sp, const TwistBundle& tw) {
    (void)sp;
    EvenForm ahat;
    ahat.deg0 = 1.0;
    ahat.deg2 = [](const MPoint&) { return 0.0; };
    EvenForm ch;
    ch.deg0 = tw.rank;
    ch.deg2 = [f = tw.curv12](const MPoint& x) { return (cplx(0.0, 1.0) * f(x)).real() / (2.0 * pi); };
    return {ahat, ch};
}

struct CatalogParams {
    int q = 2;
    double l1 = 2.0 * pi;
    double l2 = 2.0 * pi;
};

// name forms: flat-torus, hopf, hopf-p2, lens-<q>, teardrop-<q>, football-<q>
inline SOneSpace catalog(const std::string& name, CatalogParams params = {}) {
    auto suffix_int = [](const std::string& s, const std::string& prefix, int* out) {
        if (s.rfind(prefix, 0) != 0) return false;
        std::string tail = s.substr(prefix.size());
        if (tail.empty()) return false;
        for (char c : tail)
            if (!std::isdigit(static_cast<unsigned char>(c))) return false;
        *out = std::stoi(tail);
        return true;
    };
    int q = 0;
    if (name == "flat-torus") return make_flat_torus(params.l1, params.l2);
    if (name == "hopf") return make_hopf();
    if (name == "hopf-p2") return make_hopf_p2();
    if (name == "lens") return make_lens(params.q);
    if (name == "teardrop") return make_teardrop(params.q);
    if (name == "football") return make_football(params.q);
    if (suffix_int(name, "lens-", &q)) return make_lens(q);
    if (suffix_int(name, "teardrop-", &q)) return make_teardrop(q);
    if (suffix_int(name, "football-", &q)) return make_football(q);
    throw std::invalid_argument("unknown model space: " + name);
}

inline std::vector<std::string> catalog_names() {
    return {"flat-torus", "hopf", "hopf-p2", "lens-q", "teardrop-q", "football-q"};
}

} // namespace orbindex

#include <catch2/catch_amalgamated.hpp>

#include <functional>

#include "orbindex/catalog.hpp"
#include "orbindex/heatkernel.hpp"
#include "orbindex/spectral.hpp"

using namespace orbindex;
namespace us = orbindex::unitsphere;

namespace {

MPoint colat(double th, double phi = 0) {
    return MPoint(std::sin(th) * std::cos(phi), std::sin(th) * std::sin(phi), std::cos(th));
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

// brute-force space-time composition (L # R)(s, x, y), independent of the
// polar engine: midpoint-in-space times clustered time quadrature.  The time
// integral stops smin short of both endpoints, where one factor degenerates
// to a delta that the spatial grid cannot resolve.
double generic_sharp(const Surface& M,
                     const std::function<double(double, const MPoint&, const MPoint&)>& L,
                     const std::function<double(double, const MPoint&, const MPoint&)>& R,
                     double s, const MPoint& x, const MPoint& y, int nt, int level,
                     double smin = 0.0) {
    Quad1d tq = time_quad(nt, 0.5 * (s - 2.0 * smin));
    auto nodes = M.quadrature(level);
    double acc = 0.0;
    for (int i = 0; i < nt; ++i) {
        double sg = smin + tq.x[i], w = tq.w[i];
        for (const auto& n : nodes)
            acc += w * n.w * (L(s - sg, x, n.x) * R(sg, n.x, y) + L(sg, x, n.x) * R(s - sg, n.x, y));
    }
    return acc;
}

}  // namespace

TEST_CASE("radial transport coefficients close under differentiation") {
    for (double d : {0.003, 0.02, 0.06, 0.0999, 0.1001, 0.13, 0.3, 1.0, 1.9, 2.4, 2.8}) {
        double h = 1e-5;
        us::Radial rl = us::radial(d - h), rc = us::radial(d), rr = us::radial(d + h);
        CHECK(rel((rr.u0 - rl.u0) / (2 * h), rc.u0p) < 1e-6);
        CHECK(rel((rr.u0p - rl.u0p) / (2 * h), rc.u0pp) < 1e-6);
        CHECK(rel((rr.u1 - rl.u1) / (2 * h), rc.u1p) < 1e-6);
        CHECK(rel((rr.u1p - rl.u1p) / (2 * h), rc.u1pp) < 1e-6);
        if (d >= 0.2) {
            double cot = std::cos(d) / std::sin(d);
            CHECK(rel(cot * rc.u0p, rc.cu0p) < 1e-12);
            CHECK(rel(cot * rc.u1p, rc.cu1p) < 1e-12);
            CHECK(rel(d * cot - 1.0, rc.dcm1) < 1e-12);
        }
    }

    // flat limit: no curvature correction at the base point beyond S/12 = 1/6
    CHECK(us::radial(0.0).u0 == 1.0);
    CHECK(std::abs(us::radial(0.0).u1 - 1.0 / 6.0) < 1e-14);

    // series and closed-form branches meet smoothly
    us::Radial ra = us::radial(us::SERIES_D - 1e-9), rb = us::radial(us::SERIES_D + 1e-9);
    for (auto f : {&us::Radial::u0, &us::Radial::u0p, &us::Radial::u0pp, &us::Radial::u1,
                   &us::Radial::u1p, &us::Radial::u1pp, &us::Radial::cu0p, &us::Radial::cu1p,
                   &us::Radial::dcm1})
        CHECK(std::abs(ra.*f - rb.*f) / std::max(1e-3, std::abs(rb.*f)) < 5e-7);
}

TEST_CASE("parametrix defect matches the heat operator") {
    for (auto [t, d] : std::vector<std::pair<double, double>>{
             {0.4, 0.3}, {0.4, 1.0}, {0.25, 1.8}, {0.4, 2.5}, {0.1, 0.5}, {0.3, 2.6}}) {
        double ht = 1e-4 * t, hd = 2e-4;
        double dtH = (us::parametrix(t + ht, d) - us::parametrix(t - ht, d)) / (2 * ht);
        double lap =
            (us::parametrix(t, d + hd) - 2 * us::parametrix(t, d) + us::parametrix(t, d - hd)) /
                (hd * hd) +
            std::cos(d) / std::sin(d) * (us::parametrix(t, d + hd) - us::parametrix(t, d - hd)) /
                (2 * hd);
        double fd = dtH - 0.5 * lap;
        double scale = us::gaussian(t, d) * std::max(1.0, std::abs(us::psi(t, d)));
        CHECK(std::abs(fd - us::defect(t, d)) / scale < 3e-5);
    }

    // defect vanishes identically outside the cutoff
    CHECK(us::defect(0.3, 0.96 * pi) == 0.0);
    CHECK(us::parametrix(0.3, 0.96 * pi) == 0.0);
}

TEST_CASE("sharp composition engine agrees with brute force") {
    SECTION("constant kernels on a circle reduce to area times time") {
        Circle c(3.0);
        auto L = [](double, const MPoint&, const MPoint&) { return 1.3; };
        auto R = [](double, const MPoint&, const MPoint&) { return 0.7; };
        double v = generic_sharp(c, L, R, 0.6, MPoint(0, 0, 0), MPoint(1, 0, 0), 16, 300);
        CHECK(rel(v, 1.3 * 0.7 * 3.0 * 0.6) < 1e-12);
    }

    SECTION("polar composition matches whole-sphere quadrature") {
        RoundSphere S(1.0);
        auto Lk = [&](double tau, const MPoint& a, const MPoint& b) {
            return us::parametrix(tau, S.distance(a, b));
        };
        auto Rk = [&](double tau, const MPoint& a, const MPoint& b) {
            return us::defect(tau, S.distance(a, b));
        };
        auto Ufun = [](double tau, double th) { return us::u_factor(tau, th); };
        std::vector<std::tuple<double, double, double>> cases{{0.3, 1.0, 1e-3},
                                                              {0.35, 2.2, 4e-2}};
        for (auto [s, d0, tol] : cases) {
            double G = us::gaussian(s, d0);
            MPoint x = colat(0), y = colat(d0);
            // endpoint cut enters linearly; extrapolate it away in smin
            double v1 = generic_sharp(S, Lk, Rk, s, x, y, 16, 96, 0.005) / G;
            double v2 = generic_sharp(S, Lk, Rk, s, x, y, 16, 96, 0.01) / G;
            double v4 = generic_sharp(S, Lk, Rk, s, x, y, 16, 96, 0.02) / G;
            double gen = (8.0 * v1 - 6.0 * v2 + v4) / 3.0;
            double pol = sharp_normalized(Ufun, s, d0);
            CHECK(rel(pol, gen) < tol);
        }
    }
}

TEST_CASE("unit sphere tables match the eigenfunction expansion") {
    auto& uh = UnitSphereHeat::instance();

    // short times come straight from the parametrix and its corrections
    std::vector<std::pair<double, double>> direct{{0.01, 1e-7}, {0.05, 1e-7}, {0.1, 2e-7},
                                                  {0.2, 2e-4}};
    for (auto [tp, tol] : direct) {
        for (int i = 0; i <= 54; ++i) {
            double d = 0.75 * pi * i / 54;
            if (!sphere_spectral_valid(1.0, tp, d)) continue;
            double ref = sphere_spectral_density(1.0, tp, d);
            CHECK(rel(uh.density(tp, d), ref) < tol);
        }
    }

    // wide times are doubled; the claim holds away from the cut locus, where
    // the folded-back Born truncation caps the accuracy at the percent level
    for (double tp : {0.4, 0.8, 1.6, 3.2, 1.0}) {
        for (int i = 0; i <= 72; ++i) {
            double d = pi * i / 72;
            if (!sphere_spectral_valid(1.0, tp, d)) continue;
            double ref = sphere_spectral_density(1.0, tp, d);
            double tol = (d <= 0.75 * pi) ? 5e-6 : 6e-2;
            CHECK(rel(uh.density(tp, d), ref) < tol);
        }
    }
}

TEST_CASE("sphere kernel rescales to any radius") {
    auto sph = std::make_shared<RoundSphere>(0.5);
    SphereHeat K(sph);
    std::vector<std::pair<double, double>> cases{{0.05, 1e-4}, {0.2, 1e-6}};
    for (auto [t, tol] : cases) {
        for (int i = 0; i <= 24; ++i) {
            double d = 0.75 * pi * 0.5 * i / 24;
            if (!sphere_spectral_valid(0.5, t, d)) continue;
            double ref = sphere_spectral_density(0.5, t, d);
            MPoint x = 0.5 * colat(0.0), y = 0.5 * colat(d / 0.5);
            CHECK(rel(K.density(t, x, y), ref) < tol);
        }
    }

    // prepare() only warms caches, it must not change values
    SphereHeat K2(sph);
    K2.prepare({0.05, 0.2});
    CHECK(K2.density(0.05, 0.5 * colat(0.0), 0.5 * colat(0.8)) ==
          K.density(0.05, 0.5 * colat(0.0), 0.5 * colat(0.8)));
}

TEST_CASE("table kernel satisfies the heat equation and semigroup law") {
    auto& uh = UnitSphereHeat::instance();

    SECTION("composition over the sphere") {
        RoundSphere S(1.0);
        auto nodes = S.quadrature(64);
        for (auto [t1, t2] : std::vector<std::pair<double, double>>{{0.15, 0.25}, {0.3, 0.3}}) {
            MPoint x = colat(0), y = colat(0.9);
            double acc = 0;
            for (const auto& n : nodes)
                acc += n.w * uh.density(t1, S.distance(x, n.x)) * uh.density(t2, S.distance(n.x, y));
            CHECK(rel(acc, uh.density(t1 + t2, 0.9)) < 1e-7);
        }
    }

    SECTION("finite-difference heat operator") {
        double t = 0.3, d = 1.0, ht = 0.01 * t, hd = 0.01;
        double dt = (uh.density(t + ht, d) - uh.density(t - ht, d)) / (2 * ht);
        double lap =
            (uh.density(t, d + hd) - 2 * uh.density(t, d) + uh.density(t, d - hd)) / (hd * hd) +
            std::cos(d) / std::sin(d) * (uh.density(t, d + hd) - uh.density(t, d - hd)) / (2 * hd);
        CHECK(std::abs(dt - 0.5 * lap) < 2e-3 * std::abs(dt));
    }
}

TEST_CASE("torus kernel matches its dual lattice sum") {
    for (auto [l1, l2] : std::vector<std::pair<double, double>>{{2 * pi, 2 * pi}, {1.3, 2.1}}) {
        auto T = std::make_shared<FlatTorus>(l1, l2);
        TorusHeat K(T);
        MPoint x(0.2 * l1, 0.3 * l2, 0);
        for (double t : {0.05, 0.4, 3.0})
            for (auto [dx, dy] : std::vector<std::pair<double, double>>{
                     {0.0, 0.0}, {0.23 * l1, -0.31 * l2}, {0.5 * l1, 0.5 * l2}}) {
                MPoint y = x + MPoint(dx, dy, 0);
                double dmin = T->distance(x, y);
                // the dual series cancels down to the kernel scale; below
                // this the reference itself is roundoff noise
                if (std::exp(-dmin * dmin / (2 * t)) < 1e-10) continue;
                double ref = torus_spectral_density(l1, l2, t, x(0) - y(0), x(1) - y(1));
                CHECK(rel(K.density(t, x, y), ref) < 1e-8);
            }
    }
}

TEST_CASE("quotient kernels fold the cover correctly") {
    auto stamp = [&](const SOneSpace& sp, const HeatKernel& K, double t, const MPoint& x, int lvl) {
        double acc = 0;
        for (const auto& n : sp.base->quadrature(lvl)) acc += n.w * K.density(t, x, n.x);
        return acc - 1.0;
    };

    auto torus = make_flat_torus(2 * pi, 2 * pi);
    CHECK(std::abs(stamp(torus, *make_heat_kernel(torus), 0.3, MPoint(1.0, 2.0, 0), 64)) < 1e-12);

    auto hopf = make_hopf();
    auto Kh = make_heat_kernel(hopf);
    CHECK(std::abs(stamp(hopf, *Kh, 0.05, 0.5 * colat(1.1, 0.3), 64)) < 1e-7);
    CHECK(std::abs(stamp(hopf, *Kh, 0.2, 0.5 * colat(1.1, 0.3), 64)) < 1e-7);

    auto fb = make_football(2);
    CHECK(std::abs(stamp(fb, *make_heat_kernel(fb), 0.05, colat(0.9, 0.2), 64)) < 1e-7);

    // diagonal heat density jumps by the cone order at the cone point and is
    // unaffected on the free stratum
    auto& uh = UnitSphereHeat::instance();
    for (int q : {2, 3}) {
        auto qs = std::make_shared<QuotientSphere>(q);
        QuotientHeat K(qs);
        double t = 0.01;
        double near_ratio = K.density(t, colat(0.01), colat(0.01)) / uh.density(t, 0.0);
        double far_ratio = K.density(t, colat(pi / 2), colat(pi / 2)) / uh.density(t, 0.0);
        CHECK(std::abs(near_ratio / q - 1.0) < 0.025);
        CHECK(std::abs(far_ratio - 1.0) < 1e-6);
    }
}

TEST_CASE("patched kernel agrees with exact kernels on flat and round charts") {
    auto sp = make_flat_torus(2 * pi, 2 * pi);
    PatchedHeat P(sp);
    TorusHeat T(std::dynamic_pointer_cast<const FlatTorus>(sp.base));
    MPoint x(1.0, 2.0, 0);
    for (double dx : {0.0, 0.3, 0.8}) {
        MPoint y = x + MPoint(dx, 0.2, 0);
        CHECK(rel(P.density(0.25, x, y), T.density(0.25, x, y)) < 1e-12);
    }

    auto hopf = make_hopf();
    PatchedHeat Ph(hopf);
    SphereHeat Sh(std::dynamic_pointer_cast<const RoundSphere>(hopf.base));
    MPoint hx = 0.5 * colat(1.0);
    for (double d : {0.0, 0.05, 0.1}) {
        MPoint hy = 0.5 * colat(1.0 + d / 0.5);
        CHECK(rel(Ph.density(0.005, hx, hy), Sh.density(0.005, hx, hy)) < 1e-4);
    }
}

TEST_CASE("teardrop kernel is symmetric, complete and near-solving") {
    auto td = make_teardrop(3);
    auto K = make_heat_kernel(td);

    SECTION("mass, including across chart seams") {
        for (double t : {0.02, 0.05})
            for (double rho : {0.1, 0.95, 1.4, 2.5}) {
                double acc = 0;
                for (const auto& n : td.base->quadrature(60))
                    acc += n.w * K->density(t, MPoint(rho, 0.4, 0), n.x);
                CHECK(std::abs(acc - 1.0) < 1.5 * t);
            }
    }

    SECTION("symmetry") {
        for (auto [a, b] : std::vector<std::pair<MPoint, MPoint>>{
                 {MPoint(0.85, 0.2, 0), MPoint(1.05, 0.5, 0)},
                 {MPoint(1.8, 0.0, 0), MPoint(2.0, 0.3, 0)},
                 {MPoint(0.3, 0.1, 0), MPoint(0.55, 0.8, 0)}}) {
            double pab = K->density(0.01, a, b), pba = K->density(0.01, b, a);
            CHECK(std::abs(pab - pba) / (0.5 * (pab + pba)) < 1e-2);
        }
    }

    SECTION("heat equation residual in surface coordinates") {
        auto tdp = std::dynamic_pointer_cast<const Teardrop>(td.base);
        MPoint x(1.3, 0.7, 0), y(1.42, 0.15, 0);
        double t = 0.01, ht = 1e-4, hr = 1e-3, hp = 1e-3;
        auto f = [&](double tt, double rho, double phi) {
            return K->density(tt, x, MPoint(rho, phi, 0));
        };
        double dt = (f(t + ht, y(0), y(1)) - f(t - ht, y(0), y(1))) / (2 * ht);
        double h = tdp->profile(y(0)), h1 = tdp->profile_d1(y(0));
        double prr =
            (f(t, y(0) + hr, y(1)) - 2 * f(t, y(0), y(1)) + f(t, y(0) - hr, y(1))) / (hr * hr);
        double pr = (f(t, y(0) + hr, y(1)) - f(t, y(0) - hr, y(1))) / (2 * hr);
        double ppp =
            (f(t, y(0), y(1) + hp) - 2 * f(t, y(0), y(1)) + f(t, y(0), y(1) - hp)) / (hp * hp);
        double lap = prr + (h1 / h) * pr + ppp / (h * h);
        CHECK(std::abs(dt - 0.5 * lap) < 5e-3 * std::abs(dt));
    }
}

TEST_CASE("log gradients match finite differences") {
    auto& uh = UnitSphereHeat::instance();
    for (auto [tp, d] : std::vector<std::pair<double, double>>{{0.1, 0.3}, {0.4, 1.2}, {1.6, 2.0}}) {
        double h = 1e-4;
        double fd = (std::log(uh.density(tp, d + h)) - std::log(uh.density(tp, d - h))) / (2 * h);
        CHECK(std::abs(uh.dlog_radial(tp, d) - fd) / std::max(1.0, std::abs(fd)) < 1e-6);
    }

    auto check_grad = [](const HeatKernel& K, const Surface& M, double t, const MPoint& x,
                         const MPoint& y) {
        Frame fx = M.reference_frame(x);
        Eigen::Vector2d g = K.log_gradient_x(t, x, fx, y);
        for (int i = 0; i < 2; ++i) {
            Eigen::Vector2d dv = Eigen::Vector2d::Zero();
            double h = 1e-5;
            dv(i) = h;
            double fp = std::log(K.density(t, M.exp_step(x, fx, dv, nullptr), y));
            double fm = std::log(K.density(t, M.exp_step(x, fx, -dv, nullptr), y));
            double fd = (fp - fm) / (2 * h);
            CHECK(std::abs(g(i) - fd) / std::max(1.0, std::abs(fd)) < 1e-4);
        }
    };

    auto sph = std::make_shared<RoundSphere>(0.5);
    check_grad(SphereHeat(sph), *sph, 0.05, 0.5 * colat(0.7, 0.4), 0.5 * colat(1.1, 0.9));

    auto qs = std::make_shared<QuotientSphere>(3);
    check_grad(QuotientHeat(qs), *qs, 0.05, colat(0.8, 0.3), colat(1.0, 0.9));

    auto tor = std::make_shared<FlatTorus>(1.3, 2.1);
    check_grad(TorusHeat(tor), *tor, 0.08, MPoint(0.3, 1.1, 0), MPoint(0.9, 0.2, 0));

    auto td = make_teardrop(3);
    check_grad(*make_heat_kernel(td), *td.base, 0.01, MPoint(1.3, 0.7, 0), MPoint(1.42, 0.15, 0));
}

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "orbindex/catalog.hpp"
#include "orbindex/geometry.hpp"

using namespace orbindex;

namespace {

Frame rotate_frame(const Frame& f, double a) {
    Frame g;
    g.col(0) = std::cos(a) * f.col(0) + std::sin(a) * f.col(1);
    g.col(1) = -std::sin(a) * f.col(0) + std::cos(a) * f.col(1);
    return g;
}

// angle beta with f_fin.col(0) = cos(beta) f0.col(0) + sin(beta) f0.col(1)
double frame_rotation_angle(const Frame& f0, const Frame& ffin) {
    double c = ffin.col(0).dot(f0.col(0));
    double s = ffin.col(0).dot(f0.col(1));
    return std::atan2(s, c);
}

double wrap_pi(double a) {
    a = std::fmod(a + pi, 2.0 * pi);
    if (a < 0) a += 2.0 * pi;
    return a - pi;
}

// transport a frame along a prescribed polyline of surface points
Frame transport_along(const Surface& M, const std::vector<MPoint>& pts, const Frame& f0) {
    Frame f = f0;
    MPoint x = pts.front();
    for (size_t i = 1; i < pts.size(); ++i) {
        Eigen::Vector2d v = M.log_map(x, f, pts[i]);
        Frame fn;
        MPoint xn = M.exp_step(x, f, v, &fn);
        REQUIRE(M.distance(xn, pts[i]) < 1e-8);
        x = pts[i];
        f = fn;
    }
    return f;
}

} // namespace

TEST_CASE("revolution profile curvature matches finite differences") {
    for (int q : {2, 3}) {
        Teardrop td(q);
        const double h = 1e-4;
        for (double rho = 0.05; rho < pi - 0.05; rho += 0.0437) {
            double d2 = (td.profile(rho + h) - 2.0 * td.profile(rho) + td.profile(rho - h)) / (h * h);
            double s_fd = -2.0 * d2 / td.profile(rho);
            double s = td.scalar_curvature(MPoint(rho, 0.3, 0));
            REQUIRE(std::abs(s - s_fd) < 1e-5 * std::max(1.0, std::abs(s)));
        }
        // exactly round at both ends of the profile
        REQUIRE(td.scalar_curvature(MPoint(0.05, 0, 0)) == Catch::Approx(2.0).margin(1e-12));
        REQUIRE(td.scalar_curvature(MPoint(pi - 0.05, 0, 0)) == Catch::Approx(2.0).margin(1e-12));
        REQUIRE(td.scalar_curvature(MPoint(1e-10, 0, 0)) == Catch::Approx(2.0).margin(1e-9));
    }
}

TEST_CASE("exp and distance agree on all model surfaces") {
    std::mt19937_64 rng(2211);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    SECTION("flat torus") {
        FlatTorus M(2.0 * pi, 4.0);
        for (int i = 0; i < 50; ++i) {
            MPoint x(2.0 * pi * uni(rng), 4.0 * uni(rng), 0);
            Frame f = rotate_frame(M.reference_frame(x), 2.0 * pi * uni(rng));
            Eigen::Vector2d v(uni(rng) - 0.5, uni(rng) - 0.5);
            v *= 1.5;
            MPoint y = M.exp_step(x, f, v, nullptr);
            REQUIRE(M.distance(x, y) == Catch::Approx(v.norm()).margin(1e-12));
            Eigen::Vector2d w = M.log_map(x, f, y);
            REQUIRE((w - v).norm() < 1e-12);
        }
    }

    SECTION("round sphere") {
        RoundSphere M(0.5);
        for (int i = 0; i < 50; ++i) {
            double ct = 2.0 * uni(rng) - 1.0, ph = 2.0 * pi * uni(rng);
            double st = std::sqrt(1.0 - ct * ct);
            MPoint x = 0.5 * MPoint(st * std::cos(ph), st * std::sin(ph), ct);
            Frame f = rotate_frame(M.reference_frame(x), 2.0 * pi * uni(rng));
            double a = 2.0 * pi * uni(rng), len = 0.7 * uni(rng) + 0.01;
            Eigen::Vector2d v(len * std::cos(a), len * std::sin(a));
            Frame ft;
            MPoint y = M.exp_step(x, f, v, &ft);
            REQUIRE(std::abs(y.norm() - 0.5) < 1e-13);
            REQUIRE(M.distance(x, y) == Catch::Approx(len).margin(1e-12));
            REQUIRE((M.log_map(x, f, y) - v).norm() < 1e-11);
            // transported frame stays orthonormal and tangent
            REQUIRE(std::abs(ft.col(0).dot(ft.col(1))) < 1e-13);
            REQUIRE(std::abs(ft.col(0).norm() - 1.0) < 1e-13);
            REQUIRE(std::abs(ft.col(0).dot(y)) < 1e-13);
            // orientation: f0 x f1 points outward before and after
            REQUIRE(f.col(0).cross(f.col(1)).dot(x) > 0);
            REQUIRE(ft.col(0).cross(ft.col(1)).dot(y) > 0);
        }
    }

    SECTION("quotient sphere") {
        QuotientSphere M(3);
        for (int i = 0; i < 30; ++i) {
            // keep clear of the cone points where wrap-around geodesics win
            double th = 0.8 + (pi - 1.6) * uni(rng), ph = 2.0 * pi * uni(rng);
            MPoint x(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
            Frame f = M.reference_frame(x);
            double a = 2.0 * pi * uni(rng);
            Eigen::Vector2d v(0.2 * std::cos(a), 0.2 * std::sin(a));
            MPoint y = M.exp_step(x, f, v, nullptr);
            REQUIRE(M.distance(x, y) == Catch::Approx(0.2).margin(1e-12));
            REQUIRE((M.log_map(x, f, y) - v).norm() < 1e-11);
            // the quotient distance never exceeds the covering distance
            REQUIRE(M.distance(x, y) <= M.cover().distance(x, y) + 1e-14);
        }
        // near a cone point the quotient metric is genuinely shorter
        MPoint xp(std::sin(0.05), 0, std::cos(0.05));
        MPoint yp(std::sin(0.05) * std::cos(pi), std::sin(0.05) * std::sin(pi), std::cos(0.05));
        REQUIRE(M.distance(xp, yp) < M.cover().distance(xp, yp) - 1e-3);
    }

    SECTION("teardrop") {
        Teardrop M(2);
        for (double rho0 : {0.2 * pi, 0.45 * pi, 0.8 * pi}) {
            for (int i = 0; i < 12; ++i) {
                MPoint x(rho0, 2.0 * pi * uni(rng), 0);
                Frame f = rotate_frame(M.reference_frame(x), 2.0 * pi * uni(rng));
                double a = 2.0 * pi * uni(rng);
                Eigen::Vector2d v(0.15 * std::cos(a), 0.15 * std::sin(a));
                MPoint y = M.exp_step(x, f, v, nullptr);
                REQUIRE(M.distance(x, y) == Catch::Approx(0.15).margin(1e-6));
                REQUIRE((M.log_map(x, f, y) - v).norm() < 1e-6);
            }
        }
        // meridian geodesic crossing every region, exact by symmetry
        MPoint x(0.25 * pi, 0.3, 0);
        Frame f = M.reference_frame(x);
        MPoint y = M.exp_step(x, f, Eigen::Vector2d(1.2, 0), nullptr);
        REQUIRE(y(0) == Catch::Approx(0.25 * pi + 1.2).margin(1e-10));
        REQUIRE(M.distance(x, y) == Catch::Approx(1.2).margin(1e-10));
        // off-meridian pair across the blend
        MPoint x2(0.45 * pi, 1.0, 0);
        Frame f2 = M.reference_frame(x2);
        Eigen::Vector2d v2(0.5 * std::cos(0.35), 0.5 * std::sin(0.35));
        MPoint y2 = M.exp_step(x2, f2, v2, nullptr);
        REQUIRE(M.distance(x2, y2) == Catch::Approx(0.5).margin(1e-6));
    }
}

TEST_CASE("geodesic segments compose under frame transport") {
    SECTION("sphere") {
        RoundSphere M(1.0);
        MPoint x = MPoint(1, 2, -1).normalized();
        Frame f = M.reference_frame(x);
        Eigen::Vector2d w(0.6, -0.3);
        MPoint y_once = M.exp_step(x, f, 2.0 * w, nullptr);
        Frame fm;
        MPoint xm = M.exp_step(x, f, w, &fm);
        MPoint y_twice = M.exp_step(xm, fm, w, nullptr);
        REQUIRE((y_once - y_twice).norm() < 1e-13);
    }
    SECTION("teardrop") {
        Teardrop M(3);
        MPoint x(0.5 * pi, 0.7, 0);
        Frame f = M.reference_frame(x);
        Eigen::Vector2d w(0.11, 0.17);
        MPoint y_once = M.exp_step(x, f, 2.0 * w, nullptr);
        Frame fm;
        MPoint xm = M.exp_step(x, f, w, &fm);
        MPoint y_twice = M.exp_step(xm, fm, w, nullptr);
        REQUIRE(std::abs(y_once(0) - y_twice(0)) < 1e-9);
        REQUIRE(std::abs(wrap_pi(y_once(1) - y_twice(1))) < 1e-9);
    }
}

TEST_CASE("octant loop on the unit sphere rotates the frame by +pi/2") {
    // classic holonomy: transporting around the positively oriented octant
    // N -> (1,0,0) -> (0,1,0) -> N turns x-hat into y-hat
    RoundSphere M(1.0);
    std::vector<MPoint> loop = {MPoint(0, 0, 1), MPoint(1, 0, 0), MPoint(0, 1, 0), MPoint(0, 0, 1)};
    Frame f0 = M.reference_frame(loop[0]);
    Frame ff = transport_along(M, loop, f0);
    double beta = frame_rotation_angle(f0, ff);
    REQUIRE(beta == Catch::Approx(0.5 * pi).margin(1e-10));
    REQUIRE((ff.col(1) + f0.col(0)).norm() < 1e-10);
}

TEST_CASE("latitude loop holonomy equals the enclosed curvature integral") {
    RoundSphere M(1.0);
    const int k = 3000;
    for (double th : {0.4, 0.8, 1.2, 2.0}) {
        std::vector<MPoint> loop;
        loop.reserve(k + 1);
        for (int i = 0; i <= k; ++i) {
            double phi = 2.0 * pi * i / k;
            loop.emplace_back(std::sin(th) * std::cos(phi), std::sin(th) * std::sin(phi), std::cos(th));
        }
        Frame f0 = rotate_frame(M.reference_frame(loop[0]), 0.37);
        Frame ff = transport_along(M, loop, f0);
        double beta = frame_rotation_angle(f0, ff);
        double expected = wrap_pi(2.0 * pi * (1.0 - std::cos(th)));
        REQUIRE(beta == Catch::Approx(expected).margin(1e-5));
    }
}

TEST_CASE("cone loop holonomy matches Gauss-Bonnet with the deficit") {
    struct Case {
        int q;
        double rho0;
    };
    for (Case c : {Case{3, 0.1}, Case{2, 0.15}}) {
        Teardrop M(c.q);
        const int k = 1500;
        std::vector<MPoint> loop;
        loop.reserve(k + 1);
        for (int i = 0; i <= k; ++i) loop.emplace_back(c.rho0, 2.0 * pi * i / k, 0);
        Frame f0 = M.reference_frame(loop[0]);
        Frame ff = transport_along(M, loop, f0);
        double beta = frame_rotation_angle(f0, ff);
        // deficit 2 pi (1 - 1/q) plus the smooth cap curvature (2/q) pi (1 - cos rho0)
        double expected = wrap_pi(2.0 * pi * (1.0 - 1.0 / c.q) +
                                  (2.0 * pi / c.q) * (1.0 - std::cos(c.rho0)));
        REQUIRE(beta == Catch::Approx(expected).margin(1e-5));
    }
}

TEST_CASE("torus lattice images are complete and reproduce the distance") {
    FlatTorus M(2.0 * pi, 4.0);
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        MPoint x(2.0 * pi * uni(rng), 4.0 * uni(rng), 0);
        MPoint y(2.0 * pi * uni(rng), 4.0 * uni(rng), 0);
        double rmax = 7.0;
        auto ims = M.images_near(y, x, rmax);
        // brute force over a generous lattice window
        std::vector<MPoint> brute;
        for (int a = -4; a <= 4; ++a)
            for (int b = -4; b <= 4; ++b) {
                MPoint p(y(0) + 2.0 * pi * a, y(1) + 4.0 * b, 0);
                if ((p - x).norm() <= rmax) brute.push_back(p);
            }
        REQUIRE(ims.size() == brute.size());
        double dmin = std::numeric_limits<double>::infinity();
        for (const auto& p : ims) dmin = std::min(dmin, (p - x).norm());
        REQUIRE(dmin == Catch::Approx(M.distance(x, y)).margin(1e-12));
    }
}

TEST_CASE("quadrature rules integrate known functions exactly") {
    SECTION("torus trig") {
        FlatTorus M(2.0 * pi, 2.0 * pi);
        auto q = M.quadrature(32);
        double s1 = 0, s2 = 0;
        for (const auto& n : q) {
            s1 += n.w;
            s2 += n.w * std::cos(n.x(0)) * std::cos(n.x(0));
        }
        REQUIRE(s1 == Catch::Approx(M.area()).margin(1e-12));
        REQUIRE(s2 == Catch::Approx(2.0 * pi * pi).margin(1e-10));
    }
    SECTION("sphere moments") {
        RoundSphere M(0.5);
        auto q = M.quadrature(24);
        Eigen::Vector3d a(1, 2, 3);
        double s1 = 0, s2 = 0;
        for (const auto& n : q) {
            s1 += n.w;
            double t = n.x.dot(a);
            s2 += n.w * t * t;
        }
        double r = 0.5;
        REQUIRE(s1 == Catch::Approx(4.0 * pi * r * r).margin(1e-12));
        REQUIRE(s2 == Catch::Approx(4.0 * pi * r * r * r * r / 3.0 * a.squaredNorm()).margin(1e-10));
    }
    SECTION("quotient invariant moment") {
        QuotientSphere M(4);
        auto q = M.quadrature(24);
        double s1 = 0, s2 = 0;
        for (const auto& n : q) {
            s1 += n.w;
            s2 += n.w * n.x(2) * n.x(2);
        }
        REQUIRE(s1 == Catch::Approx(pi).margin(1e-12));
        REQUIRE(s2 == Catch::Approx(pi / 3.0).margin(1e-10));
    }
}

TEST_CASE("teardrop total curvature satisfies Gauss-Bonnet") {
    for (int q : {2, 3}) {
        Teardrop M(q);
        // piecewise-smooth 1d integrals, split at the blend kinks
        auto f = [&](double r) { return M.scalar_curvature(MPoint(r, 0, 0)) * 2.0 * pi * M.profile(r); };
        double total = adaptive_simpson(f, 1e-9, Teardrop::blend_lo, 1e-11) +
                       adaptive_simpson(f, Teardrop::blend_lo, Teardrop::blend_hi, 1e-11) +
                       adaptive_simpson(f, Teardrop::blend_hi, pi - 1e-9, 1e-11);
        // smooth part of int S = 4 pi chi - 2 * deficit = 4 pi (1 + 1/q)
        REQUIRE(total == Catch::Approx(4.0 * pi * (1.0 + 1.0 / q)).margin(1e-6));

        double area = adaptive_simpson([&](double r) { return 2.0 * pi * M.profile(r); }, 0.0, pi, 1e-12);
        REQUIRE(area == Catch::Approx(M.area()).margin(1e-9));

        auto quad = M.quadrature(80);
        double s = 0, a2 = 0;
        for (const auto& n : quad) {
            s += n.w * M.scalar_curvature(n.x);
            a2 += n.w;
        }
        REQUIRE(a2 == Catch::Approx(M.area()).margin(1e-10));
        REQUIRE(s == Catch::Approx(4.0 * pi * (1.0 + 1.0 / q)).margin(1e-8));
    }
}

TEST_CASE("twist curvatures integrate to the declared Chern numbers") {
    SECTION("magnetic torus") {
        auto torus = std::make_shared<FlatTorus>(2.0 * pi, 2.0 * pi);
        for (double c : {0.0, 1.0, 3.0}) {
            TwistBundle tw = magnetic_twist(*torus, c);
            auto q = torus->quadrature(16);
            double total = 0;
            for (const auto& n : q) total += n.w * (cplx(0, 1) * tw.curv12(n.x) / (2.0 * pi)).real();
            REQUIRE(total == Catch::Approx(c).margin(1e-12));
        }
    }
    SECTION("monopole sphere") {
        for (double r : {0.5, 0.25}) {
            RoundSphere sph(r);
            for (int k : {-2, 1, 5}) {
                TwistBundle tw = monopole_twist(sph, k);
                auto q = sph.quadrature(20);
                double total = 0;
                for (const auto& n : q) total += n.w * (cplx(0, 1) * tw.curv12(n.x) / (2.0 * pi)).real();
                REQUIRE(total == Catch::Approx(double(k)).margin(1e-12));
            }
        }
    }
}

TEST_CASE("gauge potentials satisfy Stokes on exact loops") {
    SECTION("Landau gauge rectangle") {
        FlatTorus torus(2.0 * pi, 2.0 * pi);
        TwistBundle tw = magnetic_twist(torus, 3.0);
        double a = 2.1, b = 1.3;
        // A = i B x dy: only the vertical edges contribute
        Quad1d g = gauss_legendre_ab(16, 0.0, b);
        double circ = 0;
        for (size_t i = 0; i < g.x.size(); ++i) {
            circ += g.w[i] * tw.potential_im(MPoint(a, g.x[i], 0))(1);   // up at x=a
            circ -= g.w[i] * tw.potential_im(MPoint(0.0, g.x[i], 0))(1); // down at x=0
        }
        double f12 = tw.curv12(MPoint(0, 0, 0)).imag();
        REQUIRE(circ == Catch::Approx(f12 * a * b).margin(1e-12));
    }
    SECTION("monopole latitude circles") {
        RoundSphere sph(0.5);
        TwistBundle tw = monopole_twist(sph, 3);
        for (double th : {0.5, 1.2, 2.4}) {
            double r = 0.5;
            MPoint x(r * std::sin(th), 0, r * std::cos(th));
            // counterclockwise circulation = A_phi * circumference
            double circ = tw.potential_im(x)(1) * 2.0 * pi * r * std::sin(th);
            // int_cap F = F12 * cap area
            double cap = tw.curv12(x).imag() * 2.0 * pi * r * r * (1.0 - std::cos(th));
            REQUIRE(circ == Catch::Approx(cap).margin(1e-12));
        }
    }
}

TEST_CASE("omega0 potentials pair with the declared volume factor") {
    struct Entry {
        SOneSpace sp;
        double euler;   // (1/2pi) int d(omega0)
    };
    std::vector<Entry> entries;
    entries.push_back({make_hopf(), 1.0});
    entries.push_back({make_hopf_p2(), 0.5});
    entries.push_back({make_lens(3), 3.0});
    for (auto& e : entries) {
        const auto* sph = dynamic_cast<const RoundSphere*>(e.sp.base.get());
        REQUIRE(sph != nullptr);
        double r = sph->radius(), lambda = e.sp.domega0_factor;
        for (double th : {0.6, 1.4, 2.2}) {
            MPoint x(r * std::sin(th), 0, r * std::cos(th));
            double circ = e.sp.omega0_potential(x)(1) * 2.0 * pi * r * std::sin(th);
            double cap = lambda * 2.0 * pi * r * r * (1.0 - std::cos(th));
            REQUIRE(circ == Catch::Approx(cap).margin(1e-12));
        }
        double total = lambda * sph->area() / (2.0 * pi);
        REQUIRE(total == Catch::Approx(e.euler).margin(1e-12));
    }
}

TEST_CASE("isotropy orders and orbit identifications") {
    SECTION("football") {
        SOneSpace sp = make_football(4);
        const auto* qs = dynamic_cast<const QuotientSphere*>(sp.base.get());
        REQUIRE(qs != nullptr);
        REQUIRE(sp.isotropy_order(MPoint(0, 0, 1)) == 4);
        REQUIRE(sp.isotropy_order(MPoint(0, 0, -1)) == 4);
        MPoint x = MPoint(1, 1, 1).normalized();
        REQUIRE(sp.isotropy_order(x) == 1);
        // group images coincide downstairs
        for (int j = 1; j < 4; ++j) REQUIRE(qs->distance(x, qs->rotate(x, j)) < 1e-13);
        MPoint y = qs->rotate(x, 2);
        qs->fold(y);
        MPoint xf = x;
        qs->fold(xf);
        REQUIRE((y - xf).norm() < 1e-13);
        // folding keeps the frame orthonormal
        MPoint z = qs->rotate(x, 3);
        Frame f = qs->reference_frame(z);
        qs->fold(z, &f);
        REQUIRE(std::abs(f.col(0).dot(f.col(1))) < 1e-13);
        REQUIRE(std::abs(f.col(0).norm() - 1.0) < 1e-13);
        REQUIRE(std::abs(f.col(0).dot(z)) < 1e-13);
    }
    SECTION("teardrop and lifts") {
        SOneSpace sp = make_teardrop(3);
        REQUIRE(sp.isotropy_order(MPoint(0, 0, 0)) == 3);
        REQUIRE(sp.isotropy_order(MPoint(0.5, 1, 0)) == 1);
        REQUIRE_FALSE(sp.spin_ok);
        SOneSpace h2 = make_hopf_p2();
        REQUIRE(h2.isotropy_order(MPoint(0, 0, 0.25)) == 2);
        REQUIRE(h2.p == 2);
        REQUIRE(h2.fiber_length() == Catch::Approx(pi).margin(1e-15));
    }
}

TEST_CASE("partitions of unity are subordinate to their charts") {
    std::mt19937_64 rng(5150);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<SOneSpace> spaces;
    spaces.push_back(make_flat_torus(2.0 * pi, 2.0 * pi));
    spaces.push_back(make_hopf());
    spaces.push_back(make_hopf_p2());
    spaces.push_back(make_lens(2));
    spaces.push_back(make_football(3));
    spaces.push_back(make_teardrop(2));
    for (const auto& sp : spaces) {
        for (int i = 0; i < 40; ++i) {
            MPoint x;
            if (sp.base->kind() == "teardrop") {
                x = MPoint((pi - 2e-3) * uni(rng) + 1e-3, 2.0 * pi * uni(rng), 0);
            } else if (sp.base->kind() == "flat-torus") {
                x = MPoint(2.0 * pi * uni(rng), 2.0 * pi * uni(rng), 0);
            } else {
                double ct = 2.0 * uni(rng) - 1.0, ph = 2.0 * pi * uni(rng);
                double st = std::sqrt(1.0 - ct * ct);
                double r = sp.base->kind() == "quotient-sphere"
                               ? 1.0
                               : dynamic_cast<const RoundSphere*>(sp.base.get())->radius();
                x = r * MPoint(st * std::cos(ph), st * std::sin(ph), ct);
            }
            auto w = sp.partition(x);
            REQUIRE(w.size() == sp.charts.size());
            double total = 0;
            for (size_t a = 0; a < w.size(); ++a) {
                REQUIRE(w[a] >= -1e-15);
                total += w[a];
                if (w[a] > 1e-14)
                    REQUIRE(sp.charts[a].psi(*sp.base, x) > 1.0 - 1e-12);
            }
            REQUIRE(total == Catch::Approx(1.0).margin(1e-13));
        }
    }
}

TEST_CASE("catalog lookups and guard rails") {
    REQUIRE(catalog("flat-torus").name == "flat-torus");
    REQUIRE(catalog("hopf").p == 1);
    REQUIRE(catalog("hopf-p2").p == 2);
    REQUIRE(catalog("lens-3").name == "lens-3");
    REQUIRE(catalog("teardrop-5").isotropy_order(MPoint(0, 0, 0)) == 5);
    REQUIRE(catalog("football-1").spin_ok);
    REQUIRE_FALSE(catalog("football-2").spin_ok);
    REQUIRE_THROWS_AS(catalog("klein-bottle"), std::invalid_argument);
    REQUIRE_THROWS_AS(catalog("lens-"), std::invalid_argument);

    // lens-1 and hopf describe the same geometry
    SOneSpace l1 = catalog("lens-1"), hp = catalog("hopf");
    REQUIRE(l1.base->area() == Catch::Approx(hp.base->area()).margin(1e-15));
    REQUIRE(l1.domega0_factor == Catch::Approx(hp.domega0_factor).margin(1e-15));

    CatalogParams params;
    params.q = 4;
    REQUIRE(catalog("lens", params).name == "lens-4");
    params.l1 = 3.0;
    params.l2 = 5.0;
    REQUIRE(catalog("flat-torus", params).base->area() == Catch::Approx(15.0).margin(1e-13));
}

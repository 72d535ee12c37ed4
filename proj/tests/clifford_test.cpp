#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <random>

#include "orbindex/clifford.hpp"

using namespace orbindex;

namespace {

RMat random_skew(int n, std::mt19937_64& eng) {
    std::normal_distribution<double> g;
    RMat a = RMat::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            a(i, j) = g(eng);
            a(j, i) = -a(i, j);
        }
    return a;
}

} // namespace

TEST_CASE("n=2 generators match hand-written 2x2 matrices") {
    // independent brute-force construction: c1 = i*sx, c2 = i*sy, grading sz
    CMat c1(2, 2), c2(2, 2), gr(2, 2);
    c1 << 0, cplx(0, 1), cplx(0, 1), 0;
    c2 << 0, 1, -1, 0;
    gr << 1, 0, 0, -1;

    auto rep = SpinRep::build(2);
    REQUIRE(rep.dim == 2);
    REQUIRE((rep.gen[0] - c1).cwiseAbs().maxCoeff() < 1e-15);
    REQUIRE((rep.gen[1] - c2).cwiseAbs().maxCoeff() < 1e-15);
    REQUIRE((rep.grading - gr).cwiseAbs().maxCoeff() < 1e-15);

    // orientation pin: str(c(e1) c(e2)) = -2i with this convention
    cplx s = supertrace(rep, rep.gen[0] * rep.gen[1]);
    REQUIRE(std::abs(s - cplx(0, -2)) < 1e-14);
}

TEST_CASE("Clifford relations and grading for n in {2,4,6,8}") {
    for (int n : {2, 4, 6, 8}) {
        auto rep = SpinRep::build(n);
        REQUIRE(rep.dim == (1 << (n / 2)));
        CMat id = CMat::Identity(rep.dim, rep.dim);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                CMat ac = rep.gen[i] * rep.gen[j] + rep.gen[j] * rep.gen[i];
                CMat want = (i == j) ? CMat(-2.0 * id) : CMat(CMat::Zero(rep.dim, rep.dim));
                REQUIRE((ac - want).cwiseAbs().maxCoeff() < 1e-13);
            }
            REQUIRE((rep.grading * rep.gen[i] + rep.gen[i] * rep.grading).cwiseAbs().maxCoeff() < 1e-14);
        }
        REQUIRE((rep.grading * rep.grading - id).cwiseAbs().maxCoeff() < 1e-14);
        REQUIRE(std::abs(rep.grading.trace()) < 1e-14);         // equal chiral dimensions
        REQUIRE(std::abs(supertrace(rep, id)) < 1e-14);

        // only the full volume element has a nonzero supertrace
        CMat vol = id;
        for (int i = 0; i < n; ++i) {
            vol = vol * rep.gen[i];
            cplx s = supertrace(rep, vol);
            if (i < n - 1) REQUIRE(std::abs(s) < 1e-13);
        }
        cplx expect = std::pow(cplx(0, -2), n / 2);
        REQUIRE(std::abs(supertrace(rep, vol) - expect) < 1e-12);
    }
}

TEST_CASE("bivector action is a Lie algebra homomorphism") {
    std::mt19937_64 eng(1234);
    for (int n : {2, 4, 6}) {
        auto rep = SpinRep::build(n);
        for (int rep_i = 0; rep_i < 25; ++rep_i) {
            RMat a = random_skew(n, eng), b = random_skew(n, eng);
            CMat da = bivector_action(rep, a), db = bivector_action(rep, b);
            CMat lhs = da * db - db * da;
            CMat rhs = bivector_action(rep, RMat(a * b - b * a));
            REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);

            // linearity
            CMat lin = bivector_action(rep, RMat(2.5 * a - 0.75 * b));
            REQUIRE((lin - (2.5 * da - 0.75 * db)).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
    REQUIRE_THROWS_AS(bivector_action(SpinRep::build(2), RMat::Identity(2, 2)), std::invalid_argument);
}

TEST_CASE("spin exponential intertwines with the vector rotation") {
    std::mt19937_64 eng(77);
    std::normal_distribution<double> g;
    for (int n : {2, 4, 6}) {
        auto rep = SpinRep::build(n);
        for (int rep_i = 0; rep_i < 10; ++rep_i) {
            RMat a = random_skew(n, eng);
            RMat rot = a.exp();   // SO(n) oracle from the generic matrix exponential
            Eigen::VectorXd v(n);
            for (int i = 0; i < n; ++i) v(i) = g(eng);
            CMat u = spin_exponential(rep, a);
            CMat lhs = u * rep.clifford(v) * u.inverse();
            CMat rhs = rep.clifford(rot * v);
            REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
            // unitarity of the lift
            CMat uu = u * u.adjoint();
            REQUIRE((uu - CMat::Identity(rep.dim, rep.dim)).cwiseAbs().maxCoeff() < 1e-11);
        }
    }
}

TEST_CASE("double cover: 2*pi rotation lifts to -Id on n=2") {
    auto rep = SpinRep::build(2);
    RMat j(2, 2);
    j << 0, -2.0 * pi, 2.0 * pi, 0;
    CMat u = spin_exponential(rep, j);
    REQUIRE((u + CMat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);

    // and the underlying SO(2) rotation is the identity
    REQUIRE((j.exp() - RMat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("truncated series converges at the expected order") {
    std::mt19937_64 eng(4242);
    auto rep = SpinRep::build(4);
    RMat a = random_skew(4, eng);
    a /= a.cwiseAbs().maxCoeff();
    int order = 2;
    std::vector<double> scales = {0.4, 0.2, 0.1, 0.05}, errs;
    for (double s : scales) {
        CMat full = spin_exponential(rep, RMat(s * a));
        CMat trunc = spin_exponential_truncated(rep, RMat(s * a), order);
        errs.push_back((full - trunc).cwiseAbs().maxCoeff());
    }
    // least-squares slope of log err vs log scale ~ order + 1
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = static_cast<int>(scales.size());
    for (int i = 0; i < m; ++i) {
        double X = std::log(scales[i]), Y = std::log(errs[i]);
        sx += X; sy += Y; sxx += X * X; sxy += X * Y;
    }
    double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    REQUIRE(slope == Catch::Approx(order + 1.0).margin(0.25));

    REQUIRE((spin_exponential_truncated(rep, RMat::Zero(4, 4), 0) -
             CMat::Identity(rep.dim, rep.dim)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("supertrace of short bivector products vanishes") {
    std::mt19937_64 eng(90210);
    for (int n : {2, 4, 6}) {
        auto rep = SpinRep::build(n);
        int l = n / 2;
        for (int draw = 0; draw < 200; ++draw) {
            CMat prod = CMat::Identity(rep.dim, rep.dim);
            for (int k = 1; k < l; ++k) {   // products of length k < l
                prod = prod * bivector_action(rep, random_skew(n, eng));
                REQUIRE(std::abs(supertrace(rep, prod)) < 1e-12);
            }
            if (l == 1) REQUIRE(std::abs(supertrace(rep, prod)) < 1e-12);  // str(Id) = 0
        }
    }
}

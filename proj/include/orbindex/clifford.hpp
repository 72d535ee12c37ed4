#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "orbindex/util.hpp"

namespace orbindex {

using CMat = Eigen::MatrixXcd;
using RMat = Eigen::MatrixXd;
using cplx = std::complex<double>;

// Spin representation of Cl(R^n), n even, on Delta = (C^2)^{(n/2)}.
// Convention: c(v)^2 = -|v|^2, generators from iterated 2x2 blocks
//   c(e_{2k-1}) = s3^{k-1} (x) (i s1) (x) 1...,  c(e_{2k}) = s3^{k-1} (x) (i s2) (x) 1...
// grading = s3^{(n/2)}; supertrace(a) = tr(grading * a).
// This fixes the orientation sign: supertrace(c(e1) c(e2)) = -2i.
struct SpinRep {
    int n = 0;
    int half = 0;
    int dim = 0;
    std::vector<CMat> gen;
    CMat grading;

    static SpinRep build(int n) {
        require(n >= 2 && n % 2 == 0 && n <= 12, "spin rep needs even n in [2,12]");
        SpinRep r;
        r.n = n;
        r.half = n / 2;
        r.dim = 1 << r.half;

        CMat s1(2, 2), s2(2, 2), s3(2, 2), id2 = CMat::Identity(2, 2);
        s1 << 0, 1, 1, 0;
        s2 << 0, cplx(0, -1), cplx(0, 1), 0;
        s3 << 1, 0, 0, -1;

        auto kron = [](const CMat& a, const CMat& b) {
            CMat out(a.rows() * b.rows(), a.cols() * b.cols());
            for (int i = 0; i < a.rows(); ++i)
                for (int j = 0; j < a.cols(); ++j)
                    out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
            return out;
        };

        r.gen.reserve(n);
        for (int k = 0; k < r.half; ++k) {
            CMat a = CMat::Identity(1, 1), b = CMat::Identity(1, 1);
            for (int j = 0; j < r.half; ++j) {
                CMat blk_a, blk_b;
                if (j < k) blk_a = blk_b = s3;
                else if (j == k) {
                    blk_a = cplx(0, 1) * s1;
                    blk_b = cplx(0, 1) * s2;
                } else blk_a = blk_b = id2;
                a = kron(a, blk_a);
                b = kron(b, blk_b);
            }
            r.gen.push_back(a);
            r.gen.push_back(b);
        }
        r.grading = CMat::Identity(1, 1);
        for (int j = 0; j < r.half; ++j) r.grading = kron(r.grading, s3);
        return r;
    }

    CMat clifford(const Eigen::VectorXd& v) const {
        require(v.size() == n, "vector dimension mismatch");
        CMat out = CMat::Zero(dim, dim);
        for (int i = 0; i < n; ++i) out += v(i) * gen[i];
        return out;
    }
};

inline cplx supertrace(const SpinRep& rep, const CMat& a) {
    return (rep.grading * a).trace();
}

inline void require_skew(const RMat& a, double tol = 1e-12) {
    require(a.rows() == a.cols(), "square matrix expected");
    require((a + a.transpose()).cwiseAbs().maxCoeff() <= tol, "matrix is not antisymmetric");
}

// Derived so(n)-action on spinors: a |-> (1/4) sum_{i,j} <a e_i, e_j> c(e_i) c(e_j),
// i.e. the unique lift with [action(a), c(v)] = c(a v) for column-vector a.
inline CMat bivector_action(const SpinRep& rep, const RMat& a) {
    require(a.rows() == rep.n, "so(n) dimension mismatch");
    require_skew(a);
    CMat out = CMat::Zero(rep.dim, rep.dim);
    for (int i = 0; i < rep.n; ++i)
        for (int j = 0; j < rep.n; ++j)
            if (a(i, j) != 0.0) out += 0.25 * a(i, j) * (rep.gen[j] * rep.gen[i]);
    return out;
}

// Series sum_{k<=order} (bivector_action(a))^k / k!; the untruncated limit is
// the spin-group lift of exp(a).
inline CMat spin_exponential_truncated(const SpinRep& rep, const RMat& a, int order) {
    require(order >= 0, "negative truncation order");
    CMat d = bivector_action(rep, a);
    CMat term = CMat::Identity(rep.dim, rep.dim), out = term;
    for (int k = 1; k <= order; ++k) {
        term = (term * d) / static_cast<double>(k);
        out += term;
    }
    return out;
}

// Full lift via scaling-and-squaring of the series (entries of the bivector
// action are bounded, so this converges fast and stays unitary to rounding).
inline CMat spin_exponential(const SpinRep& rep, const RMat& a) {
    CMat d = bivector_action(rep, a);
    double nrm = d.cwiseAbs().maxCoeff() * rep.dim;
    int squarings = 0;
    while (nrm > 0.5 && squarings < 40) {
        nrm *= 0.5;
        ++squarings;
    }
    CMat ds = d / std::pow(2.0, squarings);
    CMat term = CMat::Identity(rep.dim, rep.dim), out = term;
    for (int k = 1; k <= 18; ++k) {
        term = (term * ds) / static_cast<double>(k);
        out += term;
    }
    for (int s = 0; s < squarings; ++s) out = out * out;
    return out;
}

} // namespace orbindex

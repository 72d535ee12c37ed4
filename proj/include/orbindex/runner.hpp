#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <exception>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "orbindex/index.hpp"
#include "orbindex/spectral.hpp"

namespace orbindex {

// One bag of knobs for every experiment; each command reads its slice.
// seed is mandatory for anything that draws paths: there is no wall-clock
// fallback anywhere in the tree.
struct ExperimentConfig {
    std::string space = "flat-torus";
    double l1 = 2.0 * pi;
    double l2 = 2.0 * pi;
    double twist = 0;
    int sector = 0;
    double t = 0.05;
    long paths = 100000;
    double h = 0;  // 0 resolves to the command's own default step
    int quad_level = 4;
    int workers = 1;
    int fourier_K = 32;
    int m_min = -3;
    int m_max = 3;
    int grid = 20;
    double exit_radius = 0.1;
    long dump = 0;
    std::uint64_t seed = 0;
};

inline SOneSpace make_space(const ExperimentConfig& cfg) {
    CatalogParams params;
    params.l1 = cfg.l1;
    params.l2 = cfg.l2;
    return catalog(cfg.space, params);
}

// Twist dispatch by base geometry: magnetic fields on the torus, monopoles on
// the round bases. A zero twist is the trivial bundle everywhere.
inline TwistBundle make_twist(const SOneSpace& sp, double twist) {
    if (twist == 0.0) return trivial_twist();
    if (auto T = std::dynamic_pointer_cast<const FlatTorus>(sp.base)) {
        return magnetic_twist(*T, twist);
    }
    if (auto S = std::dynamic_pointer_cast<const RoundSphere>(sp.base)) {
        long k = std::llround(twist);
        require(std::abs(twist - double(k)) < 1e-12,
                "sphere twists are integer monopole charges");
        return monopole_twist(*S, static_cast<int>(k));
    }
    throw std::runtime_error("nonzero twists need a flat-torus or round-sphere base; got " +
                             sp.name);
}

// --- deterministic parallel index run --------------------------------------------

// Same estimator as mckean_singer_index, but the path range of each node is
// cut on a fixed chunk grid and chunks may be computed by any number of
// workers. Partial moments are merged in chunk order, so the reduction tree
// never depends on the worker count and the result is bit-identical for any
// level of parallelism.
inline IndexEstimate mc_index_parallel(const SOneSpace& sp, const HeatKernel& ker,
                                       const SpinRep& rep, const TwistBundle& tw, double t,
                                       int quad_level, long n_per_node, const RandomSource& src,
                                       double h, int workers, long chunk = 512) {
    require(sp.spin_ok, "no spin structure on this space");
    require(n_per_node > 0 && workers >= 1 && chunk > 0, "bad run dimensions");
    if (h <= 0) h = t / 200;
    indexdetail::prepare_bridge(ker, t, h);  // tables built before any worker reads them
    QuadPlan plan = principal_nodes(sp, quad_level);

    struct Task {
        int node;
        std::uint64_t first;
        long count;
    };
    std::vector<Task> tasks;
    for (size_t j = 0; j < plan.nodes.size(); ++j)
        for (long c = 0; c < n_per_node; c += chunk)
            tasks.push_back({static_cast<int>(j),
                             static_cast<std::uint64_t>(j) * n_per_node + c,
                             std::min(chunk, n_per_node - c)});

    std::vector<PathMoments> got(tasks.size());
    const int W = static_cast<int>(std::min<size_t>(workers, tasks.size()));
    std::vector<std::exception_ptr> errs(W);
    auto work = [&](int w) {
        try {
            for (size_t k = w; k < tasks.size(); k += W) {
                const Task& tk = tasks[k];
                got[k] = supertrace_moments(sp, ker, rep, tw, t, plan.nodes[tk.node].x, tk.count,
                                            src, h, tk.first);
            }
        } catch (...) {
            errs[w] = std::current_exception();
        }
    };
    if (W <= 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(W);
        for (int w = 0; w < W; ++w) pool.emplace_back(work, w);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);

    IndexEstimate est;
    est.t = t;
    est.relocated = plan.relocated;
    double var = 0;
    size_t k = 0;
    for (size_t j = 0; j < plan.nodes.size(); ++j) {
        PathMoments agg;
        for (; k < tasks.size() && tasks[k].node == static_cast<int>(j); ++k) {
            agg.sum += got[k].sum;
            agg.sumsq += got[k].sumsq;
            agg.used += got[k].used;
            agg.invalid += got[k].invalid;
        }
        if (agg.invalid * 100 > n_per_node)
            throw std::runtime_error("mc_index_parallel: more than 1% of bridge paths invalid");
        auto d = moments_to_density(agg, ker.density(t, plan.nodes[j].x, plan.nodes[j].x));
        est.value += plan.nodes[j].w * d.value;
        var += plan.nodes[j].w * plan.nodes[j].w * d.se * d.se;
        est.paths += d.paths;
        est.density.push_back({plan.nodes[j].x, plan.nodes[j].w, d.value, d.se});
    }
    est.se = std::sqrt(var);
    return est;
}

struct IndexRun {
    IndexReport report;
    int nodes = 0;
    long per_node = 0;
    double h_used = 0;
    int workers = 1;
};

// Full two-sided experiment. The default step t/400 keeps the weak
// discretization bias below the Monte-Carlo noise at the default 1e5 paths;
// explicit h overrides.
inline IndexRun run_index_experiment(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    require(cfg.t > 0 && cfg.paths > 0 && cfg.quad_level >= 1, "bad index configuration");
    auto sp = make_space(cfg);
    auto ker = make_heat_kernel(sp);
    SpinRep rep = SpinRep::build(2);
    TwistBundle tw = make_twist(sp, cfg.twist);
    if (cfg.sector != 0) tw = fourier_twist(sp, tw, cfg.sector);

    IndexRun run;
    run.h_used = cfg.h > 0 ? cfg.h : cfg.t / 400;
    run.workers = std::max(1, cfg.workers);
    run.nodes = static_cast<int>(sp.base->quadrature(cfg.quad_level).size());
    run.per_node = std::max<long>(1, cfg.paths / run.nodes);

    RandomSource src{cfg.seed};
    IndexReport& rp = run.report;
    rp.space = sp.name;
    rp.twist_chern = tw.chern;
    rp.t = cfg.t;
    rp.seed = cfg.seed;
    rp.analytic = mc_index_parallel(sp, *ker, rep, tw, cfg.t, cfg.quad_level, run.per_node, src,
                                    run.h_used, run.workers);
    rp.geometric = geometric_index(sp, tw);
    rp.nearest = std::llround(rp.geometric);
    const bool integral = std::abs(rp.geometric - double(rp.nearest)) <= 1e-6;
    rp.verdict =
        integral && std::abs(rp.analytic.value - rp.geometric) <= 3.0 * rp.analytic.se;
    rp.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return run;
}

// --- kernel-versus-oracle tables -------------------------------------------------

struct KernelSample {
    double t = 0;
    MPoint x = MPoint::Zero();
    MPoint y = MPoint::Zero();
    double value = 0;
    double oracle = 0;
    double rel_err = 0;
};

struct HeatTable {
    std::vector<KernelSample> rows;
    double worst_rel = 0;
    double gate = 0;   // per-space relative accuracy target
    int skipped = 0;   // pairs outside the oracle's validity domain
    bool pass = false;
};

namespace runnerdetail {

constexpr double GOLDEN = 0.6180339887498949;

inline double frac(double v) { return v - std::floor(v); }

// low-discrepancy probe points in the fundamental domain / on the sphere
inline MPoint probe_point(const Surface& M, int i, int n) {
    if (auto T = dynamic_cast<const FlatTorus*>(&M)) {
        MPoint x((i + 0.5) / n * T->l1(), frac((i + 0.5) * GOLDEN) * T->l2(), 0);
        M.fold(x);
        return x;
    }
    double r = 1.0;
    if (auto S = dynamic_cast<const RoundSphere*>(&M)) r = S->radius();
    const double z = r * (1.0 - 2.0 * (i + 0.5) / n);
    const double phi = 2.0 * pi * frac(i * GOLDEN);
    const double rho = std::sqrt(std::max(0.0, r * r - z * z));
    return MPoint(rho * std::cos(phi), rho * std::sin(phi), z);
}

struct Oracle {
    std::function<double(double, const MPoint&, const MPoint&)> value;
    std::function<bool(double, const MPoint&, const MPoint&)> valid;
    double gate = 0;
    double dcap = 0;  // largest pair separation the oracle resolves at t_min
};

inline Oracle exact_oracle(const SOneSpace& sp, double t_min) {
    if (auto T = std::dynamic_pointer_cast<const FlatTorus>(sp.base)) {
        Oracle o;
        o.value = [T](double t, const MPoint& x, const MPoint& y) {
            return torus_spectral_density(T->l1(), T->l2(), t, x(0) - y(0), x(1) - y(1));
        };
        // the dual series cancels to roundoff below the kernel scale
        o.valid = [T](double t, const MPoint& x, const MPoint& y) {
            double d = T->distance(x, y);
            return std::exp(-d * d / (2.0 * t)) >= 1e-10;
        };
        o.gate = 1e-3;
        o.dcap = std::min(0.98 * std::sqrt(2.0 * t_min * std::log(1e10)),
                          0.9 * T->injectivity_floor() * 2.0);
        return o;
    }
    if (auto S = std::dynamic_pointer_cast<const RoundSphere>(sp.base)) {
        const double r = S->radius();
        Oracle o;
        o.value = [S, r](double t, const MPoint& x, const MPoint& y) {
            return sphere_spectral_density(r, t, S->distance(x, y));
        };
        o.valid = [S, r](double t, const MPoint& x, const MPoint& y) {
            return sphere_spectral_valid(r, t, S->distance(x, y));
        };
        o.gate = 5e-3;
        o.dcap = std::min(0.98 * std::sqrt(2.0 * t_min * std::log(1e9 / (r * r))),
                          0.74 * pi * r);  // stay inside the parametrix's claimed region
        return o;
    }
    if (auto Q = std::dynamic_pointer_cast<const QuotientSphere>(sp.base)) {
        Oracle o;
        o.value = [Q](double t, const MPoint& x, const MPoint& y) {
            double acc = 0;
            for (int j = 0; j < Q->order(); ++j)
                acc += sphere_spectral_density(1.0, t, Q->cover().distance(x, Q->rotate(y, j)));
            return acc;
        };
        o.valid = [Q](double t, const MPoint& x, const MPoint& y) {
            return sphere_spectral_valid(1.0, t, Q->distance(x, y));
        };
        o.gate = 5e-3;
        o.dcap = std::min(0.98 * std::sqrt(2.0 * t_min * std::log(1e9)), 0.74 * pi);
        return o;
    }
    throw std::runtime_error("no exact reference kernel for " + sp.name +
                             "; supported: flat-torus and the sphere family");
}

}  // namespace runnerdetail

// grid x grid pairs per time: grid base points, each matched with grid
// targets at radii filling (0, dcap] in rotating directions
inline HeatTable heat_oracle_table(const SOneSpace& sp, const HeatKernel& ker,
                                   const std::vector<double>& t_grid, int grid) {
    require(!t_grid.empty() && grid >= 2, "heat table needs times and a grid");
    for (double t : t_grid) require(t > 0, "heat table times must be positive");
    const Surface& M = *sp.base;
    const double t_min = *std::min_element(t_grid.begin(), t_grid.end());
    auto oracle = runnerdetail::exact_oracle(sp, t_min);
    ker.prepare(t_grid);

    std::vector<std::pair<MPoint, MPoint>> pairs;
    for (int i = 0; i < grid; ++i) {
        MPoint x = runnerdetail::probe_point(M, i, grid);
        Frame f = M.reference_frame(x);
        for (int j = 0; j < grid; ++j) {
            const double rho = oracle.dcap * (j + 0.5) / grid;
            const double th = 2.0 * pi * runnerdetail::frac(j * runnerdetail::GOLDEN) + 0.3 * i;
            MPoint y = M.exp_step(x, f, rho * Eigen::Vector2d(std::cos(th), std::sin(th)),
                                  nullptr);
            M.fold(y);
            pairs.emplace_back(x, y);
        }
    }

    HeatTable out;
    out.gate = oracle.gate;
    for (double t : t_grid)
        for (const auto& [x, y] : pairs) {
            if (!oracle.valid(t, x, y)) {
                ++out.skipped;
                continue;
            }
            KernelSample row;
            row.t = t;
            row.x = x;
            row.y = y;
            row.value = ker.density(t, x, y);
            row.oracle = oracle.value(t, x, y);
            row.rel_err = std::abs(row.value - row.oracle) / std::abs(row.oracle);
            out.worst_rel = std::max(out.worst_rel, row.rel_err);
            out.rows.push_back(row);
        }
    out.pass = !out.rows.empty() && out.worst_rel < out.gate;
    return out;
}

// --- path-statistics suite --------------------------------------------------------

struct CheckRow {
    std::string name;
    double value = 0;
    double expected = 0;
    double se = 0;
    double z = 0;
    bool pass = false;
};

struct SampleReport {
    std::vector<CheckRow> rows;
    bool all_pass = true;

    void add(CheckRow r) {
        all_pass = all_pass && r.pass;
        rows.push_back(std::move(r));
    }
};

namespace runnerdetail {

inline CheckRow ztest(const std::string& name, double mean, double se, double expected,
                      double zmax = 3.0) {
    CheckRow r{name, mean, expected, se, 0, false};
    r.z = se > 0 ? (mean - expected) / se : (mean == expected ? 0.0 : 1e9);
    r.pass = std::abs(r.z) < zmax;
    return r;
}

}  // namespace runnerdetail

// Free-walk and bridge statistics against their exact references. The flat
// rows (quadratic variation, zero mean, exit time, mid-bridge variance) need
// the flat torus; bridge endpoint, invalid-fraction, and determinism rows run
// on any space.
inline SampleReport run_sample_suite(const ExperimentConfig& cfg) {
    require(cfg.t > 0 && cfg.paths > 1, "sample suite needs t > 0 and paths > 1");
    auto sp = make_space(cfg);
    const Surface& M = *sp.base;
    const double t = cfg.t;
    const double h = cfg.h > 0 ? cfg.h : t / 200;
    const long np = cfg.paths;
    RandomSource src{cfg.seed};
    SampleReport rep;
    const bool flat = std::dynamic_pointer_cast<const FlatTorus>(sp.base) != nullptr;

    if (flat) {
        // free-walk moments: sum of squared increments and net displacement
        double qs = 0, qs2 = 0;
        Eigen::Vector2d ms = Eigen::Vector2d::Zero(), ms2 = Eigen::Vector2d::Zero();
        const MPoint x0(1.0, 2.0, 0.0);
        for (long i = 0; i < np; ++i) {
            auto g = src.engine_for_path(static_cast<std::uint64_t>(i));
            auto p = sample_path(M, x0, t, h, g);
            double qv = 0;
            Eigen::Vector2d d = Eigen::Vector2d::Zero();
            for (const auto& v : p.steps) {
                qv += v.squaredNorm();
                d += v;
            }
            qs += qv;
            qs2 += qv * qv;
            ms += d;
            ms2 += d.cwiseAbs2();
        }
        auto mse = [np](double s, double s2) {
            double m = s / np;
            return std::pair{m, std::sqrt(std::max(0.0, s2 / np - m * m) / (np - 1))};
        };
        auto [qm, qse] = mse(qs, qs2);
        rep.add(runnerdetail::ztest("quadratic-variation", qm, qse, 2.0 * t));
        for (int c = 0; c < 2; ++c) {
            auto [mm, mmse] = mse(ms(c), ms2(c));
            rep.add(runnerdetail::ztest("zero-mean-e" + std::to_string(c + 1), mm, mmse, 0.0));
        }

        const double r = cfg.exit_radius;
        require(r > 0 && r < M.injectivity_floor(), "exit ball must be embedded");
        auto [em, ese] = mean_exit_time(M, x0, r, r * r / 400.0, static_cast<int>(np), src);
        rep.add(runnerdetail::ztest("exit-time", em, ese, r * r / 2.0));
    }

    // bridge contract rows on the configured space
    auto ker = make_heat_kernel(sp);
    indexdetail::prepare_bridge(*ker, t, h);
    const MPoint xb = runnerdetail::probe_point(M, 0, 4);
    const long nb = std::min<long>(np, 2000);
    const int K = std::max(1, static_cast<int>(std::llround(t / h)));
    double worst_gap = 0, mid2 = 0, mid4 = 0;
    long invalid = 0;
    for (long i = 0; i < nb; ++i) {
        auto g = src.engine_for_path(static_cast<std::uint64_t>(i));
        auto p = sample_bridge(M, *ker, xb, xb, t, h, g);
        if (!p.valid) {
            ++invalid;
            continue;
        }
        worst_gap = std::max(worst_gap, (p.points.back() - xb).norm());
        if (flat) {
            Eigen::Vector2d d = Eigen::Vector2d::Zero();
            for (int k = 0; k < K / 2; ++k) d += p.steps[k];
            mid2 += d.squaredNorm();
            mid4 += d.squaredNorm() * d.squaredNorm();
        }
    }
    CheckRow gap{"bridge-endpoint", worst_gap, 0, 0, 0, worst_gap < 1e-9};
    rep.add(gap);
    CheckRow inv{"bridge-invalid-fraction", double(invalid) / double(nb), 0, 0, 0,
                 invalid * 100 <= nb};
    rep.add(inv);

    if (flat && invalid < nb) {
        // Euler bridge mid-marginal variance follows the exact discrete
        // recursion v_{k+1} = v_k (1 - h/tau_k)^2 + h
        const long used = nb - invalid;
        double vref = 0;
        const double hk = t / K;
        for (int k = 0; k < K / 2; ++k) {
            double tau = t - k * hk;
            double a = 1.0 - hk / tau;
            vref = vref * a * a + hk;
        }
        const double vhat = mid2 / (2.0 * used);  // per component, two iid components
        const double se = (mid4 / used > 0)
                              ? std::sqrt(std::max(0.0, mid4 / used - (mid2 / used) * (mid2 / used)) /
                                          (used - 1)) /
                                    2.0
                              : 0.0;
        rep.add(runnerdetail::ztest("bridge-mid-variance", vhat, se, vref, 3.5));
    }

    // bitwise determinism of the per-path draw under a shuffled work order
    {
        const long nd = std::min<long>(nb, 64);
        auto digest = [&](bool reversed) {
            std::vector<double> bits(3 * nd);
            for (long s = 0; s < nd; ++s) {
                long i = reversed ? nd - 1 - s : s;
                auto g = src.engine_for_path(static_cast<std::uint64_t>(i));
                auto p = sample_bridge(M, *ker, xb, xb, t, h, g);
                for (int c = 0; c < 3; ++c) bits[3 * i + c] = p.points[K / 2](c);
            }
            return bits;
        };
        auto a = digest(false), b = digest(true);
        bool same = a.size() == b.size() &&
                    std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
        CheckRow det{"partition-determinism", same ? 1.0 : 0.0, 1.0, 0, 0, same};
        rep.add(det);
    }
    return rep;
}

// Debug dump of a few bridges: one row per grid point, with the path's final
// scalar weight R and the twist deviation of M. Size-guarded.
struct PathDumpRow {
    long path_id = 0;
    int k = 0;
    double t_k = 0;
    MPoint x = MPoint::Zero();
    double R = 0;
    double m_dev = 0;
};

inline std::vector<PathDumpRow> dump_paths(const ExperimentConfig& cfg, long n_dump) {
    require(n_dump > 0, "dump needs a positive path count");
    auto sp = make_space(cfg);
    const Surface& M = *sp.base;
    const double t = cfg.t;
    const double h = cfg.h > 0 ? cfg.h : t / 200;
    const int K = std::max(1, static_cast<int>(std::llround(t / h)));
    require(n_dump * (K + 1) <= 200000, "path dump too large; lower --dump-paths or raise --h");
    auto ker = make_heat_kernel(sp);
    indexdetail::prepare_bridge(*ker, t, h);
    SpinRep rep = SpinRep::build(2);
    TwistBundle tw = make_twist(sp, cfg.twist);
    RandomSource src{cfg.seed};
    const MPoint xb = runnerdetail::probe_point(M, 0, 4);
    std::vector<PathDumpRow> rows;
    rows.reserve(n_dump * (K + 1));
    for (long i = 0; i < n_dump; ++i) {
        auto g = src.engine_for_path(static_cast<std::uint64_t>(i));
        auto p = sample_bridge(M, *ker, xb, xb, t, h, g);
        if (tw.needs_anchor_alignment) align_to_anchor(M, p, tw.gauge_anchor);
        auto ts = evolve_transport(M, p, rep, tw);
        const double mdev =
            (ts.M - CMat::Identity(rep.dim, rep.dim)).norm();
        for (size_t k = 0; k < p.points.size(); ++k)
            rows.push_back({i, static_cast<int>(k), p.times[k], p.points[k], ts.R, mdev});
    }
    return rows;
}

// --- fourier tables ---------------------------------------------------------------

struct FourierRow {
    int m = 0;
    bool divisible = false;
    double I_m = 0;
    double sector_chern = 0;
    double sector_geometric = 0;
    double residual = 0;
};

struct FourierReport {
    std::vector<FourierRow> rows;
    double idempotence = 0;
    double orthogonality = 0;
    double annihilation = 0;
    bool pass = false;
};

// Exact-arithmetic checks: projector algebra residuals on a band-limited
// section, and the sector table I_m against the geometric index of the
// shifted twist. Everything here is quadrature, no sampling.
inline FourierReport run_fourier_suite(const SOneSpace& sp, const TwistBundle& tw, int m_min,
                                       int m_max, int K, int quad_level = 16) {
    require(m_min <= m_max, "empty sector range");
    require(K >= 16, "fourier projector needs K >= 16");
    FourierReport out;

    FourierProjector P;
    P.K = K;
    auto c0 = [](const MPoint& x) {
        Eigen::VectorXcd v(2);
        v << cplx(0.3 + x(0), 0.1), cplx(1.0, -0.4);
        return v;
    };
    auto c2 = [](const MPoint& x) {
        Eigen::VectorXcd v(2);
        v << cplx(x(1), 0.7), cplx(0.0, 1.1);
        return v;
    };
    FiberSection f = [&](const MPoint& x, double z) {
        return Eigen::VectorXcd(c0(x) + c2(x) * std::exp(cplx(0, 2 * z)));
    };
    const MPoint xp(0.8, -1.3, 0.2);
    auto p2 = P.project(f, 2);
    auto p22 = P.project(p2, 2);
    auto p02 = P.project(p2, 0);
    for (double z : {0.0, 0.9, 4.4}) {
        out.idempotence = std::max(out.idempotence,
                                   (p22(xp, z) - p2(xp, z)).cwiseAbs().maxCoeff());
        out.orthogonality = std::max(out.orthogonality, p02(xp, z).cwiseAbs().maxCoeff());
    }
    for (int n = 1; n <= std::min(7, K / 2 - 1); ++n) {
        FiberSection mode = [n](const MPoint&, double z) {
            Eigen::VectorXcd v(1);
            v << std::exp(cplx(0, n * z));
            return v;
        };
        out.annihilation =
            std::max(out.annihilation, P.component(mode, 0, xp, 0.3).cwiseAbs().maxCoeff());
    }

    bool table_ok = true;
    for (int m = m_min; m <= m_max; ++m) {
        FourierRow row;
        row.m = m;
        row.divisible = (m % sp.p == 0);
        row.I_m = index_density_m(sp, tw, m, quad_level);
        if (row.divisible) {
            TwistBundle tws = fourier_twist(sp, tw, m);
            row.sector_chern = tws.chern;
            row.sector_geometric = geometric_index(sp, tws, quad_level);
            row.residual = std::abs(row.I_m - row.sector_geometric);
        } else {
            row.residual = std::abs(row.I_m);  // delta_{p|m} says it vanishes outright
        }
        table_ok = table_ok && row.residual < 1e-9;
        out.rows.push_back(row);
    }
    out.pass = table_ok && out.idempotence < 1e-10 && out.orthogonality < 1e-10 &&
               out.annihilation < 1e-10;
    return out;
}

}  // namespace orbindex

#pragma once
// Built-in verification battery: nine numbered end-to-end checks, shared by
// the `check` CLI subcommand and the acceptance test binary. Each check is
// self-contained, deterministic, and reports one pass/fail verdict with a
// one-line numeric summary.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rclmc/estimators.hpp"
#include "rclmc/harness.hpp"
#include "rclmc/kernels.hpp"
#include "rclmc/metrics.hpp"
#include "rclmc/potentials.hpp"
#include "rclmc/theory.hpp"

namespace rclmc {
namespace checks {

struct CheckResult {
    int id = 0;
    bool pass = false;
    std::string detail;
    double wall_s = 0.0;
};

namespace cdetail {

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    }
};

inline std::string fmt(double v, int prec = 4) {
    std::ostringstream os;
    os << std::setprecision(prec) << v;
    return os.str();
}

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

// d = 10 Gaussian plus a small ridge-regression posterior; the two
// closed-form-free gradient shapes the flux identities must hold on.
inline std::vector<std::unique_ptr<Potential>> small_targets() {
    std::vector<std::unique_ptr<Potential>> t;
    t.emplace_back(new IsotropicGaussian(10));
    t.emplace_back(new GlmPosterior(synth_glm_data(
        10, 10, std::vector<double>(10, 1.0), NoiseModel::kGaussian, 123)));
    return t;
}

inline SelectionDistribution skewed_selection(std::size_t d, ChainStream& rng) {
    std::vector<double> w(d);
    double sum = 0.0;
    for (double& wi : w) {
        wi = 0.5 + rng.next_unit();
        sum += wi;
    }
    for (double& wi : w) wi /= sum;
    return SelectionDistribution(w);
}

} // namespace cdetail

// Unbiasedness: the selection-probability-weighted sum of every coordinate
// flux over all coordinate choices reproduces the full gradient exactly.
inline CheckResult criterion1() {
    cdetail::Timer timer;
    const std::size_t d = 10;
    auto targets = cdetail::small_targets();
    ChainStream rng(0xACCE5701, 0);
    const SelectionDistribution uniform;
    const SelectionDistribution skewed = cdetail::skewed_selection(d, rng);

    double worst = 0.0;
    std::vector<double> x(d), xa(d), table(d), g(d), sum(d);
    for (const auto& pt : targets) {
        for (int s = 0; s < 50; ++s) {
            rng.next_normals(d, x.data());
            rng.next_normals(d, xa.data());
            rng.next_normals(d, table.data());
            pt->gradient(x.data(), g.data());
            auto track = [&]() {
                for (std::size_t i = 0; i < d; ++i)
                    worst = std::max(worst, std::abs(sum[i] - g[i]));
            };

            for (const SelectionDistribution* dist : {&uniform, &skewed}) {
                std::fill(sum.begin(), sum.end(), 0.0);
                for (std::size_t r = 0; r < d; ++r) {
                    Flux f = rcd_flux(*pt, x, r, *dist);
                    for (std::size_t i = 0; i < d; ++i)
                        sum[i] += dist->prob(r, d) * f.F[i];
                }
                track();
            }

            SvrgState anchor;
            anchor.tau = 7;
            anchor.x_anchor = xa;
            anchor.g_anchor.resize(d);
            pt->gradient(xa.data(), anchor.g_anchor.data());
            std::fill(sum.begin(), sum.end(), 0.0);
            for (std::size_t r = 0; r < d; ++r) {
                SvrgState st = anchor;
                Flux f = svrg_flux(st, *pt, x, 1, r);  // m = 1: in-epoch step
                for (std::size_t i = 0; i < d; ++i) sum[i] += f.F[i] / double(d);
            }
            track();

            std::fill(sum.begin(), sum.end(), 0.0);
            for (std::size_t r = 0; r < d; ++r) {
                RcadState st;
                st.g = table;
                Flux f = rcad_flux(st, *pt, x, r);
                for (std::size_t i = 0; i < d; ++i) sum[i] += f.F[i] / double(d);
            }
            track();
        }
    }
    CheckResult res{1, worst <= 1e-12, "", timer.seconds()};
    res.detail = "max componentwise |E_r F - grad f| = " + cdetail::fmt(worst) +
                 " over 2 targets x 50 states x 4 fluxes (tol 1e-12)";
    return res;
}

// The exhaustive selection-averaged square deviation of the plain
// coordinate flux matches its closed forms, and the library shortcut
// matches the naive sum.
inline CheckResult criterion2() {
    cdetail::Timer timer;
    const std::size_t d = 10;
    auto targets = cdetail::small_targets();
    ChainStream rng(0xACCE5702, 0);
    const SelectionDistribution uniform;
    const SelectionDistribution skewed = cdetail::skewed_selection(d, rng);

    double worst = 0.0;
    std::vector<double> xv(d), g(d);
    for (const auto& pt : targets) {
        for (int s = 0; s < 50; ++s) {
            rng.next_normals(d, xv.data());
            const std::vector<double> x = xv;
            pt->gradient(x.data(), g.data());
            double g2 = 0.0;
            for (double v : g) g2 += v * v;
            for (const SelectionDistribution* dist : {&uniform, &skewed}) {
                double naive = 0.0;
                for (std::size_t r = 0; r < d; ++r) {
                    Flux f = rcd_flux(*pt, x, r, *dist);
                    double dev2 = 0.0;
                    for (std::size_t i = 0; i < d; ++i) {
                        const double e = f.F[i] - g[i];
                        dev2 += e * e;
                    }
                    naive += dist->prob(r, d) * dev2;
                }
                double closed;
                if (dist->is_uniform()) {
                    closed = double(d - 1) * g2;
                } else {
                    closed = 0.0;
                    for (std::size_t i = 0; i < d; ++i)
                        closed += (1.0 / dist->prob(i, d) - 1.0) * g[i] * g[i];
                }
                const double lib = rcd_variance_exact(*pt, x, *dist);
                worst = std::max(worst, cdetail::rel_err(naive, closed));
                worst = std::max(worst, cdetail::rel_err(lib, naive));
            }
        }
    }
    CheckResult res{2, worst <= 1e-10, "", timer.seconds()};
    res.detail = "max relative deviation from closed-form variance = " +
                 cdetail::fmt(worst) + " (tol 1e-10)";
    return res;
}

// One-step sampling law of the underdamped kernel: empirical mean and
// covariance of 1e6 draws vs the closed-form coefficients, positive
// semidefiniteness on a dyadic h grid, and the small-h covariance ratios.
inline CheckResult criterion3() {
    cdetail::Timer timer;
    const double x0 = 0.3, v0 = -0.2, Fv = 0.7;
    const std::uint64_t n = 1000000;

    double worst_se = 0.0;
    int combo = 0;
    for (double h : {0.05, 0.1, 0.5}) {
        for (double gamma : {0.5, 1.0}) {
            const KernelCoeffs c = underdamped_coeffs(h, gamma);
            const double mean_x = x0 + c.a_xv * v0 + c.a_xF * Fv;
            const double mean_v = c.a_vv * v0 + c.a_vF * Fv;
            ChainStream s(0xC3000 + combo, 0);
            ++combo;
            double sdx = 0, sdv = 0, sxx = 0, svv = 0, sxv = 0;
            std::vector<double> buf(2 * 4096);
            std::uint64_t left = n;
            while (left > 0) {
                const std::uint64_t chunk = std::min<std::uint64_t>(4096, left);
                s.next_normals(2 * chunk, buf.data());
                for (std::uint64_t k = 0; k < chunk; ++k) {
                    double xx = x0, vv = v0;
                    underdamped_step_into(&xx, &vv, &Fv, c, &buf[2 * k], 1);
                    const double dx = xx - mean_x, dv = vv - mean_v;
                    sdx += dx;
                    sdv += dv;
                    sxx += dx * dx;
                    svv += dv * dv;
                    sxv += dx * dv;
                }
                left -= chunk;
            }
            const double nn = double(n);
            const double mdx = sdx / nn, mdv = sdv / nn;
            const double cxx = sxx / nn - mdx * mdx;
            const double cvv = svv / nn - mdv * mdv;
            const double cxv = sxv / nn - mdx * mdv;
            auto track = [&](double dev, double se) {
                worst_se = std::max(worst_se, std::abs(dev) / se);
            };
            track(mdx, std::sqrt(c.s_xx / nn));
            track(mdv, std::sqrt(c.s_vv / nn));
            track(cxx - c.s_xx, c.s_xx * std::sqrt(2.0 / nn));
            track(cvv - c.s_vv, c.s_vv * std::sqrt(2.0 / nn));
            track(cxv - c.s_xv,
                  std::sqrt((c.s_xx * c.s_vv + c.s_xv * c.s_xv) / nn));
        }
    }

    double det_min = 1e300;
    for (int k = 0; k <= 20; ++k)
        for (double gamma : {0.5, 1.0})
            det_min =
                std::min(det_min, underdamped_coeffs(std::ldexp(1.0, -k), gamma).det());

    double ratio_dev = 0.0;
    for (double gamma : {0.5, 1.0}) {
        const double h = 1e-3;
        const KernelCoeffs c = underdamped_coeffs(h, gamma);
        ratio_dev = std::max(
            ratio_dev, std::abs(c.s_xx / (gamma * h * h * h) / (4.0 / 3.0) - 1.0));
        ratio_dev =
            std::max(ratio_dev, std::abs(c.s_xv / (gamma * h * h) / 2.0 - 1.0));
        ratio_dev = std::max(ratio_dev, std::abs(c.s_vv / (gamma * h) / 4.0 - 1.0));
    }

    const bool pass = worst_se <= 4.0 && det_min >= 0.0 && ratio_dev <= 0.01;
    CheckResult res{3, pass, "", timer.seconds()};
    res.detail = "moment deviation max " + cdetail::fmt(worst_se) +
                 " se (limit 4); min det " + cdetail::fmt(det_min, 3) +
                 " (>= 0); small-h ratio deviation " + cdetail::fmt(ratio_dev) +
                 " (limit 0.01)";
    return res;
}

// The full-gradient overdamped chain on the standard Gaussian is an exact
// AR(1) process; its stationary per-coordinate variance is 1/(1 - h/2).
inline CheckResult criterion4(unsigned workers = 0) {
    cdetail::Timer timer;
    RunConfig cfg;
    cfg.algorithm = Algorithm::kOlmc;
    cfg.h = 0.1;
    cfg.M = 400;  // m h = 40, transient below 1e-36
    cfg.N = 100000;
    cfg.seed = 44;
    IsotropicGaussian target(2);
    EnsembleResult res = run_ensemble(cfg, target, workers);
    const double pooled = (res.coord_var[0] + res.coord_var[1]) / 2.0;
    const double exact = 1.0 / (1.0 - cfg.h / 2.0);
    // two independent coordinates pooled: se = sigma^2 / sqrt(N - 1)
    const double se = exact / std::sqrt(double(cfg.N - 1));
    const double dev = std::abs(pooled - exact);
    CheckResult out{4, dev <= 4.0 * se, "", timer.seconds()};
    out.detail = "pooled coordinate variance " + cdetail::fmt(pooled, 8) + " vs " +
                 cdetail::fmt(exact, 8) + ", deviation " + cdetail::fmt(dev / se) +
                 " se (limit 4)";
    return out;
}

// Fitted h-scaling exponents of the saturation error on the d = 50
// standard-Gaussian sweep. The h grid sits at and above the stability
// boundary h d = 2 of the overdamped coordinate methods on this target, so
// they keep fewer than three finite cells and the fit is unavailable;
// reported as a failure rather than fitted on a truncated grid.
inline CheckResult criterion5(unsigned workers = 0) {
    cdetail::Timer timer;
    ExperimentSpec spec = make_preset("example1", "desk");
    ExperimentOutput out = run_experiment(spec, workers);

    struct Band {
        const char* alg;
        double lo, hi;  // hi = inf means one-sided
    };
    const double inf = std::numeric_limits<double>::infinity();
    const Band bands[] = {{"rcd_o", 0.6, 1.4},  {"svrg_o", 1.5, 2.5},
                          {"rcad_o", 1.5, 2.5}, {"rcd_u", 0.6, 1.4},
                          {"svrg_u", 1.8, inf}, {"rcad_u", 1.8, inf}};
    bool pass = true;
    std::ostringstream os;
    for (const Band& b : bands) {
        std::vector<std::pair<double, double>> pts;
        for (const SaturationEntry& e : out.saturation)
            if (e.algorithm == b.alg) pts.emplace_back(e.h, e.saturation_error);
        try {
            const double slope = fit_loglog_slope(pts);
            const bool ok = slope >= b.lo && slope <= b.hi;
            pass = pass && ok;
            os << b.alg << " slope " << cdetail::fmt(slope, 3)
               << (b.hi == inf ? " (want >= " + cdetail::fmt(b.lo, 3) + ")"
                               : " (want " + cdetail::fmt(b.lo, 3) + ".." +
                                     cdetail::fmt(b.hi, 3) + ")")
               << (ok ? "" : " MISS") << "; ";
        } catch (const std::exception&) {
            pass = false;
            os << b.alg << " fit unavailable (" << pts.size()
               << " finite cells, need 3); ";
        }
    }
    CheckResult res{5, pass, os.str(), timer.seconds()};
    return res;
}

// Exact partial-derivative accounting for every algorithm.
inline CheckResult criterion6() {
    cdetail::Timer timer;
    IsotropicGaussian target(10);
    struct Case {
        Algorithm alg;
        std::uint64_t want;
    };
    const Case cases[] = {
        {Algorithm::kRcdO, 1000},  {Algorithm::kRcdU, 1000},
        {Algorithm::kRcadO, 1010}, {Algorithm::kRcadU, 1010},
        {Algorithm::kSvrgO, 1900}, {Algorithm::kSvrgU, 1900},
        {Algorithm::kOlmc, 10000}, {Algorithm::kUlmc, 10000},
    };
    bool pass = true;
    std::ostringstream os;
    for (const Case& c : cases) {
        RunConfig cfg;
        cfg.algorithm = c.alg;
        cfg.h = 0.01;
        cfg.tau = 10;
        cfg.M = 1000;
        cfg.seed = 6;
        ChainStream s(cfg.seed, 0);
        const ChainResult r = run_chain(cfg, target, s);
        const bool ok = r.cost == c.want;
        pass = pass && ok;
        os << algorithm_name(c.alg) << " " << r.cost << (ok ? "" : "!=expected")
           << "; ";
    }
    {
        RunConfig cfg;
        cfg.algorithm = Algorithm::kRcadO;
        cfg.M = 0;
        ChainStream s(0, 0);
        const ChainResult r = run_chain(cfg, target, s);
        pass = pass && r.cost == 0;
        os << "M=0 " << r.cost;
    }
    return {6, pass, os.str(), timer.seconds()};
}

// Transcribed convergence bound dominates the exact W2 trajectory of the
// Gaussian AR(1) chain at h = cap/2 for every m up to 1e4.
inline CheckResult criterion7() {
    cdetail::Timer timer;
    bool pass = true;
    std::ostringstream os;
    for (std::size_t d : {std::size_t(2), std::size_t(10), std::size_t(50)}) {
        BoundParams bp;
        bp.mu = 1.0;
        bp.lip_grad = 1.0;
        bp.lip_hess = 0.0;
        bp.d = d;
        bp.W0 = 0.5 * std::sqrt(double(d));
        const double cap = stepsize_cap(Algorithm::kOlmc, bp);
        const double h = cap / 2.0;
        const double vinf = 1.0 / (1.0 - h / 2.0);
        std::vector<double> mean1(d), var1(d), mean2(d, 0.0), var2(d, 1.0);
        double min_gap = 1e300;
        for (std::uint64_t m = 0; m <= 10000; ++m) {
            const double decay = std::pow(1.0 - h, double(m));
            const double vm = vinf + decay * decay * (1.0 - vinf);
            for (std::size_t i = 0; i < d; ++i) {
                mean1[i] = 0.5 * decay;
                var1[i] = vm;
            }
            const double w2 = w2_gaussian_diag(mean1, var1, mean2, var2);
            const double ub = w2_bound(Algorithm::kOlmc, m, h, bp);
            min_gap = std::min(min_gap, ub - w2);
        }
        pass = pass && min_gap >= 0.0;
        os << "d=" << d << " min(bound - exact W2) = " << cdetail::fmt(min_gap, 3)
           << "; ";
    }
    return {7, pass, os.str(), timer.seconds()};
}

// Lower-bound arithmetic at hypothesis-satisfying parameters, hypothesis
// gates, and the empirical signature the bound predicts: at fixed h the
// saturation bias of the underdamped coordinate method grows with d.
inline CheckResult criterion8(unsigned workers = 0) {
    cdetail::Timer timer;
    bool arith = true;
    arith = arith && cdetail::rel_err(counterexample_lower_bound(2000, 1e-10, 1000000),
                                      0.043664472800473954) < 1e-12;
    arith = arith && cdetail::rel_err(counterexample_lower_bound(2000, 1e-10, 0),
                                      0.04367320656760523) < 1e-12;
    arith = arith &&
            cdetail::rel_err(counterexample_lower_bound(2000, 1e-10,
                                                        std::uint64_t(1) << 62),
                             3.882062460937136e-09) < 1e-12;
    auto rejects = [](std::size_t d, double h) {
        try {
            counterexample_lower_bound(d, h, 1);
            return false;
        } catch (const std::exception&) {
            return true;
        }
    };
    const bool gates = rejects(1800, 1e-10) && rejects(2000, 1e-9);

    double sat[3] = {0, 0, 0};
    const std::size_t dims[3] = {20, 40, 80};
    for (int i = 0; i < 3; ++i) {
        RunConfig cfg;
        cfg.algorithm = Algorithm::kRcdU;
        cfg.h = 1e-3;
        cfg.gamma = 1.0;
        cfg.M = 12000;
        cfg.N = 480000 / dims[i];
        cfg.seed = 8;
        cfg.init = {0.125, 1.0, 0.0, 1.0};
        cfg.phi = TestFn::kMeanSq;
        cfg.record_stride = 240;
        IsotropicGaussian target(dims[i]);
        EnsembleResult res = run_ensemble(cfg, target, workers);
        sat[i] = saturation_error(res.records, 1.0);
    }
    const bool mono = sat[0] < sat[1] && sat[1] < sat[2];

    CheckResult res{8, arith && gates && mono, "", timer.seconds()};
    res.detail = std::string("lower-bound arithmetic ") + (arith ? "ok" : "BAD") +
                 "; hypothesis gates " + (gates ? "ok" : "BAD") +
                 "; saturation bias at h=1e-3: d=20 " + cdetail::fmt(sat[0]) +
                 ", d=40 " + cdetail::fmt(sat[1]) + ", d=80 " + cdetail::fmt(sat[2]) +
                 (mono ? " (strictly increasing)" : " (NOT increasing)");
    return res;
}

// Worker-count invariance: identical bits from 1 and 4 workers on an
// ensemble and on a full sweep cell.
inline CheckResult criterion9() {
    cdetail::Timer timer;
    auto bits = [](double v) { return std::bit_cast<std::uint64_t>(v); };
    bool pass = true;
    std::ostringstream os;
    {
        RunConfig cfg;
        cfg.algorithm = Algorithm::kOlmc;
        cfg.h = 0.1;
        cfg.M = 400;
        cfg.N = 100000;
        cfg.seed = 44;
        IsotropicGaussian target(2);
        const EnsembleResult a = run_ensemble(cfg, target, 1);
        const EnsembleResult b = run_ensemble(cfg, target, 4);
        const bool ok = bits(a.phi_mean) == bits(b.phi_mean) &&
                        bits(a.phi_stderr) == bits(b.phi_stderr) &&
                        a.cost == b.cost &&
                        bits(a.coord_var[0]) == bits(b.coord_var[0]) &&
                        bits(a.coord_var[1]) == bits(b.coord_var[1]);
        pass = pass && ok;
        os << "ensemble stats 1 vs 4 workers "
           << (ok ? "bit-identical" : "DIFFER") << "; ";
    }
    {
        ExperimentSpec spec = make_preset("example1", "desk");
        spec.algorithms = {"svrg_u"};
        spec.h_list = {0.32};
        const ExperimentOutput a = run_experiment(spec, 1);
        const ExperimentOutput b = run_experiment(spec, 4);
        bool ok = a.rows.size() == 1 && b.rows.size() == 1 &&
                  bits(a.rows[0].weak_error) == bits(b.rows[0].weak_error) &&
                  bits(a.rows[0].mc_stderr) == bits(b.rows[0].mc_stderr) &&
                  a.rows[0].cost_partials == b.rows[0].cost_partials &&
                  a.rows[0].status == b.rows[0].status &&
                  a.saturation.size() == b.saturation.size();
        for (std::size_t i = 0; ok && i < a.saturation.size(); ++i)
            ok = bits(a.saturation[i].saturation_error) ==
                 bits(b.saturation[i].saturation_error);
        pass = pass && ok;
        os << "sweep cell (svrg_u, h=0.32) "
           << (ok ? "bit-identical" : "DIFFER");
    }
    return {9, pass, os.str(), timer.seconds()};
}

inline CheckResult run_criterion(int id, unsigned workers = 0) {
    switch (id) {
        case 1: return criterion1();
        case 2: return criterion2();
        case 3: return criterion3();
        case 4: return criterion4(workers);
        case 5: return criterion5(workers);
        case 6: return criterion6();
        case 7: return criterion7();
        case 8: return criterion8(workers);
        case 9: return criterion9();
    }
    throw std::invalid_argument("criterion id must be in 1..9");
}

inline std::vector<int> suite_ids(const std::string& suite) {
    if (suite == "unit") return {1, 2, 6, 7};
    if (suite == "moments") return {3, 4, 9};
    if (suite == "slopes") return {5, 8};
    if (suite == "all") return {1, 2, 3, 4, 5, 6, 7, 8, 9};
    throw std::invalid_argument("unknown suite: " + suite +
                                " (want unit, moments, slopes, or all)");
}

} // namespace checks
} // namespace rclmc

#pragma once
// Sampler kernels and drivers.
//
// Overdamped step: x' = x - h F + sqrt(2h) xi.
//
// Underdamped step: exact one-step law of the damped system
//   dX = V dt,  dV = -2 V dt - gamma F dt + sqrt(4 gamma) dB
// integrated over one interval h with F frozen. Per coordinate,
// (x', v') is Gaussian with
//   mean_x = x + a_xv v + a_xF F,   mean_v = a_vv v + a_vF F
// and covariance [[s_xx, s_xv], [s_xv, s_vv]]. With u = expm1(-2h):
//   a_xv = -u/2                  a_xF = -(gamma/2)(h + u/2)
//   a_vv = 1 + u                 a_vF = (gamma/2) u
//   s_vv = -gamma expm1(-4h)     s_xv = (gamma/2) u^2
//   s_xx = gamma (h + u/2 - u^2/4)
// s_xx cancels catastrophically as h -> 0 (it is O(h^3)), so below the
// switchover it is evaluated by its Taylor expansion through h^7.
// Fluctuations are applied through the lower-triangular square root
// (l11, l21, l22) of the covariance.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "rclmc/estimators.hpp"
#include "rclmc/potentials.hpp"
#include "rclmc/rng.hpp"

namespace rclmc {

enum class Algorithm { kOlmc, kUlmc, kRcdO, kRcdU, kSvrgO, kSvrgU, kRcadO, kRcadU };

inline bool is_underdamped(Algorithm a) {
    return a == Algorithm::kUlmc || a == Algorithm::kRcdU ||
           a == Algorithm::kSvrgU || a == Algorithm::kRcadU;
}

// Coordinate methods consume one selection slot per step (SVRG discards
// the draw on epoch steps); full-gradient methods consume none.
inline bool uses_selection(Algorithm a) {
    return a != Algorithm::kOlmc && a != Algorithm::kUlmc;
}

inline bool is_svrg(Algorithm a) {
    return a == Algorithm::kSvrgO || a == Algorithm::kSvrgU;
}

inline bool is_rcad(Algorithm a) {
    return a == Algorithm::kRcadO || a == Algorithm::kRcadU;
}

inline const char* algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::kOlmc: return "olmc";
        case Algorithm::kUlmc: return "ulmc";
        case Algorithm::kRcdO: return "rcd_o";
        case Algorithm::kRcdU: return "rcd_u";
        case Algorithm::kSvrgO: return "svrg_o";
        case Algorithm::kSvrgU: return "svrg_u";
        case Algorithm::kRcadO: return "rcad_o";
        case Algorithm::kRcadU: return "rcad_u";
    }
    throw std::logic_error("algorithm_name: bad enum");
}

inline Algorithm parse_algorithm(const std::string& s) {
    for (Algorithm a : {Algorithm::kOlmc, Algorithm::kUlmc, Algorithm::kRcdO,
                        Algorithm::kRcdU, Algorithm::kSvrgO, Algorithm::kSvrgU,
                        Algorithm::kRcadO, Algorithm::kRcadU})
        if (s == algorithm_name(a)) return a;
    throw std::invalid_argument("unknown algorithm: " + s);
}

struct KernelCoeffs {
    double h = 0, gamma = 0;
    double a_xv = 0, a_xF = 0, a_vv = 1, a_vF = 0;
    double s_xx = 0, s_xv = 0, s_vv = 0;
    double l11 = 0, l21 = 0, l22 = 0;

    double det() const { return s_xx * s_vv - s_xv * s_xv; }
};

inline KernelCoeffs underdamped_coeffs(double h, double gamma) {
    if (h < 0) throw std::invalid_argument("underdamped_coeffs: h < 0");
    if (gamma < 0) throw std::invalid_argument("underdamped_coeffs: gamma < 0");
    KernelCoeffs c;
    c.h = h;
    c.gamma = gamma;
    const double u = std::expm1(-2.0 * h);
    c.a_xv = -0.5 * u;
    c.a_xF = -0.5 * gamma * (h + 0.5 * u);
    c.a_vv = 1.0 + u;
    c.a_vF = 0.5 * gamma * u;
    c.s_vv = -gamma * std::expm1(-4.0 * h);
    c.s_xv = 0.5 * gamma * u * u;
    if (h < 1e-3) {
        const double h3 = h * h * h;
        c.s_xx = gamma * h3 *
                 (4.0 / 3.0 +
                  h * (-2.0 + h * (28.0 / 15.0 + h * (-4.0 / 3.0 + h * (248.0 / 315.0)))));
    } else {
        c.s_xx = gamma * (h + 0.5 * u - 0.25 * u * u);
    }
    const double det = c.det();
    if (det < -1e-15) throw std::runtime_error("underdamped_coeffs: covariance not PSD");
    c.l11 = std::sqrt(c.s_xx < 0.0 ? 0.0 : c.s_xx);
    if (c.l11 > 0.0) {
        c.l21 = c.s_xv / c.l11;
        const double rem = c.s_vv - c.l21 * c.l21;
        c.l22 = std::sqrt(rem < 0.0 ? 0.0 : rem);
    } else {
        // h = 0 (or gamma = 0): no positional noise, sample v' only
        c.l21 = 0.0;
        c.l22 = std::sqrt(c.s_vv < 0.0 ? 0.0 : c.s_vv);
    }
    return c;
}

// x in/out; noise holds d standard normals.
inline void overdamped_step_into(double* x, const double* F, double h,
                                 const double* noise, std::size_t d) {
    const double c = std::sqrt(2.0 * h);
    for (std::size_t i = 0; i < d; ++i) x[i] = (x[i] - h * F[i]) + c * noise[i];
}

// x, v in/out; noise holds 2d standard normals, pair (2i, 2i+1) feeding
// coordinate i through the triangular factor.
inline void underdamped_step_into(double* x, double* v, const double* F,
                                  const KernelCoeffs& c, const double* noise,
                                  std::size_t d) {
    for (std::size_t i = 0; i < d; ++i) {
        const double mx = x[i] + c.a_xv * v[i] + c.a_xF * F[i];
        const double mv = c.a_vv * v[i] + c.a_vF * F[i];
        x[i] = mx + c.l11 * noise[2 * i];
        v[i] = mv + (c.l21 * noise[2 * i] + c.l22 * noise[2 * i + 1]);
    }
}

inline std::vector<double> overdamped_step(const std::vector<double>& x,
                                           const Flux& F, double h,
                                           const std::vector<double>& noise) {
    if (F.F.size() != x.size() || noise.size() != x.size())
        throw std::invalid_argument("overdamped_step: size mismatch");
    std::vector<double> out(x);
    overdamped_step_into(out.data(), F.F.data(), h, noise.data(), out.size());
    return out;
}

inline std::pair<std::vector<double>, std::vector<double>> underdamped_step(
    const std::vector<double>& x, const std::vector<double>& v, const Flux& F,
    const KernelCoeffs& c, const std::vector<double>& noise) {
    if (v.size() != x.size() || F.F.size() != x.size() || noise.size() != 2 * x.size())
        throw std::invalid_argument("underdamped_step: size mismatch");
    std::pair<std::vector<double>, std::vector<double>> out(x, v);
    underdamped_step_into(out.first.data(), out.second.data(), F.F.data(), c,
                          noise.data(), x.size());
    return out;
}

// Initial law: independent per-coordinate Gaussians with broadcast mean
// and standard deviation (std 0 means a deterministic point, no draws).
struct InitSpec {
    double x_mean = 0.0;
    double x_std = 1.0;
    double v_mean = 0.0;
    double v_std = 1.0;
};

struct RunConfig {
    Algorithm algorithm = Algorithm::kOlmc;
    double h = 0.1;
    double gamma = 0.0;        // <= 0: default to 1/L when L is known
    std::uint32_t tau = 0;     // 0: default to d (SVRG only)
    std::uint64_t M = 0;       // number of steps
    std::uint64_t N = 1;       // ensemble size
    std::uint64_t seed = 0;
    InitSpec init;
    SelectionDistribution selection;
    TestFn phi = TestFn::kX1Sq;
    std::uint64_t record_stride = 0;  // 0: no trajectory
    double abort_above = 1e10;        // divergence threshold on |x|^2
};

inline double resolve_gamma(const RunConfig& cfg, const Potential& p) {
    if (cfg.gamma > 0.0) return cfg.gamma;
    const Curvature c = p.curvature();
    if (c.lip_grad && *c.lip_grad > 0.0) return 1.0 / *c.lip_grad;
    throw std::runtime_error("gamma unset and lip_grad unknown for " + p.name());
}

inline std::uint32_t resolve_tau(const RunConfig& cfg, const Potential& p) {
    return cfg.tau != 0 ? cfg.tau : std::uint32_t(p.dim());
}

struct ChainResult {
    std::vector<double> x, v;
    std::uint64_t cost = 0;
    bool diverged = false;
    std::uint64_t diverged_at = 0;                          // step index m
    std::vector<std::pair<std::uint64_t, double>> trajectory;  // (m, phi)
};

// Reusable per-chain workspace; run() executes one chain front to back.
class ChainRunner {
public:
    ChainRunner(const RunConfig& cfg, const Potential& p)
        : cfg_(cfg), p_(p), d_(p.dim()), gamma_(0.0) {
        under_ = is_underdamped(cfg.algorithm);
        if (under_) {
            gamma_ = resolve_gamma(cfg, p);
            coeffs_ = underdamped_coeffs(cfg.h, gamma_);
        }
        if (is_svrg(cfg.algorithm)) {
            svrg_.tau = resolve_tau(cfg, p);
            svrg_.x_anchor.resize(d_);
            svrg_.g_anchor.resize(d_);
        }
        F_.resize(d_);
        noise_.resize(under_ ? 2 * d_ : d_);
    }

    ChainResult run(ChainStream& stream) const {
        ChainResult res;
        res.x.resize(d_);
        init_block(stream, res.x.data(), cfg_.init.x_mean, cfg_.init.x_std);
        if (under_) {
            res.v.resize(d_);
            init_block(stream, res.v.data(), cfg_.init.v_mean, cfg_.init.v_std);
        }
        if (is_rcad(cfg_.algorithm) && cfg_.M > 0) {
            rcad_.g.resize(d_);
            p_.gradient(res.x.data(), rcad_.g.data());
            res.cost += d_;
        }
        if (cfg_.record_stride > 0)
            res.trajectory.emplace_back(0, eval_test_fn(cfg_.phi, res.x.data(), d_));
        for (std::uint64_t m = 0; m < cfg_.M; ++m) {
            std::size_t r = 0;
            if (uses_selection(cfg_.algorithm)) r = cfg_.selection.sample(stream, d_);
            res.cost += flux_into(res.x.data(), m, r);
            stream.next_normals(noise_.size(), noise_.data());
            if (under_) {
                underdamped_step_into(res.x.data(), res.v.data(), F_.data(),
                                      coeffs_, noise_.data(), d_);
            } else {
                overdamped_step_into(res.x.data(), F_.data(), cfg_.h,
                                     noise_.data(), d_);
            }
            double norm2 = 0.0;
            for (std::size_t i = 0; i < d_; ++i) norm2 += res.x[i] * res.x[i];
            if (!(norm2 <= cfg_.abort_above)) {  // catches NaN too
                res.diverged = true;
                res.diverged_at = m;
                return res;
            }
            if (cfg_.record_stride > 0 && (m + 1) % cfg_.record_stride == 0)
                res.trajectory.emplace_back(
                    m + 1, eval_test_fn(cfg_.phi, res.x.data(), d_));
        }
        return res;
    }

    const KernelCoeffs& coeffs() const { return coeffs_; }
    double gamma() const { return gamma_; }

private:
    void init_block(ChainStream& stream, double* out, double mean, double std) const {
        if (std > 0.0) {
            stream.next_normals(d_, out);
            for (std::size_t i = 0; i < d_; ++i) out[i] = mean + std * out[i];
        } else {
            for (std::size_t i = 0; i < d_; ++i) out[i] = mean;
        }
    }

    std::uint64_t flux_into(const double* x, std::uint64_t m, std::size_t r) const {
        switch (cfg_.algorithm) {
            case Algorithm::kOlmc:
            case Algorithm::kUlmc:
                return full_flux_into(p_, x, F_.data());
            case Algorithm::kRcdO:
            case Algorithm::kRcdU:
                return rcd_flux_into(p_, x, r, cfg_.selection, F_.data());
            case Algorithm::kSvrgO:
            case Algorithm::kSvrgU:
                return svrg_flux_into(svrg_, p_, x, m, r, F_.data());
            case Algorithm::kRcadO:
            case Algorithm::kRcadU:
                return rcad_flux_into(rcad_, p_, x, r, F_.data());
        }
        throw std::logic_error("flux_into: bad enum");
    }

    const RunConfig& cfg_;
    const Potential& p_;
    std::size_t d_;
    double gamma_;
    bool under_ = false;
    KernelCoeffs coeffs_;
    mutable SvrgState svrg_;
    mutable RcadState rcad_;
    mutable std::vector<double> F_, noise_;
};

inline ChainResult run_chain(const RunConfig& cfg, const Potential& p,
                             ChainStream& stream) {
    ChainRunner runner(cfg, p);
    return runner.run(stream);
}

// Compensated (Neumaier) accumulator; merging partials in a fixed order
// keeps ensemble statistics bit-identical for any worker count.
struct NeumaierSum {
    double s = 0.0, c = 0.0;

    void add(double v) {
        const double t = s + v;
        if (std::abs(s) >= std::abs(v))
            c += (s - t) + v;
        else
            c += (v - t) + s;
        s = t;
    }

    double get() const { return s + c; }
};

struct EnsembleResult {
    std::uint64_t n_chains = 0;
    std::uint64_t n_valid = 0;
    std::uint64_t cost = 0;
    std::uint64_t diverged_chains = 0;
    std::uint64_t first_diverged_chain = 0;
    std::uint64_t first_diverged_step = 0;
    double phi_mean = 0.0;
    double phi_stderr = 0.0;
    std::vector<double> coord_mean, coord_var;
    // ensemble mean of phi over valid chains at each recorded step
    std::vector<std::pair<std::uint64_t, double>> records;
};

inline unsigned worker_count() {
    if (const char* env = std::getenv("RCLMC_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return unsigned(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

// N independent chains, chain k on stream (seed, k). Work is issued in
// fixed blocks of chains; workers race only for block indices, and the
// final reduction walks blocks in order, so every statistic is invariant
// under the worker count.
inline EnsembleResult run_ensemble(const RunConfig& cfg, const Potential& p,
                                   unsigned workers = 0) {
    if (cfg.N < 1) throw std::invalid_argument("run_ensemble: N < 1");
    if (workers == 0) workers = worker_count();
    const std::size_t d = p.dim();
    constexpr std::uint64_t kBlock = 1024;
    const std::uint64_t n_blocks = (cfg.N + kBlock - 1) / kBlock;

    struct BlockAcc {
        NeumaierSum phi, phi2;
        std::vector<NeumaierSum> cmean, c2;
        std::vector<NeumaierSum> rec;
        std::uint64_t cost = 0, valid = 0, diverged = 0;
        std::uint64_t first_div_chain = ~0ull, first_div_step = 0;
    };
    std::vector<BlockAcc> acc(n_blocks);

    std::atomic<std::uint64_t> next{0};
    auto work = [&]() {
        ChainRunner runner(cfg, p);
        for (;;) {
            const std::uint64_t b = next.fetch_add(1);
            if (b >= n_blocks) break;
            BlockAcc& a = acc[b];
            a.cmean.resize(d);
            a.c2.resize(d);
            const std::uint64_t lo = b * kBlock;
            const std::uint64_t hi = std::min(cfg.N, lo + kBlock);
            for (std::uint64_t k = lo; k < hi; ++k) {
                ChainStream stream(cfg.seed, k);
                ChainResult r = runner.run(stream);
                a.cost += r.cost;
                if (r.diverged) {
                    ++a.diverged;
                    if (k < a.first_div_chain) {
                        a.first_div_chain = k;
                        a.first_div_step = r.diverged_at;
                    }
                    continue;
                }
                ++a.valid;
                const double phi = eval_test_fn(cfg.phi, r.x.data(), d);
                a.phi.add(phi);
                a.phi2.add(phi * phi);
                for (std::size_t i = 0; i < d; ++i) {
                    a.cmean[i].add(r.x[i]);
                    a.c2[i].add(r.x[i] * r.x[i]);
                }
                if (!r.trajectory.empty()) {
                    if (a.rec.size() < r.trajectory.size())
                        a.rec.resize(r.trajectory.size());
                    for (std::size_t j = 0; j < r.trajectory.size(); ++j)
                        a.rec[j].add(r.trajectory[j].second);
                }
            }
        }
    };

    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    EnsembleResult out;
    out.n_chains = cfg.N;
    NeumaierSum phi, phi2;
    std::vector<NeumaierSum> cmean(d), c2(d);
    std::vector<NeumaierSum> rec;
    std::size_t rec_len = 0;
    for (const BlockAcc& a : acc) rec_len = std::max(rec_len, a.rec.size());
    rec.resize(rec_len);
    out.first_diverged_chain = ~0ull;
    for (const BlockAcc& a : acc) {
        out.cost += a.cost;
        out.n_valid += a.valid;
        out.diverged_chains += a.diverged;
        if (a.diverged && a.first_div_chain < out.first_diverged_chain) {
            out.first_diverged_chain = a.first_div_chain;
            out.first_diverged_step = a.first_div_step;
        }
        phi.add(a.phi.s);
        phi.add(a.phi.c);
        phi2.add(a.phi2.s);
        phi2.add(a.phi2.c);
        for (std::size_t i = 0; i < d; ++i) {
            cmean[i].add(a.cmean[i].s);
            cmean[i].add(a.cmean[i].c);
            c2[i].add(a.c2[i].s);
            c2[i].add(a.c2[i].c);
        }
        for (std::size_t j = 0; j < a.rec.size(); ++j) {
            rec[j].add(a.rec[j].s);
            rec[j].add(a.rec[j].c);
        }
    }
    if (out.n_valid > 0) {
        const double n = double(out.n_valid);
        out.phi_mean = phi.get() / n;
        if (out.n_valid > 1) {
            const double ss = phi2.get() - n * out.phi_mean * out.phi_mean;
            const double var = ss > 0.0 ? ss / (n - 1.0) : 0.0;
            out.phi_stderr = std::sqrt(var / n);
        }
        out.coord_mean.resize(d);
        out.coord_var.resize(d);
        for (std::size_t i = 0; i < d; ++i) {
            out.coord_mean[i] = cmean[i].get() / n;
            if (out.n_valid > 1) {
                const double ss = c2[i].get() - n * out.coord_mean[i] * out.coord_mean[i];
                out.coord_var[i] = ss > 0.0 ? ss / (n - 1.0) : 0.0;
            }
        }
        if (cfg.record_stride > 0) {
            out.records.reserve(rec_len);
            for (std::size_t j = 0; j < rec_len; ++j)
                out.records.emplace_back(j * cfg.record_stride, rec[j].get() / n);
        }
    }
    return out;
}

} // namespace rclmc

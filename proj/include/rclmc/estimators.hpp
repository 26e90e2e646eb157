#pragma once
// Gradient fluxes: the surrogate F for grad f used by one sampler step.
//
// Charging rule (partial-derivative units): a full gradient costs d, a
// single partial costs 1. Every flux reports what it consumed in
// Flux::charged; chains accumulate these integers exactly.
//
// The *_into functions write the dense flux into a caller buffer and are
// the single source of the arithmetic; the value-returning wrappers
// allocate and delegate to them.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rclmc/potentials.hpp"
#include "rclmc/rng.hpp"

namespace rclmc {

// Coordinate-selection law phi over {0,..,d-1}. Default-constructed means
// uniform for any dimension; an explicit table must be strictly positive
// and sum to 1 within 1e-12.
class SelectionDistribution {
public:
    SelectionDistribution() = default;

    explicit SelectionDistribution(std::vector<double> phi) : phi_(std::move(phi)) {
        if (phi_.empty()) throw std::invalid_argument("selection: empty table");
        double sum = 0.0;
        for (double p : phi_) {
            if (!(p > 0.0)) throw std::invalid_argument("selection: phi_i <= 0");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("selection: sum(phi) != 1");
        cdf_.resize(phi_.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < phi_.size(); ++i) {
            acc += phi_[i];
            cdf_[i] = acc;
        }
        cdf_.back() = 1.0;
    }

    bool is_uniform() const { return phi_.empty(); }

    double prob(std::size_t i, std::size_t d) const {
        if (is_uniform()) return 1.0 / double(d);
        check_dim(d);
        return phi_[i];
    }

    // Consumes exactly one stream slot regardless of the law.
    std::size_t sample(ChainStream& s, std::size_t d) const {
        if (is_uniform()) return s.next_index(std::uint32_t(d));
        check_dim(d);
        const double u = s.next_unit();
        std::size_t lo = 0, hi = cdf_.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (u < cdf_[mid]) hi = mid; else lo = mid + 1;
        }
        return lo;
    }

    const std::vector<double>& table() const { return phi_; }

private:
    void check_dim(std::size_t d) const {
        if (phi_.size() != d)
            throw std::invalid_argument("selection: table/dim mismatch");
    }

    std::vector<double> phi_;
    std::vector<double> cdf_;
};

struct Flux {
    std::vector<double> F;
    std::uint64_t charged = 0;
};

// Persistent estimator memory.
struct SvrgState {
    std::vector<double> x_anchor;  // snapshot point
    std::vector<double> g_anchor;  // full gradient at the snapshot
    std::uint32_t tau = 0;         // epoch length
};

struct RcadState {
    std::vector<double> g;  // running table of freshest partials
};

// F = grad f(x); charged = d.
inline std::uint64_t full_flux_into(const Potential& p, const double* x, double* F) {
    p.gradient(x, F);
    return p.dim();
}

// F = (1/phi_r) d_r f(x) e_r; charged = 1.
inline std::uint64_t rcd_flux_into(const Potential& p, const double* x,
                                   std::size_t r, const SelectionDistribution& dist,
                                   double* F) {
    const std::size_t d = p.dim();
    if (r >= d) throw std::out_of_range("rcd_flux: coordinate index");
    for (std::size_t i = 0; i < d; ++i) F[i] = 0.0;
    F[r] = p.partial(x, r) / dist.prob(r, d);
    return 1;
}

// Epoch step (m % tau == 0): refresh the anchor pair, F = g_anchor,
// charged = d; r is ignored (the caller still consumed a selection draw).
// Otherwise F = g_anchor + d (d_r f(x) - g_anchor_r) e_r, charged = 1;
// the anchor partial comes from the stored full gradient, so no second
// oracle call is made.
inline std::uint64_t svrg_flux_into(SvrgState& state, const Potential& p,
                                    const double* x, std::uint64_t m,
                                    std::size_t r, double* F) {
    const std::size_t d = p.dim();
    if (state.tau == 0) throw std::invalid_argument("svrg_flux: tau == 0");
    if (state.x_anchor.size() != d || state.g_anchor.size() != d)
        throw std::invalid_argument("svrg_flux: state/dim mismatch");
    if (m % state.tau == 0) {
        state.x_anchor.assign(x, x + d);
        p.gradient(x, state.g_anchor.data());
        for (std::size_t i = 0; i < d; ++i) F[i] = state.g_anchor[i];
        return d;
    }
    if (r >= d) throw std::out_of_range("svrg_flux: coordinate index");
    for (std::size_t i = 0; i < d; ++i) F[i] = state.g_anchor[i];
    F[r] += double(d) * (p.partial(x, r) - state.g_anchor[r]);
    return 1;
}

// F = g + d (d_r f(x) - g_r) e_r, then the table entry g_r is replaced by
// the fresh partial; charged = 1. The table must have been initialized to
// a full gradient (charged d by the chain) before the first step.
inline std::uint64_t rcad_flux_into(RcadState& state, const Potential& p,
                                    const double* x, std::size_t r, double* F) {
    const std::size_t d = p.dim();
    if (state.g.size() != d) throw std::invalid_argument("rcad_flux: state/dim mismatch");
    if (r >= d) throw std::out_of_range("rcad_flux: coordinate index");
    const double fresh = p.partial(x, r);
    for (std::size_t i = 0; i < d; ++i) F[i] = state.g[i];
    F[r] += double(d) * (fresh - state.g[r]);
    state.g[r] = fresh;
    return 1;
}

inline Flux full_flux(const Potential& p, const std::vector<double>& x) {
    Flux f;
    f.F.resize(p.dim());
    f.charged = full_flux_into(p, x.data(), f.F.data());
    return f;
}

inline Flux rcd_flux(const Potential& p, const std::vector<double>& x,
                     std::size_t r, const SelectionDistribution& dist = {}) {
    Flux f;
    f.F.resize(p.dim());
    f.charged = rcd_flux_into(p, x.data(), r, dist, f.F.data());
    return f;
}

inline Flux svrg_flux(SvrgState& state, const Potential& p,
                      const std::vector<double>& x, std::uint64_t m, std::size_t r) {
    Flux f;
    f.F.resize(p.dim());
    f.charged = svrg_flux_into(state, p, x.data(), m, r, f.F.data());
    return f;
}

inline Flux rcad_flux(RcadState& state, const Potential& p,
                      const std::vector<double>& x, std::size_t r) {
    Flux f;
    f.F.resize(p.dim());
    f.charged = rcad_flux_into(state, p, x.data(), r, f.F.data());
    return f;
}

// Exhaustive E_r |F - grad f(x)|^2 for the RCD flux under `dist`.
// Closed forms it must reproduce: (d-1)|grad f|^2 under uniform selection,
// sum_i (1/phi_i - 1) (d_i f)^2 in general.
inline double rcd_variance_exact(const Potential& p, const std::vector<double>& x,
                                 const SelectionDistribution& dist = {}) {
    const std::size_t d = p.dim();
    std::vector<double> g(d);
    p.gradient(x.data(), g.data());
    double g2 = 0.0;
    for (double v : g) g2 += v * v;
    double out = 0.0;
    for (std::size_t r = 0; r < d; ++r) {
        const double fr = g[r] / dist.prob(r, d);
        // |F - g|^2 = |g|^2 - g_r^2 + (F_r - g_r)^2
        const double dev = (g2 - g[r] * g[r]) + (fr - g[r]) * (fr - g[r]);
        out += dist.prob(r, d) * dev;
    }
    return out;
}

} // namespace rclmc

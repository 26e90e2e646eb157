#pragma once
// Step-size conditions, W2 convergence-bound right-hand sides, the lower
// bound for the coordinate-descent underdamped sampler on its adversarial
// instance, and order-of-magnitude iteration/cost scalings.
//
// Bounds carry their explicit constants (not asymptotics) so transcription
// errors are catchable by the dominance test against the exact Gaussian
// chain law; see tests. Scalings set all constants and log factors to 1.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "rclmc/kernels.hpp"

namespace rclmc {

struct BoundParams {
    double mu = 0.0;                      // strong convexity, > 0
    double lip_grad = 0.0;                // L >= mu
    std::optional<double> lip_hess;       // H, needed by overdamped bounds
    std::size_t d = 0;
    std::optional<std::uint32_t> tau;     // SVRG epoch length
    double W0 = 0.0;                      // initial W2 distance
    double gamma = 0.0;                   // informational; theorems take 1/L

    double kappa() const { return lip_grad / mu; }

    void validate() const {
        if (!(mu > 0.0)) throw std::invalid_argument("bounds: mu <= 0");
        if (!(lip_grad >= mu)) throw std::invalid_argument("bounds: L < mu");
        if (d < 1) throw std::invalid_argument("bounds: d < 1");
        if (W0 < 0.0) throw std::invalid_argument("bounds: W0 < 0");
        if (lip_hess && *lip_hess < 0.0) throw std::invalid_argument("bounds: H < 0");
    }
};

namespace detail {

inline double require_hess(const BoundParams& p, const char* who) {
    if (!p.lip_hess)
        throw std::runtime_error(std::string(who) + ": lip_hess (H) required");
    return *p.lip_hess;
}

inline double require_tau(const BoundParams& p, const char* who) {
    if (!p.tau || *p.tau == 0)
        throw std::runtime_error(std::string(who) + ": tau required");
    return double(*p.tau);
}

} // namespace detail

// Largest admissible step size for each convergence theorem.
inline double stepsize_cap(Algorithm alg, const BoundParams& p) {
    p.validate();
    const double mu = p.mu, k = p.kappa(), d = double(p.d);
    switch (alg) {
        case Algorithm::kOlmc:
            return 2.0 / (p.mu + p.lip_grad);
        case Algorithm::kUlmc:
            return 1.0 / (8.0 * k * k * mu);
        case Algorithm::kRcdO: {
            const double H = detail::require_hess(p, "stepsize_cap(rcd_o)");
            const double a = 1.0 / (9.0 * k * k * mu * d);
            const double b = 2.0 / (H * H / (k * mu * mu) + k * k * mu / d);
            return std::min(a, b);
        }
        case Algorithm::kRcdU:
            return 1.0 / (880.0 * d * k);
        case Algorithm::kSvrgO: {
            detail::require_hess(p, "stepsize_cap(svrg_o)");
            const double t = detail::require_tau(p, "stepsize_cap(svrg_o)");
            const double a = 1.0 / (400.0 * d * k * k * mu);
            const double b = 1.0 / (10.0 * t * std::max(mu, 1.0));
            return std::min(a, b);
        }
        case Algorithm::kRcadO:
            detail::require_hess(p, "stepsize_cap(rcad_o)");
            return 1.0 / (3.0 * (1.0 + 9.0 * d) * k * k * mu);
        case Algorithm::kSvrgU: {
            const double t = detail::require_tau(p, "stepsize_cap(svrg_u)");
            return std::min(1.0 / (1648.0 * k * d), 1.0 / (40.0 * t));
        }
        case Algorithm::kRcadU:
            return 1.0 / (1648.0 * k * d);
    }
    throw std::logic_error("stepsize_cap: bad enum");
}

// Full right-hand side of the W2 convergence bound at step m, step size h.
// Requires h within the theorem's cap.
inline double w2_bound(Algorithm alg, std::uint64_t m, double h, const BoundParams& p) {
    p.validate();
    if (!(h > 0.0)) throw std::invalid_argument("w2_bound: h <= 0");
    if (h > stepsize_cap(alg, p))
        throw std::runtime_error("w2_bound: h above the step-size cap; bound not applicable");
    const double mu = p.mu, k = p.kappa(), d = double(p.d);
    const double mh = double(m) * h;
    switch (alg) {
        case Algorithm::kOlmc: {
            const double H = detail::require_hess(p, "w2_bound(olmc)");
            return std::exp(-mu * mh) * p.W0 + H * h * d / (2.0 * mu) +
                   3.0 * std::pow(k, 1.5) * std::sqrt(mu) * h * std::sqrt(d);
        }
        case Algorithm::kUlmc:
            return std::sqrt(2.0) * std::exp(-0.375 * mh / k) * p.W0 +
                   h * std::sqrt(k * d);
        case Algorithm::kRcdO:
            return std::exp(-mu * mh / 4.0) * p.W0 + 6.0 * d * std::sqrt(k * h);
        case Algorithm::kRcdU:
            return 4.0 * std::exp(-mh / (8.0 * k)) * p.W0 +
                   100.0 * std::sqrt(k / mu) * d * std::sqrt(h);
        case Algorithm::kSvrgO: {
            const double H = detail::require_hess(p, "w2_bound(svrg_o)");
            const double t = detail::require_tau(p, "w2_bound(svrg_o)");
            const double c1 = 30.0 * std::pow(k, 1.5) * mu;
            const double c2 = 50.0 * k * std::sqrt(mu) +
                              5.0 * std::sqrt(k * k * k * mu / d +
                                              2.0 * H * H / (mu * mu));
            return std::exp(-mu * mh / 32.0) * p.W0 +
                   std::pow(h, 1.5) * t * d * c1 + h * std::sqrt(t) * d * c2;
        }
        case Algorithm::kRcadO: {
            const double H = detail::require_hess(p, "w2_bound(rcad_o)");
            const double c1 = 77.0 * k * k * mu;
            const double c2 = H * H / (mu * mu) + k * k * k * mu / d;
            return std::sqrt(2.0) * std::exp(-mu * mh / 4.0) * p.W0 +
                   2.0 * h * std::sqrt(d * d * d * c1 + d * d * c2);
        }
        case Algorithm::kSvrgU: {
            const double t = detail::require_tau(p, "w2_bound(svrg_u)");
            return 4.0 * std::exp(-mh / (32.0 * k)) * p.W0 +
                   h * std::sqrt(d) * 200.0 * std::sqrt(k / mu) +
                   std::pow(h, 1.5) * t * d * 240.0 / std::sqrt(mu);
        }
        case Algorithm::kRcadU:
            return 4.0 * std::sqrt(2.0) * std::exp(-mh / (8.0 * k)) * p.W0 +
                   h * std::sqrt(d) * 200.0 * std::sqrt(k / mu) +
                   std::pow(h, 1.5) * d * d * 200.0 / std::sqrt(mu);
    }
    throw std::logic_error("w2_bound: bad enum");
}

// Lower bound on W2 for the coordinate underdamped sampler started from
// the shifted Gaussian instance (mean 1/8 per coordinate, gamma = 1);
// valid only for d > 1872 and h < 1/(1440^2 d).
inline double counterexample_lower_bound(std::size_t d, double h, std::uint64_t m) {
    if (!(d > 1872))
        throw std::runtime_error("counterexample_lower_bound: requires d > 1872");
    if (!(h > 0.0) || !(h < 1.0 / (1440.0 * 1440.0 * double(d))))
        throw std::runtime_error(
            "counterexample_lower_bound: requires h < 1/(1440^2 d)");
    const double dd = double(d);
    return std::exp(-2.0 * double(m) * h) * std::sqrt(dd) / 1024.0 +
           std::pow(dd, 1.5) * h / 2304.0;
}

// Order-of-magnitude iteration count and partial-derivative cost to reach
// accuracy eps, with constants and log factors set to 1.
struct CostScaling {
    double iterations = 0.0;
    double cost = 0.0;
};

inline CostScaling iteration_cost_estimate(Algorithm alg, double d, double eps) {
    if (!(eps > 0.0) || !(eps < 1.0))
        throw std::invalid_argument("iteration_cost_estimate: eps must be in (0,1)");
    if (!(d >= 1.0)) throw std::invalid_argument("iteration_cost_estimate: d < 1");
    switch (alg) {
        case Algorithm::kOlmc:
            return {d / eps, d * d / eps};
        case Algorithm::kUlmc:
            return {std::sqrt(d) / eps, std::pow(d, 1.5) / eps};
        case Algorithm::kRcdO:
        case Algorithm::kRcdU: {
            const double v = d * d / (eps * eps);
            return {v, v};
        }
        case Algorithm::kSvrgO:
        case Algorithm::kRcadO: {
            const double v = std::pow(d, 1.5) / eps;
            return {v, v};
        }
        case Algorithm::kSvrgU:
        case Algorithm::kRcadU: {
            const double v = std::max(std::pow(d, 4.0 / 3.0) / std::pow(eps, 2.0 / 3.0),
                                      std::sqrt(d) / eps);
            return {v, v};
        }
    }
    throw std::logic_error("iteration_cost_estimate: bad enum");
}

} // namespace rclmc

#pragma once
// Target potentials: f with per-coordinate partial-derivative oracles.
//
// Cost is counted in oracle calls, not floating-point work: one partial()
// call is one unit, one gradient() call is d units. The double-Gaussian
// mixture's partial touches every coordinate through the shared sum, yet
// still charges a single unit; this mirrors the library-wide cost model.
//
// gradient() must agree with partial() coordinate-by-coordinate at full
// double precision, so both are built from the same accumulation helpers
// evaluated in the same order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rclmc/rng.hpp"

namespace rclmc {

// Convexity metadata, set only when analytically known.
// mu: strong-convexity constant; lip_grad: gradient Lipschitz constant L;
// lip_hess: Hessian Lipschitz constant H (0 for quadratics).
struct Curvature {
    std::optional<double> mu;
    std::optional<double> lip_grad;
    std::optional<double> lip_hess;

    double kappa() const {
        if (!mu || !lip_grad) throw std::runtime_error("kappa: mu or L unknown");
        return *lip_grad / *mu;
    }
};

class Potential {
public:
    virtual ~Potential() = default;
    virtual std::size_t dim() const = 0;
    virtual double value(const double* x) const = 0;
    // d_i f(x); charges one partial-derivative unit.
    virtual double partial(const double* x, std::size_t i) const = 0;
    // Full gradient; charges dim() units.
    virtual void gradient(const double* x, double* g) const = 0;
    virtual Curvature curvature() const = 0;
    virtual std::string name() const = 0;
};

// f(x) = |x - c|^2 / 2; standard Gaussian target when c = 0.
class IsotropicGaussian final : public Potential {
public:
    explicit IsotropicGaussian(std::size_t d, std::vector<double> center = {})
        : d_(d), center_(std::move(center)) {
        if (center_.empty()) center_.assign(d_, 0.0);
        if (center_.size() != d_)
            throw std::invalid_argument("gaussian: center/dim mismatch");
    }

    std::size_t dim() const override { return d_; }

    double value(const double* x) const override {
        double s = 0.0;
        for (std::size_t i = 0; i < d_; ++i) {
            const double t = x[i] - center_[i];
            s += t * t;
        }
        return 0.5 * s;
    }

    double partial(const double* x, std::size_t i) const override {
        return x[i] - center_[i];
    }

    void gradient(const double* x, double* g) const override {
        for (std::size_t i = 0; i < d_; ++i) g[i] = x[i] - center_[i];
    }

    Curvature curvature() const override { return {1.0, 1.0, 0.0}; }
    std::string name() const override { return "gaussian"; }
    const std::vector<double>& center() const { return center_; }

private:
    std::size_t d_;
    std::vector<double> center_;
};

// Equal-weight mixture of two isotropic Gaussians centred at +/- offset*(1,..,1):
//   p(x) proportional to exp(-|x - c|^2/2) + exp(-|x + c|^2/2),  c = offset*1
//   f(x) = (|x|^2 + d*offset^2)/2 - log 2cosh(offset * sum_j x_j)
//   d_i f = x_i - offset * tanh(offset * sum_j x_j)
// Bimodal, not log-concave: no curvature constants.
class DoubleGaussian final : public Potential {
public:
    DoubleGaussian(std::size_t d, double offset) : d_(d), a_(offset) {
        if (!(offset > 0)) throw std::invalid_argument("mixture: offset <= 0");
    }

    std::size_t dim() const override { return d_; }

    double value(const double* x) const override {
        double ss = 0.0, s = 0.0;
        for (std::size_t i = 0; i < d_; ++i) {
            ss += x[i] * x[i];
            s += x[i];
        }
        const double y = a_ * s;
        // log 2cosh(y), overflow-safe
        const double logcosh = std::abs(y) + std::log1p(std::exp(-2.0 * std::abs(y)));
        return 0.5 * (ss + double(d_) * a_ * a_) - logcosh;
    }

    double partial(const double* x, std::size_t i) const override {
        return x[i] - a_ * std::tanh(a_ * coord_sum(x));
    }

    void gradient(const double* x, double* g) const override {
        const double t = a_ * std::tanh(a_ * coord_sum(x));
        for (std::size_t i = 0; i < d_; ++i) g[i] = x[i] - t;
    }

    Curvature curvature() const override { return {}; }
    std::string name() const override { return "mixture"; }
    double offset() const { return a_; }

private:
    double coord_sum(const double* x) const {
        double s = 0.0;
        for (std::size_t i = 0; i < d_; ++i) s += x[i];
        return s;
    }

    std::size_t d_;
    double a_;
};

enum class NoiseModel { kGaussian, kCosine };

// Synthetic regression data b_i = x_true . a_i + eta_i.
struct GlmDataset {
    std::size_t d = 0;
    NoiseModel noise = NoiseModel::kGaussian;
    std::vector<double> a;  // row-major, count x d
    std::vector<double> b;

    std::size_t count() const { return d ? b.size() : 0; }
    const double* row(std::size_t i) const { return a.data() + i * d; }
};

// Draws one noise sample eta ~ p(eta) prop. exp(-(eta^2 + cos eta)/2) by
// rejection against a standard-normal envelope; the density ratio is the
// bounded factor exp(-cos(eta)/2) <= e^{1/2}, giving acceptance
// probability exp(-(1 + cos z)/2) for an N(0,1) proposal z.
inline double sample_cosine_noise(ChainStream& s) {
    for (;;) {
        const double z = s.next_normal();
        const double u = s.next_unit();
        if (u <= std::exp(-0.5 * (1.0 + std::cos(z)))) return z;
    }
}

// Features a_i ~ N(0, I_d) i.i.d.; eta per the noise model, scaled by
// noise_scale (0 gives exact responses, used by tests).
inline GlmDataset synth_glm_data(std::size_t d, std::size_t count,
                                 const std::vector<double>& x_true,
                                 NoiseModel noise, std::uint64_t seed,
                                 double noise_scale = 1.0) {
    if (x_true.size() != d) throw std::invalid_argument("glm: x_true/dim mismatch");
    GlmDataset ds;
    ds.d = d;
    ds.noise = noise;
    ds.a.resize(count * d);
    ds.b.resize(count);
    ChainStream s(seed, 0);
    s.next_normals(ds.a.size(), ds.a.data());
    for (std::size_t i = 0; i < count; ++i) {
        const double* ai = ds.row(i);
        double dot = 0.0;
        for (std::size_t j = 0; j < d; ++j) dot += x_true[j] * ai[j];
        const double eta = noise == NoiseModel::kGaussian
                               ? s.next_normal()
                               : sample_cosine_noise(s);
        ds.b[i] = dot + noise_scale * eta;
    }
    return ds;
}

// Posterior potential for the regression model with N(0, I) prior:
//   f(x) = |x|^2/2 + sum_i g(b_i - x . a_i)
//   g(eta) = eta^2/2 (gaussian) or (eta^2 + cos eta)/2 (cosine),
//   g'(eta) = eta or (2 eta - sin eta)/2, with g'' in [1/2, 3/2] for cosine.
class GlmPosterior final : public Potential {
public:
    explicit GlmPosterior(GlmDataset data) : data_(std::move(data)) {
        double lmax = power_iteration_lambda_max();
        if (data_.noise == NoiseModel::kGaussian) {
            curv_ = {1.0, 1.0 + lmax, 0.0};
        } else {
            // g'' <= 3/2 and |g'''| <= 1/2 give conservative L and H.
            double cubes = 0.0;
            for (std::size_t i = 0; i < data_.count(); ++i) {
                double n2 = 0.0;
                const double* ai = data_.row(i);
                for (std::size_t j = 0; j < data_.d; ++j) n2 += ai[j] * ai[j];
                cubes += n2 * std::sqrt(n2);
            }
            curv_ = {1.0, 1.0 + 1.5 * lmax, 0.5 * cubes};
        }
    }

    std::size_t dim() const override { return data_.d; }

    double value(const double* x) const override {
        double s = 0.0;
        for (std::size_t j = 0; j < data_.d; ++j) s += x[j] * x[j];
        double v = 0.5 * s;
        for (std::size_t i = 0; i < data_.count(); ++i) {
            const double r = resid(x, i);
            v += data_.noise == NoiseModel::kGaussian
                     ? 0.5 * r * r
                     : 0.5 * (r * r + std::cos(r));
        }
        return v;
    }

    double partial(const double* x, std::size_t i) const override {
        double acc = 0.0;
        for (std::size_t k = 0; k < data_.count(); ++k)
            acc += gprime(resid(x, k)) * data_.row(k)[i];
        return x[i] - acc;
    }

    void gradient(const double* x, double* g) const override {
        // accumulate in the same datum order as partial(), then combine
        // identically, so gradient()[i] == partial(x, i) bit-for-bit
        std::vector<double> acc(data_.d, 0.0);
        for (std::size_t k = 0; k < data_.count(); ++k) {
            const double w = gprime(resid(x, k));
            const double* ak = data_.row(k);
            for (std::size_t i = 0; i < data_.d; ++i) acc[i] += w * ak[i];
        }
        for (std::size_t i = 0; i < data_.d; ++i) g[i] = x[i] - acc[i];
    }

    Curvature curvature() const override { return curv_; }
    std::string name() const override {
        return data_.noise == NoiseModel::kGaussian ? "glm_gaussian" : "glm_cosine";
    }
    const GlmDataset& dataset() const { return data_; }

private:
    double resid(const double* x, std::size_t i) const {
        const double* ai = data_.row(i);
        double dot = 0.0;
        for (std::size_t j = 0; j < data_.d; ++j) dot += x[j] * ai[j];
        return data_.b[i] - dot;
    }

    double gprime(double eta) const {
        return data_.noise == NoiseModel::kGaussian
                   ? eta
                   : 0.5 * (2.0 * eta - std::sin(eta));
    }

    // lambda_max of sum_i a_i a_i^T by power iteration, relative tol 1e-8.
    double power_iteration_lambda_max() const {
        const std::size_t d = data_.d;
        if (d == 0 || data_.count() == 0) return 0.0;
        std::vector<double> u(d), au(d);
        for (std::size_t j = 0; j < d; ++j)
            u[j] = to_unit(mix64(j + 1)) - 0.5;
        double lam = 0.0;
        for (int it = 0; it < 10000; ++it) {
            std::fill(au.begin(), au.end(), 0.0);
            for (std::size_t i = 0; i < data_.count(); ++i) {
                const double* ai = data_.row(i);
                double dot = 0.0;
                for (std::size_t j = 0; j < d; ++j) dot += u[j] * ai[j];
                for (std::size_t j = 0; j < d; ++j) au[j] += dot * ai[j];
            }
            double nrm = 0.0;
            for (std::size_t j = 0; j < d; ++j) nrm += au[j] * au[j];
            nrm = std::sqrt(nrm);
            if (nrm == 0.0) return 0.0;
            double dot_uau = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot_uau += u[j] * au[j];
            for (std::size_t j = 0; j < d; ++j) u[j] = au[j] / nrm;
            if (it > 0 && std::abs(dot_uau - lam) <= 1e-8 * std::abs(dot_uau)) {
                lam = dot_uau;
                break;
            }
            lam = dot_uau;
        }
        return lam;
    }

    GlmDataset data_;
    Curvature curv_;
};

// Counts partial-derivative units consumed through one wrapper instance.
// Single-owner by design: each chain wraps the shared read-only target in
// its own counter and totals are merged exactly after the run.
class CountingPotential final : public Potential {
public:
    explicit CountingPotential(const Potential& base) : base_(base) {}

    std::size_t dim() const override { return base_.dim(); }
    double value(const double* x) const override { return base_.value(x); }

    double partial(const double* x, std::size_t i) const override {
        ++units_;
        return base_.partial(x, i);
    }

    void gradient(const double* x, double* g) const override {
        units_ += base_.dim();
        base_.gradient(x, g);
    }

    Curvature curvature() const override { return base_.curvature(); }
    std::string name() const override { return base_.name(); }

    std::uint64_t units() const { return units_; }
    void reset() { units_ = 0; }

private:
    const Potential& base_;
    mutable std::uint64_t units_ = 0;
};

enum class TestFn { kX1Sq, kFirst10Sq, kMeanSq };

inline double eval_test_fn(TestFn fn, const double* x, std::size_t d) {
    switch (fn) {
        case TestFn::kX1Sq:
            return x[0] * x[0];
        case TestFn::kFirst10Sq: {
            double s = 0.0;
            const std::size_t n = d < 10 ? d : 10;
            for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
            return s;
        }
        case TestFn::kMeanSq: {
            double s = 0.0;
            for (std::size_t i = 0; i < d; ++i) s += x[i] * x[i];
            return s / double(d);
        }
    }
    throw std::logic_error("eval_test_fn: bad enum");
}

// Exact E_p[phi] for the closed-form targets.
//  - gaussian (center c):    x1^2 -> 1 + c_1^2; first-10 sum -> 10 + |c_{1..10}|^2;
//                            mean of squares -> 1 + |c|^2/d
//  - mixture (offset a):     x1 marginal is an equal mixture of N(+-a, 1),
//                            so x1^2 -> 1 + a^2, and per-coordinate moments
//                            are identical across i.
inline double analytic_moment(const Potential& p, TestFn fn) {
    const std::size_t d = p.dim();
    if (auto* g = dynamic_cast<const IsotropicGaussian*>(&p)) {
        const std::vector<double>& c = g->center();
        switch (fn) {
            case TestFn::kX1Sq:
                return 1.0 + c[0] * c[0];
            case TestFn::kFirst10Sq: {
                const std::size_t n = d < 10 ? d : 10;
                double s = double(n);
                for (std::size_t i = 0; i < n; ++i) s += c[i] * c[i];
                return s;
            }
            case TestFn::kMeanSq: {
                double s = 0.0;
                for (std::size_t i = 0; i < d; ++i) s += c[i] * c[i];
                return 1.0 + s / double(d);
            }
        }
    }
    if (auto* m = dynamic_cast<const DoubleGaussian*>(&p)) {
        const double a2 = m->offset() * m->offset();
        switch (fn) {
            case TestFn::kX1Sq:
                return 1.0 + a2;
            case TestFn::kFirst10Sq:
                return double(d < 10 ? d : 10) * (1.0 + a2);
            case TestFn::kMeanSq:
                return 1.0 + a2;
        }
    }
    throw std::runtime_error("analytic_moment: no closed form for " + p.name());
}

} // namespace rclmc


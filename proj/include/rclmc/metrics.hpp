#pragma once
// Error and cost measurement: weak error against exact moments, closed-form
// Wasserstein-2 between diagonal Gaussians, the order-statistics W2
// estimator for 1D marginals, and log-log slope fitting for
// saturation-error studies.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace rclmc {

struct WeakError {
    double error = 0.0;    // |sample mean of phi - exact|
    double stderr_ = 0.0;  // standard error of the sample mean
};

inline WeakError weak_error(const std::vector<double>& phi_values, double exact) {
    const std::size_t n = phi_values.size();
    if (n < 2) throw std::invalid_argument("weak_error: need >= 2 samples");
    double s = 0.0;
    for (double v : phi_values) s += v;
    const double mean = s / double(n);
    double ss = 0.0;
    for (double v : phi_values) ss += (v - mean) * (v - mean);
    WeakError w;
    w.error = std::abs(mean - exact);
    w.stderr_ = std::sqrt(ss / double(n - 1) / double(n));
    return w;
}

// W2 between product Gaussians with the given per-coordinate means and
// variances: sqrt(|mean1-mean2|^2 + sum_i (sqrt(var1_i) - sqrt(var2_i))^2).
inline double w2_gaussian_diag(const std::vector<double>& mean1,
                               const std::vector<double>& var1,
                               const std::vector<double>& mean2,
                               const std::vector<double>& var2) {
    const std::size_t d = mean1.size();
    if (var1.size() != d || mean2.size() != d || var2.size() != d)
        throw std::invalid_argument("w2_gaussian_diag: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        if (var1[i] < 0.0 || var2[i] < 0.0)
            throw std::invalid_argument("w2_gaussian_diag: negative variance");
        const double dm = mean1[i] - mean2[i];
        const double ds = std::sqrt(var1[i]) - std::sqrt(var2[i]);
        s += dm * dm + ds * ds;
    }
    return std::sqrt(s);
}

// Order-statistics W2 estimator for equal-size 1D samples:
// sqrt(n^-1 sum_k (sort(a)_k - sort(b)_k)^2).
inline double w2_empirical_1d(std::vector<double> a, std::vector<double> b) {
    if (a.empty()) throw std::invalid_argument("w2_empirical_1d: empty input");
    if (a.size() != b.size())
        throw std::invalid_argument("w2_empirical_1d: size mismatch");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double t = a[k] - b[k];
        s += t * t;
    }
    return std::sqrt(s / double(a.size()));
}

// Least-squares slope of log(error) against log(h); needs at least three
// strictly positive points.
inline double fit_loglog_slope(const std::vector<std::pair<double, double>>& pts) {
    if (pts.size() < 3)
        throw std::invalid_argument("fit_loglog_slope: need >= 3 points");
    std::vector<double> lx(pts.size()), ly(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!(pts[i].first > 0.0) || !(pts[i].second > 0.0))
            throw std::invalid_argument("fit_loglog_slope: nonpositive point");
        lx[i] = std::log(pts[i].first);
        ly[i] = std::log(pts[i].second);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= double(pts.size());
    my /= double(pts.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_loglog_slope: identical h");
    return sxy / sxx;
}

// Plateau error of a recorded trajectory of ensemble means: the mean of
// phi over the last fifth of the records (at least one), minus the exact
// moment, in absolute value. Callers are responsible for running well past
// mixing so the tail reads the discretization bias, not the transient.
inline double saturation_error(
    const std::vector<std::pair<std::uint64_t, double>>& records, double exact) {
    if (records.empty()) throw std::invalid_argument("saturation_error: no records");
    const std::size_t tail = std::max<std::size_t>(1, records.size() / 5);
    double s = 0.0;
    for (std::size_t j = records.size() - tail; j < records.size(); ++j)
        s += records[j].second;
    return std::abs(s / double(tail) - exact);
}

} // namespace rclmc

#pragma once
// Independent per-coordinate moment recursions for the standard Gaussian
// target (f(x) = |x|^2/2, uniform coordinate selection), used by tests as a
// cross-check oracle for the samplers.
//
// The underdamped one-step coefficients are integrated here by RK4 from the
// defining ODEs, not taken from the library's closed forms, so the two paths
// cannot share an algebra error:
//   propagator  P' = A0 P,            P(0) = I,  A0 = [[0, 1], [0, -2]]
//   forcing     b' = A0 b + [0, -g],  b(0) = 0
//   covariance  C' = A0 C + C A0^T + Q,  Q = [[0, 0], [0, 4 g]],  C(0) = 0
// evaluated at t = h: a_xv = P12, a_vv = P22, (a_xF, a_vF) = b, sigma = C.
// The C11 integral accumulates positive increments only, so the oracle never
// meets the small-h cancellation the library handles with a Taylor branch.
//
// Each algorithm branch (selected / unselected / epoch refresh) acts
// LINEARLY on the per-coordinate state s, with additive state-independent
// Gaussian noise of covariance N:
//   olmc    s = (x)        T = [1 - h]
//   rcd_o   s = (x)        sel [1 - h d], uns [1]
//   svrg_o  s = (x, a)     sel [[1-hd, h(d-1)], [0, 1]], uns [[1, -h], [0, 1]],
//                          epoch [[1-h, 0], [1, 0]]          (a' = x)
//   rcad_o  s = (x, g)     sel [[1-hd, h(d-1)], [1, 0]]      (g' = x),
//                          uns [[1, -h], [0, 1]]
//   ulmc    s = (x, v)     T = [[1+a_xF, a_xv], [a_vF, a_vv]]
//   rcd_u   s = (x, v)     sel [[1+d a_xF, a_xv], [d a_vF, a_vv]],
//                          uns [[1, a_xv], [0, a_vv]]
//   svrg_u  s = (x, v, a)  sel [[1+d a_xF, a_xv, (1-d) a_xF],
//                               [d a_vF, a_vv, (1-d) a_vF], [0, 0, 1]],
//                          uns [[1, a_xv, a_xF], [0, a_vv, a_vF], [0, 0, 1]],
//                          epoch [[1+a_xF, a_xv, 0], [a_vF, a_vv, 0], [1, 0, 0]]
//   rcad_u  s = (x, v, g)  sel/uns as svrg_u with third row [1, 0, 0] when
//                          selected (g' = x)
// Second moments S = E[s s^T] evolve exactly as
//   S' = sum_b p_b T_b S T_b^T + N,        mu' = sum_b p_b T_b mu,
// because coordinates are iid, the per-coordinate selection indicator is
// Bernoulli(1/d) independent of the state, and the kernels are linear.

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rclmc/kernels.hpp"

namespace rclmc {
namespace oracle {

struct OuCoeffs {
    double a_xv = 0, a_xF = 0, a_vv = 1, a_vF = 0;
    double s_xx = 0, s_xv = 0, s_vv = 0;
};

inline OuCoeffs ou_coeffs_rk4(double h, double gamma, int substeps = 256) {
    // y = [P12, P22, b1, b2, C11, C12, C22]
    double y[7] = {0, 1, 0, 0, 0, 0, 0};
    auto rhs = [gamma](const double* s, double* f) {
        f[0] = s[1];
        f[1] = -2.0 * s[1];
        f[2] = s[3];
        f[3] = -2.0 * s[3] - gamma;
        f[4] = 2.0 * s[5];
        f[5] = s[6] - 2.0 * s[5];
        f[6] = -4.0 * s[6] + 4.0 * gamma;
    };
    const double dt = h / double(substeps);
    double k1[7], k2[7], k3[7], k4[7], t[7];
    for (int s = 0; s < substeps; ++s) {
        rhs(y, k1);
        for (int i = 0; i < 7; ++i) t[i] = y[i] + 0.5 * dt * k1[i];
        rhs(t, k2);
        for (int i = 0; i < 7; ++i) t[i] = y[i] + 0.5 * dt * k2[i];
        rhs(t, k3);
        for (int i = 0; i < 7; ++i) t[i] = y[i] + dt * k3[i];
        rhs(t, k4);
        for (int i = 0; i < 7; ++i)
            y[i] += dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    }
    OuCoeffs c;
    c.a_xv = y[0];
    c.a_vv = y[1];
    c.a_xF = y[2];
    c.a_vF = y[3];
    c.s_xx = y[4];
    c.s_xv = y[5];
    c.s_vv = y[6];
    return c;
}

using Mat3 = std::array<std::array<double, 3>, 3>;
using Vec3 = std::array<double, 3>;

struct Recursion {
    int dim = 1;
    double p_sel = 1.0;  // probability of the selected branch
    Mat3 T_sel{}, T_uns{}, T_epoch{};
    bool has_epoch = false;  // SVRG: T_epoch applies when m % tau == 0
    Mat3 N{};
};

inline Recursion make_recursion(Algorithm alg, double h, std::size_t dim_d,
                                double gamma) {
    const double d = double(dim_d);
    Recursion r;
    switch (alg) {
        case Algorithm::kOlmc:
            r.dim = 1;
            r.T_sel[0][0] = 1.0 - h;
            r.N[0][0] = 2.0 * h;
            return r;
        case Algorithm::kRcdO:
            r.dim = 1;
            r.p_sel = 1.0 / d;
            r.T_sel[0][0] = 1.0 - h * d;
            r.T_uns[0][0] = 1.0;
            r.N[0][0] = 2.0 * h;
            return r;
        case Algorithm::kSvrgO:
            r.dim = 2;
            r.p_sel = 1.0 / d;
            r.T_sel = {{{1.0 - h * d, h * (d - 1.0), 0}, {0, 1, 0}, {0, 0, 0}}};
            r.T_uns = {{{1.0, -h, 0}, {0, 1, 0}, {0, 0, 0}}};
            r.T_epoch = {{{1.0 - h, 0, 0}, {1, 0, 0}, {0, 0, 0}}};
            r.has_epoch = true;
            r.N[0][0] = 2.0 * h;
            return r;
        case Algorithm::kRcadO:
            r.dim = 2;
            r.p_sel = 1.0 / d;
            r.T_sel = {{{1.0 - h * d, h * (d - 1.0), 0}, {1, 0, 0}, {0, 0, 0}}};
            r.T_uns = {{{1.0, -h, 0}, {0, 1, 0}, {0, 0, 0}}};
            r.N[0][0] = 2.0 * h;
            return r;
        default:
            break;
    }
    const OuCoeffs c = ou_coeffs_rk4(h, gamma);
    r.N = {{{c.s_xx, c.s_xv, 0}, {c.s_xv, c.s_vv, 0}, {0, 0, 0}}};
    switch (alg) {
        case Algorithm::kUlmc:
            r.dim = 2;
            r.T_sel = {{{1.0 + c.a_xF, c.a_xv, 0}, {c.a_vF, c.a_vv, 0}, {0, 0, 0}}};
            return r;
        case Algorithm::kRcdU:
            r.dim = 2;
            r.p_sel = 1.0 / d;
            r.T_sel = {{{1.0 + d * c.a_xF, c.a_xv, 0},
                        {d * c.a_vF, c.a_vv, 0},
                        {0, 0, 0}}};
            r.T_uns = {{{1.0, c.a_xv, 0}, {0, c.a_vv, 0}, {0, 0, 0}}};
            return r;
        case Algorithm::kSvrgU:
            r.dim = 3;
            r.p_sel = 1.0 / d;
            r.T_sel = {{{1.0 + d * c.a_xF, c.a_xv, (1.0 - d) * c.a_xF},
                        {d * c.a_vF, c.a_vv, (1.0 - d) * c.a_vF},
                        {0, 0, 1}}};
            r.T_uns = {{{1.0, c.a_xv, c.a_xF}, {0, c.a_vv, c.a_vF}, {0, 0, 1}}};
            r.T_epoch = {{{1.0 + c.a_xF, c.a_xv, 0}, {c.a_vF, c.a_vv, 0}, {1, 0, 0}}};
            r.has_epoch = true;
            return r;
        case Algorithm::kRcadU:
            r.dim = 3;
            r.p_sel = 1.0 / d;
            r.T_sel = {{{1.0 + d * c.a_xF, c.a_xv, (1.0 - d) * c.a_xF},
                        {d * c.a_vF, c.a_vv, (1.0 - d) * c.a_vF},
                        {1, 0, 0}}};
            r.T_uns = {{{1.0, c.a_xv, c.a_xF}, {0, c.a_vv, c.a_vF}, {0, 0, 1}}};
            return r;
        default:
            throw std::logic_error("make_recursion: bad enum");
    }
}

namespace detail {

inline Mat3 congruence(const Mat3& T, const Mat3& S, int n) {
    Mat3 ts{}, out{};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += T[i][k] * S[k][j];
            ts[i][j] = s;
        }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += ts[i][k] * T[j][k];
            out[i][j] = s;
        }
    return out;
}

inline Vec3 apply(const Mat3& T, const Vec3& v, int n) {
    Vec3 out{};
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += T[i][k] * v[k];
        out[i] = s;
    }
    return out;
}

} // namespace detail

struct MomentState {
    Mat3 S{};
    Vec3 mu{};
};

// Initial second moments for independent x_i ~ N(x_mean, x_std^2),
// v_i ~ N(v_mean, v_std^2); anchors and tables start as copies of x^0.
inline MomentState initial_state(Algorithm alg, const InitSpec& init) {
    const double mxx = init.x_mean * init.x_mean + init.x_std * init.x_std;
    const double mvv = init.v_mean * init.v_mean + init.v_std * init.v_std;
    const double mxv = init.x_mean * init.v_mean;
    MomentState s;
    s.S[0][0] = mxx;
    s.mu[0] = init.x_mean;
    if (alg == Algorithm::kSvrgO || alg == Algorithm::kRcadO) {
        s.S[0][1] = s.S[1][0] = s.S[1][1] = mxx;
        s.mu[1] = init.x_mean;
    } else if (is_underdamped(alg)) {
        s.S[0][1] = s.S[1][0] = mxv;
        s.S[1][1] = mvv;
        s.mu[1] = init.v_mean;
        if (alg == Algorithm::kSvrgU || alg == Algorithm::kRcadU) {
            s.S[0][2] = s.S[2][0] = s.S[2][2] = mxx;
            s.S[1][2] = s.S[2][1] = mxv;
            s.mu[2] = init.x_mean;
        }
    }
    return s;
}

inline void step(const Recursion& r, std::uint64_t m, std::uint32_t tau,
                 MomentState& s) {
    if (r.has_epoch && m % tau == 0) {
        s.S = detail::congruence(r.T_epoch, s.S, r.dim);
        s.mu = detail::apply(r.T_epoch, s.mu, r.dim);
    } else if (r.p_sel >= 1.0) {
        s.S = detail::congruence(r.T_sel, s.S, r.dim);
        s.mu = detail::apply(r.T_sel, s.mu, r.dim);
    } else {
        const Mat3 a = detail::congruence(r.T_sel, s.S, r.dim);
        const Mat3 b = detail::congruence(r.T_uns, s.S, r.dim);
        const Vec3 ma = detail::apply(r.T_sel, s.mu, r.dim);
        const Vec3 mb = detail::apply(r.T_uns, s.mu, r.dim);
        for (int i = 0; i < r.dim; ++i) {
            for (int j = 0; j < r.dim; ++j)
                s.S[i][j] = r.p_sel * a[i][j] + (1.0 - r.p_sel) * b[i][j];
            s.mu[i] = r.p_sel * ma[i] + (1.0 - r.p_sel) * mb[i];
        }
    }
    for (int i = 0; i < r.dim; ++i)
        for (int j = 0; j < r.dim; ++j) s.S[i][j] += r.N[i][j];
}

struct MomentRun {
    MomentState state;
    // (step, E[x_i^2]) at step 0 and every stride-th step thereafter,
    // matching the record layout of the chain driver
    std::vector<std::pair<std::uint64_t, double>> records;
};

inline MomentRun run_moments(Algorithm alg, double h, std::size_t d,
                             std::uint64_t M, std::uint32_t tau = 0,
                             double gamma = 1.0, InitSpec init = {0.5, 1.0, 0.0, 1.0},
                             std::uint64_t stride = 0) {
    if (tau == 0) tau = std::uint32_t(d);
    if (stride == 0) stride = std::max<std::uint64_t>(1, M / 50);
    const Recursion r = make_recursion(alg, h, d, gamma);
    MomentRun out;
    out.state = initial_state(alg, init);
    out.records.emplace_back(0, out.state.S[0][0]);
    for (std::uint64_t m = 0; m < M; ++m) {
        step(r, m, tau, out.state);
        if ((m + 1) % stride == 0)
            out.records.emplace_back(m + 1, out.state.S[0][0]);
    }
    return out;
}

} // namespace oracle
} // namespace rclmc

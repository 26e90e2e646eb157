#pragma once
// Counter-based random number generation.
//
// Every random quantity in the library is a pure function of
// (master seed, chain index, slot index). Chains own disjoint logical
// streams, and within a chain each step consumes a fixed number of slots,
// so trajectories are reproducible regardless of thread scheduling,
// worker count, or evaluation order.
//
// Stream construction:
//   key  = mix64(mix64(seed + GOLDEN) ^ (chain * WEYL2 + 1))
//   slot i value = mix64(key + (i+1) * GOLDEN)        -- SplitMix64 stream
//
// Normal variates use the Box-Muller transform on consecutive slot pairs:
//   pair p -> u1 = unit(slot 2p), u2 = unit(slot 2p+1)
//   z_{2p} = sqrt(-2 ln u1) cos(2 pi u2),  z_{2p+1} = sqrt(-2 ln u1) sin(2 pi u2)
// with ln/sin/cos evaluated by the polynomial routines below (absolute
// error < ~1e-12) rather than libm, so results are bit-identical across
// platforms and the loop vectorizes.

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>

namespace rclmc {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// SplitMix64 output function (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

// Independent stream key for one chain of one run.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t chain) {
    return mix64(mix64(seed + kGolden) ^ (chain * 0xD1342543DE82EF95ull + 1ull));
}

// Value of slot `i` of the stream `key` (SplitMix64 sequence member i).
constexpr std::uint64_t slot_u64(std::uint64_t key, std::uint64_t i) {
    return mix64(key + (i + 1ull) * kGolden);
}

// Map 64 bits to the open interval (0,1): 53-bit mantissa, offset half an ulp
// so 0 is never produced (log stays finite). The offset makes the all-ones
// input round up to 1.0, so that one case is clamped to the next double down.
constexpr double to_unit(std::uint64_t z) {
    const double u = double(z >> 11) * 0x1.0p-53 + 0x1.0p-54;
    return u < 1.0 ? u : 0x1.fffffffffffffp-1;
}

namespace detail {

// ln(x) for finite normal x > 0. Argument is reduced to m in [sqrt(1/2),
// sqrt(2)) and ln(m) = 2 atanh((m-1)/(m+1)) is summed to the t^13 term,
// giving absolute error below ~1e-12 over the full range used here.
inline double poly_log(double x) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
    std::int64_t e = std::int64_t((bits >> 52) & 0x7FF) - 1023;
    double m = std::bit_cast<double>((bits & 0xFFFFFFFFFFFFFull) |
                                     0x3FF0000000000000ull);
    const bool hi = m >= 1.4142135623730951;
    m = hi ? 0.5 * m : m;
    e += hi ? 1 : 0;
    const double t = (m - 1.0) / (m + 1.0);
    const double s = t * t;
    double p = 2.0 / 13.0;
    p = std::fma(p, s, 2.0 / 11.0);
    p = std::fma(p, s, 2.0 / 9.0);
    p = std::fma(p, s, 2.0 / 7.0);
    p = std::fma(p, s, 2.0 / 5.0);
    p = std::fma(p, s, 2.0 / 3.0);
    p = std::fma(p, s, 2.0);
    return std::fma(t, p, double(e) * 0.6931471805599453094);
}

// sin(2 pi u) and cos(2 pi u) for u in [0,1). Quarter-turn reduction, then
// Taylor polynomials on [-pi/4, pi/4] (absolute error < ~2e-14).
inline void poly_sincos_2pi(double u, double& s, double& c) {
    const double a = 4.0 * u;
    const double k = std::nearbyint(a);
    const double th = (a - k) * 1.5707963267948966;
    const int ki = int(k) & 3;
    const double x2 = th * th;
    double sp = 1.0 / 6227020800.0;
    sp = std::fma(sp, x2, -1.0 / 39916800.0);
    sp = std::fma(sp, x2, 1.0 / 362880.0);
    sp = std::fma(sp, x2, -1.0 / 5040.0);
    sp = std::fma(sp, x2, 1.0 / 120.0);
    sp = std::fma(sp, x2, -1.0 / 6.0);
    sp = std::fma(sp, x2, 1.0);
    const double s0 = th * sp;
    double cp = -1.0 / 87178291200.0;
    cp = std::fma(cp, x2, 1.0 / 479001600.0);
    cp = std::fma(cp, x2, -1.0 / 3628800.0);
    cp = std::fma(cp, x2, 1.0 / 40320.0);
    cp = std::fma(cp, x2, -1.0 / 720.0);
    cp = std::fma(cp, x2, 1.0 / 24.0);
    cp = std::fma(cp, x2, -0.5);
    cp = std::fma(cp, x2, 1.0);
    const double c0 = cp;
    const bool swap = ki & 1;
    const double s1 = swap ? c0 : s0;
    const double c1 = swap ? s0 : c0;
    s = (ki & 2) ? -s1 : s1;
    c = ((ki + 1) & 2) ? -c1 : c1;
}

} // namespace detail

// Standard normal for an even/odd slot pair; `slot` may be any index, the
// pair partner is slot^1 (slots are consumed two at a time).
inline double normal_at(std::uint64_t key, std::uint64_t slot) {
    const std::uint64_t p = slot & ~1ull;
    const double u1 = to_unit(slot_u64(key, p));
    const double u2 = to_unit(slot_u64(key, p + 1));
    const double r = std::sqrt(-2.0 * detail::poly_log(u1));
    double sn, cs;
    detail::poly_sincos_2pi(u2, sn, cs);
    return (slot & 1ull) ? r * sn : r * cs;
}

// Fill out[0..n) with standard normals occupying slots [base, base + n)
// (base must be even; n slots are consumed even when n is odd).
//
// Phase-split over W-wide batches so each inner loop is straight-line
// FP/integer code (no calls, no branches) and vectorizes; every lane
// computes exactly the per-pair recipe of normal_at, so output is
// bit-identical to the scalar loop in the final `for`.
inline void fill_normals(std::uint64_t key, std::uint64_t base, std::size_t n,
                         double* out) {
    constexpr std::size_t W = 8;
    const std::size_t pairs = n / 2;
    std::size_t p = 0;
    for (; p + W <= pairs; p += W) {
        double u1[W], u2[W], r[W], sn[W], cs[W];
#pragma omp simd
        for (std::size_t w = 0; w < W; ++w) {
            const std::uint64_t s0 = key + (base + 2 * (p + w) + 1) * kGolden;
            const std::uint64_t s1 = key + (base + 2 * (p + w) + 2) * kGolden;
            u1[w] = to_unit(mix64(s0));
            u2[w] = to_unit(mix64(s1));
        }
#pragma omp simd
        for (std::size_t w = 0; w < W; ++w) {
            // poly_log inlined with double-valued blends
            const std::uint64_t bits = std::bit_cast<std::uint64_t>(u1[w]);
            const double eb = double(bits >> 52);
            double m = std::bit_cast<double>((bits & 0xFFFFFFFFFFFFFull) |
                                             0x3FF0000000000000ull);
            const bool hi = m >= 1.4142135623730951;
            m = hi ? 0.5 * m : m;
            const double e = (hi ? 1.0 : 0.0) + (eb - 1023.0);
            const double t = (m - 1.0) / (m + 1.0);
            const double s = t * t;
            double pl = 2.0 / 13.0;
            pl = std::fma(pl, s, 2.0 / 11.0);
            pl = std::fma(pl, s, 2.0 / 9.0);
            pl = std::fma(pl, s, 2.0 / 7.0);
            pl = std::fma(pl, s, 2.0 / 5.0);
            pl = std::fma(pl, s, 2.0 / 3.0);
            pl = std::fma(pl, s, 2.0);
            const double lg = std::fma(t, pl, e * 0.6931471805599453094);
            r[w] = std::sqrt(-2.0 * lg);
        }
#pragma omp simd
        for (std::size_t w = 0; w < W; ++w) {
            // poly_sincos_2pi inlined
            const double a = 4.0 * u2[w];
            const double k = std::nearbyint(a);
            const double th = (a - k) * 1.5707963267948966;
            const std::int64_t ki = std::int64_t(k) & 3;
            const double x2 = th * th;
            double sp = 1.0 / 6227020800.0;
            sp = std::fma(sp, x2, -1.0 / 39916800.0);
            sp = std::fma(sp, x2, 1.0 / 362880.0);
            sp = std::fma(sp, x2, -1.0 / 5040.0);
            sp = std::fma(sp, x2, 1.0 / 120.0);
            sp = std::fma(sp, x2, -1.0 / 6.0);
            sp = std::fma(sp, x2, 1.0);
            const double s0 = th * sp;
            double cp = -1.0 / 87178291200.0;
            cp = std::fma(cp, x2, 1.0 / 479001600.0);
            cp = std::fma(cp, x2, -1.0 / 3628800.0);
            cp = std::fma(cp, x2, 1.0 / 40320.0);
            cp = std::fma(cp, x2, -1.0 / 720.0);
            cp = std::fma(cp, x2, 1.0 / 24.0);
            cp = std::fma(cp, x2, -0.5);
            cp = std::fma(cp, x2, 1.0);
            const double c0 = cp;
            const bool swap = ki & 1;
            const double s1 = swap ? c0 : s0;
            const double c1 = swap ? s0 : c0;
            sn[w] = (ki & 2) ? -s1 : s1;
            cs[w] = ((ki + 1) & 2) ? -c1 : c1;
        }
#pragma omp simd
        for (std::size_t w = 0; w < W; ++w) {
            out[2 * (p + w)] = r[w] * cs[w];
            out[2 * (p + w) + 1] = r[w] * sn[w];
        }
    }
    for (; p < pairs; ++p) {
        const std::uint64_t s = base + 2 * p;
        const double u1 = to_unit(slot_u64(key, s));
        const double u2 = to_unit(slot_u64(key, s + 1));
        const double r = std::sqrt(-2.0 * detail::poly_log(u1));
        double sn, cs;
        detail::poly_sincos_2pi(u2, sn, cs);
        out[2 * p] = r * cs;
        out[2 * p + 1] = r * sn;
    }
    if (n & 1) out[n - 1] = normal_at(key, base + n - 1);
}

// Unbiased-to-2^-64 index in [0, d) from one slot.
inline std::uint32_t index_at(std::uint64_t key, std::uint64_t slot,
                              std::uint32_t d) {
    const unsigned __int128 wide =
        (unsigned __int128)slot_u64(key, slot) * (unsigned __int128)d;
    return std::uint32_t(wide >> 64);
}

// Sequential view over one chain's stream. The consumption layout per
// algorithm is fixed (init draws, then per step one selection slot plus a
// noise block), so equal configurations replay identical streams.
class ChainStream {
public:
    ChainStream(std::uint64_t seed, std::uint64_t chain)
        : key_(stream_key(seed, chain)) {}

    std::uint64_t next_u64() { return slot_u64(key_, cursor_++); }
    double next_unit() { return to_unit(next_u64()); }
    std::uint32_t next_index(std::uint32_t d) {
        return index_at(key_, cursor_++, d);
    }
    // Consumes an even-aligned block of n slots (n rounded up to even).
    void next_normals(std::size_t n, double* out) {
        cursor_ = (cursor_ + 1ull) & ~1ull; // align pairs
        fill_normals(key_, cursor_, n, out);
        cursor_ += (n + 1ull) & ~1ull;
    }
    double next_normal() {
        double z;
        next_normals(1, &z);
        return z;
    }
    std::uint64_t cursor() const { return cursor_; }
    std::uint64_t key() const { return key_; }

private:
    std::uint64_t key_;
    std::uint64_t cursor_ = 0;
};

} // namespace rclmc

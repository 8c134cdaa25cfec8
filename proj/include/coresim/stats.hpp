#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace coresim {

/// Deterministic 64-bit mixer for deriving per-episode seeds.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b, uint64_t c) {
    uint64_t s = splitmix64(base ^ 0x51ed270b0a1c5d2bULL);
    s = splitmix64(s ^ a);
    s = splitmix64(s ^ (b << 20));
    s = splitmix64(s ^ (c << 40));
    return s;
}

namespace detail {

inline double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

/// Continued fraction for the regularized incomplete beta (Lentz's method).
inline double betacf(double a, double b, double x) {
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    const double tiny = 1e-300;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 3e-15) break;
    }
    return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double front =
        std::exp(a * std::log(x) + b * std::log(1.0 - x) - detail::log_beta(a, b));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::betacf(a, b, x) / a;
    return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

/// Quantile of the Beta(a, b) distribution by bisection.
inline double beta_quantile(double p, double a, double b) {
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (incomplete_beta(a, b, mid) < p) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

struct BinomialCi {
    double low = 0.0;
    double high = 1.0;
};

/// Clopper-Pearson interval for k successes out of n trials.
inline BinomialCi clopper_pearson(uint64_t k, uint64_t n, double confidence = 0.95) {
    if (n == 0) throw std::invalid_argument("clopper_pearson: n must be >= 1");
    const double alpha = 1.0 - confidence;
    BinomialCi ci;
    ci.low = (k == 0) ? 0.0
                      : beta_quantile(alpha / 2.0, static_cast<double>(k),
                                      static_cast<double>(n - k + 1));
    ci.high = (k == n) ? 1.0
                       : beta_quantile(1.0 - alpha / 2.0, static_cast<double>(k + 1),
                                       static_cast<double>(n - k));
    return ci;
}

}  // namespace coresim

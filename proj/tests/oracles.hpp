// Reference computations used only by the tests. They avoid the library's
// generating-function machinery and work directly with probability vectors.
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace oracle {

using Pmf = std::vector<double>;

inline Pmf convolve(const Pmf& a, const Pmf& b, std::size_t cap) {
    Pmf c(std::min(a.size() + b.size() - 1, cap), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) continue;
        for (std::size_t j = 0; j < b.size() && i + j < c.size(); ++j) c[i + j] += a[i] * b[j];
    }
    return c;
}

// Law of the sum of `count` independent copies of `x`.
inline Pmf power(const Pmf& x, std::size_t count, std::size_t cap) {
    Pmf result{1.0};
    Pmf base = x;
    while (count > 0) {
        if (count & 1) result = convolve(result, base, cap);
        count >>= 1;
        if (count > 0) base = convolve(base, base, cap);
    }
    return result;
}

// Law of sum_{i < N} X_i with N ~ outer, X_i ~ inner, truncated to `cap` values.
inline Pmf compound(const Pmf& outer, const Pmf& inner, std::size_t cap) {
    Pmf result(1, 0.0);
    Pmf term{1.0};
    for (std::size_t k = 0; k < outer.size(); ++k) {
        if (k > 0) term = convolve(term, inner, cap);
        if (term.size() > result.size()) result.resize(term.size(), 0.0);
        for (std::size_t j = 0; j < term.size(); ++j) result[j] += outer[k] * term[j];
    }
    return result;
}

// Exact law of Z_n (values >= cap are dropped).
inline Pmf population_law(const Pmf& mu, std::size_t n, std::size_t cap = 4096) {
    Pmf z{0.0, 1.0};
    for (std::size_t m = 0; m < n; ++m) z = compound(z, mu, cap);
    return z;
}

inline double mass(const Pmf& p) {
    double s = 0.0;
    for (double x : p) s += x;
    return s;
}

// P(k) -> w(k) P(k) / sum, the w-transform of a law on the integers.
template <typename W>
Pmf reweight(const Pmf& p, W w) {
    Pmf out(p.size());
    double total = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) total += (out[k] = w(static_cast<double>(k)) * p[k]);
    for (double& x : out) x /= total;
    return out;
}

inline double laplace(const Pmf& p, double lambda) {
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) s += p[k] * std::exp(-lambda * static_cast<double>(k));
    return s;
}

// 2^{-(k+1)} for k = 0..max.
inline Pmf geometric_weights(std::size_t max) {
    Pmf w(max + 1);
    for (std::size_t k = 0; k <= max; ++k) w[k] = std::ldexp(1.0, -static_cast<int>(k + 1));
    return w;
}

}  // namespace oracle

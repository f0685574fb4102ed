#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "twospine/offspring.hpp"

namespace twospine {

/// Iterates f^(m)(s), m = 0..n, of the offspring pgf at one point s, with
/// their first and second derivatives in s carried by the chain and product
/// rules (no numerical differentiation).
class PgfIterates {
public:
    PgfIterates(const OffspringDistribution& d, double s, std::size_t n);

    double s() const noexcept { return s_; }
    std::size_t n() const noexcept { return iterates_.size() - 1; }

    // (f^(m)(s), (f^(m))'(s), (f^(m))''(s)).
    const Jet& iterate(std::size_t m) const { return iterates_.at(m); }
    // (f, f', f'') evaluated at f^(m)(s), m = 0..n.
    const Jet& outer(std::size_t m) const { return outer_.at(m); }

private:
    double s_;
    std::vector<Jet> iterates_;
    std::vector<Jet> outer_;
};

// q_m = P(Z_m = 0) = f^(m)(0), m = 0..n.
std::vector<double> extinction_probs(const OffspringDistribution& d, std::size_t n);

// p_m = P(Z_m > 0), iterated in complement form so small p_m keep their
// relative precision.
std::vector<double> survival_probs(const OffspringDistribution& d, std::size_t n);

// m p_m sigma^2 / 2 for m = 0..n; tends to 1.
std::vector<double> kolmogorov_sequence(const OffspringDistribution& d, std::size_t n);

enum class ConditionalMeanMethod { direct, recursion };

// E[Z_n | Z_n > 0]: direct 1/p_n, or the first-generation recursion over the
// left-most surviving first-generation particle.
double conditional_mean(const OffspringDistribution& d, std::size_t n, ConditionalMeanMethod method);

// E[exp(-lambda Z_n)] = f^(n)(e^{-lambda}).
double laplace_Z(const OffspringDistribution& d, std::size_t n, double lambda);

enum class SizeBiasedMethod { product, derivative };

// E[exp(-lambda Z'_n)] for the size-biased tree. product: one factor per
// nearest-spine-ancestor bush, each summed over the law of L'; derivative:
// e^{-lambda} (f^(n))'(e^{-lambda}).
double laplace_sb(const OffspringDistribution& d, std::size_t n, double lambda,
                  SizeBiasedMethod method = SizeBiasedMethod::product);

enum class TwoSpineMethod { decomposition, factorial_moment };

// E[exp(-lambda Z''_n)] for the two-spine tree of height n >= 1.
// decomposition: E[e^{-lambda Z'_n}] (1/n) sum_m g(lambda, m) E[e^{-lambda Z'_m}];
// factorial_moment: e^{-2 lambda} (f^(n))''(e^{-lambda}) / (n sigma^2).
double laplace_two_spine(const OffspringDistribution& d, std::size_t n, double lambda,
                         TwoSpineMethod method = TwoSpineMethod::decomposition);

// g(lambda, m) = E[e^{-lambda Z^{(L''-2)}_m}] / E[e^{-lambda Z^{(L'-1)}_m}].
double two_spine_ratio(const OffspringDistribution& d, std::size_t m, double lambda);

struct RatioBracket {
    double lower = 0.0;  // P(Z^{(L''-2)}_m = 0)
    double upper = 0.0;  // 1 / P(Z^{(L'-1)}_m = 0)
};

RatioBracket ratio_bracket(const OffspringDistribution& d, std::size_t m);

// E[Z_n (Z_n - 1)] = (f^(n))''(1).
double second_factorial_moment(const OffspringDistribution& d, std::size_t n);

// E[exp(-lambda Z_n / n) | Z_n > 0] = 1 - (1 - f^(n)(e^{-lambda/n})) / p_n.
double yaglom_conditional(const OffspringDistribution& d, std::size_t n, double lambda);

// Laplace transform of the exponential law with mean sigma^2/2.
double exponential_limit(const OffspringDistribution& d, double lambda);

enum class TransformKind {
    plain,                     // Z_n
    size_biased,               // Z'_n
    two_spine,                 // Z''_n
    conditional,               // Z_n / n given Z_n > 0
    renormalized_size_biased,  // (Z'_n - 1) / n
    renormalized_two_spine,    // (Z''_n - 1) / n
    empirical,                 // Monte Carlo estimate
};

std::string to_string(TransformKind kind);

struct TransformTable {
    TransformKind kind = TransformKind::plain;
    std::vector<double> lambda;
    std::vector<double> values;
    std::vector<double> reference;  // empty when there is nothing to compare to

    double max_abs_gap() const;
};

// `count` equally spaced points on [lo, hi]; {lo} for count 1.
std::vector<double> linear_grid(double lo, double hi, std::size_t count);

// Table of the requested transform on the grid. lambda < 0 throws DomainError.
TransformTable transform_table(const OffspringDistribution& d, std::size_t n, TransformKind kind,
                               std::span<const double> grid);

// values: E[exp(-lambda (Z''_n - 1)/n)];
// reference: E[exp(-lambda (Z'_n - 1)/n)] * (1/n) sum_m g(lambda/n, m) E[exp(-lambda Z'_m / n)],
// the renormalized size-biased add-on identity.
TransformTable renormalized_add_on_table(const OffspringDistribution& d, std::size_t n,
                                         std::span<const double> grid);

}  // namespace twospine

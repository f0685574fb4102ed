#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "twospine/random.hpp"

namespace twospine {

// Tolerance on |mean - 1| for a law to count as critical.
inline constexpr double kCriticalTolerance = 1e-12;
// Tolerance on the total mass of a probability mass function.
inline constexpr double kMassTolerance = 1e-12;

// Which law is drawn from an offspring distribution mu:
//   plain            -> L,  P(L = k) = mu(k)
//   first_order      -> L', P = k mu(k)          (L-transform of L)
//   second_factorial -> L'', P = k(k-1) mu(k) / sigma^2   (L(L-1)-transform)
enum class BiasKind { plain, first_order, second_factorial };

// Named families keep their parameter so samplers can draw sums of many
// independent copies in one step.
enum class Family { custom, binary, geometric, poisson };

/// Finitely supported law on {0, 1, ..., max_support} with cached moments.
///
/// Immutable after construction and safe to share between threads.
class OffspringDistribution {
public:
    std::span<const double> pmf() const noexcept { return pmf_; }
    double pmf(std::size_t k) const noexcept { return k < pmf_.size() ? pmf_[k] : 0.0; }
    std::size_t max_support() const noexcept { return pmf_.size() - 1; }

    double mean() const noexcept { return mean_; }
    // sigma^2. For a critical law this is sum k(k-1) mu(k).
    double variance() const noexcept { return variance_; }
    double total_mass() const noexcept { return mass_; }
    bool is_critical() const noexcept { return critical_; }

    Family family() const noexcept { return family_; }
    double family_parameter() const noexcept { return family_param_; }

    // Builds from an already normalized pmf; used for biased laws whose
    // entries must equal k mu(k) (resp. k(k-1) mu(k)/sigma^2) bit for bit.
    static OffspringDistribution from_pmf(std::vector<double> pmf, Family family = Family::custom,
                                          double family_param = 0.0);

private:
    OffspringDistribution() = default;

    std::vector<double> pmf_;
    double mean_ = 0.0;
    double variance_ = 0.0;
    double mass_ = 0.0;
    bool critical_ = false;
    Family family_ = Family::custom;
    double family_param_ = 0.0;
};

// Normalizes non-negative weights into a law. Throws InvalidDistribution on
// empty input, negative or non-finite weights, or all-zero weights.
OffspringDistribution make_distribution(std::span<const double> weights);

// mu(0) = 1 - p, mu(2) = p. Critical at p = 1/2.
OffspringDistribution binary_distribution(double p = 0.5);

// mu(k) proportional to (1 - q) q^k, truncated at `truncate` (default: the
// smallest support whose dropped tail keeps mass, mean and second factorial
// moment below 1e-15). Critical at q = 1/2.
OffspringDistribution geometric_distribution(double q = 0.5,
                                             std::optional<std::size_t> truncate = std::nullopt);

// Poisson(mean) truncated like the geometric family. Critical at mean 1.
OffspringDistribution poisson_distribution(double mean = 1.0,
                                           std::optional<std::size_t> truncate = std::nullopt);

// L' (first_order) or L'' (second_factorial). plain returns a copy.
// Throws InvalidDistribution if d is not critical and DegenerateVariance if
// sigma^2 = 0 for second_factorial.
OffspringDistribution biased(const OffspringDistribution& d, BiasKind kind);

// f(s) = sum mu(k) s^k, s in [0, 1]; DomainError otherwise.
double pgf(const OffspringDistribution& d, double s);

// f'(s) or f''(s) for order 1 or 2; DomainError for other orders or s
// outside [0, 1].
double pgf_derivative(const OffspringDistribution& d, double s, int order);

// Value, first and second derivative of a function at one point.
struct Jet {
    double value = 0.0;
    double first = 0.0;
    double second = 0.0;
};

// (f, f', f'') at s without domain checks. Horner, so exact for s = 1.
Jet pgf_jet(const OffspringDistribution& d, double s) noexcept;

// 1 - f(1 - x) evaluated without cancellation for small x, x in [0, 1].
double pgf_complement(const OffspringDistribution& d, double x) noexcept;

// Draws from one of the three laws of a distribution. Holds per-instance
// sampling tables, so give each worker its own copy.
class OffspringSampler {
public:
    OffspringSampler(const OffspringDistribution& d, BiasKind kind);

    std::uint64_t operator()(Rng& rng) { return table_(rng); }

    // Sum of `count` independent draws. Small counts are drawn one by one;
    // large counts use a multinomial split or the family's closed-form sum
    // law (binomial, negative binomial, Poisson).
    std::uint64_t sum(std::uint64_t count, Rng& rng);

private:
    std::discrete_distribution<std::uint64_t> table_;
    std::vector<double> pmf_;
    Family family_ = Family::custom;
    double family_param_ = 0.0;
};

// One draw of the selected law; builds a sampler per call.
std::uint64_t sample_offspring(const OffspringDistribution& d, BiasKind kind, Rng& rng);

std::string to_string(BiasKind kind);

}  // namespace twospine

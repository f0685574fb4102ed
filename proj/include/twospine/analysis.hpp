#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "twospine/exact.hpp"
#include "twospine/offspring.hpp"
#include "twospine/random.hpp"
#include "twospine/sampler.hpp"

namespace twospine {

// Significance level used by every hypothesis test in the suite.
inline constexpr double kSignificance = 1e-3;

struct SampleSet {
    std::vector<double> values;
    std::string provenance;
    std::uint64_t seed = 0;
};

// Sample with importance weights; a Y-transform of an unweighted sample is
// the same values with weights proportional to y.
struct WeightedSample {
    std::vector<double> values;
    std::vector<double> weights;

    // Kish effective sample size (sum w)^2 / sum w^2.
    double effective_size() const;
};

struct ComparisonReport {
    std::string name;
    std::string metric;
    double value = 0.0;
    double threshold = 0.0;
    bool passed = false;
    std::vector<std::size_t> sample_sizes;
    std::vector<std::pair<std::string, double>> details;

    // Sets passed = value <= threshold.
    ComparisonReport& settle();
};

// Mean of exp(-lambda x) over the sample for each grid point.
TransformTable empirical_laplace(const SampleSet& s, std::span<const double> grid);
TransformTable empirical_laplace(const WeightedSample& s, std::span<const double> grid);

// --- Kolmogorov-Smirnov -------------------------------------------------

// P(sqrt(n) D_n > x) in the limit: 2 sum (-1)^{k-1} exp(-2 k^2 x^2).
double kolmogorov_survival(double x);
// x with kolmogorov_survival(x) = alpha.
double kolmogorov_quantile(double alpha);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double effective_size = 0.0;  // n, or n m / (n + m) for two samples
    double critical_value = 0.0;  // at kSignificance
};

// One-sample statistic sup |F_n - F|.
double ks_statistic(std::span<const double> sample, const std::function<double(double)>& cdf);
KsResult ks_test(std::span<const double> sample, const std::function<double(double)>& cdf);

double two_sample_ks(std::span<const double> a, std::span<const double> b);
KsResult two_sample_ks_test(std::span<const double> a, std::span<const double> b);
// Weighted empirical CDFs; sizes are the Kish effective sizes.
KsResult two_sample_ks_test(const WeightedSample& a, const WeightedSample& b);

// --- chi-square ------------------------------------------------------------

struct ChiSquareResult {
    double statistic = 0.0;
    std::size_t dof = 0;
    double p_value = 1.0;
    std::size_t bins = 0;
};

// Goodness of fit of observed counts to category probabilities. Categories
// with expected count below min_expected are pooled into one bin.
ChiSquareResult chi_square_gof(std::span<const std::uint64_t> observed,
                               std::span<const double> probabilities, double min_expected = 5.0);

// --- positive laws and the exponential characterizations -----------------

/// Strictly positive law with known transforms E[Y^j exp(-lambda Y)].
class PositiveLaw {
public:
    virtual ~PositiveLaw() = default;
    virtual std::string name() const = 0;
    // E[Y^j exp(-lambda Y)] for j = 0, 1, 2 and lambda >= 0.
    virtual double moment_transform(int j, double lambda) const = 0;
    virtual double sample(Rng& rng) const = 0;

    double laplace(double lambda) const { return moment_transform(0, lambda); }
    double mean() const { return moment_transform(1, 0.0); }
    double second_moment() const { return moment_transform(2, 0.0); }
};

std::unique_ptr<PositiveLaw> exponential_law(double mean);
std::unique_ptr<PositiveLaw> gamma_law(double shape, double scale);
std::unique_ptr<PositiveLaw> uniform_law(double lo, double hi);
std::unique_ptr<PositiveLaw> constant_law(double value);

enum class Characterization {
    x2,      // Y'' = Y' + U Y'_2
    lyons,   // Y = U Y'
    geiger,  // Y = U (Y_1 + Y_2)
};

std::string to_string(Characterization c);

struct CharacterizationOptions {
    std::vector<double> grid = linear_grid(0.0, 10.0, 101);
    std::size_t samples = 1'000'000;
    std::uint64_t seed = 1;
    double analytic_tolerance = 1e-10;
    double alpha = kSignificance;
};

struct CharacterizationResult {
    ComparisonReport analytic;   // sup-gap of the two sides' Laplace transforms
    ComparisonReport empirical;  // two-sample KS of sampled sides
    bool passed() const { return analytic.passed && empirical.passed; }
};

// Left and right side Laplace transforms of one equation at lambda.
std::pair<double, double> characterization_sides(const PositiveLaw& law, Characterization c,
                                                 double lambda);

// Samples of the left and right side. Each ingredient (Y, Y_1, Y_2, U) has
// its own generator stream. DomainError if the law draws a value <= 0.
std::pair<WeightedSample, WeightedSample> characterization_samples(const PositiveLaw& law,
                                                                   Characterization c,
                                                                   std::size_t samples,
                                                                   std::uint64_t seed);

CharacterizationResult check_characterization(const PositiveLaw& law, Characterization c,
                                              const CharacterizationOptions& opt = {});
inline CharacterizationResult check_x2_equation(const PositiveLaw& law,
                                                const CharacterizationOptions& opt = {}) {
    return check_characterization(law, Characterization::x2, opt);
}
inline CharacterizationResult check_lyons_equation(const PositiveLaw& law,
                                                   const CharacterizationOptions& opt = {}) {
    return check_characterization(law, Characterization::lyons, opt);
}
inline CharacterizationResult check_geiger_equation(const PositiveLaw& law,
                                                    const CharacterizationOptions& opt = {}) {
    return check_characterization(law, Characterization::geiger, opt);
}

// --- transform comparison ----------------------------------------------------

// Laplace transform of X and of its X-transform, with E[X].
struct LaplacePair {
    std::function<double(double)> laplace;
    std::function<double(double)> size_biased;
    double mean = 0.0;
};

LaplacePair laplace_pair(const PositiveLaw& law);
// X = (Z'_n - 1)/n; its X-transform is (Z''_n - 1)/n. Mean sigma^2.
LaplacePair renormalized_size_biased_pair(const OffspringDistribution& d, std::size_t n);

// Checks |E e^{-l X0} - E e^{-l X1}| <= a int_0^l |F0 - F1| ds at grid_points
// points of [0, lambda_max], F_i = E e^{-l X_i'} / E e^{-l X_i}. value is the
// largest violation, threshold the quadrature tolerance 1e-6. DomainError if
// either mean differs from a by more than 1e-9.
ComparisonReport transform_distance_bound(const LaplacePair& x0, const LaplacePair& x1, double a,
                                          double lambda_max, std::size_t grid_points = 101);

// KS of Z_n / n over surviving runs against the exponential law with mean
// sigma^2 / 2.
ComparisonReport yaglom_ks_report(const ConditionedSample& sample, std::size_t n, double variance,
                                  double alpha = kSignificance);

}  // namespace twospine

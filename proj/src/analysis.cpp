#include "twospine/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "twospine/error.hpp"
#include "twospine/numeric.hpp"

namespace twospine {

namespace {

template <typename F>
double integrate(F f, double a, double b, unsigned max_depth = 15, double tolerance = 1e-13) {
    if (b <= a) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, max_depth, tolerance);
}

// Uniform on (0, 1), never 0 or 1.
double open_uniform(Rng& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

void require_nonempty(std::size_t n) {
    if (n == 0) throw DomainError("empty sample");
}

}  // namespace

double WeightedSample::effective_size() const {
    CompensatedSum s, s2;
    for (double w : weights) {
        s.add(w);
        s2.add(w * w);
    }
    return s2.value() > 0.0 ? s.value() * s.value() / s2.value() : 0.0;
}

ComparisonReport& ComparisonReport::settle() {
    passed = value <= threshold;
    return *this;
}

TransformTable empirical_laplace(const SampleSet& s, std::span<const double> grid) {
    require_nonempty(s.values.size());
    WeightedSample w{s.values, std::vector<double>(s.values.size(), 1.0)};
    return empirical_laplace(w, grid);
}

TransformTable empirical_laplace(const WeightedSample& s, std::span<const double> grid) {
    require_nonempty(s.values.size());
    if (s.weights.size() != s.values.size()) throw DomainError("weights and values differ in size");
    TransformTable t;
    t.kind = TransformKind::empirical;
    t.lambda.assign(grid.begin(), grid.end());
    CompensatedSum total;
    for (double w : s.weights) total.add(w);
    for (double lambda : grid) {
        if (!(lambda >= 0.0)) throw DomainError("lambda must be non-negative");
        if (lambda == 0.0) {
            t.values.push_back(1.0);
            continue;
        }
        CompensatedSum acc;
        for (std::size_t i = 0; i < s.values.size(); ++i)
            acc.add(s.weights[i] * std::exp(-lambda * s.values[i]));
        t.values.push_back(acc.value() / total.value());
    }
    return t;
}

double kolmogorov_survival(double x) {
    if (x <= 0.0) return 1.0;
    if (x < 1.0) {
        // Small-x form of the limiting CDF.
        const double pi2 = std::numbers::pi * std::numbers::pi;
        double cdf = 0.0;
        for (int k = 1; k <= 20; ++k) {
            const double odd = 2.0 * k - 1.0;
            cdf += std::exp(-odd * odd * pi2 / (8.0 * x * x));
        }
        return 1.0 - std::sqrt(2.0 * std::numbers::pi) / x * cdf;
    }
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        s += (k % 2 == 1 ? term : -term);
        if (term < 1e-300) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

double kolmogorov_quantile(double alpha) {
    double lo = 0.05, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (kolmogorov_survival(mid) > alpha ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double ks_statistic(std::span<const double> sample, const std::function<double(double)>& cdf) {
    require_nonempty(sample.size());
    std::vector<double> xs(sample.begin(), sample.end());
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

namespace {

KsResult finish_ks(double d, double ne) {
    KsResult r;
    r.statistic = d;
    r.effective_size = ne;
    r.p_value = kolmogorov_survival(std::sqrt(ne) * d);
    r.critical_value = kolmogorov_quantile(kSignificance) / std::sqrt(ne);
    return r;
}

}  // namespace

KsResult ks_test(std::span<const double> sample, const std::function<double(double)>& cdf) {
    return finish_ks(ks_statistic(sample, cdf), static_cast<double>(sample.size()));
}

double two_sample_ks(std::span<const double> a, std::span<const double> b) {
    return two_sample_ks_test(WeightedSample{{a.begin(), a.end()}, std::vector<double>(a.size(), 1.0)},
                              WeightedSample{{b.begin(), b.end()}, std::vector<double>(b.size(), 1.0)})
        .statistic;
}

KsResult two_sample_ks_test(std::span<const double> a, std::span<const double> b) {
    const double d = two_sample_ks(a, b);
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    return finish_ks(d, na * nb / (na + nb));
}

KsResult two_sample_ks_test(const WeightedSample& a, const WeightedSample& b) {
    require_nonempty(a.values.size());
    require_nonempty(b.values.size());
    auto sorted = [](const WeightedSample& s) {
        std::vector<std::size_t> idx(s.values.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t i, std::size_t j) { return s.values[i] < s.values[j]; });
        return idx;
    };
    const auto ia = sorted(a), ib = sorted(b);
    const double wa = std::accumulate(a.weights.begin(), a.weights.end(), 0.0);
    const double wb = std::accumulate(b.weights.begin(), b.weights.end(), 0.0);
    if (!(wa > 0.0 && wb > 0.0)) throw DomainError("sample weights sum to zero");

    double fa = 0.0, fb = 0.0, d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < ia.size() || j < ib.size()) {
        const double va = i < ia.size() ? a.values[ia[i]] : INFINITY;
        const double vb = j < ib.size() ? b.values[ib[j]] : INFINITY;
        const double v = std::min(va, vb);
        while (i < ia.size() && a.values[ia[i]] == v) fa += a.weights[ia[i++]];
        while (j < ib.size() && b.values[ib[j]] == v) fb += b.weights[ib[j++]];
        d = std::max(d, std::abs(fa / wa - fb / wb));
    }
    const double na = a.effective_size(), nb = b.effective_size();
    return finish_ks(d, na * nb / (na + nb));
}

ChiSquareResult chi_square_gof(std::span<const std::uint64_t> observed,
                               std::span<const double> probabilities, double min_expected) {
    if (observed.size() != probabilities.size())
        throw DomainError("observed counts and probabilities differ in size");
    require_nonempty(observed.size());
    const double total =
        static_cast<double>(std::accumulate(observed.begin(), observed.end(), std::uint64_t{0}));
    require_nonempty(static_cast<std::size_t>(total));

    std::vector<std::pair<double, double>> bins;  // (expected, observed)
    std::pair<double, double> pooled{0.0, 0.0};
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = probabilities[i] * total;
        const double o = static_cast<double>(observed[i]);
        if (e < min_expected) {
            pooled.first += e;
            pooled.second += o;
        } else {
            bins.emplace_back(e, o);
        }
    }
    if (pooled.first > 0.0 || pooled.second > 0.0) {
        if (pooled.first >= min_expected || bins.empty()) {
            bins.push_back(pooled);
        } else {
            auto smallest = std::min_element(bins.begin(), bins.end());
            smallest->first += pooled.first;
            smallest->second += pooled.second;
        }
    }
    ChiSquareResult r;
    r.bins = bins.size();
    for (const auto& [e, o] : bins) {
        if (e <= 0.0) {
            if (o > 0.0) r.statistic = INFINITY;
            continue;
        }
        r.statistic += (o - e) * (o - e) / e;
    }
    r.dof = bins.size() > 1 ? bins.size() - 1 : 0;
    if (r.dof == 0) {
        r.p_value = 1.0;
    } else if (!std::isfinite(r.statistic)) {
        r.p_value = 0.0;
    } else {
        boost::math::chi_squared dist(static_cast<double>(r.dof));
        r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
    }
    return r;
}

namespace {

class ExponentialLaw final : public PositiveLaw {
public:
    explicit ExponentialLaw(double mean) : mean_(mean) {
        if (!(mean > 0.0)) throw DomainError("exponential mean must be positive");
    }
    std::string name() const override { return "exponential(mean=" + std::to_string(mean_) + ")"; }
    double moment_transform(int j, double lambda) const override {
        const double base = 1.0 + mean_ * lambda;
        switch (j) {
            case 0: return 1.0 / base;
            case 1: return mean_ / (base * base);
            case 2: return 2.0 * mean_ * mean_ / (base * base * base);
            default: throw DomainError("moment order must be 0, 1 or 2");
        }
    }
    double sample(Rng& rng) const override { return -mean_ * std::log(open_uniform(rng)); }

private:
    double mean_;
};

class GammaLaw final : public PositiveLaw {
public:
    GammaLaw(double shape, double scale) : shape_(shape), scale_(scale) {
        if (!(shape > 0.0 && scale > 0.0)) throw DomainError("gamma shape and scale must be positive");
    }
    std::string name() const override {
        return "gamma(shape=" + std::to_string(shape_) + ",scale=" + std::to_string(scale_) + ")";
    }
    double moment_transform(int j, double lambda) const override {
        if (j < 0 || j > 2) throw DomainError("moment order must be 0, 1 or 2");
        double rising = 1.0;  // shape (shape + 1) ... (shape + j - 1)
        for (int i = 0; i < j; ++i) rising *= shape_ + i;
        return rising * std::pow(scale_, j) * std::pow(1.0 + scale_ * lambda, -(shape_ + j));
    }
    double sample(Rng& rng) const override {
        std::gamma_distribution<double> g(shape_, scale_);
        return g(rng);
    }

private:
    double shape_, scale_;
};

class UniformLaw final : public PositiveLaw {
public:
    UniformLaw(double lo, double hi) : lo_(lo), hi_(hi) {
        if (!(lo >= 0.0 && hi > lo)) throw DomainError("uniform law needs 0 <= lo < hi");
    }
    std::string name() const override {
        return "uniform(" + std::to_string(lo_) + "," + std::to_string(hi_) + ")";
    }
    double moment_transform(int j, double lambda) const override {
        if (j < 0 || j > 2) throw DomainError("moment order must be 0, 1 or 2");
        return integrate([&](double y) { return std::pow(y, j) * std::exp(-lambda * y); }, lo_, hi_) /
               (hi_ - lo_);
    }
    // (lo, hi]: strictly positive even for lo = 0.
    double sample(Rng& rng) const override {
        return lo_ + (hi_ - lo_) * (1.0 - uniform01(rng));
    }

private:
    double lo_, hi_;
};

class ConstantLaw final : public PositiveLaw {
public:
    explicit ConstantLaw(double c) : c_(c) {
        if (!(c > 0.0)) throw DomainError("constant law must be strictly positive");
    }
    std::string name() const override { return "constant(" + std::to_string(c_) + ")"; }
    double moment_transform(int j, double lambda) const override {
        if (j < 0 || j > 2) throw DomainError("moment order must be 0, 1 or 2");
        return std::pow(c_, j) * std::exp(-lambda * c_);
    }
    double sample(Rng&) const override { return c_; }

private:
    double c_;
};

}  // namespace

std::unique_ptr<PositiveLaw> exponential_law(double mean) { return std::make_unique<ExponentialLaw>(mean); }
std::unique_ptr<PositiveLaw> gamma_law(double shape, double scale) {
    return std::make_unique<GammaLaw>(shape, scale);
}
std::unique_ptr<PositiveLaw> uniform_law(double lo, double hi) { return std::make_unique<UniformLaw>(lo, hi); }
std::unique_ptr<PositiveLaw> constant_law(double value) { return std::make_unique<ConstantLaw>(value); }

std::string to_string(Characterization c) {
    switch (c) {
        case Characterization::x2: return "x2_size_biased";
        case Characterization::lyons: return "lyons";
        case Characterization::geiger: return "geiger";
    }
    return "unknown";
}

std::pair<double, double> characterization_sides(const PositiveLaw& law, Characterization c,
                                                 double lambda) {
    if (!(lambda >= 0.0)) throw DomainError("lambda must be non-negative");
    const double m1 = law.mean();
    if (!(m1 > 0.0)) throw DomainError("law must have a positive mean");
    const double t0 = law.laplace(lambda);
    // E[exp(-lambda U Y')] = (1 - E e^{-lambda Y}) / (lambda E Y)
    const double scaled_sb = lambda == 0.0 ? 1.0 : (1.0 - t0) / (lambda * m1);
    switch (c) {
        case Characterization::x2:
            return {law.moment_transform(2, lambda) / law.second_moment(),
                    law.moment_transform(1, lambda) / m1 * scaled_sb};
        case Characterization::lyons: return {t0, scaled_sb};
        case Characterization::geiger: {
            if (lambda == 0.0) return {1.0, 1.0};
            const double sq = integrate(
                [&](double t) {
                    const double l = law.laplace(t);
                    return l * l;
                },
                0.0, lambda);
            return {t0, sq / lambda};
        }
    }
    return {0.0, 0.0};
}

std::pair<WeightedSample, WeightedSample> characterization_samples(const PositiveLaw& law,
                                                                   Characterization c,
                                                                   std::size_t samples,
                                                                   std::uint64_t seed) {
    require_nonempty(samples);
    Rng ry = make_stream(seed, 0), ry1 = make_stream(seed, 1), ry2 = make_stream(seed, 2),
        ru = make_stream(seed, 3);
    auto draw = [&law](Rng& rng) {
        const double y = law.sample(rng);
        if (!(y > 0.0)) throw DomainError(law.name() + " drew a non-positive value");
        return y;
    };
    WeightedSample lhs, rhs;
    for (auto* s : {&lhs, &rhs}) {
        s->values.reserve(samples);
        s->weights.reserve(samples);
    }
    for (std::size_t i = 0; i < samples; ++i) {
        const double y = draw(ry);
        const double y1 = draw(ry1);
        const double u = open_uniform(ru);
        switch (c) {
            case Characterization::x2: {
                const double y2 = draw(ry2);
                lhs.values.push_back(y);
                lhs.weights.push_back(y * y);
                rhs.values.push_back(y1 + u * y2);
                rhs.weights.push_back(y1 * y2);
                break;
            }
            case Characterization::lyons:
                lhs.values.push_back(y);
                lhs.weights.push_back(1.0);
                rhs.values.push_back(u * y1);
                rhs.weights.push_back(y1);
                break;
            case Characterization::geiger: {
                const double y2 = draw(ry2);
                lhs.values.push_back(y);
                lhs.weights.push_back(1.0);
                rhs.values.push_back(u * (y1 + y2));
                rhs.weights.push_back(1.0);
                break;
            }
        }
    }
    return {std::move(lhs), std::move(rhs)};
}

CharacterizationResult check_characterization(const PositiveLaw& law, Characterization c,
                                              const CharacterizationOptions& opt) {
    if (opt.grid.empty()) throw DomainError("empty lambda grid");
    CharacterizationResult r;
    r.analytic.name = to_string(c) + ":" + law.name();
    r.analytic.metric = "laplace_sup_gap";
    r.analytic.threshold = opt.analytic_tolerance;
    for (double lambda : opt.grid) {
        const auto [l, rr] = characterization_sides(law, c, lambda);
        r.analytic.value = std::max(r.analytic.value, std::abs(l - rr));
    }
    r.analytic.details.emplace_back("grid_points", static_cast<double>(opt.grid.size()));
    r.analytic.settle();

    const auto [lhs, rhs] = characterization_samples(law, c, opt.samples, opt.seed);
    const KsResult ks = two_sample_ks_test(lhs, rhs);
    r.empirical.name = r.analytic.name;
    r.empirical.metric = "two_sample_ks";
    r.empirical.value = ks.statistic;
    r.empirical.threshold = kolmogorov_quantile(opt.alpha) / std::sqrt(ks.effective_size);
    r.empirical.sample_sizes = {opt.samples, opt.samples};
    r.empirical.details = {{"p_value", ks.p_value},
                           {"effective_size_lhs", lhs.effective_size()},
                           {"effective_size_rhs", rhs.effective_size()},
                           {"alpha", opt.alpha}};
    r.empirical.settle();
    return r;
}

LaplacePair laplace_pair(const PositiveLaw& law) {
    const double m = law.mean();
    return {[&law](double l) { return law.laplace(l); },
            [&law, m](double l) { return law.moment_transform(1, l) / m; }, m};
}

LaplacePair renormalized_size_biased_pair(const OffspringDistribution& d, std::size_t n) {
    if (n == 0) throw DomainError("renormalized transforms need n >= 1");
    const double nd = static_cast<double>(n);
    return {[d, n, nd](double l) { return std::exp(l / nd) * laplace_sb(d, n, l / nd); },
            [d, n, nd](double l) { return std::exp(l / nd) * laplace_two_spine(d, n, l / nd); },
            d.variance()};
}

ComparisonReport transform_distance_bound(const LaplacePair& x0, const LaplacePair& x1, double a,
                                          double lambda_max, std::size_t grid_points) {
    if (!(a > 0.0 && std::isfinite(a))) throw DomainError("shared mean must lie in (0, inf)");
    if (std::abs(x0.mean - a) > 1e-9 || std::abs(x1.mean - a) > 1e-9)
        throw DomainError("transforms do not share the mean " + std::to_string(a));
    if (!(lambda_max >= 0.0)) throw DomainError("lambda_max must be non-negative");

    auto ratio = [](const LaplacePair& x, double s) { return x.size_biased(s) / x.laplace(s); };
    auto diff = [&](double s) { return std::abs(ratio(x0, s) - ratio(x1, s)); };

    const auto grid = linear_grid(0.0, lambda_max, std::max<std::size_t>(grid_points, 2));
    double integral = 0.0, worst = -INFINITY, slack = 0.0, prev = 0.0;
    for (double l : grid) {
        integral += integrate(diff, prev, l, 6, 1e-10);
        prev = l;
        const double lhs = std::abs(x0.laplace(l) - x1.laplace(l));
        const double rhs = a * integral;
        worst = std::max(worst, lhs - rhs);
        slack = std::max(slack, rhs - lhs);
    }
    ComparisonReport r;
    r.name = "transform_distance_bound";
    r.metric = "max_violation";
    r.value = worst;
    r.threshold = 1e-6;
    r.details = {{"max_slack", slack}, {"lambda_max", lambda_max}, {"mean", a}};
    r.settle();
    return r;
}

ComparisonReport yaglom_ks_report(const ConditionedSample& sample, std::size_t n, double variance,
                                  double alpha) {
    require_nonempty(sample.final_sizes.size());
    const double nd = static_cast<double>(n);
    const double mean = variance / 2.0;
    std::vector<double> scaled;
    scaled.reserve(sample.final_sizes.size());
    for (auto z : sample.final_sizes) scaled.push_back(static_cast<double>(z) / nd);
    const KsResult ks = ks_test(scaled, [mean](double x) { return -std::expm1(-x / mean); });
    ComparisonReport r;
    r.name = "yaglom_conditional_ks";
    r.metric = "ks";
    r.value = ks.statistic;
    r.threshold = kolmogorov_quantile(alpha) / std::sqrt(ks.effective_size);
    r.sample_sizes = {sample.final_sizes.size()};
    r.details = {{"p_value", ks.p_value},
                 {"acceptance_rate", sample.acceptance_rate()},
                 {"runs", static_cast<double>(sample.runs)},
                 {"n", nd}};
    r.settle();
    return r;
}

}  // namespace twospine

#include "twospine/offspring.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "twospine/error.hpp"
#include "twospine/numeric.hpp"

namespace twospine {

OffspringDistribution OffspringDistribution::from_pmf(std::vector<double> pmf, Family family,
                                                      double family_param) {
    if (pmf.empty()) throw InvalidDistribution("empty probability mass function");
    OffspringDistribution d;
    CompensatedSum mass, mean, factorial2;
    for (std::size_t k = 0; k < pmf.size(); ++k) {
        const double p = pmf[k];
        if (!std::isfinite(p) || p < 0.0)
            throw InvalidDistribution("pmf entry " + std::to_string(k) + " is negative or not finite");
        const double kd = static_cast<double>(k);
        mass.add(p);
        mean.add(kd * p);
        factorial2.add(kd * (kd - 1.0) * p);
    }
    if (std::abs(mass.value() - 1.0) > kMassTolerance)
        throw InvalidDistribution("pmf sums to " + std::to_string(mass.value()) + ", not 1");
    while (pmf.size() > 1 && pmf.back() == 0.0) pmf.pop_back();

    d.pmf_ = std::move(pmf);
    d.mass_ = mass.value();
    d.mean_ = mean.value();
    const bool unit_mean = std::abs(d.mean_ - 1.0) <= kCriticalTolerance;
    d.variance_ = unit_mean ? factorial2.value()
                            : factorial2.value() + d.mean_ - d.mean_ * d.mean_;
    d.critical_ = unit_mean && d.variance_ > 0.0;
    d.family_ = family;
    d.family_param_ = family_param;
    return d;
}

OffspringDistribution make_distribution(std::span<const double> weights) {
    if (weights.empty()) throw InvalidDistribution("no weights given");
    CompensatedSum total;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        const double w = weights[k];
        if (!std::isfinite(w) || w < 0.0)
            throw InvalidDistribution("weight " + std::to_string(k) + " is negative or not finite");
        total.add(w);
    }
    if (!(total.value() > 0.0)) throw InvalidDistribution("all weights are zero");
    std::vector<double> pmf(weights.begin(), weights.end());
    for (double& p : pmf) p /= total.value();
    return OffspringDistribution::from_pmf(std::move(pmf));
}

OffspringDistribution binary_distribution(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidDistribution("binary parameter must lie in [0, 1]");
    return OffspringDistribution::from_pmf({1.0 - p, 0.0, p}, Family::binary, p);
}

namespace {

constexpr std::size_t kMaxTruncation = 100000;
constexpr double kTailTolerance = 1e-15;

// Weights w(k) generated by a ratio w(k+1) = w(k) * ratio(k), stopped at
// `truncate` or once k^2 w(k) is past the mode and below kTailTolerance.
template <typename Ratio>
std::vector<double> truncated_weights(double w0, Ratio ratio, double mode,
                                      std::optional<std::size_t> truncate) {
    std::vector<double> w{w0};
    for (std::size_t k = 0;; ++k) {
        if (truncate) {
            if (k >= *truncate) break;
        } else {
            const double kd = static_cast<double>(k);
            if (kd > mode + 1.0 && (kd * kd + 1.0) * w.back() < kTailTolerance) break;
            if (k >= kMaxTruncation)
                throw InvalidDistribution("default truncation exceeds " +
                                          std::to_string(kMaxTruncation) + " atoms");
        }
        w.push_back(w.back() * ratio(k));
    }
    return w;
}

OffspringDistribution normalized_family(std::vector<double> w, Family family, double param) {
    CompensatedSum total;
    for (double x : w) total.add(x);
    for (double& x : w) x /= total.value();
    return OffspringDistribution::from_pmf(std::move(w), family, param);
}

}  // namespace

OffspringDistribution geometric_distribution(double q, std::optional<std::size_t> truncate) {
    if (!(q > 0.0 && q < 1.0)) throw InvalidDistribution("geometric ratio must lie in (0, 1)");
    auto w = truncated_weights(1.0 - q, [q](std::size_t) { return q; }, q / (1.0 - q), truncate);
    return normalized_family(std::move(w), Family::geometric, q);
}

OffspringDistribution poisson_distribution(double mean, std::optional<std::size_t> truncate) {
    if (!(mean > 0.0 && std::isfinite(mean)))
        throw InvalidDistribution("poisson mean must be positive and finite");
    auto w = truncated_weights(
        std::exp(-mean), [mean](std::size_t k) { return mean / static_cast<double>(k + 1); }, mean,
        truncate);
    return normalized_family(std::move(w), Family::poisson, mean);
}

OffspringDistribution biased(const OffspringDistribution& d, BiasKind kind) {
    if (kind == BiasKind::plain) return d;
    if (std::abs(d.mean() - 1.0) > kCriticalTolerance)
        throw InvalidDistribution("biased laws need a mean-one offspring law, mean is " +
                                  std::to_string(d.mean()));
    const auto src = d.pmf();
    std::vector<double> out(src.size(), 0.0);
    if (kind == BiasKind::first_order) {
        for (std::size_t k = 1; k < src.size(); ++k) out[k] = static_cast<double>(k) * src[k];
    } else {
        if (!(d.variance() > 0.0))
            throw DegenerateVariance("second factorial bias needs sigma^2 > 0");
        for (std::size_t k = 2; k < src.size(); ++k)
            out[k] = static_cast<double>(k) * static_cast<double>(k - 1) * src[k] / d.variance();
    }
    return OffspringDistribution::from_pmf(std::move(out));
}

Jet pgf_jet(const OffspringDistribution& d, double s) noexcept {
    const auto a = d.pmf();
    double p0 = a.back(), p1 = 0.0, p2 = 0.0;
    for (std::size_t i = a.size() - 1; i-- > 0;) {
        p2 = p2 * s + p1;
        p1 = p1 * s + p0;
        p0 = p0 * s + a[i];
    }
    return {p0, p1, 2.0 * p2};
}

double pgf(const OffspringDistribution& d, double s) {
    if (!(s >= 0.0 && s <= 1.0)) throw DomainError("pgf argument must lie in [0, 1]");
    return pgf_jet(d, s).value;
}

double pgf_derivative(const OffspringDistribution& d, double s, int order) {
    if (!(s >= 0.0 && s <= 1.0)) throw DomainError("pgf argument must lie in [0, 1]");
    const Jet j = pgf_jet(d, s);
    switch (order) {
        case 1: return j.first;
        case 2: return j.second;
        default: throw DomainError("pgf derivative order must be 1 or 2");
    }
}

double pgf_complement(const OffspringDistribution& d, double x) noexcept {
    const auto a = d.pmf();
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0 - a[0];
    const double log_keep = std::log1p(-x);
    CompensatedSum acc;
    for (std::size_t k = 1; k < a.size(); ++k) {
        if (a[k] == 0.0) continue;
        acc.add(-a[k] * std::expm1(static_cast<double>(k) * log_keep));
    }
    return acc.value();
}

OffspringSampler::OffspringSampler(const OffspringDistribution& d, BiasKind kind) {
    const OffspringDistribution law = biased(d, kind);
    pmf_.assign(law.pmf().begin(), law.pmf().end());
    table_ = std::discrete_distribution<std::uint64_t>(pmf_.begin(), pmf_.end());
    if (kind == BiasKind::plain) {
        family_ = d.family();
        family_param_ = d.family_parameter();
    }
}

namespace {

// Heads among `count` fair coin flips, 64 flips per generator call.
std::uint64_t fair_coin_heads(std::uint64_t count, Rng& rng) {
    std::uint64_t heads = 0;
    for (; count >= 64; count -= 64) heads += std::popcount(rng());
    if (count > 0) heads += std::popcount(rng() >> (64 - count));
    return heads;
}

// Tails seen before the count-th head in a stream of fair coin flips.
std::uint64_t fair_coin_failures(std::uint64_t count, Rng& rng) {
    std::uint64_t tails = 0;
    for (;;) {
        std::uint64_t w = rng();
        const auto heads = static_cast<std::uint64_t>(std::popcount(w));
        if (heads < count) {
            count -= heads;
            tails += 64 - heads;
            continue;
        }
        for (std::uint64_t i = 1; i < count; ++i) w &= w - 1;
        return tails + static_cast<std::uint64_t>(std::countr_zero(w)) - (count - 1);
    }
}

}  // namespace

std::uint64_t OffspringSampler::sum(std::uint64_t count, Rng& rng) {
    constexpr std::uint64_t kDirect = 32;
    if (count <= kDirect) {
        std::uint64_t total = 0;
        for (std::uint64_t i = 0; i < count; ++i) total += table_(rng);
        return total;
    }
    switch (family_) {
        case Family::binary: {
            if (family_param_ == 0.5) return 2 * fair_coin_heads(count, rng);
            std::binomial_distribution<std::uint64_t> bin(count, family_param_);
            return 2 * bin(rng);
        }
        case Family::geometric: {
            // Failures before `count` successes: the sum of `count` geometric
            // variables. Differs from the truncated law only in its tail beyond
            // the truncation point.
            if (family_param_ == 0.5) return fair_coin_failures(count, rng);
            std::negative_binomial_distribution<std::uint64_t> nb(count, 1.0 - family_param_);
            return nb(rng);
        }
        case Family::poisson: {
            std::poisson_distribution<std::uint64_t> po(static_cast<double>(count) * family_param_);
            return po(rng);
        }
        case Family::custom: break;
    }
    // Multinomial split by successive conditional binomials.
    std::uint64_t remaining = count, total = 0;
    double mass_left = 1.0;
    for (std::size_t k = 0; k < pmf_.size() && remaining > 0; ++k) {
        if (pmf_[k] == 0.0) continue;
        std::uint64_t n_k;
        if (k + 1 == pmf_.size() || pmf_[k] >= mass_left) {
            n_k = remaining;
        } else {
            std::binomial_distribution<std::uint64_t> bin(remaining, pmf_[k] / mass_left);
            n_k = bin(rng);
        }
        total += n_k * k;
        remaining -= n_k;
        mass_left -= pmf_[k];
    }
    return total;
}

std::uint64_t sample_offspring(const OffspringDistribution& d, BiasKind kind, Rng& rng) {
    OffspringSampler s(d, kind);
    return s(rng);
}

std::string to_string(BiasKind kind) {
    switch (kind) {
        case BiasKind::plain: return "plain";
        case BiasKind::first_order: return "first_order";
        case BiasKind::second_factorial: return "second_factorial";
    }
    return "unknown";
}

}  // namespace twospine

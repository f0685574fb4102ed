#include "twospine/exact.hpp"

#include <algorithm>
#include <cmath>

#include "twospine/error.hpp"
#include "twospine/numeric.hpp"

namespace twospine {

namespace {

void require_critical(const OffspringDistribution& d) {
    if (!d.is_critical())
        throw InvalidDistribution("a critical offspring law (mean 1, sigma^2 > 0) is required");
}

void require_lambda(double lambda) {
    if (!(lambda >= 0.0)) throw DomainError("lambda must be non-negative");
}

// sum_k P(B = k) s^(k - shift) for a biased law B.
double shifted_transform(std::span<const double> pmf, std::size_t shift, double s) {
    double acc = 0.0;
    for (std::size_t k = pmf.size(); k-- > shift;) acc = acc * s + pmf[k];
    return acc;
}

// Per-bush transforms E[s_m^{L'-1}] and E[s_m^{L''-2}], s_m = f^(m)(s),
// for m = 0..n-1, summed directly over the biased laws.
struct BushTransforms {
    std::vector<double> one_spine;
    std::vector<double> split;
};

BushTransforms bush_transforms(const OffspringDistribution& d, std::size_t n, double s) {
    const auto sized = biased(d, BiasKind::first_order);
    const auto paired = biased(d, BiasKind::second_factorial);
    BushTransforms out;
    out.one_spine.reserve(n);
    out.split.reserve(n);
    double sm = s;
    for (std::size_t m = 0; m < n; ++m) {
        out.one_spine.push_back(shifted_transform(sized.pmf(), 1, sm));
        out.split.push_back(shifted_transform(paired.pmf(), 2, sm));
        sm = pgf_jet(d, sm).value;
    }
    return out;
}

}  // namespace

PgfIterates::PgfIterates(const OffspringDistribution& d, double s, std::size_t n) : s_(s) {
    if (!(s >= 0.0 && s <= 1.0)) throw DomainError("pgf argument must lie in [0, 1]");
    iterates_.reserve(n + 1);
    outer_.reserve(n + 1);
    iterates_.push_back(Jet{s, 1.0, 0.0});
    for (std::size_t m = 0;; ++m) {
        const Jet& inner = iterates_.back();
        outer_.push_back(pgf_jet(d, inner.value));
        if (m == n) break;
        const Jet& f = outer_.back();
        iterates_.push_back(Jet{f.value, f.first * inner.first,
                                f.second * inner.first * inner.first + f.first * inner.second});
    }
}

std::vector<double> extinction_probs(const OffspringDistribution& d, std::size_t n) {
    std::vector<double> q{0.0};
    q.reserve(n + 1);
    for (std::size_t m = 0; m < n; ++m) q.push_back(pgf_jet(d, q.back()).value);
    return q;
}

std::vector<double> survival_probs(const OffspringDistribution& d, std::size_t n) {
    std::vector<double> p{1.0};
    p.reserve(n + 1);
    for (std::size_t m = 0; m < n; ++m) p.push_back(pgf_complement(d, p.back()));
    return p;
}

std::vector<double> kolmogorov_sequence(const OffspringDistribution& d, std::size_t n) {
    require_critical(d);
    auto p = survival_probs(d, n);
    for (std::size_t m = 0; m <= n; ++m) p[m] *= static_cast<double>(m) * d.variance() / 2.0;
    return p;
}

double conditional_mean(const OffspringDistribution& d, std::size_t n, ConditionalMeanMethod method) {
    require_critical(d);
    const auto p = survival_probs(d, n);
    if (method == ConditionalMeanMethod::direct) return 1.0 / p[n];

    const auto q = extinction_probs(d, n);
    const auto mu = d.pmf();
    double e = 1.0;
    for (std::size_t m = 1; m <= n; ++m) {
        // sum_k mu(k) sum_{j=1}^k q^{j-1} (k - j)
        CompensatedSum s;
        for (std::size_t k = 1; k < mu.size(); ++k) {
            if (mu[k] == 0.0) continue;
            double inner = 0.0, qp = 1.0;
            for (std::size_t j = 1; j <= k; ++j) {
                inner += qp * static_cast<double>(k - j);
                qp *= q[m - 1];
            }
            s.add(mu[k] * inner);
        }
        e += p[m - 1] / p[m] * s.value();
    }
    return e;
}

double laplace_Z(const OffspringDistribution& d, std::size_t n, double lambda) {
    require_lambda(lambda);
    double s = std::exp(-lambda);
    for (std::size_t m = 0; m < n; ++m) s = pgf_jet(d, s).value;
    return s;
}

double laplace_sb(const OffspringDistribution& d, std::size_t n, double lambda,
                  SizeBiasedMethod method) {
    require_lambda(lambda);
    require_critical(d);
    const double s = std::exp(-lambda);
    if (method == SizeBiasedMethod::derivative) return s * PgfIterates(d, s, n).iterate(n).first;
    // The bush hanging off the generation-n spine particle contributes s.
    const auto bushes = bush_transforms(d, n, s);
    double v = s;
    for (double b : bushes.one_spine) v *= b;
    return v;
}

double two_spine_ratio(const OffspringDistribution& d, std::size_t m, double lambda) {
    require_lambda(lambda);
    require_critical(d);
    const auto b = bush_transforms(d, m + 1, std::exp(-lambda));
    return b.split[m] / b.one_spine[m];
}

RatioBracket ratio_bracket(const OffspringDistribution& d, std::size_t m) {
    require_critical(d);
    const double q = extinction_probs(d, m)[m];
    const Jet j = pgf_jet(d, q);
    return {j.second / d.variance(), 1.0 / j.first};
}

double laplace_two_spine(const OffspringDistribution& d, std::size_t n, double lambda,
                         TwoSpineMethod method) {
    require_lambda(lambda);
    require_critical(d);
    if (n == 0) throw DomainError("the two-spine tree needs height n >= 1");
    const double s = std::exp(-lambda);
    const double nd = static_cast<double>(n);
    if (method == TwoSpineMethod::factorial_moment)
        return s * s * PgfIterates(d, s, n).iterate(n).second / (nd * d.variance());

    const auto b = bush_transforms(d, n, s);
    // sb[m] = E[exp(-lambda Z'_m)] = s * prod_{j<m} b.one_spine[j]
    std::vector<double> sb{s};
    for (std::size_t m = 0; m < n; ++m) sb.push_back(sb.back() * b.one_spine[m]);
    CompensatedSum avg;
    for (std::size_t m = 0; m < n; ++m) avg.add(b.split[m] / b.one_spine[m] * sb[m]);
    return sb[n] * avg.value() / nd;
}

double second_factorial_moment(const OffspringDistribution& d, std::size_t n) {
    return PgfIterates(d, 1.0, n).iterate(n).second;
}

double yaglom_conditional(const OffspringDistribution& d, std::size_t n, double lambda) {
    require_lambda(lambda);
    require_critical(d);
    if (n == 0) throw DomainError("the conditional transform needs n >= 1");
    const auto p = survival_probs(d, n);
    double c = -std::expm1(-lambda / static_cast<double>(n));
    for (std::size_t m = 0; m < n; ++m) c = pgf_complement(d, c);
    return std::clamp(1.0 - c / p[n], 0.0, 1.0);
}

double exponential_limit(const OffspringDistribution& d, double lambda) {
    return 1.0 / (1.0 + d.variance() * lambda / 2.0);
}

std::string to_string(TransformKind kind) {
    switch (kind) {
        case TransformKind::plain: return "Z_n";
        case TransformKind::size_biased: return "size_biased_Z_n";
        case TransformKind::two_spine: return "two_spine_Z_n";
        case TransformKind::conditional: return "conditional_Z_n_over_n";
        case TransformKind::renormalized_size_biased: return "renormalized_size_biased";
        case TransformKind::renormalized_two_spine: return "renormalized_two_spine";
        case TransformKind::empirical: return "empirical";
    }
    return "unknown";
}

double TransformTable::max_abs_gap() const {
    double gap = 0.0;
    for (std::size_t i = 0; i < reference.size() && i < values.size(); ++i)
        gap = std::max(gap, std::abs(values[i] - reference[i]));
    return gap;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t count) {
    if (count == 0) return {};
    if (count == 1) return {lo};
    std::vector<double> g(count);
    for (std::size_t i = 0; i < count; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    return g;
}

TransformTable transform_table(const OffspringDistribution& d, std::size_t n, TransformKind kind,
                               std::span<const double> grid) {
    TransformTable t;
    t.kind = kind;
    t.lambda.assign(grid.begin(), grid.end());
    const double nd = static_cast<double>(n);
    for (double lambda : grid) {
        require_lambda(lambda);
        double v = 0.0;
        switch (kind) {
            case TransformKind::plain: v = laplace_Z(d, n, lambda); break;
            case TransformKind::size_biased: v = laplace_sb(d, n, lambda); break;
            case TransformKind::two_spine: v = laplace_two_spine(d, n, lambda); break;
            case TransformKind::conditional: v = yaglom_conditional(d, n, lambda); break;
            case TransformKind::renormalized_size_biased:
                if (n == 0) throw DomainError("renormalized transforms need n >= 1");
                v = std::exp(lambda / nd) * laplace_sb(d, n, lambda / nd);
                break;
            case TransformKind::renormalized_two_spine:
                if (n == 0) throw DomainError("renormalized transforms need n >= 1");
                v = std::exp(lambda / nd) * laplace_two_spine(d, n, lambda / nd);
                break;
            case TransformKind::empirical:
                throw DomainError("empirical tables are built from samples");
        }
        t.values.push_back(v);
    }
    return t;
}

TransformTable renormalized_add_on_table(const OffspringDistribution& d, std::size_t n,
                                         std::span<const double> grid) {
    TransformTable t = transform_table(d, n, TransformKind::renormalized_two_spine, grid);
    const double nd = static_cast<double>(n);
    for (double lambda : grid) {
        const double s = std::exp(-lambda / nd);
        const auto b = bush_transforms(d, n, s);
        std::vector<double> sb{s};
        for (std::size_t m = 0; m < n; ++m) sb.push_back(sb.back() * b.one_spine[m]);
        CompensatedSum avg;
        for (std::size_t m = 0; m < n; ++m) avg.add(b.split[m] / b.one_spine[m] * sb[m]);
        t.reference.push_back(sb[n] / s * avg.value() / nd);
    }
    return t;
}

}  // namespace twospine

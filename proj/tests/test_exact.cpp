#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "twospine/error.hpp"
#include "twospine/exact.hpp"
#include "twospine/tree.hpp"

using namespace twospine;

namespace {

const OffspringDistribution kBinary = binary_distribution();
const OffspringDistribution kGeometric = geometric_distribution();

std::vector<double> mu_of(const OffspringDistribution& d) { return {d.pmf().begin(), d.pmf().end()}; }

double enumerated_laplace(const OffspringDistribution& d, std::size_t n, int order, double lambda) {
    long double s = 0.0L;
    for (const auto& t : enumerate_trees(n, support_of(d))) {
        const double w = order == 0 ? gw_weight(t, d, n) : biased_weight(t, d, n, order);
        s += static_cast<long double>(w * std::exp(-lambda * static_cast<double>(t.population(n))));
    }
    return static_cast<double>(s);
}

}  // namespace

TEST_CASE("binary extinction probabilities") {
    const auto q = extinction_probs(kBinary, 3);
    CHECK(q[0] == 0.0);
    CHECK(q[1] == 0.5);
    CHECK(q[2] == 0.625);
    CHECK(q[3] == 0.6953125);
    const auto p = survival_probs(kBinary, 3);
    for (std::size_t m = 0; m <= 3; ++m) CHECK(p[m] == doctest::Approx(1.0 - q[m]).epsilon(1e-15));
}

TEST_CASE("geometric extinction probabilities are n/(n+1)") {
    const auto q = extinction_probs(kGeometric, 1000);
    const auto p = survival_probs(kGeometric, 1000);
    CHECK(q[0] == 0.0);
    CHECK(std::abs(q[2] - 2.0 / 3.0) < 1e-12);
    for (std::size_t n = 1; n <= 1000; ++n) {
        CHECK(std::abs(q[n] - n / (n + 1.0)) < 1e-10);
        CHECK(std::abs(p[n] * (n + 1.0) - 1.0) < 1e-10);
        CHECK(q[n] >= q[n - 1]);
    }
}

TEST_CASE("extinction probabilities agree with the convolution oracle") {
    const auto d = make_distribution(std::vector<double>{0.3, 0.5, 0.1, 0.1});
    const auto q = extinction_probs(d, 6);
    for (std::size_t n = 0; n <= 6; ++n) CHECK(q[n] == doctest::Approx(oracle::population_law(mu_of(d), n)[0]).epsilon(1e-13));
}

TEST_CASE("Kolmogorov sequence") {
    const auto g = kolmogorov_sequence(kGeometric, 99);
    CHECK(std::abs(g[99] - 0.99) < 1e-10);
    const auto b = kolmogorov_sequence(kBinary, 100'000);
    CHECK(b[1] == 0.25);
    CHECK(std::abs(b[100'000] - 1.0) <= 0.005);
    CHECK_THROWS_AS(kolmogorov_sequence(binary_distribution(0.3), 10), InvalidDistribution);
}

TEST_CASE("conditional mean") {
    using M = ConditionalMeanMethod;
    CHECK(conditional_mean(kBinary, 1, M::direct) == 2.0);
    CHECK(conditional_mean(kBinary, 1, M::recursion) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(conditional_mean(kBinary, 0, M::direct) == 1.0);
    CHECK(conditional_mean(kGeometric, 0, M::recursion) == 1.0);
    CHECK(conditional_mean(kGeometric, 9, M::direct) == doctest::Approx(10.0).epsilon(1e-10));
    for (const auto& d : {kBinary, kGeometric, poisson_distribution(),
                          make_distribution(std::vector<double>{0.3, 0.5, 0.1, 0.1})}) {
        for (std::size_t n : {1, 2, 5, 50, 500, 5000}) {
            const double a = conditional_mean(d, n, M::direct);
            const double b = conditional_mean(d, n, M::recursion);
            CHECK(std::abs(a - b) <= 1e-9 * a);
        }
        const double n = 5000;
        CHECK(conditional_mean(d, 5000, M::direct) / n == doctest::Approx(d.variance() / 2).epsilon(0.01));
    }
}

TEST_CASE("Laplace transform of Z_n") {
    CHECK(laplace_Z(kGeometric, 7, 0.0) == 1.0);
    CHECK(laplace_Z(kBinary, 1, std::log(2.0)) == doctest::Approx(0.625).epsilon(1e-15));
    CHECK(laplace_Z(kBinary, 2, 800.0) == 0.625);
    CHECK_THROWS_AS(laplace_Z(kBinary, 2, -1.0), DomainError);
    const auto law = oracle::population_law(mu_of(kGeometric), 5, 8000);
    for (double l : {0.01, 0.3, 2.0}) CHECK(laplace_Z(kGeometric, 5, l) == doctest::Approx(oracle::laplace(law, l)).epsilon(1e-12));
}

TEST_CASE("size-biased transform at small n") {
    using M = SizeBiasedMethod;
    for (double l : {0.0, 0.3, 1.0, 5.0}) {
        CHECK(laplace_sb(kBinary, 1, l, M::product) == doctest::Approx(std::exp(-2 * l)).epsilon(1e-15));
        CHECK(laplace_sb(kBinary, 1, l, M::derivative) == doctest::Approx(std::exp(-2 * l)).epsilon(1e-15));
    }
    CHECK(laplace_sb(kGeometric, 13, 0.0, M::product) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(laplace_sb(kGeometric, 13, 0.0, M::derivative) == doctest::Approx(1.0).epsilon(1e-15));
    const double expected = 0.5 * std::exp(-2.0) + 0.5 * std::exp(-4.0);
    CHECK(laplace_sb(kBinary, 2, 1.0, M::product) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(laplace_sb(kBinary, 2, 1.0, M::derivative) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(std::abs(enumerated_laplace(kBinary, 2, 1, 1.0) - expected) < 1e-15);
    CHECK_THROWS_AS(laplace_sb(kBinary, 2, -0.5), DomainError);
}

TEST_CASE("two-spine transform at small n") {
    using M = TwoSpineMethod;
    for (double l : {0.0, 0.3, 1.0, 5.0}) {
        CHECK(laplace_two_spine(kBinary, 1, l, M::decomposition) == doctest::Approx(std::exp(-2 * l)).epsilon(1e-14));
        CHECK(laplace_two_spine(kBinary, 1, l, M::factorial_moment) == doctest::Approx(std::exp(-2 * l)).epsilon(1e-14));
    }
    CHECK(laplace_two_spine(kGeometric, 9, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
    const double expected = 0.25 * std::exp(-2.0) + 0.75 * std::exp(-4.0);
    CHECK(laplace_two_spine(kBinary, 2, 1.0, M::decomposition) == doctest::Approx(expected).epsilon(1e-13));
    CHECK(laplace_two_spine(kBinary, 2, 1.0, M::factorial_moment) == doctest::Approx(expected).epsilon(1e-13));
    CHECK(std::abs(enumerated_laplace(kBinary, 2, 2, 1.0) - expected) < 1e-15);
    CHECK_THROWS_AS(laplace_two_spine(kBinary, 0, 1.0), DomainError);
}

TEST_CASE("biased transforms match enumeration for n <= 3") {
    for (const auto& d : {kBinary, make_distribution(std::vector<double>{0.3, 0.5, 0.1, 0.1})}) {
        for (std::size_t n = 1; n <= 3; ++n) {
            for (double l : {0.05, 0.5, 2.0}) {
                const double plain = enumerated_laplace(d, n, 0, l);
                const double sb = enumerated_laplace(d, n, 1, l);
                const double ts = enumerated_laplace(d, n, 2, l);
                CHECK(std::abs(laplace_Z(d, n, l) - plain) < 1e-13);
                CHECK(std::abs(laplace_sb(d, n, l, SizeBiasedMethod::product) - sb) < 1e-13);
                CHECK(std::abs(laplace_sb(d, n, l, SizeBiasedMethod::derivative) - sb) < 1e-13);
                CHECK(std::abs(laplace_two_spine(d, n, l, TwoSpineMethod::decomposition) - ts) < 1e-13);
                CHECK(std::abs(laplace_two_spine(d, n, l, TwoSpineMethod::factorial_moment) - ts) < 1e-13);
            }
        }
    }
}

TEST_CASE("biased transforms match the reweighted convolution law") {
    const auto d = poisson_distribution();
    const std::size_t n = 8;
    const auto law = oracle::population_law(mu_of(d), n, 6000);
    const auto sb = oracle::reweight(law, [](double k) { return k; });
    const auto ts = oracle::reweight(law, [](double k) { return k * (k - 1.0); });
    for (double l : {0.001, 0.02, 0.3, 1.5}) {
        CHECK(laplace_sb(d, n, l) == doctest::Approx(oracle::laplace(sb, l)).epsilon(1e-11));
        CHECK(laplace_two_spine(d, n, l) == doctest::Approx(oracle::laplace(ts, l)).epsilon(1e-11));
    }
}

TEST_CASE("cross-method agreement on a 50-point grid for n <= 200") {
    const auto grid = linear_grid(0.0, 5.0, 50);
    for (const auto& d : {kBinary, kGeometric}) {
        for (std::size_t n : {1, 2, 3, 10, 50, 100, 200}) {
            double sb_gap = 0.0, ts_gap = 0.0;
            for (double l : grid) {
                sb_gap = std::max(sb_gap, std::abs(laplace_sb(d, n, l, SizeBiasedMethod::product) -
                                                   laplace_sb(d, n, l, SizeBiasedMethod::derivative)));
                ts_gap = std::max(ts_gap, std::abs(laplace_two_spine(d, n, l, TwoSpineMethod::decomposition) -
                                                   laplace_two_spine(d, n, l, TwoSpineMethod::factorial_moment)));
            }
            INFO("n = " << n);
            CHECK(sb_gap <= 1e-12);
            CHECK(ts_gap <= 1e-10);
        }
    }
}

TEST_CASE("ratio bracket") {
    const auto grid = linear_grid(0.0, 5.0, 50);
    for (const auto& d : {kBinary, kGeometric}) {
        RatioBracket last{};
        for (std::size_t m = 0; m <= 200; ++m) {
            const auto b = ratio_bracket(d, m);
            for (double l : grid) {
                const double g = two_spine_ratio(d, m, l);
                CHECK(b.lower <= g + 1e-15);
                CHECK(g <= b.upper + 1e-15);
            }
            last = b;
        }
        CHECK(last.lower > 0.95);
        CHECK(last.upper < 1.05);
    }
    // Binary: both biased laws are point masses at 2, so the ratio is 1 / f^(m)(e^{-lambda}).
    CHECK(two_spine_ratio(kBinary, 4, 0.7) == doctest::Approx(1.0 / laplace_Z(kBinary, 4, 0.7)).epsilon(1e-14));
}

TEST_CASE("second factorial moment") {
    CHECK(second_factorial_moment(kBinary, 2) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(second_factorial_moment(kGeometric, 0) == 0.0);
    CHECK(second_factorial_moment(kGeometric, 5) == doctest::Approx(10.0).epsilon(1e-12));
    const auto law = oracle::population_law(mu_of(kBinary), 2);
    double m = 0.0;
    for (std::size_t k = 0; k < law.size(); ++k) m += k * (k - 1.0) * law[k];
    CHECK(m == doctest::Approx(2.0).epsilon(1e-15));
    for (const auto& d : {kBinary, kGeometric})
        for (std::size_t n = 1; n <= 1000; ++n)
            CHECK(std::abs(second_factorial_moment(d, n) / (n * d.variance()) - 1.0) <= 1e-9);
}

TEST_CASE("iterated derivatives against central differences at 0.9") {
    for (const auto& d : {kBinary, kGeometric}) {
        for (std::size_t n : {1, 5, 20}) {
            const double s = 0.9, h = 1e-4;
            const PgfIterates it(d, s, n);
            const double fp = PgfIterates(d, s + h, n).iterate(n).value;
            const double fm = PgfIterates(d, s - h, n).iterate(n).value;
            const double f0 = it.iterate(n).value;
            CHECK(std::abs(it.iterate(n).first - (fp - fm) / (2 * h)) < 1e-6);
            CHECK(std::abs(it.iterate(n).second - (fp - 2 * f0 + fm) / (h * h)) < 1e-6);
        }
    }
}

TEST_CASE("pgf iterates") {
    const PgfIterates it(kBinary, 0.0, 3);
    CHECK(it.iterate(0).value == 0.0);
    CHECK(it.iterate(0).first == 1.0);
    CHECK(it.iterate(3).value == 0.6953125);
    CHECK(it.outer(0).value == 0.5);
}

TEST_CASE("Yaglom conditional transform") {
    CHECK(yaglom_conditional(kBinary, 10, 0.0) == 1.0);
    CHECK(std::abs(yaglom_conditional(kBinary, 10'000, 1.0) - 2.0 / 3.0) <= 0.01);
    CHECK(std::abs(yaglom_conditional(kGeometric, 10'000, 1.0) - 0.5) <= 0.01);
    for (double l : {0.5, 1.0, 2.0, 4.0}) {
        CHECK(std::abs(yaglom_conditional(kBinary, 10'000, l) - exponential_limit(kBinary, l)) <= 0.01);
        CHECK(std::abs(yaglom_conditional(kGeometric, 10'000, l) - 1.0 / (1.0 + l)) <= 0.01);
    }
    // The geometric conditional law of Z_n is geometric on {1, 2, ...} with mean n + 1.
    const double n = 50, l = 0.7, a = 1.0 / (n + 1.0), s = std::exp(-l / n);
    CHECK(yaglom_conditional(kGeometric, 50, l) == doctest::Approx(a * s / (1.0 - (1.0 - a) * s)).epsilon(1e-10));
}

TEST_CASE("transform tables are non-increasing and start at 1") {
    const auto grid = linear_grid(0.0, 10.0, 60);
    for (auto kind : {TransformKind::plain, TransformKind::size_biased, TransformKind::two_spine,
                      TransformKind::conditional, TransformKind::renormalized_size_biased,
                      TransformKind::renormalized_two_spine}) {
        for (const auto& d : {kBinary, kGeometric}) {
            const auto t = transform_table(d, 30, kind, grid);
            INFO(to_string(kind));
            CHECK(t.values.front() == doctest::Approx(1.0).epsilon(1e-14));
            for (std::size_t i = 1; i < t.values.size(); ++i) CHECK(t.values[i] <= t.values[i - 1] + 1e-15);
        }
    }
    CHECK_THROWS_AS(transform_table(kBinary, 3, TransformKind::plain, std::vector<double>{-1.0}), DomainError);
}

TEST_CASE("renormalized add-on identity") {
    const auto grid = linear_grid(0.0, 10.0, 41);
    for (const auto& d : {kBinary, kGeometric}) {
        for (std::size_t n : {1, 10, 100}) {
            const auto t = renormalized_add_on_table(d, n, grid);
            CHECK(t.max_abs_gap() < 1e-10);
        }
    }
}

TEST_CASE("linear grid") {
    CHECK(linear_grid(0.0, 1.0, 1) == std::vector<double>{0.0});
    const auto g = linear_grid(0.0, 1.0, 5);
    CHECK(g.size() == 5);
    CHECK(g.back() == 1.0);
    CHECK(g[2] == 0.5);
}

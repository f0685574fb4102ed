// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "twospine/analysis.hpp"
#include "twospine/exact.hpp"
#include "twospine/sampler.hpp"
#include "twospine/tree.hpp"

using namespace twospine;

namespace {

struct Outcome {
    bool passed = true;
    std::string summary;
};

struct Criterion {
    int id;
    std::string title;
    double budget_seconds;
    std::function<Outcome()> run;
};

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

void require(Outcome& o, bool ok, const std::string& what) {
    if (!ok) {
        o.passed = false;
        std::printf("    failed: %s\n", what.c_str());
    }
}

const OffspringDistribution kBinary = binary_distribution();
const OffspringDistribution kGeometric = geometric_distribution();

Outcome change_of_measure() {
    Outcome o;
    std::mt19937_64 rng(20240101);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    double worst = 0.0;
    for (std::size_t n = 1; n <= 3; ++n) {
        const auto trees = enumerate_trees(n, support_of(kBinary));
        for (int trial = 0; trial < 20; ++trial) {
            std::map<std::vector<std::uint64_t>, double> table;
            for (const auto& t : trees) {
                const auto z = t.populations();
                table.emplace(std::vector<std::uint64_t>(z.begin() + 1, z.end()), coef(rng));
            }
            const PathFunctional g = [&](std::span<const std::uint64_t> z) {
                return table.at(std::vector<std::uint64_t>(z.begin(), z.end()));
            };
            for (int order : {1, 2}) worst = std::max(worst, verify_change_of_measure(kBinary, n, g, order).gap);
        }
    }
    require(o, worst <= 1e-10, "max gap " + num(worst) + " > 1e-10");

    const Tree full({{2}, {2, 2}});
    const Tree pair_left({{2}, {2, 0}});
    const Tree pair_right({{2}, {0, 2}});
    const double w_full = biased_weight(full, kBinary, 2, 2);
    const double w_left = biased_weight(pair_left, kBinary, 2, 2);
    const double w_right = biased_weight(pair_right, kBinary, 2, 2);
    require(o, std::abs(w_full - 0.75) <= 1e-15, "G''_2(full tree) = " + num(w_full));
    require(o, std::abs(w_left - 0.125) <= 1e-15 && std::abs(w_right - 0.125) <= 1e-15,
            "G''_2(single pair) = " + num(w_left) + ", " + num(w_right));
    o.summary = "max |lhs-rhs| " + num(worst) + " over 120 functional checks (tol 1e-10); G''_2 full " +
                num(w_full) + ", pair " + num(w_left);
    return o;
}

Outcome second_factorial() {
    Outcome o;
    double worst = 0.0;
    for (const auto& d : {kBinary, kGeometric})
        for (std::size_t n = 1; n <= 1000; ++n)
            worst = std::max(worst, std::abs(second_factorial_moment(d, n) / (n * d.variance()) - 1.0));
    require(o, worst <= 1e-9, "relative error " + num(worst));
    o.summary = "max relative error of (f^(n))''(1) vs n sigma^2 for n<=1000: " + num(worst) + " (tol 1e-9)";
    return o;
}

Outcome kolmogorov() {
    Outcome o;
    const std::size_t top = 100'000;
    const auto p = survival_probs(kGeometric, top);
    double worst = 0.0;
    for (std::size_t n = 1; n <= top; ++n) {
        const double nd = static_cast<double>(n);
        worst = std::max(worst, std::abs(nd * p[n] - nd / (nd + 1.0)));
    }
    require(o, worst <= 1e-9, "geometric n p_n gap " + num(worst));
    const double b = kolmogorov_sequence(kBinary, top)[top];
    require(o, std::abs(b - 1.0) <= 0.01, "binary value " + num(b));
    o.summary = "geometric max |n p_n - n/(n+1)| for n<=1e5: " + num(worst) + " (tol 1e-9); binary n p_n sigma^2/2 at 1e5: " +
                std::to_string(b) + " (tol 0.01)";
    return o;
}

Outcome yaglom() {
    Outcome o;
    std::string text;
    for (const auto& [name, d] : {std::pair{"binary", kBinary}, std::pair{"geometric", kGeometric}}) {
        double gap = 0.0;
        for (double l : {0.5, 1.0, 2.0, 4.0})
            gap = std::max(gap, std::abs(yaglom_conditional(d, 10'000, l) - exponential_limit(d, l)));
        require(o, gap <= 0.01, std::string(name) + " exact gap " + num(gap));
        const auto sample = sample_conditioned(d, 2000, 100'000, MonteCarloPlan{.seed = 1});
        const auto ks = yaglom_ks_report(sample, 2000, d.variance());
        require(o, ks.passed, std::string(name) + " KS " + num(ks.value) + " > " + num(ks.threshold));
        text += std::string(name) + ": exact sup-gap " + num(gap) + ", KS D " + num(ks.value) + " (crit " +
                num(ks.threshold) + ", p " + num(ks.details.front().second) + ", " +
                std::to_string(sample.runs) + " runs); ";
    }
    o.summary = text + "survivors 1e5 at n=2000";
    return o;
}

Outcome proposition_identity() {
    Outcome o;
    const auto grid = linear_grid(0.0, 10.0, 50);
    double worst = 0.0, bracket_violation = 0.0;
    for (const auto& d : {kBinary, kGeometric}) {
        for (std::size_t n = 1; n <= 200; ++n)
            for (double l : grid)
                worst = std::max(worst, std::abs(laplace_two_spine(d, n, l, TwoSpineMethod::decomposition) -
                                                 laplace_two_spine(d, n, l, TwoSpineMethod::factorial_moment)));
        for (std::size_t m = 0; m < 200; ++m) {
            const auto b = ratio_bracket(d, m);
            for (double l : grid) {
                const double g = two_spine_ratio(d, m, l);
                bracket_violation = std::max({bracket_violation, b.lower - g, g - b.upper});
            }
        }
    }
    require(o, worst <= 1e-10, "method gap " + num(worst));
    require(o, bracket_violation <= 0.0, "bracket violated by " + num(bracket_violation));
    o.summary = "max decomposition vs factorial-moment gap " + num(worst) +
                " (tol 1e-10, n<=200, 50 lambdas); bracket violations: " + (bracket_violation <= 0.0 ? "none" : num(bracket_violation));
    return o;
}

template <typename Key>
double chi_square_p(const std::map<Key, double>& law, const std::map<Key, std::uint64_t>& hits) {
    std::vector<double> p;
    std::vector<std::uint64_t> obs;
    for (const auto& [k, w] : law) {
        p.push_back(w);
        auto it = hits.find(k);
        obs.push_back(it == hits.end() ? 0 : it->second);
    }
    for (const auto& [k, c] : hits)
        if (!law.contains(k)) return 0.0;
    return chi_square_gof(obs, p).p_value;
}

Outcome sampler_laws() {
    Outcome o;
    const std::size_t runs = 1'000'000;
    double min_p = 1.0;
    for (std::size_t n = 1; n <= 3; ++n) {
        std::map<std::vector<std::uint32_t>, double> law[3];
        for (const auto& t : enumerate_trees(n, support_of(kBinary))) {
            const auto code = t.breadth_first();
            const double w[3] = {gw_weight(t, kBinary, n), biased_weight(t, kBinary, n, 1), biased_weight(t, kBinary, n, 2)};
            for (int i = 0; i < 3; ++i)
                if (w[i] > 0.0) law[i][code] += w[i];
        }
        std::map<std::vector<std::uint32_t>, std::uint64_t> hits[3];
        std::vector<std::uint64_t> splits(n, 0);
        Rng rng = make_stream(6, n);
        for (std::size_t r = 0; r < runs; ++r) {
            ++hits[0][sample_tree(kBinary, n, rng).breadth_first()];
            ++hits[1][sample_spined(kBinary, n, rng).tree.breadth_first()];
            const auto two = sample_two_spined(kBinary, n, rng);
            ++hits[2][two.tree.breadth_first()];
            ++splits[two.split];
        }
        const char* names[3] = {"G_n", "G'_n", "G''_n"};
        for (int i = 0; i < 3; ++i) {
            const double p = chi_square_p(law[i], hits[i]);
            min_p = std::min(min_p, p);
            require(o, p > kSignificance, std::string(names[i]) + " n=" + std::to_string(n) + " p=" + num(p));
        }
        if (n > 1) {
            const double p = chi_square_gof(splits, std::vector<double>(n, 1.0 / n)).p_value;
            min_p = std::min(min_p, p);
            require(o, p > kSignificance, "K_n uniformity n=" + std::to_string(n) + " p=" + num(p));
        }
    }
    std::vector<std::uint64_t> splits(10, 0);
    Rng rng = make_stream(6, 10);
    for (std::size_t r = 0; r < runs; ++r) ++splits[sample_two_spined_path(kBinary, 10, rng).split];
    const double pk = chi_square_gof(splits, std::vector<double>(10, 0.1)).p_value;
    require(o, pk > kSignificance, "K_10 uniformity p=" + num(pk));
    min_p = std::min(min_p, pk);
    o.summary = "tree-shape chi-square for G_n, G'_n, G''_n, n<=3, 1e6 samples each, and K_n uniformity: min p " +
                num(min_p) + " (alpha 0.001)";
    return o;
}

Outcome characterization() {
    Outcome o;
    const auto e = exponential_law(1.0);
    const auto [lhs, rhs] = characterization_sides(*e, Characterization::x2, 1.0);
    require(o, std::abs(lhs - 0.125) <= 1e-15 && std::abs(rhs - 0.125) <= 1e-15,
            "x2 sides at lambda=1: " + num(lhs) + ", " + num(rhs));
    std::string text = "x2 sides at lambda=1: " + std::to_string(lhs) + " / " + std::to_string(rhs) + "; ";
    CharacterizationOptions opt;
    for (const auto& law : {exponential_law(1.0), uniform_law(0.0, 1.0), constant_law(1.0)}) {
        const bool expect = law->name().rfind("exponential", 0) == 0;
        for (auto c : {Characterization::x2, Characterization::lyons, Characterization::geiger}) {
            const auto r = check_characterization(*law, c, opt);
            require(o, r.empirical.passed == expect,
                    law->name() + " " + to_string(c) + " KS " + num(r.empirical.value) + " vs " +
                        num(r.empirical.threshold));
            if (expect) require(o, r.analytic.passed, law->name() + " " + to_string(c) + " analytic gap " + num(r.analytic.value));
        }
    }
    text += "empirical KS (1e6) passes for exponential, fails for uniform and constant on all three equations";
    o.summary = text;
    return o;
}

Outcome lemma_bound() {
    Outcome o;
    struct Case {
        std::string name;
        LaplacePair x0, x1;
        double a;
    };
    const auto e1 = exponential_law(1.0);
    const auto c1 = constant_law(1.0);
    const auto g21 = gamma_law(2.0, 0.5);
    const auto u02 = uniform_law(0.0, 2.0);
    const auto g3 = gamma_law(3.0, 1.0 / 3.0);
    const auto g_half = gamma_law(2.0, 0.5);
    const auto g_one = gamma_law(2.0, 1.0);
    std::vector<Case> cases{
        {"exp vs exp", laplace_pair(*e1), laplace_pair(*e1), 1.0},
        {"exp vs const", laplace_pair(*e1), laplace_pair(*c1), 1.0},
        {"exp vs gamma(2,1/2)", laplace_pair(*e1), laplace_pair(*g21), 1.0},
        {"uniform(0,2) vs const", laplace_pair(*u02), laplace_pair(*c1), 1.0},
        {"uniform(0,2) vs exp", laplace_pair(*u02), laplace_pair(*e1), 1.0},
        {"gamma(3,1/3) vs const", laplace_pair(*g3), laplace_pair(*c1), 1.0},
        {"binary n=50 vs poisson n=50", renormalized_size_biased_pair(kBinary, 50),
         renormalized_size_biased_pair(poisson_distribution(), 50), 1.0},
    };
    for (std::size_t n : {1, 10, 100, 1000}) {
        cases.push_back({"binary n=" + std::to_string(n) + " vs gamma(2,1/2)", renormalized_size_biased_pair(kBinary, n),
                         laplace_pair(*g_half), 1.0});
        cases.push_back({"geometric n=" + std::to_string(n) + " vs gamma(2,1)", renormalized_size_biased_pair(kGeometric, n),
                         laplace_pair(*g_one), 2.0});
    }
    double worst = -INFINITY;
    for (const auto& c : cases) {
        const auto r = transform_distance_bound(c.x0, c.x1, c.a, 10.0);
        worst = std::max(worst, r.value);
        require(o, r.passed, c.name + ": violation " + num(r.value));
    }
    o.summary = std::to_string(cases.size()) + " pairs on lambda in [0,10]: max (lhs - rhs) " + num(worst) +
                " (tol 1e-6)";
    return o;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "change of measure (binary, n<=3)", 1.0, change_of_measure},
        {2, "second factorial moment", 1.0, second_factorial},
        {3, "Kolmogorov estimate", 1.0, kolmogorov},
        {4, "Yaglom limit", 300.0, yaglom},
        {5, "two-spine decomposition identity", 10.0, proposition_identity},
        {6, "sampler laws", 120.0, sampler_laws},
        {7, "exponential characterization", 60.0, characterization},
        {8, "transform distance bound", 600.0, lemma_bound},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.passed = false;
            o.summary = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_budget = secs < c.budget_seconds;
        const bool ok = o.passed && in_budget;
        failures += !ok;
        std::printf("%s criterion %d: %s | %s | %.2f s (budget %.0f s)%s\n", ok ? "PASS" : "FAIL", c.id,
                    c.title.c_str(), o.summary.c_str(), secs, c.budget_seconds,
                    in_budget ? "" : " OVER BUDGET");
        std::fflush(stdout);
    }
    std::printf("%s: %d of %zu criteria passed\n", failures == 0 ? "ALL PASS" : "FAILURES",
                static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}

#include "twospine/tree.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "twospine/error.hpp"
#include "twospine/numeric.hpp"

namespace twospine {

Particle Particle::parent() const {
    if (label.empty()) throw DomainError("the root has no parent");
    return Particle{{label.begin(), label.end() - 1}};
}

std::string Particle::to_string() const {
    if (label.empty()) return "root";
    std::string s;
    for (std::size_t i = 0; i < label.size(); ++i) {
        if (i) s += '.';
        s += std::to_string(label[i]);
    }
    return s;
}

namespace {

std::uint64_t level_sum(const std::vector<std::uint32_t>& level) {
    return std::accumulate(level.begin(), level.end(), std::uint64_t{0});
}

}  // namespace

Tree::Tree(std::vector<std::vector<std::uint32_t>> levels) : levels_(std::move(levels)) {
    std::uint64_t expected = 1;
    for (std::size_t m = 0; m < levels_.size(); ++m) {
        if (levels_[m].size() != expected)
            throw DomainError("generation " + std::to_string(m) + " has " +
                              std::to_string(levels_[m].size()) + " particles, expected " +
                              std::to_string(expected));
        expected = level_sum(levels_[m]);
    }
}

Tree Tree::from_breadth_first(std::span<const std::uint32_t> counts, std::size_t generations) {
    std::vector<std::vector<std::uint32_t>> levels;
    levels.reserve(generations);
    std::size_t pos = 0;
    std::uint64_t width = 1;
    for (std::size_t m = 0; m < generations; ++m) {
        if (counts.size() - pos < width)
            throw DomainError("breadth-first sequence too short for " + std::to_string(generations) +
                              " generations");
        levels.emplace_back(counts.begin() + static_cast<std::ptrdiff_t>(pos),
                            counts.begin() + static_cast<std::ptrdiff_t>(pos + width));
        pos += width;
        width = level_sum(levels.back());
    }
    if (pos != counts.size()) throw DomainError("breadth-first sequence has trailing entries");
    return Tree(std::move(levels));
}

std::size_t Tree::height() const noexcept {
    std::size_t h = 0;
    for (std::size_t m = 0; m < levels_.size(); ++m) {
        if (level_sum(levels_[m]) == 0) break;
        h = m + 1;
    }
    return h;
}

std::uint64_t Tree::population(std::size_t m) const {
    if (m == 0) return 1;
    if (m > levels_.size()) throw DomainError("generation beyond the tree's record");
    return level_sum(levels_[m - 1]);
}

std::vector<std::uint64_t> Tree::populations() const {
    std::vector<std::uint64_t> x{1};
    for (const auto& level : levels_) x.push_back(level_sum(level));
    return x;
}

std::size_t Tree::total_particles() const {
    std::size_t total = 0;
    for (std::uint64_t x : populations()) total += x;
    return total;
}

std::size_t Tree::first_child_index(std::size_t m, std::size_t index) const {
    const auto& level = levels_.at(m);
    if (index >= level.size()) throw DomainError("particle index out of range");
    return std::accumulate(level.begin(), level.begin() + static_cast<std::ptrdiff_t>(index),
                           std::size_t{0});
}

std::size_t Tree::parent_index(std::size_t m, std::size_t index) const {
    if (m == 0) throw DomainError("the root has no parent");
    const auto& level = levels_.at(m - 1);
    std::size_t seen = 0;
    for (std::size_t p = 0; p < level.size(); ++p) {
        seen += level[p];
        if (index < seen) return p;
    }
    throw DomainError("particle index out of range");
}

Particle Tree::particle(std::size_t m, std::size_t index) const {
    if (index >= population(m)) throw DomainError("particle index out of range");
    Particle u;
    u.label.resize(m);
    for (std::size_t g = m; g > 0; --g) {
        const std::size_t p = parent_index(g, index);
        u.label[g - 1] = static_cast<std::uint32_t>(index - first_child_index(g - 1, p) + 1);
        index = p;
    }
    return u;
}

std::optional<std::size_t> Tree::index_of(const Particle& u) const {
    if (u.generation() > levels_.size()) return std::nullopt;
    std::size_t idx = 0;
    for (std::size_t m = 0; m < u.generation(); ++m) {
        const std::uint32_t c = u.label[m];
        if (c == 0 || c > levels_[m][idx]) return std::nullopt;
        idx = first_child_index(m, idx) + (c - 1);
    }
    return idx;
}

std::uint32_t Tree::child_count(const Particle& u) const {
    const auto idx = index_of(u);
    if (!idx) throw DomainError("particle " + u.to_string() + " is not in the tree");
    if (u.generation() == levels_.size()) return 0;
    return levels_[u.generation()][*idx];
}

std::vector<Particle> Tree::particles() const {
    std::vector<Particle> all{Particle{}};
    std::size_t begin = 0;
    for (const auto& level : levels_) {
        const std::size_t end = all.size();
        for (std::size_t i = begin; i < end; ++i) {
            for (std::uint32_t c = 1; c <= level[i - begin]; ++c) {
                Particle child = all[i];
                child.label.push_back(c);
                all.push_back(std::move(child));
            }
        }
        begin = end;
    }
    return all;
}

std::vector<std::uint32_t> Tree::breadth_first() const {
    std::vector<std::uint32_t> out;
    for (const auto& level : levels_) out.insert(out.end(), level.begin(), level.end());
    return out;
}

std::vector<SpineIndices> enumerate_spines(const Tree& t) {
    const std::size_t n = t.generations();
    std::vector<SpineIndices> spines;
    SpineIndices path{0};
    // Explicit depth-first walk; does not use the population counts.
    auto walk = [&](auto&& self, std::size_t m, std::size_t idx) -> void {
        if (m == n) {
            spines.push_back(path);
            return;
        }
        const std::size_t first = t.first_child_index(m, idx);
        for (std::uint32_t c = 0; c < t.levels()[m][idx]; ++c) {
            path.push_back(first + c);
            self(self, m + 1, first + c);
            path.pop_back();
        }
    };
    walk(walk, 0, 0);
    return spines;
}

std::uint64_t count_spines(const Tree& t, std::size_t n, bool pairs) {
    if (n != t.generations()) {
        if (n > t.generations()) return 0;
        std::vector<std::vector<std::uint32_t>> head(t.levels().begin(),
                                                     t.levels().begin() + static_cast<std::ptrdiff_t>(n));
        return count_spines(Tree(std::move(head)), n, pairs);
    }
    const auto spines = enumerate_spines(t);
    if (!pairs) return spines.size();
    std::uint64_t count = 0;
    for (std::size_t i = 0; i < spines.size(); ++i)
        for (std::size_t j = 0; j < spines.size(); ++j)
            if (spines[i] != spines[j]) ++count;
    return count;
}

double count_trees(std::size_t n, std::span<const std::uint32_t> support) {
    double c = 1.0;
    for (std::size_t h = 0; h < n; ++h) {
        double next = 0.0;
        for (std::uint32_t k : support) next += std::pow(c, static_cast<double>(k));
        c = next;
    }
    return c;
}

std::vector<Tree> enumerate_trees(std::size_t n, std::span<const std::uint32_t> support, double cap) {
    if (support.empty()) throw DomainError("empty child-count support");
    std::vector<std::uint32_t> sorted(support.begin(), support.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    const double total = count_trees(n, sorted);
    if (total > cap)
        throw CapacityError("enumeration of " + std::to_string(total) + " trees exceeds the cap", cap);

    std::vector<Tree> out;
    out.reserve(static_cast<std::size_t>(total));
    std::vector<std::vector<std::uint32_t>> levels;
    auto extend = [&](auto&& self, std::uint64_t width) -> void {
        if (levels.size() == n) {
            out.emplace_back(levels);
            return;
        }
        std::vector<std::size_t> digit(width, 0);
        std::vector<std::uint32_t> level(width, sorted[0]);
        while (true) {
            levels.push_back(level);
            self(self, std::accumulate(level.begin(), level.end(), std::uint64_t{0}));
            levels.pop_back();
            // Odometer over the support, rightmost position fastest.
            std::size_t pos = width;
            while (pos > 0) {
                --pos;
                if (++digit[pos] < sorted.size()) {
                    level[pos] = sorted[digit[pos]];
                    break;
                }
                digit[pos] = 0;
                level[pos] = sorted[0];
                if (pos == 0) return;
            }
            if (width == 0) return;
        }
    };
    extend(extend, 1);
    return out;
}

std::vector<Tree> enumerate_trees(std::size_t n, std::uint32_t max_children, double cap) {
    std::vector<std::uint32_t> support(max_children + 1);
    std::iota(support.begin(), support.end(), 0u);
    return enumerate_trees(n, support, cap);
}

std::vector<std::uint32_t> support_of(const OffspringDistribution& d) {
    std::vector<std::uint32_t> s;
    for (std::size_t k = 0; k <= d.max_support(); ++k)
        if (d.pmf(k) > 0.0) s.push_back(static_cast<std::uint32_t>(k));
    return s;
}

double gw_weight(const Tree& t, const OffspringDistribution& d, std::size_t n) {
    if (t.generations() != n)
        throw DomainError("tree records " + std::to_string(t.generations()) +
                          " generations, weight requested for " + std::to_string(n));
    double w = 1.0;
    for (const auto& level : t.levels())
        for (std::uint32_t l : level) w *= d.pmf(l);
    return w;
}

double biased_weight(const Tree& t, const OffspringDistribution& d, std::size_t n, int order) {
    const double x = static_cast<double>(t.population(n));
    switch (order) {
        case 1: return x * gw_weight(t, d, n);
        case 2:
            if (n == 0) throw DomainError("the two-spine measure needs n >= 1");
            if (!(d.variance() > 0.0)) throw DegenerateVariance("two-spine measure needs sigma^2 > 0");
            return x * (x - 1.0) / (static_cast<double>(n) * d.variance()) * gw_weight(t, d, n);
        default: throw DomainError("bias order must be 1 or 2");
    }
}

ChangeOfMeasure verify_change_of_measure(const OffspringDistribution& d, std::size_t n,
                                         const PathFunctional& g, int order, double cap) {
    if (order != 1 && order != 2) throw DomainError("bias order must be 1 or 2");
    if (order == 2 && n == 0) throw DomainError("the two-spine measure needs n >= 1");
    const auto trees = enumerate_trees(n, support_of(d), cap);
    CompensatedSum lhs, num, den;
    for (const Tree& t : trees) {
        const auto z = t.populations();
        const std::span<const std::uint64_t> path(z.begin() + 1, z.end());
        const double gv = g(path);
        const double x = static_cast<double>(z[n]);
        const double w = order == 1 ? x : x * (x - 1.0);
        const double gn = gw_weight(t, d, n);
        lhs.add(biased_weight(t, d, n, order) * gv);
        num.add(gn * w * gv);
        den.add(gn * w);
    }
    ChangeOfMeasure r;
    r.lhs = lhs.value();
    r.rhs = num.value() / den.value();
    r.gap = std::abs(r.lhs - r.rhs);
    return r;
}

MeasureReport measure_report(const OffspringDistribution& d, std::size_t n, double cap) {
    if (n == 0) throw DomainError("measure report needs n >= 1");
    const auto trees = enumerate_trees(n, support_of(d), cap);
    MeasureReport report;
    report.n = n;
    report.rows.reserve(trees.size());
    CompensatedSum g0, g1, g2;
    for (std::size_t i = 0; i < trees.size(); ++i) {
        MeasureRow row;
        row.tree_id = i;
        row.x_n = trees[i].population(n);
        row.gw = gw_weight(trees[i], d, n);
        row.size_biased = biased_weight(trees[i], d, n, 1);
        row.two_spine = biased_weight(trees[i], d, n, 2);
        g0.add(row.gw);
        g1.add(row.size_biased);
        g2.add(row.two_spine);
        report.rows.push_back(row);
    }
    report.total_gw = g0.value();
    report.total_size_biased = g1.value();
    report.total_two_spine = g2.value();
    return report;
}

double two_spine_consistency_gap(const OffspringDistribution& d, std::size_t n, double cap) {
    if (n == 0) throw DomainError("the two-spine measure needs n >= 1");
    const auto support = support_of(d);
    std::map<std::vector<std::uint32_t>, double> restricted;
    for (const Tree& t : enumerate_trees(n + 1, support, cap)) {
        std::vector<std::vector<std::uint32_t>> head(t.levels().begin(), t.levels().end() - 1);
        restricted[Tree(std::move(head)).breadth_first()] += biased_weight(t, d, n + 1, 2);
    }
    double gap = 0.0;
    for (const Tree& t : enumerate_trees(n, support, cap))
        gap = std::max(gap, std::abs(restricted[t.breadth_first()] - biased_weight(t, d, n, 2)));
    return gap;
}

}  // namespace twospine

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twospine/offspring.hpp"

namespace twospine {

// Ulam-Harris label: child positions (1-based) from the root. Empty = root.
struct Particle {
    std::vector<std::uint32_t> label;

    std::size_t generation() const noexcept { return label.size(); }
    Particle parent() const;  // the root has no parent: DomainError
    bool operator==(const Particle&) const = default;
    std::string to_string() const;
};

/// A tree of height at most n, stored breadth first.
///
/// levels()[m] lists the child counts l_u of the particles of generation m
/// (m = 0 .. n-1) in left-to-right order; generation n particles are leaves
/// of the record. Labels are rebuilt on demand from prefix sums.
class Tree {
public:
    // Single root, no recorded generations.
    Tree() = default;

    // Validates that levels[0] has one entry and each level has exactly as
    // many entries as the previous level has children. Throws DomainError.
    explicit Tree(std::vector<std::vector<std::uint32_t>> levels);

    static Tree from_breadth_first(std::span<const std::uint32_t> counts, std::size_t generations);

    std::size_t generations() const noexcept { return levels_.size(); }
    // Largest m with X_m > 0, i.e. |t|.
    std::size_t height() const noexcept;

    const std::vector<std::vector<std::uint32_t>>& levels() const noexcept { return levels_; }
    std::span<const std::uint32_t> child_counts(std::size_t m) const { return levels_.at(m); }

    // X_m(t) for m = 0 .. generations().
    std::uint64_t population(std::size_t m) const;
    std::vector<std::uint64_t> populations() const;

    std::size_t total_particles() const;

    Particle particle(std::size_t m, std::size_t index) const;
    std::optional<std::size_t> index_of(const Particle& u) const;
    std::size_t parent_index(std::size_t m, std::size_t index) const;
    // Index (in generation m+1) of the first child of particle (m, index).
    std::size_t first_child_index(std::size_t m, std::size_t index) const;
    // l_u(t); zero for generation-n particles.
    std::uint32_t child_count(const Particle& u) const;
    bool contains(const Particle& u) const { return index_of(u).has_value(); }

    std::vector<Particle> particles() const;
    std::vector<std::uint32_t> breadth_first() const;

    bool operator==(const Tree&) const = default;

private:
    std::vector<std::vector<std::uint32_t>> levels_;
};

// A spine as the index of its particle in each generation 0 .. n.
using SpineIndices = std::vector<std::size_t>;

// Every root-to-generation-n path of t, by explicit depth-first search.
std::vector<SpineIndices> enumerate_spines(const Tree& t);

// Number of spines (pairs = false) or ordered pairs of distinct spines
// (pairs = true) of t at height n, counted from enumerate_spines.
std::uint64_t count_spines(const Tree& t, std::size_t n, bool pairs);

inline constexpr double kDefaultEnumerationCap = 1e7;

// Number of trees with n recorded generations and child counts in support.
double count_trees(std::size_t n, std::span<const std::uint32_t> support);

// All trees with n generations whose child counts lie in `support`
// (sorted, distinct). CapacityError when the count exceeds `cap`.
std::vector<Tree> enumerate_trees(std::size_t n, std::span<const std::uint32_t> support,
                                  double cap = kDefaultEnumerationCap);
// Support {0, ..., max_children}.
std::vector<Tree> enumerate_trees(std::size_t n, std::uint32_t max_children,
                                  double cap = kDefaultEnumerationCap);

// Child counts with positive probability under d.
std::vector<std::uint32_t> support_of(const OffspringDistribution& d);

// G_n(t) = prod over |u| < n of mu(l_u). DomainError if t does not record
// exactly n generations.
double gw_weight(const Tree& t, const OffspringDistribution& d, std::size_t n);

// order 1: X_n(t) G_n(t); order 2: X_n(X_n - 1) G_n(t) / (n sigma^2).
double biased_weight(const Tree& t, const OffspringDistribution& d, std::size_t n, int order);

// Bounded functional on the population path (Z_1, ..., Z_n).
using PathFunctional = std::function<double(std::span<const std::uint64_t>)>;

struct ChangeOfMeasure {
    double lhs = 0.0;  // expectation under the biased tree measure
    double rhs = 0.0;  // w(Z_n)-weighted expectation under G_n
    double gap = 0.0;
};

// Checks E[g(biased paths)] = E[w(Z_n) g(Z)] / E[w(Z_n)] with w(x) = x
// (order 1) or x(x - 1) (order 2) by summing over every tree in the support
// of d.
ChangeOfMeasure verify_change_of_measure(const OffspringDistribution& d, std::size_t n,
                                         const PathFunctional& g, int order,
                                         double cap = kDefaultEnumerationCap);

struct MeasureRow {
    std::size_t tree_id = 0;
    std::uint64_t x_n = 0;
    double gw = 0.0;
    double size_biased = 0.0;
    double two_spine = 0.0;
};

struct MeasureReport {
    std::size_t n = 0;
    std::vector<MeasureRow> rows;
    double total_gw = 0.0;
    double total_size_biased = 0.0;
    double total_two_spine = 0.0;
};

// Per-tree weights of G_n, G'_n and G''_n over the enumeration (n >= 1).
MeasureReport measure_report(const OffspringDistribution& d, std::size_t n,
                             double cap = kDefaultEnumerationCap);

// max over trees t with n generations of |(G''_{n+1} restricted to the first
// n generations)(t) - G''_n(t)|. Nonzero: the family is not consistent.
double two_spine_consistency_gap(const OffspringDistribution& d, std::size_t n,
                                 double cap = kDefaultEnumerationCap);

}  // namespace twospine

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "twospine/offspring.hpp"
#include "twospine/random.hpp"
#include "twospine/tree.hpp"

namespace twospine {

inline constexpr double kDefaultPopulationCap = 1e9;

// Generation sizes (Z_0, ..., Z_n) of one sampled tree.
struct PopulationPath {
    std::vector<std::uint64_t> sizes{1};

    std::size_t n() const noexcept { return sizes.size() - 1; }
    std::uint64_t final_size() const noexcept { return sizes.back(); }
    bool survived() const noexcept { return sizes.back() > 0; }
};

struct SpinedTree {
    Tree tree;
    SpineIndices spine;  // index of the marked particle in generations 0 .. n
};

/// Height-n tree with two marked lines. Both spines run from the root to
/// generation n; they share generations 0 .. split and differ from split + 1.
struct TwoSpinedTree {
    Tree tree;
    SpineIndices spine_long;
    SpineIndices spine_short;
    std::size_t split = 0;  // K_n
};

struct TwoSpinePath {
    PopulationPath path;
    std::size_t split = 0;
};

// Generation-n populations grouped by nearest marked ancestor.
// long_bushes[k]: descendants of marked particle k of the long spine that do
// not descend from the short spine (k = 0 .. n). short_bushes[k]: the same
// for the short spine, zero for k <= split. One-spine trees leave
// short_bushes all zero.
struct BushDecomposition {
    std::vector<std::uint64_t> long_bushes;
    std::vector<std::uint64_t> short_bushes;

    std::uint64_t total() const noexcept;
};

// Alias tables for the exact law of the sum of z offspring draws,
// z = 1 .. max_count, built by convolution. Immutable once built.
class SmallSumTables {
public:
    SmallSumTables(const OffspringDistribution& d, std::size_t max_count);

    std::size_t max_count() const noexcept { return tables_.size(); }
    std::uint64_t draw(std::uint64_t count, Rng& rng) const;

private:
    struct Alias {
        std::vector<double> keep;
        std::vector<std::uint32_t> other;
    };
    std::vector<Alias> tables_;
};

// Plain-process simulator for long runs: small generations are one alias
// draw, large ones one draw of the family's sum law. Copies share the
// tables, so copy one instance per worker. final_size() stops as soon as the
// population dies out.
class PathSimulator {
public:
    explicit PathSimulator(const OffspringDistribution& d, double cap = kDefaultPopulationCap);

    PopulationPath path(std::size_t n, Rng& rng);
    std::uint64_t final_size(std::size_t n, Rng& rng);

private:
    std::uint64_t step(std::uint64_t z, Rng& rng);

    OffspringSampler plain_;
    std::shared_ptr<const SmallSumTables> small_;
    double cap_;
};

// Plain mu-Galton-Watson tree with n generations.
Tree sample_tree(const OffspringDistribution& d, std::size_t n, Rng& rng,
                 double cap = kDefaultPopulationCap);

// Z_0..Z_n only; large generations are drawn as one sum.
PopulationPath sample_path(const OffspringDistribution& d, std::size_t n, Rng& rng,
                           double cap = kDefaultPopulationCap);

// Size-biased tree: the marked particle has L' children, one picked
// uniformly as the next marked particle.
SpinedTree sample_spined(const OffspringDistribution& d, std::size_t n, Rng& rng,
                         double cap = kDefaultPopulationCap);
PopulationPath sample_spined_path(const OffspringDistribution& d, std::size_t n, Rng& rng,
                                  double cap = kDefaultPopulationCap);

// k(k-1)-biased tree of height n >= 1: K_n uniform on {0..n-1}; the marked
// particle at K_n has L'' children and a uniformly random ordered pair of
// distinct children continue the two spines.
TwoSpinedTree sample_two_spined(const OffspringDistribution& d, std::size_t n, Rng& rng,
                                double cap = kDefaultPopulationCap);
TwoSpinePath sample_two_spined_path(const OffspringDistribution& d, std::size_t n, Rng& rng,
                                    double cap = kDefaultPopulationCap);

BushDecomposition decompose_bushes(const SpinedTree& t);
BushDecomposition decompose_bushes(const TwoSpinedTree& t);

struct ConditionedSample {
    std::vector<std::uint64_t> final_sizes;  // Z_n of surviving runs, run order
    std::size_t runs = 0;                    // runs simulated up to the last kept survivor
    double acceptance_rate() const noexcept {
        return runs == 0 ? 0.0 : static_cast<double>(final_sizes.size()) / static_cast<double>(runs);
    }
};

// Z_n conditioned on Z_n > 0 by rejection: simulate plain paths in
// seed-determined chunks until `survivors` runs survive. The kept set is the
// first `survivors` survivors in run order.
ConditionedSample sample_conditioned(const OffspringDistribution& d, std::size_t n,
                                     std::size_t survivors, const MonteCarloPlan& plan,
                                     double cap = kDefaultPopulationCap);

}  // namespace twospine

#include "twospine/sampler.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "twospine/error.hpp"

namespace twospine {

namespace {

void require_unit_mean(const OffspringDistribution& d) {
    if (std::abs(d.mean() - 1.0) > kCriticalTolerance)
        throw InvalidDistribution("sampler needs a mean-one offspring law, mean is " +
                                  std::to_string(d.mean()));
}

void check_cap(double count, double cap) {
    if (count > cap) throw CapacityError("population exceeds the particle cap", cap);
}

// Ordered pair of distinct positions in {0, ..., l-1}, uniformly.
std::pair<std::size_t, std::size_t> distinct_pair(Rng& rng, std::size_t l) {
    const std::size_t a = uniform_index(rng, l);
    std::size_t b = uniform_index(rng, l - 1);
    if (b >= a) ++b;
    return {a, b};
}

}  // namespace

std::uint64_t BushDecomposition::total() const noexcept {
    std::uint64_t t = 0;
    for (auto x : long_bushes) t += x;
    for (auto x : short_bushes) t += x;
    return t;
}

Tree sample_tree(const OffspringDistribution& d, std::size_t n, Rng& rng, double cap) {
    require_unit_mean(d);
    OffspringSampler plain(d, BiasKind::plain);
    std::vector<std::vector<std::uint32_t>> levels;
    std::uint64_t width = 1;
    double total = 1.0;
    for (std::size_t m = 0; m < n; ++m) {
        std::vector<std::uint32_t> level(width);
        std::uint64_t next = 0;
        for (auto& l : level) {
            l = static_cast<std::uint32_t>(plain(rng));
            next += l;
        }
        levels.push_back(std::move(level));
        width = next;
        total += static_cast<double>(next);
        check_cap(total, cap);
    }
    return Tree(std::move(levels));
}

SmallSumTables::SmallSumTables(const OffspringDistribution& d, std::size_t max_count) {
    const auto mu = d.pmf();
    std::vector<double> law{1.0};
    tables_.reserve(max_count);
    for (std::size_t z = 1; z <= max_count; ++z) {
        std::vector<double> next(law.size() + mu.size() - 1, 0.0);
        for (std::size_t i = 0; i < law.size(); ++i)
            for (std::size_t k = 0; k < mu.size(); ++k) next[i + k] += law[i] * mu[k];
        law = std::move(next);

        // Vose's alias method.
        const std::size_t size = law.size();
        double total = 0.0;
        for (double p : law) total += p;
        Alias a{std::vector<double>(size), std::vector<std::uint32_t>(size)};
        std::vector<double> scaled(size);
        std::vector<std::uint32_t> small, large;
        for (std::size_t i = 0; i < size; ++i) {
            scaled[i] = law[i] / total * static_cast<double>(size);
            (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
        }
        while (!small.empty() && !large.empty()) {
            const auto s = small.back(), l = large.back();
            small.pop_back();
            a.keep[s] = scaled[s];
            a.other[s] = l;
            scaled[l] -= 1.0 - scaled[s];
            if (scaled[l] < 1.0) {
                large.pop_back();
                small.push_back(l);
            }
        }
        for (auto i : large) a.keep[i] = 1.0, a.other[i] = i;
        for (auto i : small) a.keep[i] = 1.0, a.other[i] = i;
        tables_.push_back(std::move(a));
    }
}

std::uint64_t SmallSumTables::draw(std::uint64_t count, Rng& rng) const {
    const Alias& a = tables_[count - 1];
    const std::size_t i = uniform_index(rng, a.keep.size());
    return uniform01(rng) < a.keep[i] ? i : a.other[i];
}

PathSimulator::PathSimulator(const OffspringDistribution& d, double cap)
    : plain_((require_unit_mean(d), d), BiasKind::plain),
      small_(std::make_shared<SmallSumTables>(d, 32)),
      cap_(cap) {}

std::uint64_t PathSimulator::step(std::uint64_t z, Rng& rng) {
    if (z == 0) return 0;
    const std::uint64_t next = z <= small_->max_count() ? small_->draw(z, rng) : plain_.sum(z, rng);
    check_cap(static_cast<double>(next), cap_);
    return next;
}

PopulationPath PathSimulator::path(std::size_t n, Rng& rng) {
    PopulationPath p;
    p.sizes.reserve(n + 1);
    std::uint64_t z = 1;
    for (std::size_t m = 0; m < n; ++m) {
        z = step(z, rng);
        p.sizes.push_back(z);
    }
    return p;
}

std::uint64_t PathSimulator::final_size(std::size_t n, Rng& rng) {
    std::uint64_t z = 1;
    for (std::size_t m = 0; m < n && z > 0; ++m) z = step(z, rng);
    return z;
}

PopulationPath sample_path(const OffspringDistribution& d, std::size_t n, Rng& rng, double cap) {
    require_unit_mean(d);
    OffspringSampler plain(d, BiasKind::plain);
    PopulationPath p;
    p.sizes.reserve(n + 1);
    std::uint64_t z = 1;
    for (std::size_t m = 0; m < n; ++m) {
        z = z == 0 ? 0 : plain.sum(z, rng);
        check_cap(static_cast<double>(z), cap);
        p.sizes.push_back(z);
    }
    return p;
}

SpinedTree sample_spined(const OffspringDistribution& d, std::size_t n, Rng& rng, double cap) {
    require_unit_mean(d);
    OffspringSampler plain(d, BiasKind::plain);
    OffspringSampler sized(d, BiasKind::first_order);
    std::vector<std::vector<std::uint32_t>> levels;
    SpineIndices spine{0};
    std::uint64_t width = 1;
    double total = 1.0;
    for (std::size_t m = 0; m < n; ++m) {
        std::vector<std::uint32_t> level(width);
        std::uint64_t next = 0;
        std::size_t spine_next = 0;
        for (std::size_t i = 0; i < width; ++i) {
            if (i == spine[m]) {
                level[i] = static_cast<std::uint32_t>(sized(rng));
                spine_next = next + uniform_index(rng, level[i]);
            } else {
                level[i] = static_cast<std::uint32_t>(plain(rng));
            }
            next += level[i];
        }
        levels.push_back(std::move(level));
        spine.push_back(spine_next);
        width = next;
        total += static_cast<double>(next);
        check_cap(total, cap);
    }
    return {Tree(std::move(levels)), std::move(spine)};
}

PopulationPath sample_spined_path(const OffspringDistribution& d, std::size_t n, Rng& rng,
                                  double cap) {
    require_unit_mean(d);
    OffspringSampler plain(d, BiasKind::plain);
    OffspringSampler sized(d, BiasKind::first_order);
    PopulationPath path;
    path.sizes.reserve(n + 1);
    std::uint64_t z = 1;
    for (std::size_t m = 0; m < n; ++m) {
        z = sized(rng) + plain.sum(z - 1, rng);
        check_cap(static_cast<double>(z), cap);
        path.sizes.push_back(z);
    }
    return path;
}

namespace {

void require_two_spine(const OffspringDistribution& d, std::size_t n) {
    if (n == 0) throw DomainError("the two-spine tree needs height n >= 1");
    require_unit_mean(d);
    if (!(d.variance() > 0.0)) throw DegenerateVariance("the two-spine tree needs sigma^2 > 0");
}

}  // namespace

TwoSpinedTree sample_two_spined(const OffspringDistribution& d, std::size_t n, Rng& rng,
                                double cap) {
    require_two_spine(d, n);
    OffspringSampler plain(d, BiasKind::plain);
    OffspringSampler sized(d, BiasKind::first_order);
    OffspringSampler paired(d, BiasKind::second_factorial);

    TwoSpinedTree out;
    out.split = uniform_index(rng, n);
    out.spine_long = {0};
    out.spine_short = {0};
    std::vector<std::vector<std::uint32_t>> levels;
    std::uint64_t width = 1;
    double total = 1.0;
    for (std::size_t m = 0; m < n; ++m) {
        const std::size_t a = out.spine_long[m];
        const std::size_t b = out.spine_short[m];
        std::vector<std::uint32_t> level(width);
        std::uint64_t next = 0;
        std::size_t a_next = 0, b_next = 0;
        for (std::size_t i = 0; i < width; ++i) {
            if (i == a && m == out.split) {
                level[i] = static_cast<std::uint32_t>(paired(rng));
                const auto [ca, cb] = distinct_pair(rng, level[i]);
                a_next = next + ca;
                b_next = next + cb;
            } else if (i == a || i == b) {
                level[i] = static_cast<std::uint32_t>(sized(rng));
                const std::size_t c = next + uniform_index(rng, level[i]);
                if (i == a) a_next = c;
                if (i == b) b_next = c;
            } else {
                level[i] = static_cast<std::uint32_t>(plain(rng));
            }
            next += level[i];
        }
        levels.push_back(std::move(level));
        out.spine_long.push_back(a_next);
        out.spine_short.push_back(b_next);
        width = next;
        total += static_cast<double>(next);
        check_cap(total, cap);
    }
    out.tree = Tree(std::move(levels));
    return out;
}

TwoSpinePath sample_two_spined_path(const OffspringDistribution& d, std::size_t n, Rng& rng,
                                    double cap) {
    require_two_spine(d, n);
    OffspringSampler plain(d, BiasKind::plain);
    OffspringSampler sized(d, BiasKind::first_order);
    OffspringSampler paired(d, BiasKind::second_factorial);
    TwoSpinePath out;
    out.split = uniform_index(rng, n);
    out.path.sizes.reserve(n + 1);
    std::uint64_t z = 1;
    for (std::size_t m = 0; m < n; ++m) {
        if (m < out.split)
            z = sized(rng) + plain.sum(z - 1, rng);
        else if (m == out.split)
            z = paired(rng) + plain.sum(z - 1, rng);
        else
            z = sized(rng) + sized(rng) + plain.sum(z - 2, rng);
        check_cap(static_cast<double>(z), cap);
        out.path.sizes.push_back(z);
    }
    return out;
}

namespace {

// Bush tag per particle, propagated top-down: each particle inherits its
// parent's tag unless it is itself a marked particle.
struct BushTag {
    bool on_short = false;
    std::size_t generation = 0;
};

BushDecomposition decompose(const Tree& t, const SpineIndices& long_spine,
                            const SpineIndices* short_spine, std::size_t split) {
    const std::size_t n = t.generations();
    BushDecomposition out;
    out.long_bushes.assign(n + 1, 0);
    out.short_bushes.assign(n + 1, 0);
    std::vector<BushTag> tags{BushTag{false, 0}};
    for (std::size_t m = 0; m < n; ++m) {
        const auto counts = t.child_counts(m);
        std::vector<BushTag> next;
        next.reserve(static_cast<std::size_t>(t.population(m + 1)));
        for (std::size_t i = 0; i < counts.size(); ++i)
            for (std::uint32_t c = 0; c < counts[i]; ++c) next.push_back(tags[i]);
        if (!next.empty()) {
            next.at(long_spine[m + 1]) = BushTag{false, m + 1};
            if (short_spine && m + 1 > split) next.at((*short_spine)[m + 1]) = BushTag{true, m + 1};
        }
        tags = std::move(next);
    }
    for (const BushTag& tag : tags) ++(tag.on_short ? out.short_bushes : out.long_bushes)[tag.generation];
    return out;
}

}  // namespace

BushDecomposition decompose_bushes(const SpinedTree& t) {
    return decompose(t.tree, t.spine, nullptr, 0);
}

BushDecomposition decompose_bushes(const TwoSpinedTree& t) {
    return decompose(t.tree, t.spine_long, &t.spine_short, t.split);
}

ConditionedSample sample_conditioned(const OffspringDistribution& d, std::size_t n,
                                     std::size_t survivors, const MonteCarloPlan& plan, double cap) {
    require_unit_mean(d);
    struct Hit {
        std::size_t run;
        std::uint64_t z;
    };
    const std::size_t chunk = plan.chunk_size == 0 ? 1 : plan.chunk_size;
    const std::size_t batch = std::max<std::size_t>(plan.effective_workers(), 8);
    const PathSimulator prototype(d, cap);
    ConditionedSample out;
    std::size_t next_chunk = 0;
    while (out.final_sizes.size() < survivors) {
        auto hits = run_chunks<Hit>(next_chunk, batch, plan,
                                    [&](Rng& rng, std::size_t c, std::vector<Hit>& found) {
                                        PathSimulator sim = prototype;
                                        for (std::size_t r = c * chunk; r < (c + 1) * chunk; ++r) {
                                            const std::uint64_t z = sim.final_size(n, rng);
                                            if (z > 0) found.push_back({r, z});
                                        }
                                    });
        next_chunk += batch;
        for (const Hit& h : hits) {
            if (out.final_sizes.size() == survivors) break;
            out.final_sizes.push_back(h.z);
            out.runs = h.run + 1;
        }
    }
    return out;
}

}  // namespace twospine

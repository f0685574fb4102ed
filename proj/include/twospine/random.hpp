#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

namespace twospine {

using Rng = std::mt19937_64;

// Independent generator for stream `stream` of the master seed. Streams are
// keyed by chunk index (not worker index) so results do not depend on the
// number of workers.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32), 0x9e3779b9u};
    return Rng(seq);
}

// Uniform on [0,1) with 53 random bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform index in {0, ..., count-1}; count must be positive.
inline std::size_t uniform_index(Rng& rng, std::size_t count) {
    return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(count));
}

struct MonteCarloPlan {
    std::uint64_t seed = 1;
    unsigned workers = 0;  // 0: hardware concurrency
    std::size_t chunk_size = 1 << 14;

    unsigned effective_workers() const {
        unsigned w = workers != 0 ? workers : std::thread::hardware_concurrency();
        return w == 0 ? 1 : w;
    }
};

// Runs body(rng, chunk, out) for chunks first_chunk .. first_chunk+count-1,
// chunk c drawing from make_stream(seed, c). Outputs are concatenated in
// chunk order, so the result does not depend on the worker count.
template <typename T, typename Body>
std::vector<T> run_chunks(std::size_t first_chunk, std::size_t count, const MonteCarloPlan& plan,
                          Body body) {
    std::vector<std::vector<T>> parts(count);
    auto work = [&](std::size_t i) {
        Rng rng = make_stream(plan.seed, first_chunk + i);
        body(rng, first_chunk + i, parts[i]);
    };
    const std::size_t workers = std::min<std::size_t>(plan.effective_workers(), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) work(i);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < count; i += workers) work(i);
            });
        }
    }
    std::vector<T> out;
    for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

// body(rng, run_index, out) once per run; runs are grouped into chunks of
// plan.chunk_size sharing one stream.
template <typename T, typename Body>
std::vector<T> run_chunked(std::size_t runs, const MonteCarloPlan& plan, Body body) {
    const std::size_t chunk = plan.chunk_size == 0 ? 1 : plan.chunk_size;
    const std::size_t chunks = (runs + chunk - 1) / chunk;
    return run_chunks<T>(0, chunks, plan, [&](Rng& rng, std::size_t c, std::vector<T>& out) {
        const std::size_t last = std::min(runs, (c + 1) * chunk);
        for (std::size_t r = c * chunk; r < last; ++r) body(rng, r, out);
    });
}

}  // namespace twospine

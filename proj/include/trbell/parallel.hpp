#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace trbell {

// Number of worker threads to use; 0 means one per hardware thread.
inline unsigned resolve_workers(unsigned requested) {
    if (requested != 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Splits [0, trials) into fixed-size blocks, tallies each block with
// `tally_block(first, last) -> Tally`, and folds block tallies with `Tally::merge`.
// Block boundaries are independent of the worker count and merging is commutative,
// so the result is identical for any number of workers.
template <typename Tally, typename BlockFn>
Tally parallel_tally(std::uint64_t trials, unsigned workers, BlockFn tally_block) {
    constexpr std::uint64_t kBlock = 1 << 16;
    const std::uint64_t blocks = (trials + kBlock - 1) / kBlock;
    const unsigned n_workers =
        static_cast<unsigned>(std::min<std::uint64_t>(resolve_workers(workers), std::max<std::uint64_t>(blocks, 1)));

    std::vector<Tally> partial(n_workers);
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto work = [&](unsigned w) {
        try {
            for (std::uint64_t b = w; b < blocks; b += n_workers) {
                const std::uint64_t first = b * kBlock;
                const std::uint64_t last = std::min(trials, first + kBlock);
                partial[w].merge(tally_block(first, last));
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };

    if (n_workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    Tally total;
    for (const auto& p : partial) total.merge(p);
    return total;
}

}  // namespace trbell

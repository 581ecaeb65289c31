#ifndef LIPSYNC_PARALLEL_HPP
#define LIPSYNC_PARALLEL_HPP

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace lipsync {

// Runs fn(i) for i in [0, count) on up to `jobs` threads. Each index writes
// into its own result slot, so callers get identical output regardless of
// scheduling; the first exception (lowest index) is rethrown after all
// workers join.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn&& fn) {
    if (count == 0) return;
    if (jobs <= 1 || count == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }

    const std::size_t workers = std::min(jobs, count);
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    for (const auto& err : errors) {
        if (err) std::rethrow_exception(err);
    }
}

} // namespace lipsync

#endif

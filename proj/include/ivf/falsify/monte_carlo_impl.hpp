#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

namespace ivf::falsify {

template <class T>
std::vector<T> mc_map(std::size_t reps, unsigned threads, const std::function<T(std::size_t)>& f) {
    std::vector<T> out(reps);
    const unsigned workers = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(threads, reps)));
    if (workers <= 1) {
        for (std::size_t r = 0; r < reps; ++r) out[r] = f(r);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t r = next++; r < reps; r = next++) out[r] = f(r);
            } catch (...) {
                errors[w] = std::current_exception();
                next = reps;
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

} // namespace ivf::falsify

#include "inclusion_lab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace inclusion_lab {

unsigned configured_threads()
{
    unsigned n = 0;
    if (const char* env = std::getenv("INCLUSION_LAB_THREADS")) {
        try {
            n = static_cast<unsigned>(std::stoul(env));
        } catch (const std::exception&) {
            n = 0;
        }
    }
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, unsigned threads)
{
    if (n == 0) return;
    if (threads == 0) threads = configured_threads();
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));

    std::vector<std::exception_ptr> errors(n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        body(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

} // namespace inclusion_lab

#ifndef BADER_PARALLEL_HPP
#define BADER_PARALLEL_HPP

#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bader {

/**
 * Run `fn(thread_state, j)` for j in [0, n) across `threads` threads with a static schedule.
 * `make_state()` builds one scratch object per thread. The first exception thrown by any task is rethrown
 * on the calling thread once all tasks have finished.
 */
template<class MakeState, class Fn>
void parallel_for(std::size_t n, int threads, MakeState make_state, Fn fn) {
    std::exception_ptr failure;
    std::mutex lock;
    const auto total = static_cast<std::int64_t>(n);

#ifdef _OPENMP
    #pragma omp parallel num_threads(threads)
#else
    (void)threads;
#endif
    {
        auto local = make_state();
#ifdef _OPENMP
        #pragma omp for schedule(static)
#endif
        for (std::int64_t j = 0; j < total; ++j) {
            try {
                fn(local, static_cast<std::size_t>(j));
            } catch (...) {
                std::lock_guard<std::mutex> guard(lock);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    }

    if (failure) {
        std::rethrow_exception(failure);
    }
}

}

#endif

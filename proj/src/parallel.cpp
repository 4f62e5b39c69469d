// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#include "mdpano/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mdpano {

namespace {
std::atomic<int> gWorkerCount{0};
}

void setWorkerCount(int count) { gWorkerCount.store(std::max(0, count)); }

int workerCount() {
    const int n = gWorkerCount.load();
    if (n > 0) {
        return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallelFor(std::size_t begin, std::size_t end, const std::function<void(std::size_t)> &fn) {
    if (end <= begin) {
        return;
    }
    const std::size_t total = end - begin;
    const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(workerCount()), total);
    if (threads <= 1) {
        for (std::size_t i = begin; i < end; ++i) {
            fn(i);
        }
        return;
    }

    std::exception_ptr failure;
    std::mutex failureMutex;
    const std::size_t chunk = (total + threads - 1) / threads;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t lo = begin + t * chunk;
        const std::size_t hi = std::min(end, lo + chunk);
        if (lo >= hi) {
            break;
        }
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) {
                    fn(i);
                }
            } catch (...) {
                std::lock_guard lock(failureMutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        });
    }
    for (auto &th : pool) {
        th.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

ScopedWorkerCount::ScopedWorkerCount(int count) : previous_(gWorkerCount.load()) { setWorkerCount(count); }

ScopedWorkerCount::~ScopedWorkerCount() { gWorkerCount.store(previous_); }

} // namespace mdpano

// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace mdpano {

/// Number of worker threads used by parallel loops. 0 selects the hardware concurrency.
void setWorkerCount(int count);
int workerCount();

/// Runs fn(i) for i in [begin, end) split into contiguous static chunks.
/// Callers write to disjoint outputs per index; no reduction happens here, so
/// results never depend on the thread count.
void parallelFor(std::size_t begin, std::size_t end, const std::function<void(std::size_t)> &fn);

/// RAII override of the worker count, restored on scope exit.
class ScopedWorkerCount {
public:
    explicit ScopedWorkerCount(int count);
    ~ScopedWorkerCount();
    ScopedWorkerCount(const ScopedWorkerCount &) = delete;
    ScopedWorkerCount &operator=(const ScopedWorkerCount &) = delete;

private:
    int previous_;
};

} // namespace mdpano

#pragma once

// Data-parallel helpers. Each item writes its own output slot and reductions
// run in a fixed order, so results never depend on the thread count.

#include <cstddef>
#include <functional>
#include <span>

namespace bcec {

/// Worker count used when a call passes threads = 0. Defaults to the hardware
/// concurrency; set_default_threads(0) restores that.
int default_threads();
void set_default_threads(int n);

/// Runs fn(i) for i in [0, n). The first exception thrown by any item is
/// rethrown after all workers have stopped.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int threads = 0);

/// Pairwise (tree) summation in a fixed order.
double pairwise_sum(std::span<const double> v);

}  // namespace bcec

#pragma once

#include <cstddef>
#include <functional>

namespace zsreg {

// Worker count: ZSREG_THREADS when set to a positive integer, else 1.
int thread_count();

// Runs body(i) for i in [0, n). Items are split into contiguous blocks, one
// per worker; body must not share mutable state across items.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace zsreg

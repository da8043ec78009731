#pragma once

#include <functional>

namespace bglmm {

// Runs fn(0..n-1), splitting the range over `threads` workers. threads <= 1
// runs inline. Exceptions are captured and the one thrown for the lowest
// index is rethrown, so failure behaviour matches the serial loop.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace bglmm

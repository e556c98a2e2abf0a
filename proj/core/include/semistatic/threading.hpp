#ifndef SEMISTATIC_THREADING_HPP
#define SEMISTATIC_THREADING_HPP

#include <functional>

namespace semistatic {

// Worker count: SEMISTATIC_THREADS when set (>= 1), else all cores.
unsigned thread_count();

// Runs body(i) for i in [0, n) on thread_count() workers. Exceptions from
// tasks are rethrown on the calling thread (first one wins).
void parallel_for(int n, const std::function<void(int)>& body);

} // namespace semistatic

#endif

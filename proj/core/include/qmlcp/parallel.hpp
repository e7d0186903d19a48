#pragma once

#include <functional>

namespace qmlcp {

// Worker count from QMLCP_WORKERS, else the hardware concurrency (at least 1).
int default_worker_count();

// Runs body(index, worker) for index in [0, count) on up to `workers`
// threads, handing out indices in increasing order. worker is in
// [0, workers). The first exception thrown by any body is rethrown after all
// threads have stopped.
void parallel_for(int count, int workers, const std::function<void(int index, int worker)>& body);

}  // namespace qmlcp

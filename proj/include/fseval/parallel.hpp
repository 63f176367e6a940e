#pragma once

#include <functional>

namespace fseval {

// Runs body(i) for i in [0, n). workers <= 1 uses the serial reference loop;
// workers > 1 fans out with OpenMP. Each body call must write only to its own
// output slot: given that, results are identical for any worker count, which
// the test suite and the acceptance criteria check bit-exactly.
void parallel_for(int n, int workers, const std::function<void(int)>& body);

// OpenMP thread cap available to this process (1 when built without OpenMP).
int hardware_workers();

}  // namespace fseval

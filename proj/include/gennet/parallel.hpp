#pragma once

namespace gennet {

/// Kernels that have an OpenMP path keep a serial one with identical results;
/// tests compare the two.
enum class ExecutionPolicy { serial, parallel };

/// Threads OpenMP will use for a parallel region (1 when built without OpenMP).
int max_threads();

}  // namespace gennet

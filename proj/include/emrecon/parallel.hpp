#pragma once

namespace emrecon {

/// Worker count for intra-run parallelism: EMRECON_THREADS if set, otherwise
/// the OpenMP default. Always >= 1.
int worker_count();

}  // namespace emrecon

#include "emrecon/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace emrecon {

int worker_count() {
    static const int n = [] {
        if (const char* env = std::getenv("EMRECON_THREADS")) {
            try {
                int v = std::stoi(env);
                if (v >= 1) return v;
            } catch (...) {
            }
        }
        return omp_get_max_threads();
    }();
    return n;
}

}  // namespace emrecon

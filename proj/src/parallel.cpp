#include "radiotwin/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <atomic>

namespace radiotwin {

namespace {
std::atomic<int> g_threads{0};  // 0 = not set, use OpenMP default
}

void set_num_threads(int n) {
    g_threads.store(n < 1 ? 1 : n);
}

int num_threads() {
    int n = g_threads.load();
    if (n > 0) return n;
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace radiotwin

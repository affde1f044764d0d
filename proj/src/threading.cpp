#include "listereo/common.hpp"

#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>

namespace listereo::threading {

namespace {
int g_max_threads = 0;
std::once_flag g_once;

void init_impl() {
  int n = 0;
  bool capped = false;
  if (const char* env = std::getenv("LISTEREO_THREADS")) {
    n = std::atoi(env);
    capped = n > 0;
  }
  if (n <= 0) n = int(std::thread::hardware_concurrency());
  if (n <= 0) n = 1;
  g_max_threads = n;
  // OpenBLAS reads this at library initialization, which happens on the
  // first BLAS call; init() runs before that. An explicit LISTEREO_THREADS
  // cap overrides a pre-existing OpenBLAS setting.
  setenv("OPENBLAS_NUM_THREADS", std::to_string(n).c_str(), capped ? 1 : 0);
  setenv("OMP_NUM_THREADS", std::to_string(n).c_str(), capped ? 1 : 0);
}
}  // namespace

void init() { std::call_once(g_once, init_impl); }

int max_threads() {
  init();
  return g_max_threads;
}

}  // namespace listereo::threading

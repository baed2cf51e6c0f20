#include "anticipatr/parallel.hpp"

#include <cstdlib>
#include <string>

namespace anticipatr {

std::size_t worker_count() {
  std::size_t n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("ANTICIPATR_THREADS")) {
    try {
      long cap = std::stol(env);
      if (cap >= 1 && static_cast<std::size_t>(cap) < n) n = static_cast<std::size_t>(cap);
    } catch (...) {
      // unparseable cap: fall back to hardware concurrency
    }
  }
  return n;
}

}  // namespace anticipatr

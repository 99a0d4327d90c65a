#include "kal/parallel.hpp"

#include <cstdlib>
#include <string>

namespace kal {

std::size_t worker_count() {
  std::size_t hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("KAL_THREADS")) {
    try {
      const long requested = std::stol(env);
      if (requested >= 1) return std::min<std::size_t>(static_cast<std::size_t>(requested), 256);
    } catch (...) {
      // Unparseable value falls back to hardware concurrency.
    }
  }
  return hw;
}

}  // namespace kal

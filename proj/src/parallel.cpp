#include "fraclab/parallel.hpp"

#include <cstdlib>
#include <string>

namespace fraclab {
namespace {

std::size_t initial_threads() {
  if (const char* env = std::getenv("FRACLAB_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (...) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

std::atomic<std::size_t>& threads_setting() {
  static std::atomic<std::size_t> value{initial_threads()};
  return value;
}

}  // namespace

std::size_t thread_count() { return threads_setting().load(); }

void set_thread_count(std::size_t n) { threads_setting() = n == 0 ? 1 : n; }

}  // namespace fraclab

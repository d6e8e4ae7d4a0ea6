#include "lfpca/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace lfpca {

int resolve_threads(std::optional<int> requested) {
  if (requested && *requested > 0) return *requested;
  if (const char* env = std::getenv("LFPCA_THREADS")) {
    try {
      const int value = std::stoi(env);
      if (value > 0) return value;
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void ordered_parallel_for(std::size_t count, int threads,
                          const std::function<void(std::size_t)>& task,
                          const std::function<void(std::size_t)>& combine) {
  const std::size_t wave = static_cast<std::size_t>(std::max(1, threads));
  for (std::size_t start = 0; start < count; start += wave) {
    const std::size_t stop = std::min(count, start + wave);
    if (stop - start == 1) {
      task(start);
    } else {
      std::vector<std::exception_ptr> errors(stop - start);
      std::vector<std::thread> workers;
      workers.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        workers.emplace_back([&, i] {
          try {
            task(i);
          } catch (...) {
            errors[i - start] = std::current_exception();
          }
        });
      }
      for (auto& w : workers) w.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    if (combine) {
      for (std::size_t i = start; i < stop; ++i) combine(i);
    }
  }
}

}  // namespace lfpca

#pragma once

#include <cstdint>
#include <random>

namespace lfpca {

// Seedable generator with platform-independent output: the engine is
// mt19937_64 (fully specified by the standard) and the uniform/normal
// transforms are implemented here rather than taken from <random>, whose
// distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on the open interval (0, 1), 53 random bits.
  double uniform();
  // Standard normal via the Box-Muller transform.
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Seed for replication `index` of a study seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace lfpca

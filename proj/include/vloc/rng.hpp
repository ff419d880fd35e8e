#pragma once

#include <cstdint>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace vloc {

// Deterministic PRNG (xoshiro256++ seeded through splitmix64). The stdlib
// distributions are implementation-defined, so every draw the pipeline
// depends on is derived here directly; checkpoints, catalogs and reports
// stay byte-identical across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next();

  // [0, 1) with 53-bit resolution.
  double uniform01();
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller (no cached spare).
  double gaussian();

  // Unbiased integer in [0, n); n must be > 0.
  uint64_t below(uint64_t n);

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t s_[4];
};

// splitmix64-based combiners for derived stream seeds.
uint64_t mix_seed(uint64_t a, uint64_t b);
uint64_t hash_str(const std::string& s);

}  // namespace vloc

#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace atnatlas {

// Deterministic random stream. std::mt19937_64 is bit-specified by the
// standard, so identical seeds give identical streams on every platform.
// The normal transform is our own Box-Muller because the distribution
// adapters in <random> are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound); rejection sampled, no modulo bias.
  std::uint64_t below(std::uint64_t bound);

  // Standard normal draw; the second value of each Box-Muller pair is cached.
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// n draws from Normal(mean, std). Rejects std < 0.
std::vector<double> sample_normal(Rng& rng, double mean, double std, std::size_t n);

}  // namespace atnatlas

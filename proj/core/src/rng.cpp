#include "atnatlas/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "atnatlas/errors.hpp"

namespace atnatlas {

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw DataError("Rng::below: bound must be positive");
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() / bound * bound;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % bound;
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] keeps the log finite; u2 in [0, 1).
  const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

std::vector<double> sample_normal(Rng& rng, double mean, double std, std::size_t n) {
  if (std < 0.0) throw DataError("sample_normal: std must be non-negative");
  std::vector<double> out(n);
  for (double& v : out) v = mean + std * rng.normal();
  return out;
}

}  // namespace atnatlas

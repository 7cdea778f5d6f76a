#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace consensus_fdi {

/// Seeded generator with per-use-site streams.
///
/// Each stream is a std::mt19937_64 seeded with
/// splitmix64(seed ^ fnv1a64(site)); doubles take the top 53 bits of one
/// draw, so streams are reproducible across standard libraries.
class Rng {
 public:
  Rng(std::uint64_t seed, std::string_view site);

  /// Uniform on [0, 1).
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  /// Uniform integer on [lo, hi].
  int UniformInt(int lo, int hi);

 private:
  std::mt19937_64 engine_;
};

}  // namespace consensus_fdi

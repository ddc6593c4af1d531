#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace mm {

// Deterministic random source. All variates are derived from the raw 64-bit
// stream through fixed arithmetic (never through std::*_distribution, whose
// algorithms vary across standard libraries), so a given key yields identical
// sequences on every platform and toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t key);

  // Collapses (seed, stream, substream, ...) into a single key. Used to give
  // each bootstrap replicate / stratum / chain its own independent stream.
  static std::uint64_t mix(std::initializer_list<std::uint64_t> path);

  // FNV-1a hash, for addressing streams by string identifiers.
  static std::uint64_t hash(std::string_view s);

  std::uint64_t bits();

  // Uniform on the open interval (0, 1).
  double uniform();

  // Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);

  double normal();
  double normal(double mu, double sd);
  double gamma(double shape, double scale = 1.0);
  double chi_squared(double df);
  double beta(double a, double b);
  double lognormal(double meanlog, double sdlog);
  std::int64_t binomial(std::int64_t n, double p);

  // Standard normal conditioned to [lo, hi]; bounds may be infinite.
  double truncated_normal(double lo, double hi);
  double truncated_normal(double mu, double sd, double lo, double hi);

 private:
  std::mt19937_64 gen_;
};

}  // namespace mm

#include "metametrics/rng.hpp"

#include <cmath>
#include <limits>

#include "metametrics/error.hpp"
#include "metametrics/stats.hpp"

namespace mm {

namespace {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Upper-tail probability P(Z > x), accurate for large positive x where
// pnorm(x) rounds to 1.
inline double pnorm_upper(double x) {
  return 0.5 * std::erfc(x / std::sqrt(2.0));
}

}  // namespace

Rng::Rng(std::uint64_t key) {
  std::uint64_t state = key;
  std::seed_seq seq{
      static_cast<std::uint32_t>(splitmix64(state)),
      static_cast<std::uint32_t>(splitmix64(state)),
      static_cast<std::uint32_t>(splitmix64(state)),
      static_cast<std::uint32_t>(splitmix64(state)),
      static_cast<std::uint32_t>(splitmix64(state)),
      static_cast<std::uint32_t>(splitmix64(state)),
      static_cast<std::uint32_t>(splitmix64(state)),
      static_cast<std::uint32_t>(splitmix64(state)),
  };
  gen_.seed(seq);
}

std::uint64_t Rng::mix(std::initializer_list<std::uint64_t> path) {
  std::uint64_t state = 0x8f1bbcdc2b6b5a35ull;
  std::uint64_t h = splitmix64(state);
  for (std::uint64_t e : path) {
    state = h ^ e;
    h = splitmix64(state);
  }
  return h;
}

std::uint64_t Rng::hash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t Rng::bits() { return gen_(); }

double Rng::uniform() {
  // 53 random bits plus a half-ulp offset keeps the result strictly inside
  // (0, 1), so qnorm(uniform()) is always finite.
  return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) fail(ErrorCode::invalid_argument, "Rng::below requires n > 0");
  std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    std::uint64_t r = gen_();
    if (r >= threshold) return r % n;
  }
}

double Rng::normal() { return qnorm(uniform()); }

double Rng::normal(double mu, double sd) { return mu + sd * normal(); }

double Rng::gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0)) {
    fail(ErrorCode::invalid_argument, "gamma requires positive shape and scale");
  }
  if (shape < 1.0) {
    // Boost a draw with shape+1 down (Marsaglia & Tsang, note at end).
    double u = uniform();
    return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
  }
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    double v = t * t * t;
    double u = uniform();
    double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return scale * d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return scale * d * v;
  }
}

double Rng::chi_squared(double df) { return gamma(0.5 * df, 2.0); }

double Rng::beta(double a, double b) {
  double x = gamma(a);
  double y = gamma(b);
  return x / (x + y);
}

double Rng::lognormal(double meanlog, double sdlog) {
  return std::exp(normal(meanlog, sdlog));
}

std::int64_t Rng::binomial(std::int64_t n, double p) {
  if (n < 0 || !(p >= 0.0) || !(p <= 1.0)) {
    fail(ErrorCode::invalid_argument, "binomial requires n >= 0 and p in [0,1]");
  }
  if (p == 0.0) return 0;
  if (p == 1.0) return n;
  std::int64_t k = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    if (uniform() < p) ++k;
  }
  return k;
}

double Rng::truncated_normal(double lo, double hi) {
  if (!(lo <= hi)) {
    fail(ErrorCode::invalid_argument, "truncated_normal requires lo <= hi");
  }
  if (lo == hi) return lo;

  // Work in whichever tail keeps the CDF values away from 1, where doubles
  // lose resolution. Both reflections use P(Z > x) = pnorm(-x).
  if (lo >= 0.0) {
    double qa = pnorm_upper(lo);
    double qb = std::isinf(hi) ? 0.0 : pnorm_upper(hi);
    double width = qa - qb;
    if (!(width > 0.0)) {
      // Window narrower than double resolution; fall back to its near edge.
      return std::isinf(hi) ? lo : 0.5 * (lo + hi);
    }
    double u = qb + uniform() * width;
    double z = -qnorm(u);
    return std::min(std::max(z, lo), hi);
  }
  if (hi <= 0.0) {
    return -truncated_normal(-hi, -lo);
  }
  double pa = pnorm(lo);
  double pb = pnorm(hi);
  double u = pa + uniform() * (pb - pa);
  double z = qnorm(u);
  return std::min(std::max(z, lo), hi);
}

double Rng::truncated_normal(double mu, double sd, double lo, double hi) {
  if (!(sd > 0.0)) {
    fail(ErrorCode::invalid_argument, "truncated_normal requires sd > 0");
  }
  double a = (lo - mu) / sd;
  double b = (hi - mu) / sd;
  return mu + sd * truncated_normal(a, b);
}

}  // namespace mm

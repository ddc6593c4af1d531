#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

namespace mm {

// Standard normal quantile function (inverse CDF). Accurate to full double
// precision over (0, 1); returns +/-infinity at the endpoints.
double qnorm(double p);

// Standard normal CDF.
double pnorm(double x);

// log Beta(a, b) for a, b > 0.
double lbeta(double a, double b);

// log of the generalized binomial coefficient C(n, k); n and k may be
// non-integer as long as n >= k >= 0.
double lchoose(double n, double k);

// Smallest k with Poisson(rate) CDF >= u, for u in (0,1).
double poisson_quantile(double u, double rate);

// Streaming mean/variance accumulator (Welford).
class RunningMoments {
 public:
  void add(double x) {
    ++n_;
    double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }

  // Sample variance (divisor n-1); NaN for fewer than two observations.
  double variance() const {
    if (n_ < 2) return std::numeric_limits<double>::quiet_NaN();
    return m2_ / static_cast<double>(n_ - 1);
  }

  // Population variance (divisor n); NaN when empty.
  double population_variance() const {
    if (n_ == 0) return std::numeric_limits<double>::quiet_NaN();
    return m2_ / static_cast<double>(n_);
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

double mean(std::span<const double> xs);

// Sample variance with divisor n-1; NaN for fewer than two values.
double sample_variance(std::span<const double> xs);

}  // namespace mm

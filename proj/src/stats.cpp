#include "metametrics/stats.hpp"

#include <cmath>
#include <limits>

#include "metametrics/error.hpp"

namespace mm {

namespace {

// Horner evaluation with coefficients ordered from degree 0 upward.
inline double poly(const double* c, int n, double x) {
  double r = c[n - 1];
  for (int i = n - 2; i >= 0; --i) r = r * x + c[i];
  return r;
}

}  // namespace

double qnorm(double p) {
  if (std::isnan(p)) return p;
  if (p <= 0.0) {
    return p == 0.0 ? -std::numeric_limits<double>::infinity()
                    : std::numeric_limits<double>::quiet_NaN();
  }
  if (p >= 1.0) {
    return p == 1.0 ? std::numeric_limits<double>::infinity()
                    : std::numeric_limits<double>::quiet_NaN();
  }

  // Wichura's AS 241 rational approximations (PPND16).
  static const double a[8] = {
      3.3871328727963666080e+0, 1.3314166789178437745e+2,
      1.9715909503065514427e+3, 1.3731693765509461125e+4,
      4.5921953931549871457e+4, 6.7265770927008700853e+4,
      3.3430575583588128105e+4, 2.5090809287301226727e+3};
  static const double b[8] = {
      1.0,                      4.2313330701600911252e+1,
      6.8718700749205790830e+2, 5.3941960214247511077e+3,
      2.1213794301586595867e+4, 3.9307895800092710610e+4,
      2.8729085735721942674e+4, 5.2264952788528545610e+3};
  static const double c[8] = {
      1.42343711074968357734e+0, 4.63033784615654529590e+0,
      5.76949722146069140550e+0, 3.64784832476320460504e+0,
      1.27045825245236838258e+0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4};
  static const double d[8] = {
      1.0,                       2.05319162663775882187e+0,
      1.67638483018380384940e+0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2,
      5.47593808499534494600e-4, 1.05075007164441684324e-9};
  static const double e[8] = {
      6.65790464350110377720e+0, 5.46378491116411436990e+0,
      1.78482653991729133580e+0, 2.96560571828504891230e-1,
      2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static const double f[8] = {
      1.0,                       5.99832206555887937690e-1,
      1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5,
      1.42151175831644588870e-7, 2.04426310338993978564e-15};

  double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    double r = 0.180625 - q * q;
    return q * poly(a, 8, r) / poly(b, 8, r);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double v;
  if (r <= 5.0) {
    r -= 1.6;
    v = poly(c, 8, r) / poly(d, 8, r);
  } else {
    r -= 5.0;
    v = poly(e, 8, r) / poly(f, 8, r);
  }
  return q < 0.0 ? -v : v;
}

double pnorm(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double lbeta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) {
    fail(ErrorCode::invalid_argument, "lbeta requires positive arguments");
  }
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double lchoose(double n, double k) {
  if (!(k >= 0.0) || !(n >= k)) {
    fail(ErrorCode::invalid_argument, "lchoose requires n >= k >= 0");
  }
  if (k == 0.0 || k == n) return 0.0;
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double poisson_quantile(double u, double rate) {
  if (!(u > 0.0) || !(u < 1.0) || !(rate > 0.0)) {
    fail(ErrorCode::invalid_argument,
         "poisson_quantile needs u in (0,1) and a positive rate");
  }
  double pk = std::exp(-rate);
  double cum = pk;
  double k = 0.0;
  // The tail beyond ~rate + 40*sqrt(rate) is never reached for u < 1 - eps.
  while (u > cum && k < 1e7) {
    k += 1.0;
    pk *= rate / k;
    cum += pk;
  }
  return k;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  RunningMoments m;
  for (double x : xs) m.add(x);
  return m.variance();
}

}  // namespace mm

#include "crowd/numerics.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace crowd {
namespace {

constexpr double kTiny = 1e-300;
constexpr double kEps = 1e-15;
constexpr int kMaxFractionTerms = 10000;

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double x, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxFractionTerms; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double step = d * c;
    h *= step;
    if (std::abs(step - 1.0) < kEps) return h;
  }
  return h;
}

double lower_beta_fraction(double x, double a, double b) {
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  return std::exp(log_front) * beta_continued_fraction(x, a, b) / a;
}

// P(za <= Z <= zb) for a standard normal Z, using the tail on the side that avoids cancellation.
double normal_interval_mass(double za, double zb) {
  constexpr double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  if (za >= 0.0) {
    return 0.5 * (std::erfc(za * inv_sqrt2) - std::erfc(zb * inv_sqrt2));
  }
  if (zb <= 0.0) {
    return 0.5 * (std::erfc(-zb * inv_sqrt2) - std::erfc(-za * inv_sqrt2));
  }
  return 1.0 - 0.5 * std::erfc(-za * inv_sqrt2) - 0.5 * std::erfc(zb * inv_sqrt2);
}

void check_kernel(double sigma, double lo, double hi) {
  if (!(sigma > 0.0)) throw std::domain_error("truncated gaussian: sigma must be positive");
  if (!(lo < hi)) throw std::domain_error("truncated gaussian: lo must be below hi");
}

double kernel_normalizer(double p_old, double sigma, double lo, double hi) {
  const double z = normal_interval_mass((lo - p_old) / sigma, (hi - p_old) / sigma);
  if (!(z > 0.0)) {
    throw std::domain_error("truncated gaussian: normalizer underflows (degenerate sigma)");
  }
  return z;
}

// Upper tail P(T > t) for t >= 0.
double student_t_upper_tail(double t, double dof) {
  const double x = dof / (dof + t * t);
  return 0.5 * reg_inc_beta(x, 0.5 * dof, 0.5);
}

double student_t_density(double t, double dof) {
  const double log_norm = std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
                          0.5 * std::log(dof * std::numbers::pi);
  return std::exp(log_norm - 0.5 * (dof + 1.0) * std::log1p(t * t / dof));
}

}  // namespace

double reg_inc_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::domain_error("reg_inc_beta: shape parameters must be positive");
  }
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::domain_error("reg_inc_beta: x must lie in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  if (x == 0.5 && a == b) return 0.5;
  if (x > a / (a + b)) {
    return 1.0 - lower_beta_fraction(1.0 - x, b, a);
  }
  return lower_beta_fraction(x, a, b);
}

double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw std::domain_error("normal_quantile: p must lie in [0, 1]");
  }
  // Acklam's rational approximation, then one Halley refinement.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double student_t_cdf(double t, int dof) {
  if (dof < 1) throw std::domain_error("student_t_cdf: dof must be at least 1");
  const double tail = student_t_upper_tail(std::abs(t), dof);
  return t >= 0.0 ? 1.0 - tail : tail;
}

double student_t_quantile(const ConfidenceSpec& spec) {
  if (spec.dof < 1) throw std::domain_error("student_t_quantile: dof must be at least 1");
  if (!(spec.alpha > 0.0 && spec.alpha <= 1.0)) {
    throw std::domain_error("student_t_quantile: alpha must lie in (0, 1]");
  }
  if (spec.alpha == 1.0) return 0.0;

  // Solve P(T > t) = alpha / 2 on t >= 0; the tail is decreasing with slope -density.
  const double dof = spec.dof;
  const double target = 0.5 * spec.alpha;
  double lo = 0.0;
  double hi = std::max(1.0, normal_quantile(1.0 - target));
  while (student_t_upper_tail(hi, dof) > target) {
    lo = hi;
    hi *= 2.0;
  }
  double t = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double residual = student_t_upper_tail(t, dof) - target;
    if (residual > 0.0) {
      lo = t;
    } else {
      hi = t;
    }
    double next = t + residual / student_t_density(t, dof);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) <= 1e-15 * std::max(1.0, t) || hi - lo <= 1e-15 * std::max(1.0, t)) {
      return next;
    }
    t = next;
  }
  return t;
}

double trunc_gauss_density(double p_new, double p_old, double sigma, double lo, double hi) {
  check_kernel(sigma, lo, hi);
  const double norm = kernel_normalizer(p_old, sigma, lo, hi);
  if (p_new < lo || p_new > hi) return 0.0;
  const double z = (p_new - p_old) / sigma;
  const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return phi / sigma / norm;
}

double trunc_gauss_mass(double a, double b, double p_old, double sigma, double lo, double hi) {
  check_kernel(sigma, lo, hi);
  const double norm = kernel_normalizer(p_old, sigma, lo, hi);
  a = std::max(a, lo);
  b = std::min(b, hi);
  if (!(a < b)) return 0.0;
  return normal_interval_mass((a - p_old) / sigma, (b - p_old) / sigma) / norm;
}

}  // namespace crowd

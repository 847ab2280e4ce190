#ifndef CROWD_NUMERICS_HPP
#define CROWD_NUMERICS_HPP

#include <algorithm>
#include <cmath>

namespace crowd {

/// Probabilities entering a logarithm are clamped to [kProbFloor, 1 - kProbFloor].
inline constexpr double kProbFloor = 1e-12;

template <typename Scalar>
Scalar clamp_probability(Scalar p) {
  return std::clamp(p, Scalar(kProbFloor), Scalar(1) - Scalar(kProbFloor));
}

template <typename Scalar>
Scalar safe_log(Scalar p) {
  return std::log(clamp_probability(p));
}

/// Logistic function, evaluated without overflow for large |t|.
template <typename Scalar>
Scalar sigmoid(Scalar t) {
  if (t >= Scalar(0)) {
    return Scalar(1) / (Scalar(1) + std::exp(-t));
  }
  const Scalar e = std::exp(t);
  return e / (Scalar(1) + e);
}

/// log(sigmoid(t)) without cancellation.
template <typename Scalar>
Scalar log_sigmoid(Scalar t) {
  if (t >= Scalar(0)) {
    return -std::log1p(std::exp(-t));
  }
  return t - std::log1p(std::exp(t));
}

/// Entropy in bits of a Bernoulli(p) variable, with 0 lg 0 taken as 0.
template <typename Scalar>
Scalar binary_entropy(Scalar p) {
  auto term = [](Scalar x) { return x > Scalar(0) ? -x * std::log2(x) : Scalar(0); };
  return term(p) + term(Scalar(1) - p);
}

/// Two-sided significance level and degrees of freedom of a t interval.
struct ConfidenceSpec {
  double alpha = 0.05;
  int dof = 1;
};

/// Regularized incomplete beta function I_x(a, b).
/// Throws std::domain_error for x outside [0, 1] or non-positive a, b.
double reg_inc_beta(double x, double a, double b);

double normal_cdf(double z);

/// Inverse of normal_cdf on (0, 1).
double normal_quantile(double p);

double student_t_cdf(double t, int dof);

/// t such that P(T_dof <= t) = 1 - alpha / 2. Accepts alpha in (0, 1]; alpha = 1 gives 0.
double student_t_quantile(const ConfidenceSpec& spec);

/// Density of a Gaussian step of scale sigma from p_old, truncated to [lo, hi].
/// Zero outside [lo, hi]. Throws std::domain_error when the truncation mass underflows.
double trunc_gauss_density(double p_new, double p_old, double sigma, double lo, double hi);

/// Probability mass the truncated kernel centred at p_old assigns to [a, b] ⊆ [lo, hi].
double trunc_gauss_mass(double a, double b, double p_old, double sigma, double lo, double hi);

}  // namespace crowd

#endif  // CROWD_NUMERICS_HPP

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "crowd/numerics.hpp"

using namespace crowd;

namespace {

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

// I_x(a, b) for integer shapes as a binomial tail.
double binomial_tail_beta(double x, int a, int b) {
  const int n = a + b - 1;
  double s = 0.0;
  for (int j = a; j <= n; ++j) s += binomial(n, j) * std::pow(x, j) * std::pow(1.0 - x, n - j);
  return s;
}

double t_density(double x, int dof) {
  const double v = dof;
  return std::exp(std::lgamma((v + 1) / 2) - std::lgamma(v / 2)) / std::sqrt(v * std::numbers::pi) *
         std::pow(1.0 + x * x / v, -(v + 1) / 2);
}

// Composite Simpson on [0, t].
double t_cdf_quadrature(double t, int dof) {
  const int n = 20000;
  const double h = t / n;
  double s = t_density(0.0, dof) + t_density(t, dof);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * t_density(i * h, dof);
  return 0.5 + s * h / 3.0;
}

template <typename F>
double bisect(F f, double target, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double kernel(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z);
}

double trapezoid_kernel_mass(double mu, double sigma, double lo, double hi, int n = 200000) {
  const double h = (hi - lo) / n;
  double s = 0.5 * (kernel(lo, mu, sigma) + kernel(hi, mu, sigma));
  for (int i = 1; i < n; ++i) s += kernel(lo + i * h, mu, sigma);
  return s * h;
}

}  // namespace

TEST(RegIncBeta, SymmetricHalf) {
  for (double a : {0.3, 1.0, 2.5, 7.0, 40.0}) EXPECT_NEAR(reg_inc_beta(0.5, a, a), 0.5, 1e-12);
}

TEST(RegIncBeta, Endpoints) {
  EXPECT_EQ(reg_inc_beta(1.0, 3, 7), 1.0);
  EXPECT_EQ(reg_inc_beta(0.0, 3, 7), 0.0);
}

TEST(RegIncBeta, BinomialIdentity) {
  EXPECT_NEAR(reg_inc_beta(0.5, 4, 2), 0.1875, 1e-12);
  for (int a = 1; a <= 12; ++a) {
    for (int b = 1; b <= 12; ++b) {
      for (double x : {0.05, 0.3, 0.5, 0.77, 0.95}) {
        EXPECT_NEAR(reg_inc_beta(x, a, b), binomial_tail_beta(x, a, b), 1e-11) << a << " " << b << " " << x;
      }
    }
  }
}

TEST(RegIncBeta, ReflectionOnRandomGrid) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(0.0, 1.0), ua(0.05, 60.0);
  for (int k = 0; k < 500; ++k) {
    const double x = ux(rng), a = ua(rng), b = ua(rng);
    EXPECT_NEAR(reg_inc_beta(x, a, b) + reg_inc_beta(1.0 - x, b, a), 1.0, 1e-10);
  }
}

TEST(RegIncBeta, MonotoneInX) {
  double prev = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double v = reg_inc_beta(i / 100.0, 2.5, 4.0);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(RegIncBeta, DomainErrors) {
  EXPECT_THROW(reg_inc_beta(1.1, 1, 1), std::domain_error);
  EXPECT_THROW(reg_inc_beta(-0.1, 1, 1), std::domain_error);
  EXPECT_THROW(reg_inc_beta(0.5, 0, 1), std::domain_error);
  EXPECT_THROW(reg_inc_beta(0.5, 1, -2), std::domain_error);
}

TEST(StudentT, AlphaOneIsMedian) { EXPECT_EQ(student_t_quantile({1.0, 4}), 0.0); }

TEST(StudentT, QuantileMatchesQuadratureInversion) {
  for (int dof : {1, 2, 5, 10, 30}) {
    const double oracle = bisect([dof](double t) { return t_cdf_quadrature(t, dof); }, 0.975, 0.0, 20.0);
    EXPECT_NEAR(student_t_quantile({0.05, dof}), oracle, 1e-6) << dof;
  }
}

TEST(StudentT, CdfMatchesQuadrature) {
  for (double t : {-3.0, -0.4, 0.0, 1.2, 4.0}) {
    EXPECT_NEAR(student_t_cdf(t, 7), t < 0 ? 1.0 - t_cdf_quadrature(-t, 7) : t_cdf_quadrature(t, 7), 1e-9);
  }
}

TEST(StudentT, DecreasesTowardGaussian) {
  const double z = bisect([](double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }, 0.975, 0.0, 10.0);
  double prev = student_t_quantile({0.05, 1});
  for (int dof : {2, 4, 8, 16, 64, 256, 4096}) {
    const double q = student_t_quantile({0.05, dof});
    EXPECT_LT(q, prev);
    EXPECT_GT(q, z);
    prev = q;
  }
  EXPECT_NEAR(student_t_quantile({0.05, 1000000}), z, 1e-5);
  EXPECT_NEAR(normal_quantile(0.975), z, 1e-9);
}

TEST(StudentT, InvalidSpec) {
  EXPECT_THROW(student_t_quantile({0.0, 3}), std::domain_error);
  EXPECT_THROW(student_t_quantile({0.05, 0}), std::domain_error);
}

TEST(TruncGauss, IntegratesToOne) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> up(0.5, 1.0), us(0.01, 0.5);
  auto integral = [](double p_old, double sigma) {
    const int n = 100000;
    const double h = 0.5 / n;
    double s = 0.5 * (trunc_gauss_density(0.5, p_old, sigma, 0.5, 1.0) +
                      trunc_gauss_density(1.0, p_old, sigma, 0.5, 1.0));
    for (int i = 1; i < n; ++i) s += trunc_gauss_density(0.5 + i * h, p_old, sigma, 0.5, 1.0);
    return s * h;
  };
  EXPECT_NEAR(integral(0.7, 0.05), 1.0, 1e-6);
  for (int k = 0; k < 100; ++k) EXPECT_NEAR(integral(up(rng), us(rng)), 1.0, 1e-6);
}

TEST(TruncGauss, PeakAtMode) {
  const double sigma = 0.05;
  EXPECT_NEAR(trunc_gauss_density(0.75, 0.75, sigma, 0.5, 1.0),
              1.0 / (sigma * std::sqrt(2 * std::numbers::pi)) / (1.0 - std::erfc(0.25 / sigma / std::numbers::sqrt2)),
              1e-9);
  EXPECT_GT(trunc_gauss_density(0.75, 0.75, sigma, 0.5, 1.0), trunc_gauss_density(0.76, 0.75, sigma, 0.5, 1.0));
}

TEST(TruncGauss, MatchesTrapezoidOracle) {
  const double z = trapezoid_kernel_mass(0.9, 0.1, 0.5, 1.0);
  EXPECT_NEAR(trunc_gauss_density(0.6, 0.9, 0.1, 0.5, 1.0), kernel(0.6, 0.9, 0.1) / z, 1e-8);
}

TEST(TruncGauss, ZeroOutsideSupport) {
  EXPECT_EQ(trunc_gauss_density(0.4, 0.7, 0.1, 0.5, 1.0), 0.0);
  EXPECT_EQ(trunc_gauss_density(1.01, 0.7, 0.1, 0.5, 1.0), 0.0);
}

TEST(TruncGauss, MassOverCellsSumsToOne) {
  double total = 0.0;
  for (int k = 0; k < 64; ++k) total += trunc_gauss_mass(0.5 + k / 128.0, 0.5 + (k + 1) / 128.0, 0.95, 0.03, 0.5, 1.0);
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_NEAR(trunc_gauss_mass(0.6, 0.8, 0.7, 0.1, 0.5, 1.0),
              trapezoid_kernel_mass(0.7, 0.1, 0.6, 0.8) / trapezoid_kernel_mass(0.7, 0.1, 0.5, 1.0), 1e-8);
}

TEST(TruncGauss, DegenerateSigma) {
  EXPECT_THROW(trunc_gauss_density(0.7, 0.2, 1e-4, 0.5, 1.0), std::domain_error);
  EXPECT_THROW(trunc_gauss_density(0.7, 0.7, 0.0, 0.5, 1.0), std::domain_error);
}

TEST(BinaryEntropy, Values) {
  EXPECT_EQ(binary_entropy(0.5), 1.0);
  EXPECT_EQ(binary_entropy(0.0), 0.0);
  EXPECT_EQ(binary_entropy(1.0), 0.0);
  EXPECT_EQ(binary_entropy(0.25), binary_entropy(0.75));
  for (int i = 0; i <= 64; ++i) {
    const double p = i / 64.0;
    EXPECT_EQ(binary_entropy(p), binary_entropy(1.0 - p));
    EXPECT_LE(binary_entropy(p), 1.0);
  }
}

TEST(Sigmoid, Values) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(50.0), 1.0, 1e-15);
  EXPECT_NEAR(sigmoid(2.0) + sigmoid(-2.0), 1.0, 1e-12);
  EXPECT_GT(sigmoid(-800.0), -1.0);
  EXPECT_FALSE(std::isnan(sigmoid(-800.0)));
  EXPECT_NEAR(log_sigmoid(-40.0), std::log(sigmoid(-40.0)), 1e-12);
  EXPECT_NEAR(log_sigmoid(3.0), std::log(sigmoid(3.0)), 1e-14);
}

TEST(SafeLog, Clamps) {
  EXPECT_EQ(safe_log(0.0), std::log(kProbFloor));
  EXPECT_TRUE(std::isfinite(safe_log(1.0)));
}

TEST(NumericsFloat, ScalarTemplates) {
  EXPECT_FLOAT_EQ(sigmoid(0.0f), 0.5f);
  EXPECT_FLOAT_EQ(binary_entropy(0.5f), 1.0f);
}

#ifndef CROWD_DETAIL_POWER_ITERATION_HPP
#define CROWD_DETAIL_POWER_ITERATION_HPP

#include <random>

#include "crowd/rng.hpp"

namespace crowd {

template <typename Derived>
SingularPair leading_singular_pair(const Eigen::MatrixBase<Derived>& m, std::size_t max_iterations,
                                   std::uint64_t seed, double tolerance) {
  using Vector = Eigen::VectorXd;
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(m.cols());
  for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = gauss(rng);
  v.normalize();

  SingularPair out;
  Vector u = Vector::Zero(m.rows());
  for (std::size_t it = 0; it < max_iterations; ++it) {
    u.noalias() = m * v;
    const double un = u.norm();
    if (un == 0.0) break;
    u /= un;
    Vector next = m.transpose() * u;
    out.value = next.norm();
    if (out.value == 0.0) break;
    next /= out.value;
    const double change = (next - v).template lpNorm<Eigen::Infinity>();
    v = std::move(next);
    out.iterations = it + 1;
    if (change < tolerance) break;
  }
  u.noalias() = m * v;
  if (u.norm() > 0.0) u.normalize();
  out.left = std::move(u);
  out.right = std::move(v);
  return out;
}

}  // namespace crowd

#endif  // CROWD_DETAIL_POWER_ITERATION_HPP

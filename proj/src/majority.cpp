#include <cmath>
#include <stdexcept>

#include <fmt/core.h>

#include "crowd/aggregators.hpp"

namespace crowd {

EstimateSet majority_vote(const LabelMatrix& a) {
  Eigen::VectorXd post(static_cast<Eigen::Index>(a.n_samples()));
  for (std::size_t i = 0; i < a.n_samples(); ++i) {
    const auto row = a.row(i);
    if (row.empty()) {
      post(static_cast<Eigen::Index>(i)) = 0.5;
      continue;
    }
    std::size_t positive = 0;
    for (const auto& e : row) positive += e.label == 1 ? 1 : 0;
    post(static_cast<Eigen::Index>(i)) =
        static_cast<double>(positive) / static_cast<double>(row.size());
  }
  return EstimateSet(std::move(post));
}

double mv_quality(double p, std::size_t half_minus_one) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("mv_quality: p must lie in [0, 1]");
  const std::size_t n = 2 * half_minus_one + 1;
  double q = 0.0;
  double binom = 1.0;  // C(n, k)
  for (std::size_t k = 0; k <= half_minus_one; ++k) {
    q += binom * std::pow(p, static_cast<double>(n - k)) * std::pow(1.0 - p, static_cast<double>(k));
    binom = binom * static_cast<double>(n - k) / static_cast<double>(k + 1);
  }
  return q;
}

double filtered_vote_quality(std::span<const double> accuracies,
                             std::span<const std::size_t> subset) {
  if (subset.empty() || subset.size() % 2 == 0) {
    throw std::invalid_argument("filtered_vote_quality: subset size must be odd");
  }
  if (subset.size() > 24) {
    throw std::invalid_argument("filtered_vote_quality: subset too large to enumerate");
  }
  for (std::size_t j : subset) {
    if (j >= accuracies.size()) {
      throw std::invalid_argument(fmt::format("filtered_vote_quality: worker {} out of range", j));
    }
  }
  const std::size_t m = subset.size();
  double total = 0.0;
  for (std::uint32_t outcome = 0; outcome < (1u << m); ++outcome) {
    double prob = 1.0;
    std::size_t correct = 0;
    for (std::size_t k = 0; k < m; ++k) {
      const double p = accuracies[subset[k]];
      if (outcome & (1u << k)) {
        prob *= p;
        ++correct;
      } else {
        prob *= 1.0 - p;
      }
    }
    if (2 * correct > m) total += prob;
  }
  return total;
}

}  // namespace crowd

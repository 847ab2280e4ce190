#include <cmath>
#include <random>
#include <stdexcept>

#include <fmt/core.h>

#include "crowd/aggregators.hpp"
#include "crowd/errors.hpp"
#include "crowd/rng.hpp"

namespace crowd {
namespace {

double sign_posterior(double score) {
  if (score > 0.0) return 1.0;
  if (score < 0.0) return 0.0;
  return 0.5;
}

// Divides v by its max-norm and returns the log of the removed factor.
double rescale(std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  if (m == 0.0 || !std::isfinite(m)) return 0.0;
  for (double& x : v) x /= m;
  return std::log(m);
}

}  // namespace

ReliabilityFit kos_iterate(const LabelMatrix& a, std::size_t k_max,
                           std::span<const double> initial_messages) {
  if (initial_messages.size() != a.size()) {
    throw std::invalid_argument(fmt::format("kos_iterate: {} initial messages for {} edges",
                                            initial_messages.size(), a.size()));
  }
  const auto entries = a.entries();
  const std::size_t m = entries.size();
  ReliabilityMessages msg;
  msg.worker_to_sample.assign(initial_messages.begin(), initial_messages.end());
  msg.sample_to_worker.assign(m, 0.0);
  std::vector<double> previous = msg.worker_to_sample;  // p^(k_max - 1)
  double previous_log_scale = 0.0;
  std::vector<double> row_sum(a.n_samples());
  std::vector<double> col_sum(a.n_workers());

  for (std::size_t k = 1; k <= k_max; ++k) {
    previous = msg.worker_to_sample;
    previous_log_scale = msg.log_scale;

    // s_{i->j} = sum over the other workers of sample i.
    std::fill(row_sum.begin(), row_sum.end(), 0.0);
    for (std::size_t e = 0; e < m; ++e) row_sum[entries[e].sample] += entries[e].label * msg.worker_to_sample[e];
    for (std::size_t e = 0; e < m; ++e) {
      msg.sample_to_worker[e] = row_sum[entries[e].sample] - entries[e].label * msg.worker_to_sample[e];
    }
    // p_{j->i} = sum over the other samples of worker j.
    std::fill(col_sum.begin(), col_sum.end(), 0.0);
    for (std::size_t e = 0; e < m; ++e) col_sum[entries[e].worker] += entries[e].label * msg.sample_to_worker[e];
    for (std::size_t e = 0; e < m; ++e) {
      msg.worker_to_sample[e] = col_sum[entries[e].worker] - entries[e].label * msg.sample_to_worker[e];
    }
    msg.log_scale += rescale(msg.worker_to_sample);
  }

  msg.sample_score = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(a.n_samples()));
  for (std::size_t e = 0; e < m; ++e) {
    msg.sample_score(static_cast<Eigen::Index>(entries[e].sample)) += entries[e].label * previous[e];
  }
  // Report the messages that fed the final aggregation, on their own scale.
  msg.worker_to_sample = std::move(previous);
  msg.log_scale = previous_log_scale;
  Eigen::VectorXd post = msg.sample_score.unaryExpr(&sign_posterior);
  return {std::move(msg), EstimateSet(std::move(post))};
}

ReliabilityFit kos_iterate(const LabelMatrix& a, std::size_t k_max, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> init(1.0, 1.0);
  std::vector<double> messages(a.size());
  for (double& x : messages) x = init(rng);
  return kos_iterate(a, k_max, messages);
}

SpectralFit spectral_estimate(const LabelMatrix& a, std::size_t iterations, std::uint64_t seed) {
  if (a.size() == 0) throw DataError("spectral_estimate: label matrix is all zero");
  SpectralFit fit;
  fit.pair = leading_singular_pair(a.dense(), iterations, seed, 1e-13);
  const Eigen::VectorXd& v = fit.pair.right;
  double positive_mass = 0.0;
  double negative_mass = 0.0;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    (v(j) >= 0.0 ? positive_mass : negative_mass) += v(j) * v(j);
  }
  const double orientation = positive_mass >= negative_mass ? 1.0 : -1.0;
  Eigen::VectorXd post = (orientation * fit.pair.left).unaryExpr(&sign_posterior);
  fit.estimates = EstimateSet(std::move(post));
  return fit;
}

}  // namespace crowd

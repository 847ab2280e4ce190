#ifndef CROWD_TEST_ORACLES_HPP
#define CROWD_TEST_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "crowd/aggregators.hpp"
#include "crowd/sequential.hpp"
#include "test_util.hpp"

namespace oracles {

using namespace crowd;

inline LabelMatrix rows_to_matrix(std::size_t r, const std::vector<std::vector<int>>& rows) {
  std::vector<Response> entries;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      if (rows[i][j] != 0) entries.push_back({i, j, rows[i][j]});
    }
  }
  return LabelMatrix(rows.size(), r, std::move(entries));
}

// P(A_ij = label | y) for each model, written from the model definitions.
inline double response_probability(const WorkerModel& model, std::size_t i, std::size_t j, int label, int y) {
  if (const auto* m = std::get_if<AccuracyModel>(&model)) {
    const double p = m->shared ? m->accuracy[0] : m->accuracy[j];
    return label == y ? p : 1.0 - p;
  }
  if (const auto* m = std::get_if<SensSpecModel>(&model)) {
    if (y == 1) return label == 1 ? m->sensitivity[j] : 1.0 - m->sensitivity[j];
    return label == -1 ? m->specificity[j] : 1.0 - m->specificity[j];
  }
  if (const auto* m = std::get_if<ConfusionModel>(&model)) {
    return m->confusion[j](y == 1 ? 1 : 0, label == 1 ? 1 : 0);
  }
  const auto& g = std::get<GladModel>(model);
  const double p = 1.0 / (1.0 + std::exp(-g.ability(static_cast<Eigen::Index>(j)) *
                                        g.inverse_difficulty(static_cast<Eigen::Index>(i))));
  return label == y ? p : 1.0 - p;
}

inline double prior_probability(const WorkerModel& model, int y) {
  double p = 0.5;
  if (const auto* m = std::get_if<AccuracyModel>(&model)) p = m->class_prior;
  if (const auto* m = std::get_if<SensSpecModel>(&model)) p = m->class_prior;
  if (const auto* m = std::get_if<ConfusionModel>(&model)) p = m->class_prior(1);
  if (const auto* m = std::get_if<GladModel>(&model)) p = m->class_prior;
  return y == 1 ? p : 1.0 - p;
}

// Joint enumeration over all 2^N label vectors, then marginalization.
inline std::vector<double> brute_force_posterior(const LabelMatrix& a, const WorkerModel& model) {
  const std::size_t n = a.n_samples();
  const auto d = a.dense();
  std::vector<double> num(n, 0.0);
  double total = 0.0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    double joint = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const int y = (mask >> i) & 1 ? 1 : -1;
      joint *= prior_probability(model, y);
      for (std::size_t j = 0; j < a.n_workers(); ++j) {
        const int label = static_cast<int>(d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        if (label != 0) joint *= response_probability(model, i, j, label, y);
      }
    }
    total += joint;
    for (std::size_t i = 0; i < n; ++i) {
      if ((mask >> i) & 1) num[i] += joint;
    }
  }
  for (double& x : num) x /= total;
  return num;
}

inline std::vector<WorkerModel> random_models(std::size_t n, std::size_t r, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 0.95), g(-2.0, 3.0), b(0.2, 2.0);
  AccuracyModel acc;
  for (std::size_t j = 0; j < r; ++j) acc.accuracy.push_back(u(rng));
  acc.class_prior = u(rng);
  AccuracyModel shared{{u(rng)}, u(rng), true};
  SensSpecModel ss;
  for (std::size_t j = 0; j < r; ++j) {
    ss.sensitivity.push_back(u(rng));
    ss.specificity.push_back(u(rng));
  }
  ss.class_prior = u(rng);
  ConfusionModel cm;
  for (std::size_t j = 0; j < r; ++j) {
    Eigen::Matrix2d pi;
    const double s = u(rng), t = u(rng);
    pi << t, 1 - t, 1 - s, s;
    cm.confusion.push_back(pi);
  }
  const double cp = u(rng);
  cm.class_prior = Eigen::Vector2d(1 - cp, cp);
  GladModel gm;
  gm.ability.resize(static_cast<Eigen::Index>(r));
  gm.inverse_difficulty.resize(static_cast<Eigen::Index>(n));
  for (auto& x : gm.ability) x = g(rng);
  for (auto& x : gm.inverse_difficulty) x = b(rng);
  gm.class_prior = u(rng);
  return {acc, shared, ss, cm, gm};
}

inline double max_gap(const EstimateSet& e, const std::vector<double>& oracle) {
  double gap = 0.0;
  for (std::size_t i = 0; i < oracle.size(); ++i) gap = std::max(gap, std::abs(e.posterior(i) - oracle[i]));
  return gap;
}

// Labels from `r` workers with the given accuracies; each worker labels a sample with probability `density`.
struct Generated {
  LabelMatrix a;
  std::vector<int> gold;
};

inline Generated generate(std::size_t n, std::size_t r, const std::vector<double>& accuracy, double density,
                          std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Generated g;
  std::vector<Response> entries;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = u(rng) < 0.5 ? 1 : -1;
    g.gold.push_back(y);
    bool any = false;
    for (std::size_t j = 0; j < r; ++j) {
      if (u(rng) < density || (!any && j + 1 == r)) {
        entries.push_back({i, j, u(rng) < accuracy[j] ? y : -y});
        any = true;
      }
    }
  }
  g.a = LabelMatrix(n, r, std::move(entries));
  return g;
}

// Label vector maximizing the complete-data likelihood: all 2^N label vectors, every worker's
// (specificity, sensitivity) on a grid over [0.5, 0.99] and the class prior on a grid.
inline std::vector<int> ds_grid_search(const LabelMatrix& a) {
  const auto d = a.dense();
  const int n = static_cast<int>(a.n_samples()), r = static_cast<int>(a.n_workers());
  std::vector<double> grid;
  for (int k = 50; k <= 99; ++k) grid.push_back(k / 100.0);
  double best = -1e300;
  int best_mask = -1;
  for (int mask = 0; mask < (1 << n); ++mask) {
    double ll = 0.0;
    int positives = 0;
    for (int i = 0; i < n; ++i) positives += (mask >> i) & 1;
    double prior_best = -1e300;
    for (int k = 1; k < 100; ++k) {
      const double p = k / 100.0;
      prior_best = std::max(prior_best, positives * std::log(p) + (n - positives) * std::log(1 - p));
    }
    ll += prior_best;
    for (int j = 0; j < r; ++j) {
      double worker_best = -1e300;
      for (double spec : grid) {
        for (double sens : grid) {
          double w = 0.0;
          for (int i = 0; i < n; ++i) {
            const int y = (mask >> i) & 1 ? 1 : -1;
            const double label = d(i, j);
            if (label == 0) continue;
            if (y == 1) w += std::log(label > 0 ? sens : 1 - sens);
            else w += std::log(label < 0 ? spec : 1 - spec);
          }
          worker_best = std::max(worker_best, w);
        }
      }
      ll += worker_best;
    }
    if (ll > best + 1e-12) {
      best = ll;
      best_mask = mask;
    }
  }
  std::vector<int> labels;
  for (int i = 0; i < n; ++i) labels.push_back((best_mask >> i) & 1 ? 1 : -1);
  return labels;
}

// 4 samples x 3 workers.
inline LabelMatrix ds_instance() { return rows_to_matrix(3, {{1, 1, 1}, {-1, -1, 1}, {1, 1, -1}, {-1, 1, -1}}); }

// Largest relative gap between glad_q_gradient and central differences of glad_q.
inline double glad_gradient_gap(const LabelMatrix& a, const Eigen::VectorXd& mu, Eigen::VectorXd alpha,
                                Eigen::VectorXd lb, const GladOptions& o) {
  Eigen::VectorXd ga, gb;
  glad_q_gradient(a, mu, alpha, lb, o, ga, gb);
  const double h = 1e-6;
  double worst = 0.0;
  auto check = [&](Eigen::VectorXd& v, const Eigen::VectorXd& g) {
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      const double keep = v(k);
      v(k) = keep + h;
      const double up = glad_q(a, mu, alpha, lb, o);
      v(k) = keep - h;
      const double down = glad_q(a, mu, alpha, lb, o);
      v(k) = keep;
      const double fd = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(fd - g(k)) / std::max(1.0, std::abs(fd)));
    }
  };
  check(alpha, ga);
  check(lb, gb);
  return worst;
}

// Smallest step of a trace; negative means a decrease.
inline double min_step(const std::vector<double>& trace) {
  double m = 0.0;
  for (std::size_t k = 1; k < trace.size(); ++k) m = std::min(m, trace[k] - trace[k - 1]);
  return m;
}

// Responses of a worker with accuracy p_t at step t; peers are right with probability `peer`.
inline std::vector<StreamStep> model_stream(const std::vector<double>& accuracy, double peer, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<StreamStep> out;
  for (double p : accuracy) {
    const int y = u(rng) < 0.5 ? 1 : -1;
    const int z = u(rng) < p ? y : -y;
    out.push_back({z, y == 1 ? peer : 1.0 - peer});
  }
  return out;
}

}  // namespace oracles

#endif

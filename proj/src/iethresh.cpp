#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/core.h>

#include "crowd/numerics.hpp"
#include "crowd/sequential.hpp"

namespace crowd {

double WorkerHistory::mean() const {
  if (correct.empty()) return 0.0;
  return std::accumulate(correct.begin(), correct.end(), 0.0) / static_cast<double>(correct.size());
}

double WorkerHistory::sd() const {
  if (correct.size() < 2) return 0.0;
  const double m = mean();
  double ss = 0.0;
  for (double c : correct) ss += (c - m) * (c - m);
  return std::sqrt(ss / static_cast<double>(correct.size() - 1));
}

double iethresh_upper(const WorkerHistory& history, double alpha) {
  const std::size_t r = history.count();
  if (r < 2) {
    throw InsufficientHistory(fmt::format("iethresh: need at least 2 observations, have {}", r));
  }
  const double t = student_t_quantile({alpha, static_cast<int>(r - 1)});
  return history.mean() + t * history.sd() / std::sqrt(static_cast<double>(r));
}

std::size_t iethresh_select(std::span<const WorkerHistory> histories, double alpha, Rng& rng) {
  if (histories.empty()) throw std::invalid_argument("iethresh_select: no workers");
  std::vector<double> upper(histories.size());
  for (std::size_t j = 0; j < histories.size(); ++j) {
    upper[j] = histories[j].count() < 2 ? std::numeric_limits<double>::infinity()
                                        : iethresh_upper(histories[j], alpha);
  }
  const double best = *std::max_element(upper.begin(), upper.end());
  std::vector<std::size_t> ties;
  for (std::size_t j = 0; j < upper.size(); ++j) {
    if (upper[j] == best) ties.push_back(j);
  }
  if (ties.size() == 1) return ties.front();
  std::uniform_int_distribution<std::size_t> pick(0, ties.size() - 1);
  return ties[pick(rng)];
}

std::vector<WorkerHistory> worker_histories(const LabelPool& pool) {
  struct Arrival {
    std::size_t order, sample, worker;
    int label;
  };
  std::vector<Arrival> arrivals;
  for (std::size_t i = 0; i < pool.n_samples(); ++i) {
    for (const auto& l : pool.labels[i]) arrivals.push_back({l.order, i, l.worker, l.label});
  }
  std::sort(arrivals.begin(), arrivals.end(),
            [](const Arrival& a, const Arrival& b) { return a.order < b.order; });
  std::vector<WorkerHistory> out(pool.n_workers());
  std::vector<std::size_t> pos(pool.n_samples(), 0), neg(pool.n_samples(), 0);
  for (const auto& a : arrivals) {
    if (pos[a.sample] + neg[a.sample] > 0) {
      const int majority = pos[a.sample] >= neg[a.sample] ? 1 : -1;
      out[a.worker].correct.push_back(a.label == majority ? 1.0 : 0.0);
    }
    (a.label == 1 ? pos : neg)[a.sample] += 1;
  }
  return out;
}

}  // namespace crowd

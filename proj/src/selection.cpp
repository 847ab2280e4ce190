#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "crowd/numerics.hpp"
#include "crowd/selection.hpp"

namespace crowd {
namespace {

constexpr std::size_t kTable = 64;

double beta_uncertainty_direct(std::size_t positives, std::size_t negatives) {
  const double i = reg_inc_beta(0.5, static_cast<double>(positives) + 1.0,
                                static_cast<double>(negatives) + 1.0);
  return std::min(i, 1.0 - i);
}

std::size_t pick(const std::vector<std::size_t>& ties, Rng& rng) {
  if (ties.size() == 1) return ties.front();
  std::uniform_int_distribution<std::size_t> d(0, ties.size() - 1);
  return ties[d(rng)];
}

[[noreturn]] void exhausted() { throw PoolExhausted("selection: no sample has pool labels left"); }

}  // namespace

double beta_uncertainty(std::size_t positives, std::size_t negatives) {
  static const auto table = [] {
    std::vector<double> t(kTable * kTable);
    for (std::size_t a = 0; a < kTable; ++a) {
      for (std::size_t b = 0; b < kTable; ++b) t[a * kTable + b] = beta_uncertainty_direct(a, b);
    }
    return t;
  }();
  if (positives < kTable && negatives < kTable) return table[positives * kTable + negatives];
  return beta_uncertainty_direct(positives, negatives);
}

SelectionState::SelectionState(const LabelPool& pool, std::size_t budget)
    : n_workers_(pool.n_workers()),
      count_(pool.n_samples(), 0),
      positive_(pool.n_samples(), 0),
      available_(pool.n_samples(), 0),
      rows_(pool.n_samples()),
      budget_(budget),
      log_odds_(pool.n_samples(), 0.0),
      uncertainty_(pool.n_samples(), 0.5) {
  for (std::size_t i = 0; i < pool.n_samples(); ++i) available_[i] = pool.labels[i].size();
}

SelectionState::SelectionState(std::vector<std::size_t> count, std::vector<std::size_t> positive,
                               std::vector<std::size_t> available, std::size_t budget)
    : count_(std::move(count)),
      positive_(std::move(positive)),
      available_(std::move(available)),
      rows_(count_.size()),
      budget_(budget),
      log_odds_(count_.size(), 0.0),
      uncertainty_(count_.size(), 0.5) {
  if (positive_.size() != count_.size() || available_.size() != count_.size()) {
    throw std::invalid_argument("SelectionState: count vectors differ in length");
  }
  for (std::size_t i = 0; i < count_.size(); ++i) {
    if (positive_[i] > count_[i]) throw std::invalid_argument("SelectionState: r+ exceeds r");
    refresh(i);
  }
}

bool SelectionState::any_eligible() const {
  return std::any_of(available_.begin(), available_.end(), [](std::size_t a) { return a > 0; });
}

void SelectionState::add(std::size_t sample, std::size_t worker, int label) {
  if (sample >= n_samples() || !eligible(sample)) {
    throw std::logic_error(fmt::format("SelectionState: sample {} is not eligible", sample));
  }
  if (spent_ >= budget_) throw std::logic_error("SelectionState: budget spent");
  if (label != 1 && label != -1) throw std::logic_error("SelectionState: label must be +-1");
  ++spent_;
  --available_[sample];
  ++count_[sample];
  if (label == 1) ++positive_[sample];
  rows_[sample].emplace_back(worker, label);
  if (model_) log_odds_[sample] += response_log_odds(*model_, sample, worker, label);
  refresh(sample);
}

LabelMatrix SelectionState::matrix() const {
  std::vector<Response> entries;
  entries.reserve(spent_);
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    for (const auto& [j, z] : rows_[i]) entries.push_back({i, j, z});
  }
  return LabelMatrix(n_samples(), n_workers_, std::move(entries));
}

void SelectionState::set_model(std::optional<WorkerModel> model) {
  model_ = std::move(model);
  for (std::size_t i = 0; i < n_samples(); ++i) {
    if (model_) {
      double lo = prior_log_odds(*model_);
      for (const auto& [j, z] : rows_[i]) lo += response_log_odds(*model_, i, j, z);
      log_odds_[i] = lo;
    }
    refresh(i);
  }
}

double SelectionState::posterior(std::size_t i) const {
  if (model_) return sigmoid(log_odds_[i]);
  if (count_[i] == 0) return 0.5;
  return static_cast<double>(positive_[i]) / static_cast<double>(count_[i]);
}

void SelectionState::refresh(std::size_t i) {
  if (count_[i] == 0) {
    uncertainty_[i] = 0.5;
  } else if (model_) {
    const double p = sigmoid(log_odds_[i]);
    uncertainty_[i] = std::min(p, 1.0 - p);
  } else {
    uncertainty_[i] = beta_uncertainty(positive_[i], count_[i] - positive_[i]);
  }
}

std::size_t select_uniform(const SelectionState& state, Rng& rng) {
  std::vector<std::size_t> ties;
  std::size_t best = 0;
  for (std::size_t i = 0; i < state.n_samples(); ++i) {
    if (!state.eligible(i)) continue;
    if (ties.empty() || state.count(i) < best) {
      best = state.count(i);
      ties.assign(1, i);
    } else if (state.count(i) == best) {
      ties.push_back(i);
    }
  }
  if (ties.empty()) exhausted();
  return pick(ties, rng);
}

std::size_t select_entropy(const SelectionState& state, Rng& rng) {
  // Maximal entropy is the smallest dominant-class ratio max(r+, r-) / r, compared exactly.
  std::vector<std::size_t> ties, unlabeled;
  std::size_t best_num = 0, best_den = 1;
  for (std::size_t i = 0; i < state.n_samples(); ++i) {
    if (!state.eligible(i)) continue;
    const std::size_t r = state.count(i);
    if (r == 0) {
      unlabeled.push_back(i);
      continue;
    }
    const std::size_t dom = std::max(state.positive(i), r - state.positive(i));
    if (ties.empty() || dom * best_den < best_num * r) {
      best_num = dom;
      best_den = r;
      ties.assign(1, i);
    } else if (dom * best_den == best_num * r) {
      ties.push_back(i);
    }
  }
  if (!ties.empty()) return pick(ties, rng);
  if (!unlabeled.empty()) return pick(unlabeled, rng);
  exhausted();
}

std::size_t select_uncertainty(const SelectionState& state, Rng& rng) {
  std::vector<std::size_t> ties;
  double best = -1.0;
  for (std::size_t i = 0; i < state.n_samples(); ++i) {
    if (!state.eligible(i)) continue;
    const double uc = state.uncertainty(i);
    if (uc > best) {
      best = uc;
      ties.assign(1, i);
    } else if (uc == best) {
      ties.push_back(i);
    }
  }
  if (ties.empty()) exhausted();
  return pick(ties, rng);
}

std::string_view to_string(Criterion criterion) {
  switch (criterion) {
    case Criterion::uniform: return "uniform";
    case Criterion::entropy: return "entropy";
    case Criterion::uncertainty: return "uncertainty";
  }
  return "unknown";
}

Criterion criterion_from_string(std::string_view name) {
  for (auto c : {Criterion::uniform, Criterion::entropy, Criterion::uncertainty}) {
    if (to_string(c) == name) return c;
  }
  throw std::invalid_argument(fmt::format("unknown selection criterion '{}'", name));
}

std::size_t select(Criterion criterion, const SelectionState& state, Rng& rng) {
  switch (criterion) {
    case Criterion::uniform: return select_uniform(state, rng);
    case Criterion::entropy: return select_entropy(state, rng);
    case Criterion::uncertainty: return select_uncertainty(state, rng);
  }
  throw std::invalid_argument("select: unknown criterion");
}

}  // namespace crowd

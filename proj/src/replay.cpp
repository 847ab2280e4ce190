#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/core.h>

#include "crowd/selection.hpp"

namespace crowd {
namespace {

// Wrong hard labels among gold-known samples, kept current as the state changes.
class RunningError {
 public:
  RunningError(const GoldStandards& gold, std::size_t n) : gold_(gold), wrong_(n, false) {
    for (std::size_t i = 0; i < n && i < gold.size(); ++i) known_ += gold.known(i) ? 1 : 0;
  }

  void update(const SelectionState& state, std::size_t i) {
    if (i >= gold_.size() || !gold_.known(i)) return;
    const bool wrong = (state.posterior(i) >= 0.5 ? 1 : -1) != gold_.labels[i];
    if (wrong != wrong_[i]) {
      wrong_[i] = wrong;
      count_ += wrong ? 1 : -1;
    }
  }
  void update_all(const SelectionState& state) {
    for (std::size_t i = 0; i < state.n_samples(); ++i) update(state, i);
  }
  double value() const {
    if (known_ == 0) return std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(count_) / static_cast<double>(known_);
  }

 private:
  const GoldStandards& gold_;
  std::vector<bool> wrong_;
  std::size_t known_ = 0;
  long count_ = 0;
};

}  // namespace

ReplayResult adaptive_replay(const LabelPool& pool, std::size_t budget, Criterion criterion,
                             Integrator integrator, const ReplayOptions& options,
                             std::uint64_t seed) {
  validate(pool);
  const std::size_t n = pool.n_samples();
  SelectionState state(pool, budget);
  Rng rng(derive_seed(seed, "replay"));
  IntegratorOptions fit_options = options.integrator;
  fit_options.seed = derive_seed(seed, "integrator");
  IntegratorOptions refit_options = fit_options;
  if (options.refit_max_iterations > 0) refit_options.em.max_iterations = options.refit_max_iterations;

  // Unseen pool labels per sample; a uniform draw swaps the pick to the back and pops it.
  std::vector<std::vector<PooledLabel>> unseen = pool.labels;
  RunningError running(pool.gold, n);
  running.update_all(state);

  ReplayResult result;
  const bool refits = has_worker_model(integrator) && options.refit_every > 0;
  std::size_t warm_budget = 0;
  for (const auto& row : pool.labels) warm_budget += std::min(row.size(), options.initial_per_sample);
  while (state.remaining() > 0) {
    if (!state.any_eligible()) {
      result.trace.exhausted = true;
      break;
    }
    const Criterion active = state.spent() < warm_budget ? Criterion::uniform : criterion;
    const std::size_t i = select(active, state, rng);
    auto& bag = unseen[i];
    std::uniform_int_distribution<std::size_t> draw(0, bag.size() - 1);
    std::swap(bag[draw(rng)], bag.back());
    const PooledLabel label = bag.back();
    bag.pop_back();
    state.add(i, label.worker, label.label);

    if (refits && state.spent() % options.refit_every == 0) {
      const WorkerModel* warm = state.model() ? &*state.model() : nullptr;
      auto fit = integrate(integrator, state.matrix(), refit_options, warm);
      state.set_model(std::move(fit.model));
      running.update_all(state);
    } else {
      running.update(state, i);
    }
    result.trace.steps.push_back({state.spent(), i, label.worker, label.label, running.value()});
  }

  result.matrix = state.matrix();
  result.estimates = integrate(integrator, result.matrix, fit_options).estimates;
  return result;
}

void write_trace_csv(std::ostream& out, const ReplayTrace& trace,
                     const std::vector<std::string>& sample_ids) {
  out << "step,sample,label,error\n";
  for (const auto& s : trace.steps) {
    const std::string id = s.sample < sample_ids.size() ? sample_ids[s.sample] : std::to_string(s.sample);
    if (std::isnan(s.error)) {
      out << fmt::format("{},{},{},\n", s.step, id, s.label);
    } else {
      out << fmt::format("{},{},{},{:.17g}\n", s.step, id, s.label, s.error);
    }
  }
}

}  // namespace crowd

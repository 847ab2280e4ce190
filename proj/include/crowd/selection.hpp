#ifndef CROWD_SELECTION_HPP
#define CROWD_SELECTION_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "crowd/aggregators.hpp"
#include "crowd/label_store.hpp"
#include "crowd/rng.hpp"

namespace crowd {

struct PoolExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Labels acquired so far, what is left in the pool, and the budget.
class SelectionState {
 public:
  /// Empty acquisition state over `pool`.
  SelectionState(const LabelPool& pool, std::size_t budget);
  /// Bare counts, mainly for exercising the criteria: r_i, r_i^+ and remaining pool labels.
  SelectionState(std::vector<std::size_t> count, std::vector<std::size_t> positive,
                 std::vector<std::size_t> available, std::size_t budget);

  std::size_t n_samples() const { return count_.size(); }
  std::size_t n_workers() const { return n_workers_; }
  std::size_t count(std::size_t i) const { return count_[i]; }
  std::size_t positive(std::size_t i) const { return positive_[i]; }
  std::size_t available(std::size_t i) const { return available_[i]; }
  bool eligible(std::size_t i) const { return available_[i] > 0; }
  bool any_eligible() const;

  std::size_t budget() const { return budget_; }
  std::size_t spent() const { return spent_; }
  std::size_t remaining() const { return budget_ - spent_; }

  /// Records one acquired label. Throws std::logic_error when the sample is not eligible
  /// or the budget is spent.
  void add(std::size_t sample, std::size_t worker, int label);

  LabelMatrix matrix() const;
  std::span<const std::pair<std::size_t, int>> acquired(std::size_t i) const { return rows_[i]; }

  /// Installs (or clears) the worker model used by the uncertainty criterion.
  void set_model(std::optional<WorkerModel> model);
  const std::optional<WorkerModel>& model() const { return model_; }
  /// Current P(y_i = +1): the model posterior when a model is set, else r_i^+ / r_i.
  double posterior(std::size_t i) const;
  /// UC_i used by select_uncertainty.
  double uncertainty(std::size_t i) const { return uncertainty_[i]; }

 private:
  void refresh(std::size_t i);

  std::size_t n_workers_ = 0;
  std::vector<std::size_t> count_, positive_, available_;
  std::vector<std::vector<std::pair<std::size_t, int>>> rows_;
  std::size_t budget_ = 0;
  std::size_t spent_ = 0;
  std::optional<WorkerModel> model_;
  std::vector<double> log_odds_;
  std::vector<double> uncertainty_;
};

/// Beta-posterior uncertainty min(I_0.5(L1+1, L2+1), 1 - I_0.5(L1+1, L2+1)).
double beta_uncertainty(std::size_t positives, std::size_t negatives);

/// Fewest current labels; ties uniformly at random. All selectors throw PoolExhausted when
/// no sample has pool labels left.
std::size_t select_uniform(const SelectionState& state, Rng& rng);
/// Largest label entropy among labeled eligible samples; unlabeled samples are chosen only
/// when no labeled sample is eligible.
std::size_t select_entropy(const SelectionState& state, Rng& rng);
/// Largest UC_i, from the installed model when there is one; unlabeled samples score 0.5.
std::size_t select_uncertainty(const SelectionState& state, Rng& rng);

enum class Criterion { uniform, entropy, uncertainty };
std::string_view to_string(Criterion criterion);
/// Throws std::invalid_argument for an unknown name.
Criterion criterion_from_string(std::string_view name);
std::size_t select(Criterion criterion, const SelectionState& state, Rng& rng);

struct TraceStep {
  std::size_t step = 0;
  std::size_t sample = 0;
  std::size_t worker = 0;
  int label = 0;
  /// Error of the running estimate against known gold; NaN when no gold is known.
  double error = 0.0;
};

struct ReplayTrace {
  std::vector<TraceStep> steps;
  /// True when the pool ran dry before the budget was spent.
  bool exhausted = false;
};

struct ReplayOptions {
  std::size_t refit_every = 25;
  /// Labels per sample acquired by the uniform criterion before `criterion` takes over.
  std::size_t initial_per_sample = 0;
  /// EM iteration cap for the warm-started refits inside the loop; 0 keeps the integrator's.
  std::size_t refit_max_iterations = 50;
  IntegratorOptions integrator;
};

struct ReplayResult {
  ReplayTrace trace;
  LabelMatrix matrix;
  EstimateSet estimates;
};

/// Budgeted acquisition replayed from a recorded pool. Each step selects a sample, draws one
/// of its unseen pool labels uniformly, and every `refit_every` steps refits the integrator's
/// worker model when it has one. Deterministic per seed.
ReplayResult adaptive_replay(const LabelPool& pool, std::size_t budget, Criterion criterion,
                             Integrator integrator, const ReplayOptions& options,
                             std::uint64_t seed);

/// CSV `step,sample,label,error`.
void write_trace_csv(std::ostream& out, const ReplayTrace& trace,
                     const std::vector<std::string>& sample_ids = {});

}  // namespace crowd

#endif  // CROWD_SELECTION_HPP

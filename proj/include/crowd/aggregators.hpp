#ifndef CROWD_AGGREGATORS_HPP
#define CROWD_AGGREGATORS_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "crowd/estimates.hpp"
#include "crowd/label_store.hpp"

namespace crowd {

// --- worker models ----------------------------------------------------------

/// Per-worker probability of a correct label. `shared` models keep one value for everyone.
struct AccuracyModel {
  std::vector<double> accuracy;
  double class_prior = 0.5;
  bool shared = false;
};

/// Beta prior hyperparameters of the Bayesian sensitivity/specificity model.
struct SensSpecPrior {
  double a1 = 2.0;  // sensitivity, pseudo-correct
  double a2 = 1.0;  // sensitivity, pseudo-incorrect
  double b1 = 2.0;  // specificity, pseudo-correct
  double b2 = 1.0;  // specificity, pseudo-incorrect
  double p1 = 2.0;  // class prior, pseudo-positive
  double p2 = 2.0;  // class prior, pseudo-negative
};

struct SensSpecModel {
  std::vector<double> sensitivity;
  std::vector<double> specificity;
  double class_prior = 0.5;
  SensSpecPrior prior;
};

/// Row-stochastic J x J matrix per worker, row = true class, column = reported class.
struct ConfusionModel {
  std::vector<Eigen::MatrixXd> confusion;
  Eigen::VectorXd class_prior;
};

/// GLAD: P(label correct) = sigmoid(ability_j * inverse_difficulty_i).
struct GladModel {
  Eigen::VectorXd ability;
  Eigen::VectorXd inverse_difficulty;
  double class_prior = 0.5;
};

using WorkerModel = std::variant<AccuracyModel, SensSpecModel, ConfusionModel, GladModel>;

nlohmann::json to_json(const WorkerModel& model);

// --- options and fit results -------------------------------------------------

struct EmOptions {
  std::size_t max_iterations = 500;
  /// Convergence threshold on the largest parameter change between iterations.
  double tolerance = 1e-6;
  std::uint64_t seed = 0;
};

struct EmDiagnostics {
  std::size_t iterations = 0;
  bool converged = false;
  /// Objective after each iteration (log-likelihood or log-posterior, see each fitter).
  std::vector<double> objective;
};

template <typename Model>
struct Fit {
  Model model;
  EstimateSet estimates;
  EmDiagnostics diagnostics;
};

// --- simple integration --------------------------------------------------------

/// Posterior r_i^+ / r_i; samples without labels get 0.5.
EstimateSet majority_vote(const LabelMatrix& a);

/// Probability that a majority of 2L+1 independent labels of accuracy p is correct.
double mv_quality(double p, std::size_t half_minus_one);

/// Exact probability that the majority of the selected workers is correct.
/// Throws std::invalid_argument if the subset is empty, of even size, or out of range.
double filtered_vote_quality(std::span<const double> accuracies, std::span<const std::size_t> subset);

/// Posterior of every sample under a fixed worker model.
/// Throws std::invalid_argument if model dimensions do not match the matrix.
EstimateSet weighted_posterior(const LabelMatrix& a, const WorkerModel& model);

/// log P(A_i | y_i = +1) - log P(A_i | y_i = -1) + log prior odds, for one row.
double posterior_log_odds(const LabelMatrix& a, std::size_t sample, const WorkerModel& model);
/// The two additive pieces of posterior_log_odds: class prior and one response.
double prior_log_odds(const WorkerModel& model);
double response_log_odds(const WorkerModel& model, std::size_t sample, std::size_t worker,
                         int label);

// --- EM fitters -----------------------------------------------------------------

struct AccuracyOptions {
  EmOptions em;
  bool shared = false;
  /// Beta pseudo-counts added to each worker's correct and incorrect tallies.
  double prior_correct = 2.0;
  double prior_incorrect = 1.0;
  /// Fixed P(y_i = +1); empty estimates it (Laplace-smoothed) in every M-step.
  std::optional<double> class_prior = 0.5;
};

/// One-coin model: per-worker (or shared) accuracy plus a class prior, fitted by EM.
/// Objective trace is the log-posterior under the pseudo-count prior.
Fit<AccuracyModel> accuracy_em(const LabelMatrix& a, const AccuracyOptions& options = {},
                               const AccuracyModel* warm_start = nullptr);

/// Labels over J classes; unlike LabelMatrix a worker may label a sample more than once.
struct CategoricalLabels {
  std::size_t n_samples = 0;
  std::size_t n_workers = 0;
  std::size_t n_classes = 2;
  struct Entry {
    std::size_t sample;
    std::size_t worker;
    std::size_t label;
  };
  std::vector<Entry> entries;

  /// Binary view: class 0 is -1, class 1 is +1.
  static CategoricalLabels from_binary(const LabelMatrix& a);
};

struct DawidSkeneOptions {
  EmOptions em;
  /// Initial diagonal of every confusion matrix; 1.0 reproduces the hard identity start.
  double init_diagonal = 0.8;
};

struct DawidSkeneFit {
  ConfusionModel model;
  /// N x J class posteriors T_ij.
  Eigen::MatrixXd class_posterior;
  /// Binary view: posterior of the last class (+1 for binary input).
  EstimateSet estimates;
  EmDiagnostics diagnostics;
};

/// Dawid-Skene confusion-matrix EM. Objective trace is the observed-data log-likelihood.
/// Throws DataError if some sample has no label.
DawidSkeneFit dawid_skene_em(const CategoricalLabels& labels, const DawidSkeneOptions& options = {});
DawidSkeneFit dawid_skene_em(const LabelMatrix& a, const DawidSkeneOptions& options = {});
double dawid_skene_log_likelihood(const CategoricalLabels& labels, const ConfusionModel& model);

/// Bayesian sensitivity/specificity EM with Beta priors (MAP updates).
/// Objective trace is the log-posterior: log-likelihood plus log Beta prior densities
/// (up to constants); with all hyperparameters at 1 it is the log-likelihood.
/// Throws std::domain_error if a hyperparameter is below 1.
Fit<SensSpecModel> bayes_sensspec_em(const LabelMatrix& a, const SensSpecPrior& prior = {},
                                     const EmOptions& options = {},
                                     const SensSpecModel* warm_start = nullptr);
double sensspec_log_likelihood(const LabelMatrix& a, const SensSpecModel& model);

struct GladOptions {
  EmOptions em;
  /// Gradient-ascent steps per M-step.
  std::size_t inner_steps = 25;
  /// Fixed P(y_i = +1).
  double class_prior = 0.5;
  /// Gaussian prior on abilities and log inverse difficulties; variance <= 0 disables it.
  double ability_prior_mean = 1.0;
  double ability_prior_variance = 1.0;
  double log_difficulty_prior_mean = 0.0;
  double log_difficulty_prior_variance = 1.0;
};

/// Expected complete-data log-likelihood Q(alpha, beta) for fixed posteriors
/// (plus the parameter prior when enabled). `log_beta` holds log inverse difficulties.
double glad_q(const LabelMatrix& a, const Eigen::VectorXd& posterior, const Eigen::VectorXd& ability,
              const Eigen::VectorXd& log_beta, const GladOptions& options);
/// Analytic gradient of glad_q with respect to (ability, log_beta).
void glad_q_gradient(const LabelMatrix& a, const Eigen::VectorXd& posterior,
                     const Eigen::VectorXd& ability, const Eigen::VectorXd& log_beta,
                     const GladOptions& options, Eigen::VectorXd& grad_ability,
                     Eigen::VectorXd& grad_log_beta);
double glad_log_likelihood(const LabelMatrix& a, const GladModel& model);

struct GladFit {
  GladModel model;
  EstimateSet estimates;
  EmDiagnostics diagnostics;
  /// Q before and after each M-step, evaluated with that step's posteriors.
  std::vector<std::pair<double, double>> m_step_q;
};

/// GLAD EM. Objective trace is the marginal log-likelihood plus the parameter prior.
GladFit glad_em(const LabelMatrix& a, const GladOptions& options = {},
                const GladModel* warm_start = nullptr);

// --- message passing and spectral ----------------------------------------------

/// Per-edge messages of the reliability message-passing algorithm.
///
/// Messages are indexed like LabelMatrix::entries(). The updates are linear, so the
/// stored vectors are rescaled to unit max-norm each round and the removed factor is
/// accumulated in `log_scale`; signs are exactly those of the unscaled recursion.
struct ReliabilityMessages {
  std::vector<double> sample_to_worker;
  std::vector<double> worker_to_sample;
  Eigen::VectorXd sample_score;
  double log_scale = 0.0;
};

struct ReliabilityFit {
  ReliabilityMessages messages;
  EstimateSet estimates;
};

/// Runs k_max rounds from worker messages drawn from N(1, 1).
ReliabilityFit kos_iterate(const LabelMatrix& a, std::size_t k_max, std::uint64_t seed);
/// Same, from explicit initial worker-to-sample messages (one per entry).
ReliabilityFit kos_iterate(const LabelMatrix& a, std::size_t k_max,
                           std::span<const double> initial_messages);

struct SingularPair {
  Eigen::VectorXd left;
  Eigen::VectorXd right;
  double value = 0.0;
  std::size_t iterations = 0;
};

/// Leading singular pair by alternating power iteration with per-step normalization.
template <typename Derived>
SingularPair leading_singular_pair(const Eigen::MatrixBase<Derived>& m, std::size_t max_iterations,
                                   std::uint64_t seed, double tolerance = 1e-15);

struct SpectralFit {
  SingularPair pair;
  EstimateSet estimates;
};

/// Labels from the sign of the leading left singular vector, orientation fixed by the
/// squared mass of the right vector. Throws DataError for an all-zero matrix.
SpectralFit spectral_estimate(const LabelMatrix& a, std::size_t iterations, std::uint64_t seed);

// --- dispatch ---------------------------------------------------------------------

enum class Integrator { majority, accuracy, sensspec, dawid_skene, glad, reliability, spectral };

std::string_view to_string(Integrator integrator);
/// Throws std::invalid_argument for an unknown name.
Integrator integrator_from_string(std::string_view name);
/// True if the integrator produces a WorkerModel usable by weighted_posterior.
bool has_worker_model(Integrator integrator);

struct IntegratorOptions {
  EmOptions em;
  AccuracyOptions accuracy;
  SensSpecPrior sensspec_prior;
  DawidSkeneOptions dawid_skene;
  GladOptions glad;
  std::size_t kos_iterations = 15;
  std::size_t spectral_iterations = 1000;
  std::uint64_t seed = 0;
};

struct Integration {
  EstimateSet estimates;
  std::optional<WorkerModel> model;
};

/// Runs one integrator on a matrix that may contain unlabeled samples; those are
/// excluded from fitting and receive the fitted model's prior posterior (0.5 otherwise).
/// `warm_start` seeds EM fitters when it holds the matching model type.
Integration integrate(Integrator integrator, const LabelMatrix& a, const IntegratorOptions& options,
                      const WorkerModel* warm_start = nullptr);

}  // namespace crowd

#include "crowd/detail/power_iteration.hpp"

#endif  // CROWD_AGGREGATORS_HPP

#ifndef CROWD_SEQUENTIAL_HPP
#define CROWD_SEQUENTIAL_HPP

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "crowd/label_store.hpp"
#include "crowd/rng.hpp"

namespace crowd {

// --- accuracy tracking -------------------------------------------------------------

/// Accuracies live on (0.5, 1].
inline constexpr double kAccuracyLo = 0.5;
inline constexpr double kAccuracyHi = 1.0;

enum class FilterMode { grid, particle };

struct SFilterConfig {
  /// Standard deviation of the per-step accuracy drift.
  double sigma = 0.02;
  FilterMode mode = FilterMode::grid;
  std::size_t grid_resolution = 256;
  std::size_t particles = 2000;
  /// Initial density at the grid cell midpoints; empty means uniform.
  std::vector<double> prior_density;
  std::uint64_t seed = 0;
};

/// Throws std::invalid_argument on sigma <= 0, resolution < 16, particles < 100 or a bad prior.
void validate(const SFilterConfig& config);

/// Belief over one worker's current accuracy.
///
/// Grid mode keeps the probability mass of each of the uniform cells of (0.5, 1];
/// particle mode keeps weighted particle positions.
struct AccuracyPosterior {
  FilterMode mode = FilterMode::grid;
  Eigen::VectorXd weights;
  /// Cell midpoints (grid) or particle positions.
  Eigen::VectorXd points;
  std::size_t t = 0;

  double mean() const { return weights.dot(points); }
  double variance() const;
  /// Density at cell k of a grid posterior.
  double density(std::size_t k) const;
};

struct DegeneratePosterior : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One filter per worker; the grid transition matrix is built once.
class AccuracyFilter {
 public:
  explicit AccuracyFilter(SFilterConfig config);

  const SFilterConfig& config() const { return config_; }
  AccuracyPosterior initial() const;

  /// Prediction through the truncated-Gaussian drift kernel.
  AccuracyPosterior predict(const AccuracyPosterior& post) const;
  /// Predict, then weight by P(z | p) = p q + (1 - p)(1 - q) with q = P(y = z | peers).
  /// Throws DegeneratePosterior if the total mass underflows.
  AccuracyPosterior observe(const AccuracyPosterior& post, int response,
                            double peer_label_posterior) const;

 private:
  SFilterConfig config_;
  Eigen::VectorXd midpoints_;
  // column k: mass moving from cell k to each cell
  Eigen::MatrixXd transition_;
};

AccuracyPosterior sfilter_observe(const AccuracyPosterior& post, int response,
                                  double peer_label_posterior, const SFilterConfig& config);

struct StreamStep {
  int response = 1;
  /// P(y = +1 | the other workers' labels).
  double peer_posterior = 0.5;
};

struct TrackPoint {
  double mean = 0.0;
  double variance = 0.0;
};

/// Posterior mean and variance after each step; empty input gives an empty trajectory.
std::vector<TrackPoint> sfilter_track(std::span<const StreamStep> stream, const SFilterConfig& config);

struct WorkerTrack {
  std::size_t worker = 0;
  std::vector<TrackPoint> points;
};

/// Tracks every worker of a pool, visiting labels in arrival order. The peer posterior of a
/// label combines the labels that arrived earlier on the same sample, weighted by the peers'
/// current mean accuracies, with a running class-prior estimate.
std::vector<WorkerTrack> track_pool(const LabelPool& pool, const SFilterConfig& config);

/// CSV `worker,step,mean,variance`, steps counted from 1.
void write_trajectory_csv(std::ostream& out, std::span<const WorkerTrack> tracks,
                          const std::vector<std::string>& worker_ids = {});

// --- interval estimation -----------------------------------------------------------

/// Correctness indicators of one worker's responses against the consensus.
struct WorkerHistory {
  std::vector<double> correct;

  std::size_t count() const { return correct.size(); }
  double mean() const;
  /// Sample standard deviation (n - 1 denominator); 0 for fewer than two entries.
  double sd() const;
};

struct InsufficientHistory : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// mean + t_{alpha/2, r-1} * sd / sqrt(r). Throws InsufficientHistory when r < 2.
double iethresh_upper(const WorkerHistory& history, double alpha);

/// Worker with the largest upper bound; workers with r < 2 count as +inf.
/// Ties are broken uniformly at random. Throws std::invalid_argument on an empty span.
std::size_t iethresh_select(std::span<const WorkerHistory> histories, double alpha, Rng& rng);

/// Scores each label, in arrival order, against the majority of the labels that arrived
/// earlier on the same sample (ties count as +1). Labels with no predecessor are skipped.
std::vector<WorkerHistory> worker_histories(const LabelPool& pool);

}  // namespace crowd

#endif  // CROWD_SEQUENTIAL_HPP

#ifndef CROWD_LABEL_STORE_HPP
#define CROWD_LABEL_STORE_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace crowd {

/// One observed label A_ij in {-1, +1}.
struct Response {
  std::size_t sample = 0;
  std::size_t worker = 0;
  int label = 0;

  friend bool operator==(const Response&, const Response&) = default;
};

/// Sparse N x R response matrix over {-1, 0, +1}; absent pairs are 0.
///
/// Entries are stored sorted by (sample, worker) with at most one entry per pair.
/// Rows are contiguous; per-worker adjacency is kept as indices into entries().
class LabelMatrix {
 public:
  LabelMatrix() = default;

  /// Validates indices, labels and uniqueness. Throws DataError on violation.
  LabelMatrix(std::size_t n_samples, std::size_t n_workers, std::vector<Response> entries);

  std::size_t n_samples() const { return n_samples_; }
  std::size_t n_workers() const { return n_workers_; }
  /// Total number of labels, sum |A_ij|.
  std::size_t size() const { return entries_.size(); }

  std::span<const Response> entries() const { return entries_; }
  std::span<const Response> row(std::size_t sample) const;
  /// Offset of the first entry of `sample` inside entries().
  std::size_t row_offset(std::size_t sample) const { return row_offsets_[sample]; }
  /// Indices into entries() of the labels given by `worker`, ordered by sample.
  std::span<const std::size_t> worker_entries(std::size_t worker) const;

  std::size_t row_size(std::size_t sample) const {
    return row_offsets_[sample + 1] - row_offsets_[sample];
  }
  std::size_t worker_size(std::size_t worker) const {
    return worker_offsets_[worker + 1] - worker_offsets_[worker];
  }

  /// Dense copy with zeros for missing labels.
  Eigen::MatrixXd dense() const;
  /// Same sparsity with every label negated.
  LabelMatrix flipped() const;

  friend bool operator==(const LabelMatrix& a, const LabelMatrix& b) {
    return a.n_samples_ == b.n_samples_ && a.n_workers_ == b.n_workers_ &&
           a.entries_ == b.entries_;
  }

 private:
  std::size_t n_samples_ = 0;
  std::size_t n_workers_ = 0;
  std::vector<Response> entries_;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::size_t> worker_offsets_{0};
  std::vector<std::size_t> by_worker_;
};

/// Per-sample gold labels y_i in {-1, +1}; 0 marks an unknown gold label.
struct GoldStandards {
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  bool known(std::size_t i) const { return labels[i] != 0; }
  std::size_t known_count() const;

  friend bool operator==(const GoldStandards&, const GoldStandards&) = default;
};

struct PooledLabel {
  std::size_t worker = 0;
  int label = 0;
  /// Global arrival position (file order); unique across the pool.
  std::size_t order = 0;

  friend bool operator==(const PooledLabel&, const PooledLabel&) = default;
};

/// Every recorded label per sample, in arrival order, plus gold standards.
struct LabelPool {
  std::string name;
  std::vector<std::string> sample_ids;
  std::vector<std::string> worker_ids;
  std::vector<std::vector<PooledLabel>> labels;
  GoldStandards gold;

  std::size_t n_samples() const { return labels.size(); }
  std::size_t n_workers() const { return worker_ids.size(); }
  std::size_t total_labels() const;
  std::size_t max_labels_per_sample() const;
  /// Number of distinct workers that supplied at least one label.
  std::size_t active_workers() const;

  friend bool operator==(const LabelPool&, const LabelPool&) = default;
};

/// Throws DataError unless the pool satisfies its structural invariants.
void validate(const LabelPool& pool);

/// All pool labels as a LabelMatrix.
LabelMatrix flatten(const LabelPool& pool);

enum class PoolFormat { triples_csv, json, manifest };

/// Maps dataset-native label tokens onto {-1, +1}.
using LabelMap = std::map<std::string, int>;
LabelMap default_label_map();

/// Loads a pool. For triples_csv a sidecar gold file `<stem>_gold.csv` is read when present.
/// A manifest is a JSON document naming the label file, optional gold file, delimiter,
/// column names and label map. Throws DataError with the offending line on parse failures.
LabelPool load_pool(const std::filesystem::path& path, PoolFormat format);
/// Picks the format from the extension (.csv / .tsv triples, .json pool or manifest).
LabelPool load_pool(const std::filesystem::path& path);
LabelPool load_pool_csv(const std::filesystem::path& labels,
                        const std::optional<std::filesystem::path>& gold,
                        const LabelMap& label_map = default_label_map());

void save_pool_csv(const LabelPool& pool, const std::filesystem::path& labels,
                   const std::filesystem::path& gold);
void save_pool_json(const LabelPool& pool, const std::filesystem::path& path);

/// Keeps a uniform random subset of min(lps, available) labels per sample, without
/// replacement. Deterministic for a given seed.
LabelMatrix subsample(const LabelPool& pool, std::size_t lps, std::uint64_t seed);

// --- synthetic generation --------------------------------------------------

/// Worker accuracies drawn uniformly from [min_accuracy, max_accuracy].
struct AccuracyFamily {
  double min_accuracy = 0.6;
  double max_accuracy = 0.9;
};

/// Sensitivity and specificity drawn independently and uniformly from their ranges.
struct SensSpecFamily {
  double min_sensitivity = 0.6;
  double max_sensitivity = 0.9;
  double min_specificity = 0.6;
  double max_specificity = 0.9;
};

/// Logistic ability/difficulty responses: P(correct) = sigmoid(ability * inverse_difficulty).
struct GladFamily {
  double ability_mean = 1.5;
  double ability_sd = 0.8;
  /// Fraction of workers whose ability is near zero (random guessers).
  double spammer_fraction = 0.0;
  /// Fraction of workers whose ability is negated.
  double adversarial_fraction = 0.0;
  double log_inverse_difficulty_mean = 0.0;
  double log_inverse_difficulty_sd = 0.5;
  /// Fraction of samples drawn from the hard-item component instead.
  double hard_fraction = 0.0;
  double hard_log_inverse_difficulty_mean = -2.0;
};

using WorkerFamily = std::variant<AccuracyFamily, SensSpecFamily, GladFamily>;

struct SynthConfig {
  std::string name = "synthetic";
  std::size_t n_samples = 100;
  std::size_t n_workers = 10;
  double class_prior = 0.5;
  WorkerFamily family = AccuracyFamily{};
  std::size_t min_labels_per_sample = 5;
  std::size_t max_labels_per_sample = 5;
  /// When set, per-sample counts are adjusted to sum exactly to this total.
  std::optional<std::size_t> total_labels;
  /// Zipf exponent of worker activity; 0 gives equally active workers.
  double activity_skew = 0.0;
  std::uint64_t seed = 0;
};

struct SynthResult {
  LabelPool pool;
  GoldStandards gold;
  /// Per-worker probability of a correct label (accuracy families) or ability (GLAD).
  std::vector<double> worker_parameter;
};

/// Throws std::invalid_argument on an invalid configuration.
void validate(const SynthConfig& config);
/// Recipe documents: missing keys keep their defaults; `family.type` is accuracy, sensspec or glad.
SynthConfig synth_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthConfig& config);
SynthResult synth_generate(const SynthConfig& config);

}  // namespace crowd

#endif  // CROWD_LABEL_STORE_HPP

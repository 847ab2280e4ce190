#ifndef CROWD_BENCH_HPP
#define CROWD_BENCH_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "crowd/aggregators.hpp"
#include "crowd/label_store.hpp"

namespace crowd {

/// Table rows. Selection methods replay acquisitions from the full pool with a budget of
/// lps x N; the rest integrate a uniform subsample of lps labels per sample.
enum class Method {
  majority,
  entropy,
  uncertainty,
  accuracy,
  acc_uncert,
  sensspec,
  reliability,
  glad,
  dawid_skene,
  spectral,
};

std::string_view to_string(Method method);
/// Row title used in markdown tables.
std::string_view display_name(Method method);
/// Throws std::invalid_argument for an unknown name.
Method method_from_string(std::string_view name);
/// The eight table rows, in table order.
std::vector<Method> default_methods();
bool is_selection_method(Method method);

struct ExperimentConfig {
  /// Fixture name (resolved in the data directory) or a path to a pool file.
  std::string dataset = "rte";
  std::vector<Method> methods = default_methods();
  std::vector<std::size_t> lps{1, 3, 5, 7, 9};
  std::size_t runs = 20;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir;
  /// 0 uses every hardware thread.
  std::size_t threads = 0;
  std::size_t refit_every = 25;
  /// Uniform labels per sample acquired before the entropy criterion starts.
  std::size_t entropy_warm_start = 1;
  IntegratorOptions integrator;
};

/// Throws std::invalid_argument when runs or an lps value is 0, or no method is given.
void validate(const ExperimentConfig& config);

/// Reads a JSON config; missing keys keep their defaults. Throws DataError naming the path when
/// the file cannot be read or parsed, std::invalid_argument on bad values.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& config);

/// $CROWDBENCH_OUT when set, else ./crowdbench-out.
std::filesystem::path default_output_dir();
/// $CROWD_DATA_DIR when set, else the data directory of the source tree.
std::filesystem::path default_data_dir();
/// A fixture name such as "rte" maps to <data dir>/rte.csv; anything else is a path.
LabelPool load_dataset(std::string_view dataset);

struct CellResult {
  std::string method;
  std::size_t lps = 0;
  std::vector<double> errors;
  double mean = 0.0;
  double sd = 0.0;

  friend bool operator==(const CellResult&, const CellResult&) = default;
};

struct ExperimentReport {
  std::string dataset;
  std::size_t n_samples = 0;
  std::size_t n_workers = 0;
  std::size_t total_labels = 0;
  std::uint64_t seed = 0;
  std::size_t runs = 0;
  std::vector<std::string> methods;
  std::vector<std::size_t> lps;
  /// Method-major, then lps, in config order.
  std::vector<CellResult> cells;

  /// Throws std::out_of_range when the cell is absent.
  const CellResult& cell(std::string_view method, std::size_t lps) const;

  friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

/// One (method, lps, run) error; pure given its arguments.
double run_cell(const LabelPool& pool, Method method, std::size_t lps, std::size_t run,
                const ExperimentConfig& config);

/// Runs every (method, lps, run) in parallel and merges by cell key.
ExperimentReport run_experiment(const ExperimentConfig& config);
ExperimentReport run_experiment(const LabelPool& pool, const ExperimentConfig& config);

/// Mean and sample standard deviation (0 for a single run).
void summarize(CellResult& cell);

enum class ReportFormat { csv, markdown, json, plot };
std::string_view to_string(ReportFormat format);
ReportFormat report_format_from_string(std::string_view name);
std::string_view file_extension(ReportFormat format);

nlohmann::json to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& j);
ExperimentReport load_report(const std::filesystem::path& path);

/// csv: one row per cell; markdown: methods x lps in percent; json: full report;
/// plot: per-method `lps mean sd` blocks separated by blank lines.
/// Throws std::invalid_argument for an empty report.
void emit_report(const ExperimentReport& report, ReportFormat format, std::ostream& out);
/// Writes <dir>/<dataset>.<ext>, creating the directory. Returns the written path.
std::filesystem::path emit_report(const ExperimentReport& report, ReportFormat format,
                                  const std::filesystem::path& dir);

}  // namespace crowd

#endif  // CROWD_BENCH_HPP

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <fmt/ostream.h>

#include "crowd/aggregators.hpp"
#include "crowd/bench.hpp"
#include "crowd/errors.hpp"
#include "crowd/label_store.hpp"
#include "crowd/selection.hpp"
#include "crowd/sequential.hpp"

namespace {

using namespace crowd;
namespace fs = std::filesystem;

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Writes to a file, or stdout for "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    if (const auto parent = fs::path(path).parent_path(); !parent.empty()) {
      fs::create_directories(parent);
    }
    file_.open(path, std::ios::binary);
    if (!file_) throw DataError(fmt::format("cannot write '{}'", path));
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

LabelPool load_input(const std::string& input, const std::string& gold) {
  if (!gold.empty()) return load_pool_csv(input, fs::path(gold));
  return load_dataset(input);
}

void report_error(const LabelPool& pool, const EstimateSet& estimates) {
  if (pool.gold.known_count() == 0) return;
  fmt::print(stderr, "error {:.4f} on {} gold labels\n", score(estimates, pool.gold),
             pool.gold.known_count());
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// --- aggregate -----------------------------------------------------------------------

struct AggregateArgs {
  std::string method = "majority";
  std::string input;
  std::string gold;
  std::string output = "-";
  std::string format = "csv";
  std::string model;
  std::uint64_t seed = 0;
};

int run_aggregate(const AggregateArgs& args) {
  const LabelPool pool = load_input(args.input, args.gold);
  IntegratorOptions options;
  options.seed = args.seed;
  options.em.seed = args.seed;
  const auto integrator = integrator_from_string(args.method);
  const auto result = integrate(integrator, flatten(pool), options);
  Output out(args.output);
  if (args.format == "csv") {
    write_estimates_csv(out.stream(), result.estimates, pool.sample_ids);
  } else if (args.format == "json") {
    out.stream() << estimates_to_json(result.estimates, pool.sample_ids).dump(2) << '\n';
  } else {
    throw UsageError(fmt::format("unknown estimate format '{}'", args.format));
  }
  if (!args.model.empty()) {
    if (!result.model) throw UsageError(fmt::format("method '{}' has no worker model", args.method));
    Output model_out(args.model);
    nlohmann::json j = to_json(*result.model);
    j["workers"] = pool.worker_ids;
    model_out.stream() << j.dump(2) << '\n';
  }
  report_error(pool, result.estimates);
  return 0;
}

// --- simulate ------------------------------------------------------------------------

struct SimulateArgs {
  std::string input = "rte";
  std::string gold;
  std::string criterion = "uncertainty";
  std::string integrator = "majority";
  std::optional<std::size_t> budget;
  std::string lps = "1,3,5,7,9";
  std::size_t runs = 1;
  std::size_t refit_every = 25;
  std::size_t warm_start = 0;
  std::string output = "-";
  std::string trace_dir;
  std::uint64_t seed = 0;
};

int run_simulate(const SimulateArgs& args) {
  const LabelPool pool = load_input(args.input, args.gold);
  const auto criterion = criterion_from_string(args.criterion);
  const auto integrator = integrator_from_string(args.integrator);
  std::vector<std::size_t> budgets;
  if (args.budget) {
    budgets.push_back(*args.budget);
  } else {
    for (const auto& l : split(args.lps)) budgets.push_back(std::stoul(l) * pool.n_samples());
  }
  if (args.runs == 0) throw UsageError("--runs must be at least 1");
  ReplayOptions options;
  options.refit_every = args.refit_every;
  options.initial_per_sample = args.warm_start;

  Output out(args.output);
  out.stream() << "budget,run,acquired,exhausted,error\n";
  for (std::size_t budget : budgets) {
    for (std::size_t run = 0; run < args.runs; ++run) {
      const auto result = adaptive_replay(pool, budget, criterion, integrator, options,
                                          derive_seed(args.seed, budget, run));
      const double error = pool.gold.known_count() ? score(result.estimates, pool.gold) : 0.0;
      out.stream() << fmt::format("{},{},{},{},{:.17g}\n", budget, run, result.trace.steps.size(),
                                  result.trace.exhausted ? 1 : 0, error);
      if (!args.trace_dir.empty()) {
        Output trace((fs::path(args.trace_dir) / fmt::format("trace_{}_{}.csv", budget, run)).string());
        write_trace_csv(trace.stream(), result.trace, pool.sample_ids);
      }
    }
  }
  return 0;
}

// --- bench ---------------------------------------------------------------------------

struct BenchArgs {
  std::string config;
  std::string dataset;
  std::string methods;
  std::string lps;
  std::optional<std::size_t> runs;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string out_dir;
  std::string formats = "csv,markdown,json,plot";
};

int run_bench(const BenchArgs& args) {
  ExperimentConfig config = args.config.empty() ? ExperimentConfig{} : load_config(args.config);
  if (!args.dataset.empty()) config.dataset = args.dataset;
  if (!args.methods.empty()) {
    config.methods.clear();
    for (const auto& m : split(args.methods)) config.methods.push_back(method_from_string(m));
  }
  if (!args.lps.empty()) {
    config.lps.clear();
    for (const auto& l : split(args.lps)) config.lps.push_back(std::stoul(l));
  }
  if (args.runs) config.runs = *args.runs;
  if (args.seed) config.seed = *args.seed;
  if (args.threads) config.threads = *args.threads;
  if (!args.out_dir.empty()) config.output_dir = args.out_dir;
  if (config.output_dir.empty()) config.output_dir = default_output_dir();
  validate(config);

  std::vector<ReportFormat> formats;
  for (const auto& f : split(args.formats)) formats.push_back(report_format_from_string(f));

  const auto start = std::chrono::steady_clock::now();
  const ExperimentReport report = run_experiment(config);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  for (auto f : formats) {
    fmt::print(stderr, "wrote {}\n", emit_report(report, f, config.output_dir).string());
  }
  emit_report(report, ReportFormat::markdown, std::cout);
  fmt::print(stderr, "{} cells x {} runs in {:.1f} s\n", report.cells.size(), report.runs,
             elapsed.count());
  return 0;
}

// --- synth ---------------------------------------------------------------------------

struct SynthArgs {
  std::string config;
  std::optional<std::size_t> items;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> labels_per_sample;
  std::optional<std::size_t> max_labels_per_sample;
  std::optional<std::size_t> total_labels;
  std::optional<double> prior;
  std::optional<double> skew;
  std::string family;
  std::optional<double> min_accuracy;
  std::optional<double> max_accuracy;
  std::string name;
  std::string output;
  std::string json;
  std::optional<std::uint64_t> seed;
};

int run_synth(const SynthArgs& args) {
  SynthConfig c;
  if (!args.config.empty()) {
    std::ifstream in(args.config);
    if (!in) throw DataError(fmt::format("cannot open recipe '{}'", args.config));
    try {
      c = synth_config_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(fmt::format("{}: {}", args.config, e.what()));
    }
  }
  if (args.family == "accuracy" || args.min_accuracy || args.max_accuracy) {
    AccuracyFamily f = std::holds_alternative<AccuracyFamily>(c.family) ? std::get<AccuracyFamily>(c.family)
                                                                       : AccuracyFamily{};
    if (args.min_accuracy) f.min_accuracy = *args.min_accuracy;
    if (args.max_accuracy) f.max_accuracy = *args.max_accuracy;
    c.family = f;
  } else if (args.family == "sensspec") {
    c.family = SensSpecFamily{};
  } else if (args.family == "glad") {
    c.family = GladFamily{};
  } else if (!args.family.empty()) {
    throw UsageError(fmt::format("unknown family '{}'", args.family));
  }
  if (args.items) c.n_samples = *args.items;
  if (args.workers) c.n_workers = *args.workers;
  if (args.labels_per_sample) {
    c.min_labels_per_sample = *args.labels_per_sample;
    c.max_labels_per_sample = std::max(c.max_labels_per_sample, *args.labels_per_sample);
    if (!args.max_labels_per_sample) c.max_labels_per_sample = *args.labels_per_sample;
  }
  if (args.max_labels_per_sample) c.max_labels_per_sample = *args.max_labels_per_sample;
  if (args.total_labels) c.total_labels = *args.total_labels;
  if (args.prior) c.class_prior = *args.prior;
  if (args.skew) c.activity_skew = *args.skew;
  if (!args.name.empty()) c.name = args.name;
  if (args.seed) c.seed = *args.seed;

  const SynthResult result = synth_generate(c);
  fs::path labels = args.output.empty() ? fs::path(c.name + ".csv") : fs::path(args.output);
  if (labels.has_parent_path()) fs::create_directories(labels.parent_path());
  const fs::path gold = labels.parent_path() /
                        (labels.stem().string() + "_gold" + labels.extension().string());
  save_pool_csv(result.pool, labels, gold);
  if (!args.json.empty()) save_pool_json(result.pool, args.json);
  fmt::print(stderr, "{}: {} samples, {} workers, {} labels -> {}\n", c.name,
             result.pool.n_samples(), result.pool.active_workers(), result.pool.total_labels(),
             labels.string());
  return 0;
}

// --- report --------------------------------------------------------------------------

struct ReportArgs {
  std::string input;
  std::string format = "markdown";
  std::string output = "-";
  std::uint64_t seed = 0;
};

int run_report(const ReportArgs& args) {
  const auto report = load_report(args.input);
  Output out(args.output);
  emit_report(report, report_format_from_string(args.format), out.stream());
  return 0;
}

// --- track ---------------------------------------------------------------------------

struct TrackArgs {
  std::string input;
  std::string gold;
  double sigma = 0.02;
  std::string mode = "grid";
  std::size_t resolution = 256;
  std::size_t particles = 2000;
  std::string output = "-";
  std::uint64_t seed = 0;
};

int run_track(const TrackArgs& args) {
  const LabelPool pool = load_input(args.input, args.gold);
  SFilterConfig config;
  config.sigma = args.sigma;
  if (args.mode == "grid") {
    config.mode = FilterMode::grid;
  } else if (args.mode == "particle") {
    config.mode = FilterMode::particle;
  } else {
    throw UsageError(fmt::format("unknown filter mode '{}'", args.mode));
  }
  config.grid_resolution = args.resolution;
  config.particles = args.particles;
  config.seed = args.seed;
  const auto tracks = track_pool(pool, config);
  Output out(args.output);
  write_trajectory_csv(out.stream(), tracks, pool.worker_ids);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Truth inference and adaptive labeling benchmarks for crowd labels"};
  app.require_subcommand(1);

  AggregateArgs agg;
  auto* aggregate = app.add_subcommand("aggregate", "Estimate true labels from a full label pool");
  aggregate->add_option("--method", agg.method,
                        "majority, accuracy, sensspec, dawid-skene, glad, reliability, spectral")
      ->capture_default_str();
  aggregate->add_option("--input", agg.input, "Label file, manifest, or fixture name")->required();
  aggregate->add_option("--gold", agg.gold, "Gold CSV for a triples CSV input");
  aggregate->add_option("--output", agg.output, "Estimates file ('-' for stdout)")->capture_default_str();
  aggregate->add_option("--format", agg.format, "csv or json")->capture_default_str();
  aggregate->add_option("--model", agg.model, "Write the fitted worker model as JSON");
  aggregate->add_option("--seed", agg.seed, "Seed for randomized methods")->capture_default_str();

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Replay budgeted adaptive acquisition");
  simulate->add_option("--input", sim.input, "Label file, manifest, or fixture name")->capture_default_str();
  simulate->add_option("--gold", sim.gold, "Gold CSV for a triples CSV input");
  simulate->add_option("--criterion", sim.criterion, "uniform, entropy or uncertainty")->capture_default_str();
  simulate->add_option("--integrator", sim.integrator, "Integrator refitted during the replay")
      ->capture_default_str();
  simulate->add_option("--budget", sim.budget, "Total labels to acquire (overrides --lps)");
  simulate->add_option("--lps", sim.lps, "Comma list of labels per sample; budget = lps x N")
      ->capture_default_str();
  simulate->add_option("--runs", sim.runs, "Runs per budget")->capture_default_str();
  simulate->add_option("--refit-every", sim.refit_every, "Acquisitions between model refits")
      ->capture_default_str();
  simulate->add_option("--warm-start", sim.warm_start, "Uniform labels per sample before the criterion")
      ->capture_default_str();
  simulate->add_option("--output", sim.output, "Result CSV ('-' for stdout)")->capture_default_str();
  simulate->add_option("--trace-dir", sim.trace_dir, "Write one trace CSV per run here");
  simulate->add_option("--seed", sim.seed, "Base seed")->capture_default_str();

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Run the method x lps x run error grid");
  bench->add_option("--config", bench_args.config, "JSON experiment config");
  bench->add_option("--dataset", bench_args.dataset, "Fixture name or pool path");
  bench->add_option("--methods", bench_args.methods, "Comma list of methods");
  bench->add_option("--lps", bench_args.lps, "Comma list of labels per sample");
  bench->add_option("--runs", bench_args.runs, "Runs per cell");
  bench->add_option("--seed", bench_args.seed, "Base seed");
  bench->add_option("--threads", bench_args.threads, "Worker threads (0 = all cores)");
  bench->add_option("--out-dir", bench_args.out_dir, "Output directory (default $CROWDBENCH_OUT)");
  bench->add_option("--formats", bench_args.formats, "Comma list of csv, markdown, json, plot")
      ->capture_default_str();

  SynthArgs syn;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic label pool with gold labels");
  synth->add_option("--config", syn.config, "JSON recipe; flags override its values");
  synth->add_option("--items", syn.items, "Number of samples");
  synth->add_option("--workers", syn.workers, "Number of workers");
  synth->add_option("--labels-per-sample", syn.labels_per_sample, "Labels per sample (minimum)");
  synth->add_option("--max-labels-per-sample", syn.max_labels_per_sample, "Labels per sample (maximum)");
  synth->add_option("--total-labels", syn.total_labels, "Exact total label count");
  synth->add_option("--prior", syn.prior, "P(y = +1)");
  synth->add_option("--skew", syn.skew, "Zipf exponent of worker activity");
  synth->add_option("--family", syn.family, "accuracy, sensspec or glad");
  synth->add_option("--min-accuracy", syn.min_accuracy, "Accuracy family lower bound");
  synth->add_option("--max-accuracy", syn.max_accuracy, "Accuracy family upper bound");
  synth->add_option("--name", syn.name, "Pool name");
  synth->add_option("--output", syn.output, "Labels CSV; gold goes to <stem>_gold.csv");
  synth->add_option("--json", syn.json, "Also write the pool as a JSON document");
  synth->add_option("--seed", syn.seed, "Generator seed");

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "Re-render a saved JSON report");
  report->add_option("--input", rep.input, "Report JSON written by bench")->required();
  report->add_option("--format", rep.format, "csv, markdown, json or plot")->capture_default_str();
  report->add_option("--output", rep.output, "Destination ('-' for stdout)")->capture_default_str();
  report->add_option("--seed", rep.seed, "Accepted for uniformity; unused");

  TrackArgs trk;
  auto* track = app.add_subcommand("track", "Track worker accuracies over arrival order");
  track->add_option("--input", trk.input, "Label file, manifest, or fixture name")->required();
  track->add_option("--gold", trk.gold, "Gold CSV for a triples CSV input");
  track->add_option("--sigma", trk.sigma, "Per-step drift standard deviation")->capture_default_str();
  track->add_option("--mode", trk.mode, "grid or particle")->capture_default_str();
  track->add_option("--resolution", trk.resolution, "Grid cells")->capture_default_str();
  track->add_option("--particles", trk.particles, "Particle count")->capture_default_str();
  track->add_option("--output", trk.output, "Trajectory CSV ('-' for stdout)")->capture_default_str();
  track->add_option("--seed", trk.seed, "Particle seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kUsageError;
  }

  try {
    if (aggregate->parsed()) return run_aggregate(agg);
    if (simulate->parsed()) return run_simulate(sim);
    if (bench->parsed()) return run_bench(bench_args);
    if (synth->parsed()) return run_synth(syn);
    if (report->parsed()) return run_report(rep);
    if (track->parsed()) return run_track(trk);
  } catch (const DataError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kDataError;
  } catch (const UsageError& e) {
    fmt::print(stderr, "usage error: {}\n", e.what());
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "usage error: {}\n", e.what());
    return kUsageError;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kDataError;
  }
  return kUsageError;
}

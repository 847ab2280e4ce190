#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

#include <fmt/core.h>

#include "crowd/bench.hpp"
#include "crowd/errors.hpp"
#include "crowd/rng.hpp"
#include "crowd/selection.hpp"

#ifndef CROWD_SOURCE_DATA_DIR
#define CROWD_SOURCE_DATA_DIR "data"
#endif

namespace crowd {
namespace {

struct MethodInfo {
  Method method;
  std::string_view name;
  std::string_view title;
};

constexpr MethodInfo kMethods[] = {
    {Method::majority, "majority", "Majority voting"},
    {Method::entropy, "entropy", "Entropy"},
    {Method::uncertainty, "uncertainty", "Uncertainty"},
    {Method::accuracy, "accuracy", "Accuracy"},
    {Method::acc_uncert, "acc-uncert", "Acc. & Uncert."},
    {Method::sensspec, "sensspec", "Sen., Spe."},
    {Method::reliability, "reliability", "Reliability"},
    {Method::glad, "glad", "GLAD"},
    {Method::dawid_skene, "dawid-skene", "Dawid-Skene"},
    {Method::spectral, "spectral", "Spectral"},
};

const MethodInfo& info(Method m) {
  for (const auto& i : kMethods) {
    if (i.method == m) return i;
  }
  throw std::invalid_argument("unknown method");
}

Integrator batch_integrator(Method m) {
  switch (m) {
    case Method::majority: return Integrator::majority;
    case Method::accuracy: return Integrator::accuracy;
    case Method::sensspec: return Integrator::sensspec;
    case Method::reliability: return Integrator::reliability;
    case Method::glad: return Integrator::glad;
    case Method::dawid_skene: return Integrator::dawid_skene;
    case Method::spectral: return Integrator::spectral;
    default: throw std::invalid_argument("not a batch method");
  }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& value) {
  if (j.contains(key)) value = j.at(key).get<T>();
}

}  // namespace

std::string_view to_string(Method method) { return info(method).name; }
std::string_view display_name(Method method) { return info(method).title; }

Method method_from_string(std::string_view name) {
  for (const auto& i : kMethods) {
    if (i.name == name) return i.method;
  }
  throw std::invalid_argument(fmt::format("unknown method '{}'", name));
}

std::vector<Method> default_methods() {
  return {Method::majority, Method::entropy,  Method::uncertainty, Method::accuracy,
          Method::acc_uncert, Method::sensspec, Method::reliability, Method::glad};
}

bool is_selection_method(Method m) {
  return m == Method::entropy || m == Method::uncertainty || m == Method::acc_uncert;
}

void validate(const ExperimentConfig& c) {
  if (c.runs == 0) throw std::invalid_argument("experiment: runs must be at least 1");
  if (c.methods.empty()) throw std::invalid_argument("experiment: no methods");
  if (c.lps.empty()) throw std::invalid_argument("experiment: empty lps grid");
  for (auto l : c.lps) {
    if (l == 0) throw std::invalid_argument("experiment: lps values must be at least 1");
  }
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  read(j, "dataset", c.dataset);
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& m : j.at("methods")) c.methods.push_back(method_from_string(m.get<std::string>()));
  }
  read(j, "lps", c.lps);
  read(j, "runs", c.runs);
  read(j, "seed", c.seed);
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  read(j, "threads", c.threads);
  read(j, "refit_every", c.refit_every);
  read(j, "entropy_warm_start", c.entropy_warm_start);
  read(j, "kos_iterations", c.integrator.kos_iterations);
  if (j.contains("em")) {
    read(j.at("em"), "max_iterations", c.integrator.em.max_iterations);
    read(j.at("em"), "tolerance", c.integrator.em.tolerance);
  }
  validate(c);
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json methods = nlohmann::json::array();
  for (auto m : c.methods) methods.push_back(std::string(to_string(m)));
  return {{"dataset", c.dataset},
          {"methods", methods},
          {"lps", c.lps},
          {"runs", c.runs},
          {"seed", c.seed},
          {"output_dir", c.output_dir.string()},
          {"threads", c.threads},
          {"refit_every", c.refit_every},
          {"entropy_warm_start", c.entropy_warm_start},
          {"kos_iterations", c.integrator.kos_iterations},
          {"em", {{"max_iterations", c.integrator.em.max_iterations},
                  {"tolerance", c.integrator.em.tolerance}}}};
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open config '{}'", path.string()));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
  try {
    return config_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::filesystem::path default_output_dir() {
  if (const char* env = std::getenv("CROWDBENCH_OUT"); env && *env) return env;
  return "crowdbench-out";
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("CROWD_DATA_DIR"); env && *env) return env;
  return CROWD_SOURCE_DATA_DIR;
}

LabelPool load_dataset(std::string_view dataset) {
  const std::filesystem::path as_path(dataset);
  if (std::filesystem::exists(as_path) && std::filesystem::is_regular_file(as_path)) {
    return load_pool(as_path);
  }
  const auto fixture = default_data_dir() / fmt::format("{}.csv", dataset);
  if (std::filesystem::exists(fixture)) return load_pool(fixture);
  throw DataError(fmt::format("dataset '{}' not found (looked for '{}')", dataset, fixture.string()));
}

double run_cell(const LabelPool& pool, Method method, std::size_t lps, std::size_t run,
                const ExperimentConfig& config) {
  const std::uint64_t method_seed = derive_seed(config.seed, to_string(method), lps, run);
  IntegratorOptions options = config.integrator;
  options.seed = method_seed;
  options.em.seed = method_seed;
  if (is_selection_method(method)) {
    ReplayOptions replay;
    replay.refit_every = config.refit_every;
    replay.integrator = options;
    Criterion criterion = Criterion::uncertainty;
    Integrator integrator = Integrator::majority;
    if (method == Method::entropy) {
      criterion = Criterion::entropy;
      replay.initial_per_sample = config.entropy_warm_start;
    } else if (method == Method::acc_uncert) {
      integrator = Integrator::accuracy;
    }
    const auto result =
        adaptive_replay(pool, lps * pool.n_samples(), criterion, integrator, replay, method_seed);
    return score(result.estimates, pool.gold);
  }
  // Batch methods share one subsample per (lps, run).
  const LabelMatrix a = subsample(pool, lps, derive_seed(config.seed, "data", lps, run));
  return score(integrate(batch_integrator(method), a, options).estimates, pool.gold);
}

void summarize(CellResult& cell) {
  const auto n = static_cast<double>(cell.errors.size());
  double sum = 0.0;
  for (double e : cell.errors) sum += e;
  cell.mean = cell.errors.empty() ? 0.0 : sum / n;
  double ss = 0.0;
  for (double e : cell.errors) ss += (e - cell.mean) * (e - cell.mean);
  cell.sd = cell.errors.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  return run_experiment(load_dataset(config.dataset), config);
}

ExperimentReport run_experiment(const LabelPool& pool, const ExperimentConfig& config) {
  validate(config);
  validate(pool);
  ExperimentReport report;
  report.dataset = pool.name.empty() ? config.dataset : pool.name;
  report.n_samples = pool.n_samples();
  report.n_workers = pool.n_workers();
  report.total_labels = pool.total_labels();
  report.seed = config.seed;
  report.runs = config.runs;
  report.lps = config.lps;
  for (auto m : config.methods) report.methods.emplace_back(to_string(m));

  struct Job {
    std::size_t cell, run;
  };
  std::vector<Job> jobs;
  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    for (std::size_t l = 0; l < config.lps.size(); ++l) {
      report.cells.push_back({report.methods[m], config.lps[l],
                              std::vector<double>(config.runs, 0.0), 0.0, 0.0});
      for (std::size_t r = 0; r < config.runs; ++r) jobs.push_back({report.cells.size() - 1, r});
    }
  }
  // Longest jobs first keeps the tail short; results land in fixed slots.
  auto cost = [&](const Job& j) {
    const auto m = config.methods[j.cell / config.lps.size()];
    return (is_selection_method(m) || m == Method::glad ? 4 : 1) * report.cells[j.cell].lps;
  };
  std::stable_sort(jobs.begin(), jobs.end(),
                   [&](const Job& a, const Job& b) { return cost(a) > cost(b); });

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      const Job& job = jobs[k];
      auto& cell = report.cells[job.cell];
      try {
        cell.errors[job.run] = run_cell(pool, method_from_string(cell.method), cell.lps, job.run, config);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = jobs.size();
      }
    }
  };
  std::size_t threads = config.threads ? config.threads : std::thread::hardware_concurrency();
  threads = std::clamp<std::size_t>(threads, 1, jobs.size());
  {
    std::vector<std::jthread> pool_threads;
    for (std::size_t t = 1; t < threads; ++t) pool_threads.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);
  for (auto& cell : report.cells) summarize(cell);
  return report;
}

const CellResult& ExperimentReport::cell(std::string_view method, std::size_t l) const {
  for (const auto& c : cells) {
    if (c.method == method && c.lps == l) return c;
  }
  throw std::out_of_range(fmt::format("report has no cell ({}, {})", method, l));
}

}  // namespace crowd

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/core.h>

#include "crowd/label_store.hpp"
#include "crowd/numerics.hpp"
#include "crowd/rng.hpp"

namespace crowd {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(fmt::format("synth config: {}", what));
}

bool unit_range(double lo, double hi) { return 0.0 <= lo && lo <= hi && hi <= 1.0; }

struct FamilyCheck {
  void operator()(const AccuracyFamily& f) const {
    require(unit_range(f.min_accuracy, f.max_accuracy), "accuracy range must lie in [0, 1]");
  }
  void operator()(const SensSpecFamily& f) const {
    require(unit_range(f.min_sensitivity, f.max_sensitivity), "sensitivity range invalid");
    require(unit_range(f.min_specificity, f.max_specificity), "specificity range invalid");
  }
  void operator()(const GladFamily& f) const {
    require(f.ability_sd >= 0.0 && f.log_inverse_difficulty_sd >= 0.0,
            "standard deviations must be non-negative");
    require(f.spammer_fraction >= 0.0 && f.adversarial_fraction >= 0.0 &&
                f.spammer_fraction + f.adversarial_fraction <= 1.0,
            "worker fractions must lie in [0, 1]");
    require(f.hard_fraction >= 0.0 && f.hard_fraction <= 1.0, "hard fraction must lie in [0, 1]");
  }
};

std::string padded(char prefix, std::size_t i, std::size_t n) {
  const auto width = std::to_string(std::max<std::size_t>(n, 1) - 1).size();
  return fmt::format("{}{:0{}}", prefix, i, width);
}

}  // namespace

void validate(const SynthConfig& c) {
  require(c.n_samples >= 1, "n_samples must be positive");
  require(c.n_workers >= 1, "n_workers must be positive");
  require(c.class_prior >= 0.0 && c.class_prior <= 1.0, "class prior must lie in [0, 1]");
  require(c.min_labels_per_sample >= 1, "labels per sample must be at least 1");
  require(c.min_labels_per_sample <= c.max_labels_per_sample, "label range is empty");
  require(c.max_labels_per_sample <= c.n_workers,
          "labels per sample cannot exceed the number of workers");
  if (c.total_labels) {
    require(*c.total_labels >= c.n_samples * c.min_labels_per_sample &&
                *c.total_labels <= c.n_samples * c.max_labels_per_sample,
            "total labels unreachable within the per-sample range");
  }
  require(c.activity_skew >= 0.0, "activity skew must be non-negative");
  std::visit(FamilyCheck{}, c.family);
}

SynthResult synth_generate(const SynthConfig& c) {
  validate(c);
  Rng rng(c.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t n = c.n_samples;
  const std::size_t r = c.n_workers;

  SynthResult out;
  out.gold.labels.resize(n);
  for (auto& y : out.gold.labels) y = unit(rng) < c.class_prior ? 1 : -1;

  // Worker parameters: (p_correct_if_positive, p_correct_if_negative) or GLAD ability.
  std::vector<double> sens(r), spec(r), ability(r);
  std::vector<double> inverse_difficulty(n, 1.0);
  const auto* glad = std::get_if<GladFamily>(&c.family);
  for (std::size_t j = 0; j < r; ++j) {
    if (const auto* f = std::get_if<AccuracyFamily>(&c.family)) {
      sens[j] = spec[j] = f->min_accuracy + (f->max_accuracy - f->min_accuracy) * unit(rng);
      out.worker_parameter.push_back(sens[j]);
    } else if (const auto* f = std::get_if<SensSpecFamily>(&c.family)) {
      sens[j] = f->min_sensitivity + (f->max_sensitivity - f->min_sensitivity) * unit(rng);
      spec[j] = f->min_specificity + (f->max_specificity - f->min_specificity) * unit(rng);
      out.worker_parameter.push_back(0.5 * (sens[j] + spec[j]));
    } else {
      const double u = unit(rng);
      double a = glad->ability_mean + glad->ability_sd * gauss(rng);
      if (u < glad->spammer_fraction) {
        a = 0.05 * gauss(rng);
      } else if (u < glad->spammer_fraction + glad->adversarial_fraction) {
        a = -std::abs(a);
      }
      ability[j] = a;
      out.worker_parameter.push_back(a);
    }
  }
  if (glad) {
    for (auto& b : inverse_difficulty) {
      const double mean = unit(rng) < glad->hard_fraction ? glad->hard_log_inverse_difficulty_mean
                                                          : glad->log_inverse_difficulty_mean;
      b = std::exp(mean + glad->log_inverse_difficulty_sd * gauss(rng));
    }
  }

  // Labels per sample, optionally adjusted to an exact total.
  std::vector<std::size_t> count(n);
  std::uniform_int_distribution<std::size_t> span(c.min_labels_per_sample,
                                                  c.max_labels_per_sample);
  for (auto& k : count) k = span(rng);
  if (c.total_labels) {
    std::uniform_int_distribution<std::size_t> any(0, n - 1);
    std::size_t total = std::accumulate(count.begin(), count.end(), std::size_t{0});
    while (total < *c.total_labels) {
      const std::size_t i = any(rng);
      if (count[i] < c.max_labels_per_sample) ++count[i], ++total;
    }
    while (total > *c.total_labels) {
      const std::size_t i = any(rng);
      if (count[i] > c.min_labels_per_sample) --count[i], --total;
    }
  }

  // Zipf-like activity weights over a random ranking of workers.
  std::vector<std::size_t> rank(r);
  std::iota(rank.begin(), rank.end(), std::size_t{0});
  std::shuffle(rank.begin(), rank.end(), rng);
  std::vector<double> weight(r);
  for (std::size_t j = 0; j < r; ++j) {
    weight[j] = std::pow(static_cast<double>(rank[j] + 1), -c.activity_skew);
  }

  std::vector<std::vector<std::size_t>> assigned(n);
  std::vector<std::size_t> sample_order(n);
  std::iota(sample_order.begin(), sample_order.end(), std::size_t{0});
  std::shuffle(sample_order.begin(), sample_order.end(), rng);
  // Seat every worker once so all R workers appear in the pool.
  for (std::size_t j = 0; j < r; ++j) {
    for (std::size_t attempt = 0; attempt < n; ++attempt) {
      const std::size_t i = sample_order[(j + attempt) % n];
      if (assigned[i].size() < count[i]) {
        assigned[i].push_back(j);
        break;
      }
    }
  }
  std::vector<std::pair<double, std::size_t>> keys;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t need = count[i] - assigned[i].size();
    if (need == 0) continue;
    keys.clear();
    for (std::size_t j = 0; j < r; ++j) {
      if (std::find(assigned[i].begin(), assigned[i].end(), j) != assigned[i].end()) continue;
      // Efraimidis-Spirakis keys give weighted sampling without replacement.
      keys.emplace_back(std::log(std::max(unit(rng), 1e-300)) / weight[j], j);
    }
    std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(need), keys.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; k < need; ++k) assigned[i].push_back(keys[k].second);
  }

  LabelPool& pool = out.pool;
  pool.name = c.name;
  for (std::size_t i = 0; i < n; ++i) pool.sample_ids.push_back(padded('s', i, n));
  for (std::size_t j = 0; j < r; ++j) pool.worker_ids.push_back(padded('w', j, r));
  pool.labels.resize(n);
  std::size_t total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(assigned[i].begin(), assigned[i].end());
    for (std::size_t j : assigned[i]) {
      const int y = out.gold.labels[i];
      double p_correct;
      if (glad) {
        p_correct = sigmoid(ability[j] * inverse_difficulty[i]);
      } else {
        p_correct = y == 1 ? sens[j] : spec[j];
      }
      const int label = unit(rng) < p_correct ? y : -y;
      pool.labels[i].push_back({j, label, total++});
    }
  }
  // Interleave arrivals in time.
  std::vector<std::size_t> orders(total);
  std::iota(orders.begin(), orders.end(), std::size_t{0});
  std::shuffle(orders.begin(), orders.end(), rng);
  for (auto& row : pool.labels) {
    for (auto& l : row) l.order = orders[l.order];
  }
  pool.gold = out.gold;
  return out;
}

namespace {

template <typename T>
void read(const nlohmann::json& j, const char* key, T& value) {
  if (j.contains(key)) value = j.at(key).get<T>();
}

struct FamilyJson {
  nlohmann::json operator()(const AccuracyFamily& f) const {
    return {{"type", "accuracy"}, {"min_accuracy", f.min_accuracy}, {"max_accuracy", f.max_accuracy}};
  }
  nlohmann::json operator()(const SensSpecFamily& f) const {
    return {{"type", "sensspec"},
            {"min_sensitivity", f.min_sensitivity},
            {"max_sensitivity", f.max_sensitivity},
            {"min_specificity", f.min_specificity},
            {"max_specificity", f.max_specificity}};
  }
  nlohmann::json operator()(const GladFamily& f) const {
    return {{"type", "glad"},
            {"ability_mean", f.ability_mean},
            {"ability_sd", f.ability_sd},
            {"spammer_fraction", f.spammer_fraction},
            {"adversarial_fraction", f.adversarial_fraction},
            {"log_inverse_difficulty_mean", f.log_inverse_difficulty_mean},
            {"log_inverse_difficulty_sd", f.log_inverse_difficulty_sd},
            {"hard_fraction", f.hard_fraction},
            {"hard_log_inverse_difficulty_mean", f.hard_log_inverse_difficulty_mean}};
  }
};

}  // namespace

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig c;
  read(j, "name", c.name);
  read(j, "n_samples", c.n_samples);
  read(j, "n_workers", c.n_workers);
  read(j, "class_prior", c.class_prior);
  read(j, "min_labels_per_sample", c.min_labels_per_sample);
  read(j, "max_labels_per_sample", c.max_labels_per_sample);
  if (j.contains("total_labels") && !j.at("total_labels").is_null()) {
    c.total_labels = j.at("total_labels").get<std::size_t>();
  }
  read(j, "activity_skew", c.activity_skew);
  read(j, "seed", c.seed);
  if (j.contains("family")) {
    const auto& f = j.at("family");
    const auto type = f.value("type", std::string("accuracy"));
    if (type == "accuracy") {
      AccuracyFamily a;
      read(f, "min_accuracy", a.min_accuracy);
      read(f, "max_accuracy", a.max_accuracy);
      c.family = a;
    } else if (type == "sensspec") {
      SensSpecFamily s;
      read(f, "min_sensitivity", s.min_sensitivity);
      read(f, "max_sensitivity", s.max_sensitivity);
      read(f, "min_specificity", s.min_specificity);
      read(f, "max_specificity", s.max_specificity);
      c.family = s;
    } else if (type == "glad") {
      GladFamily g;
      read(f, "ability_mean", g.ability_mean);
      read(f, "ability_sd", g.ability_sd);
      read(f, "spammer_fraction", g.spammer_fraction);
      read(f, "adversarial_fraction", g.adversarial_fraction);
      read(f, "log_inverse_difficulty_mean", g.log_inverse_difficulty_mean);
      read(f, "log_inverse_difficulty_sd", g.log_inverse_difficulty_sd);
      read(f, "hard_fraction", g.hard_fraction);
      read(f, "hard_log_inverse_difficulty_mean", g.hard_log_inverse_difficulty_mean);
      c.family = g;
    } else {
      throw std::invalid_argument(fmt::format("synth config: unknown family '{}'", type));
    }
  }
  validate(c);
  return c;
}

nlohmann::json to_json(const SynthConfig& c) {
  nlohmann::json j = {{"name", c.name},
                      {"n_samples", c.n_samples},
                      {"n_workers", c.n_workers},
                      {"class_prior", c.class_prior},
                      {"family", std::visit(FamilyJson{}, c.family)},
                      {"min_labels_per_sample", c.min_labels_per_sample},
                      {"max_labels_per_sample", c.max_labels_per_sample},
                      {"activity_skew", c.activity_skew},
                      {"seed", c.seed}};
  j["total_labels"] = c.total_labels ? nlohmann::json(*c.total_labels) : nlohmann::json(nullptr);
  return j;
}

}  // namespace crowd

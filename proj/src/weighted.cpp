#include <cmath>
#include <stdexcept>

#include <fmt/core.h>

#include "crowd/aggregators.hpp"
#include "crowd/numerics.hpp"

namespace crowd {
namespace {

double logit(double p) { return safe_log(p) - safe_log(1.0 - p); }

void require_workers(std::size_t have, const LabelMatrix& a, const char* what) {
  if (have != a.n_workers()) {
    throw std::invalid_argument(fmt::format("weighted_posterior: {} has {} workers, matrix has {}",
                                            what, have, a.n_workers()));
  }
}

struct DimensionCheck {
  const LabelMatrix& a;
  void operator()(const AccuracyModel& m) const {
    if (m.shared) {
      if (m.accuracy.empty()) throw std::invalid_argument("weighted_posterior: empty accuracy model");
    } else {
      require_workers(m.accuracy.size(), a, "accuracy model");
    }
  }
  void operator()(const SensSpecModel& m) const {
    require_workers(m.sensitivity.size(), a, "sensitivity model");
    require_workers(m.specificity.size(), a, "specificity model");
  }
  void operator()(const ConfusionModel& m) const {
    require_workers(m.confusion.size(), a, "confusion model");
    if (m.class_prior.size() != 2) {
      throw std::invalid_argument("weighted_posterior: confusion model must be binary");
    }
    for (const auto& c : m.confusion) {
      if (c.rows() != 2 || c.cols() != 2) {
        throw std::invalid_argument("weighted_posterior: confusion matrices must be 2 x 2");
      }
    }
  }
  void operator()(const GladModel& m) const {
    require_workers(static_cast<std::size_t>(m.ability.size()), a, "GLAD model");
    if (static_cast<std::size_t>(m.inverse_difficulty.size()) != a.n_samples()) {
      throw std::invalid_argument(
          fmt::format("weighted_posterior: GLAD model has {} samples, matrix has {}",
                      m.inverse_difficulty.size(), a.n_samples()));
    }
  }
};

struct PriorLogOdds {
  double operator()(const AccuracyModel& m) const { return logit(m.class_prior); }
  double operator()(const SensSpecModel& m) const { return logit(m.class_prior); }
  double operator()(const ConfusionModel& m) const {
    return safe_log(m.class_prior(1)) - safe_log(m.class_prior(0));
  }
  double operator()(const GladModel& m) const { return logit(m.class_prior); }
};

struct ResponseLogOdds {
  std::size_t i;
  std::size_t j;
  int z;

  double operator()(const AccuracyModel& m) const {
    return z * logit(m.shared ? m.accuracy.front() : m.accuracy[j]);
  }
  double operator()(const SensSpecModel& m) const {
    const double sens = m.sensitivity[j];
    const double spec = m.specificity[j];
    return z == 1 ? safe_log(sens) - safe_log(1.0 - spec) : safe_log(1.0 - sens) - safe_log(spec);
  }
  double operator()(const ConfusionModel& m) const {
    const auto& pi = m.confusion[j];
    const Eigen::Index col = z == 1 ? 1 : 0;
    return safe_log(pi(1, col)) - safe_log(pi(0, col));
  }
  double operator()(const GladModel& m) const {
    return z * m.ability(static_cast<Eigen::Index>(j)) *
           m.inverse_difficulty(static_cast<Eigen::Index>(i));
  }
};

double row_log_odds(const LabelMatrix& a, std::size_t i, const WorkerModel& model) {
  double lo = std::visit(PriorLogOdds{}, model);
  for (const auto& e : a.row(i)) lo += std::visit(ResponseLogOdds{i, e.worker, e.label}, model);
  return lo;
}

}  // namespace

double posterior_log_odds(const LabelMatrix& a, std::size_t sample, const WorkerModel& model) {
  return row_log_odds(a, sample, model);
}

double prior_log_odds(const WorkerModel& model) { return std::visit(PriorLogOdds{}, model); }

double response_log_odds(const WorkerModel& model, std::size_t sample, std::size_t worker,
                         int label) {
  return std::visit(ResponseLogOdds{sample, worker, label}, model);
}

EstimateSet weighted_posterior(const LabelMatrix& a, const WorkerModel& model) {
  std::visit(DimensionCheck{a}, model);
  Eigen::VectorXd post(static_cast<Eigen::Index>(a.n_samples()));
  for (std::size_t i = 0; i < a.n_samples(); ++i) {
    post(static_cast<Eigen::Index>(i)) = sigmoid(row_log_odds(a, i, model));
  }
  return EstimateSet(std::move(post));
}

namespace {

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

struct ModelJson {
  nlohmann::json operator()(const AccuracyModel& m) const {
    return {{"type", m.shared ? "uniform-accuracy" : "accuracy"},
            {"class_prior", m.class_prior},
            {"accuracy", m.accuracy}};
  }
  nlohmann::json operator()(const SensSpecModel& m) const {
    return {{"type", "sensitivity-specificity"},
            {"class_prior", m.class_prior},
            {"sensitivity", m.sensitivity},
            {"specificity", m.specificity},
            {"prior",
             {{"a1", m.prior.a1},
              {"a2", m.prior.a2},
              {"b1", m.prior.b1},
              {"b2", m.prior.b2},
              {"p1", m.prior.p1},
              {"p2", m.prior.p2}}}};
  }
  nlohmann::json operator()(const ConfusionModel& m) const {
    nlohmann::json mats = nlohmann::json::array();
    for (const auto& c : m.confusion) {
      nlohmann::json rows = nlohmann::json::array();
      for (Eigen::Index r = 0; r < c.rows(); ++r) rows.push_back(to_vector(c.row(r).transpose()));
      mats.push_back(std::move(rows));
    }
    return {{"type", "confusion"}, {"class_prior", to_vector(m.class_prior)}, {"confusion", mats}};
  }
  nlohmann::json operator()(const GladModel& m) const {
    return {{"type", "glad"},
            {"class_prior", m.class_prior},
            {"ability", to_vector(m.ability)},
            {"inverse_difficulty", to_vector(m.inverse_difficulty)}};
  }
};

}  // namespace

nlohmann::json to_json(const WorkerModel& model) { return std::visit(ModelJson{}, model); }

}  // namespace crowd

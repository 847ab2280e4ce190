#include <algorithm>
#include <cmath>

#include "crowd/aggregators.hpp"
#include "crowd/numerics.hpp"

namespace crowd {
namespace {

double log_sum_exp(double x, double y) {
  const double m = std::max(x, y);
  return m + std::log(std::exp(x - m) + std::exp(y - m));
}

double accuracy_objective(const LabelMatrix& a, const AccuracyModel& m, const AccuracyOptions& opt) {
  std::vector<double> log_right(a.n_workers()), log_wrong(a.n_workers());
  for (std::size_t j = 0; j < a.n_workers(); ++j) {
    const double p = m.shared ? m.accuracy.front() : m.accuracy[j];
    log_right[j] = safe_log(p);
    log_wrong[j] = safe_log(1.0 - p);
  }
  double ll = 0.0;
  for (std::size_t i = 0; i < a.n_samples(); ++i) {
    double pos = safe_log(m.class_prior);
    double neg = safe_log(1.0 - m.class_prior);
    for (const auto& e : a.row(i)) {
      pos += e.label == 1 ? log_right[e.worker] : log_wrong[e.worker];
      neg += e.label == -1 ? log_right[e.worker] : log_wrong[e.worker];
    }
    ll += log_sum_exp(pos, neg);
  }
  for (double p : m.accuracy) {
    ll += opt.prior_correct * safe_log(p) + opt.prior_incorrect * safe_log(1.0 - p);
  }
  if (!opt.class_prior) ll += safe_log(m.class_prior) + safe_log(1.0 - m.class_prior);
  return ll;
}

AccuracyModel m_step(const LabelMatrix& a, const Eigen::VectorXd& mu, const AccuracyOptions& opt) {
  AccuracyModel m;
  m.shared = opt.shared;
  const double c1 = opt.prior_correct;
  const double c0 = opt.prior_incorrect;
  auto correct_weight = [&](const Response& e) {
    const double p = mu(static_cast<Eigen::Index>(e.sample));
    return e.label == 1 ? p : 1.0 - p;
  };
  if (opt.shared) {
    double correct = 0.0;
    for (const auto& e : a.entries()) correct += correct_weight(e);
    m.accuracy = {(correct + c1) / (static_cast<double>(a.size()) + c1 + c0)};
  } else {
    m.accuracy.resize(a.n_workers());
    for (std::size_t j = 0; j < a.n_workers(); ++j) {
      double correct = 0.0;
      for (std::size_t k : a.worker_entries(j)) correct += correct_weight(a.entries()[k]);
      const double n = static_cast<double>(a.worker_size(j));
      m.accuracy[j] = n + c1 + c0 > 0.0 ? (correct + c1) / (n + c1 + c0) : 0.5;
    }
  }
  m.class_prior = opt.class_prior ? *opt.class_prior
                                  : (mu.sum() + 1.0) / (static_cast<double>(a.n_samples()) + 2.0);
  return m;
}

Eigen::VectorXd e_step(const LabelMatrix& a, const AccuracyModel& m) {
  std::vector<double> weight(a.n_workers());
  for (std::size_t j = 0; j < a.n_workers(); ++j) {
    const double p = m.shared ? m.accuracy.front() : m.accuracy[j];
    weight[j] = safe_log(p) - safe_log(1.0 - p);
  }
  const double prior = safe_log(m.class_prior) - safe_log(1.0 - m.class_prior);
  Eigen::VectorXd mu(static_cast<Eigen::Index>(a.n_samples()));
  for (std::size_t i = 0; i < a.n_samples(); ++i) {
    double lo = prior;
    for (const auto& e : a.row(i)) lo += e.label * weight[e.worker];
    mu(static_cast<Eigen::Index>(i)) = sigmoid(lo);
  }
  return mu;
}

double max_change(const AccuracyModel& x, const AccuracyModel& y) {
  double d = std::abs(x.class_prior - y.class_prior);
  for (std::size_t j = 0; j < x.accuracy.size() && j < y.accuracy.size(); ++j) {
    d = std::max(d, std::abs(x.accuracy[j] - y.accuracy[j]));
  }
  return d;
}

}  // namespace

Fit<AccuracyModel> accuracy_em(const LabelMatrix& a, const AccuracyOptions& options,
                               const AccuracyModel* warm_start) {
  AccuracyModel model;
  if (warm_start && warm_start->shared == options.shared &&
      (options.shared || warm_start->accuracy.size() == a.n_workers())) {
    model = *warm_start;
  } else {
    model = m_step(a, majority_vote(a).posteriors(), options);
  }

  EmDiagnostics diag;
  Eigen::VectorXd mu;
  for (std::size_t it = 0; it < options.em.max_iterations; ++it) {
    mu = e_step(a, model);
    AccuracyModel next = m_step(a, mu, options);
    const double change = max_change(model, next);
    model = std::move(next);
    diag.iterations = it + 1;
    diag.objective.push_back(accuracy_objective(a, model, options));
    if (change < options.em.tolerance) {
      diag.converged = true;
      break;
    }
  }
  EstimateSet estimates(e_step(a, model));
  return {std::move(model), std::move(estimates), std::move(diag)};
}

}  // namespace crowd

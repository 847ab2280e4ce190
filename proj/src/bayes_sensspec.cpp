#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crowd/aggregators.hpp"
#include "crowd/numerics.hpp"

namespace crowd {
namespace {

double log_sum_exp(double x, double y) {
  const double m = std::max(x, y);
  return m + std::log(std::exp(x - m) + std::exp(y - m));
}

double ratio_or(double num, double den, double fallback) { return den > 0.0 ? num / den : fallback; }

// MAP updates given current posteriors mu_i = P(y_i = +1).
void m_step(const LabelMatrix& a, const Eigen::VectorXd& mu, SensSpecModel& m) {
  const SensSpecPrior& h = m.prior;
  for (std::size_t j = 0; j < a.n_workers(); ++j) {
    double pos_hits = 0.0, pos_mass = 0.0, neg_hits = 0.0, neg_mass = 0.0;
    for (std::size_t k : a.worker_entries(j)) {
      const auto& e = a.entries()[k];
      const double p = mu(static_cast<Eigen::Index>(e.sample));
      pos_mass += p;
      neg_mass += 1.0 - p;
      if (e.label == 1) {
        pos_hits += p;
      } else {
        neg_hits += 1.0 - p;
      }
    }
    m.sensitivity[j] =
        ratio_or(h.a1 - 1.0 + pos_hits, h.a1 + h.a2 - 2.0 + pos_mass, m.sensitivity[j]);
    m.specificity[j] =
        ratio_or(h.b1 - 1.0 + neg_hits, h.b1 + h.b2 - 2.0 + neg_mass, m.specificity[j]);
  }
  m.class_prior = ratio_or(h.p1 - 1.0 + mu.sum(),
                           h.p1 + h.p2 - 2.0 + static_cast<double>(a.n_samples()), m.class_prior);
}

double log_prior(const SensSpecModel& m) {
  const SensSpecPrior& h = m.prior;
  double lp = (h.p1 - 1.0) * safe_log(m.class_prior) + (h.p2 - 1.0) * safe_log(1.0 - m.class_prior);
  for (std::size_t j = 0; j < m.sensitivity.size(); ++j) {
    lp += (h.a1 - 1.0) * safe_log(m.sensitivity[j]) + (h.a2 - 1.0) * safe_log(1.0 - m.sensitivity[j]);
    lp += (h.b1 - 1.0) * safe_log(m.specificity[j]) + (h.b2 - 1.0) * safe_log(1.0 - m.specificity[j]);
  }
  return lp;
}

double max_change(const SensSpecModel& x, const SensSpecModel& y) {
  double d = std::abs(x.class_prior - y.class_prior);
  for (std::size_t j = 0; j < x.sensitivity.size(); ++j) {
    d = std::max({d, std::abs(x.sensitivity[j] - y.sensitivity[j]),
                  std::abs(x.specificity[j] - y.specificity[j])});
  }
  return d;
}

}  // namespace

double sensspec_log_likelihood(const LabelMatrix& a, const SensSpecModel& m) {
  double ll = 0.0;
  for (std::size_t i = 0; i < a.n_samples(); ++i) {
    double pos = safe_log(m.class_prior);       // log p+ a_i
    double neg = safe_log(1.0 - m.class_prior);  // log (1 - p+) b_i
    for (const auto& e : a.row(i)) {
      const double sens = m.sensitivity[e.worker];
      const double spec = m.specificity[e.worker];
      pos += e.label == 1 ? safe_log(sens) : safe_log(1.0 - sens);
      neg += e.label == -1 ? safe_log(spec) : safe_log(1.0 - spec);
    }
    ll += log_sum_exp(pos, neg);
  }
  return ll;
}

Fit<SensSpecModel> bayes_sensspec_em(const LabelMatrix& a, const SensSpecPrior& prior,
                                     const EmOptions& options, const SensSpecModel* warm_start) {
  for (double h : {prior.a1, prior.a2, prior.b1, prior.b2, prior.p1, prior.p2}) {
    if (!(h >= 1.0)) {
      throw std::domain_error("bayes_sensspec_em: hyperparameters must be at least 1");
    }
  }
  SensSpecModel model;
  model.prior = prior;
  model.sensitivity.assign(a.n_workers(), 0.5);
  model.specificity.assign(a.n_workers(), 0.5);
  Eigen::VectorXd mu;
  if (warm_start && warm_start->sensitivity.size() == a.n_workers() &&
      warm_start->specificity.size() == a.n_workers()) {
    model.sensitivity = warm_start->sensitivity;
    model.specificity = warm_start->specificity;
    model.class_prior = warm_start->class_prior;
    mu = weighted_posterior(a, model).posteriors();
  } else {
    mu = majority_vote(a).posteriors();
  }

  EmDiagnostics diag;
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    SensSpecModel next = model;
    m_step(a, mu, next);
    const double change = max_change(model, next);
    model = std::move(next);
    mu = weighted_posterior(a, model).posteriors();
    diag.iterations = it + 1;
    diag.objective.push_back(sensspec_log_likelihood(a, model) + log_prior(model));
    if (change < options.tolerance) {
      diag.converged = true;
      break;
    }
  }
  return {std::move(model), EstimateSet(std::move(mu)), std::move(diag)};
}

}  // namespace crowd

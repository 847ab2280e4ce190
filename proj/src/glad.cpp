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

bool has_prior(double variance) { return variance > 0.0; }

double parameter_log_prior(const Eigen::VectorXd& ability, const Eigen::VectorXd& log_beta,
                           const GladOptions& o) {
  double lp = 0.0;
  if (has_prior(o.ability_prior_variance)) {
    lp -= (ability.array() - o.ability_prior_mean).square().sum() / (2.0 * o.ability_prior_variance);
  }
  if (has_prior(o.log_difficulty_prior_variance)) {
    lp -= (log_beta.array() - o.log_difficulty_prior_mean).square().sum() /
          (2.0 * o.log_difficulty_prior_variance);
  }
  return lp;
}

Eigen::VectorXd e_step(const LabelMatrix& a, const Eigen::VectorXd& ability,
                       const Eigen::VectorXd& log_beta, double class_prior) {
  const double prior_logit = safe_log(class_prior) - safe_log(1.0 - class_prior);
  Eigen::VectorXd mu(static_cast<Eigen::Index>(a.n_samples()));
  for (std::size_t i = 0; i < a.n_samples(); ++i) {
    const double beta = std::exp(log_beta(static_cast<Eigen::Index>(i)));
    double lo = prior_logit;
    for (const auto& e : a.row(i)) lo += e.label * ability(static_cast<Eigen::Index>(e.worker)) * beta;
    mu(static_cast<Eigen::Index>(i)) = sigmoid(lo);
  }
  return mu;
}

double marginal_log_likelihood(const LabelMatrix& a, const Eigen::VectorXd& ability,
                               const Eigen::VectorXd& log_beta, double class_prior) {
  double ll = 0.0;
  for (std::size_t i = 0; i < a.n_samples(); ++i) {
    const double beta = std::exp(log_beta(static_cast<Eigen::Index>(i)));
    double pos = safe_log(class_prior);
    double neg = safe_log(1.0 - class_prior);
    for (const auto& e : a.row(i)) {
      const double t = e.label * ability(static_cast<Eigen::Index>(e.worker)) * beta;
      const double ls = log_sigmoid(t);
      pos += ls;
      neg += ls - t;
    }
    ll += log_sum_exp(pos, neg);
  }
  return ll;
}

}  // namespace

double glad_q(const LabelMatrix& a, const Eigen::VectorXd& posterior, const Eigen::VectorXd& ability,
              const Eigen::VectorXd& log_beta, const GladOptions& o) {
  const double lp = safe_log(o.class_prior);
  const double ln = safe_log(1.0 - o.class_prior);
  double q = 0.0;
  for (std::size_t i = 0; i < a.n_samples(); ++i) {
    const double mu = posterior(static_cast<Eigen::Index>(i));
    q += mu * lp + (1.0 - mu) * ln;
    const double beta = std::exp(log_beta(static_cast<Eigen::Index>(i)));
    for (const auto& e : a.row(i)) {
      const double correct = e.label == 1 ? mu : 1.0 - mu;
      const double t = ability(static_cast<Eigen::Index>(e.worker)) * beta;
      // log sigmoid(-t) = log sigmoid(t) - t
      q += log_sigmoid(t) - (1.0 - correct) * t;
    }
  }
  return q + parameter_log_prior(ability, log_beta, o);
}

void glad_q_gradient(const LabelMatrix& a, const Eigen::VectorXd& posterior,
                     const Eigen::VectorXd& ability, const Eigen::VectorXd& log_beta,
                     const GladOptions& o, Eigen::VectorXd& grad_ability,
                     Eigen::VectorXd& grad_log_beta) {
  grad_ability = Eigen::VectorXd::Zero(ability.size());
  grad_log_beta = Eigen::VectorXd::Zero(log_beta.size());
  for (std::size_t i = 0; i < a.n_samples(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double mu = posterior(ii);
    const double beta = std::exp(log_beta(ii));
    for (const auto& e : a.row(i)) {
      const auto jj = static_cast<Eigen::Index>(e.worker);
      const double correct = e.label == 1 ? mu : 1.0 - mu;
      const double residual = correct - sigmoid(ability(jj) * beta);
      grad_ability(jj) += residual * beta;
      grad_log_beta(ii) += residual * ability(jj) * beta;
    }
  }
  if (has_prior(o.ability_prior_variance)) {
    grad_ability.array() -= (ability.array() - o.ability_prior_mean) / o.ability_prior_variance;
  }
  if (has_prior(o.log_difficulty_prior_variance)) {
    grad_log_beta.array() -=
        (log_beta.array() - o.log_difficulty_prior_mean) / o.log_difficulty_prior_variance;
  }
}

double glad_log_likelihood(const LabelMatrix& a, const GladModel& model) {
  return marginal_log_likelihood(a, model.ability, model.inverse_difficulty.array().log().matrix(),
                                 model.class_prior);
}

GladFit glad_em(const LabelMatrix& a, const GladOptions& options, const GladModel* warm_start) {
  if (!(options.class_prior > 0.0 && options.class_prior < 1.0)) {
    throw std::invalid_argument("glad_em: class prior must lie in (0, 1)");
  }
  const auto R = static_cast<Eigen::Index>(a.n_workers());
  const auto N = static_cast<Eigen::Index>(a.n_samples());
  Eigen::VectorXd ability = Eigen::VectorXd::Ones(R);
  Eigen::VectorXd log_beta = Eigen::VectorXd::Zero(N);
  if (warm_start && warm_start->ability.size() == R && warm_start->inverse_difficulty.size() == N &&
      (warm_start->inverse_difficulty.array() > 0.0).all()) {
    ability = warm_start->ability;
    log_beta = warm_start->inverse_difficulty.array().log().matrix();
  }

  GladFit fit;
  EmDiagnostics& diag = fit.diagnostics;
  Eigen::VectorXd grad_a, grad_b;
  double step = 1.0;
  for (std::size_t it = 0; it < options.em.max_iterations; ++it) {
    const Eigen::VectorXd mu = e_step(a, ability, log_beta, options.class_prior);
    const Eigen::VectorXd start_ability = ability;
    const Eigen::VectorXd start_log_beta = log_beta;

    // M-step: gradient ascent on Q with Armijo backtracking.
    double q = glad_q(a, mu, ability, log_beta, options);
    const double q_start = q;
    for (std::size_t inner = 0; inner < options.inner_steps; ++inner) {
      glad_q_gradient(a, mu, ability, log_beta, options, grad_a, grad_b);
      const double g2 = grad_a.squaredNorm() + grad_b.squaredNorm();
      if (g2 < 1e-20) break;
      step = std::min(step * 2.0, 10.0);
      bool accepted = false;
      for (int halving = 0; halving < 50; ++halving) {
        Eigen::VectorXd trial_a = ability + step * grad_a;
        Eigen::VectorXd trial_b = log_beta + step * grad_b;
        const double trial_q = glad_q(a, mu, trial_a, trial_b, options);
        if (trial_q >= q + 1e-4 * step * g2) {
          ability = std::move(trial_a);
          log_beta = std::move(trial_b);
          accepted = trial_q - q > 1e-12 * (1.0 + std::abs(q));
          q = trial_q;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;
    }
    fit.m_step_q.emplace_back(q_start, q);

    const double change = std::max((ability - start_ability).cwiseAbs().maxCoeff(),
                                   (log_beta - start_log_beta).cwiseAbs().maxCoeff());
    diag.iterations = it + 1;
    diag.objective.push_back(
        marginal_log_likelihood(a, ability, log_beta, options.class_prior) +
        parameter_log_prior(ability, log_beta, options));
    if (change < options.em.tolerance) {
      diag.converged = true;
      break;
    }
  }

  fit.model.ability = ability;
  fit.model.inverse_difficulty = log_beta.array().exp().matrix();
  fit.model.class_prior = options.class_prior;
  fit.estimates = EstimateSet(e_step(a, ability, log_beta, options.class_prior));
  return fit;
}

}  // namespace crowd

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "crowd/aggregators.hpp"
#include "crowd/errors.hpp"
#include "crowd/numerics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace crowd;
using namespace oracles;

namespace {

void expect_nondecreasing(const std::vector<double>& trace, double slack, const char* what) {
  for (std::size_t k = 1; k < trace.size(); ++k) {
    EXPECT_GE(trace[k], trace[k - 1] - slack) << what << " iteration " << k;
  }
}

}  // namespace

// --- Dawid-Skene --------------------------------------------------------------------

TEST(DawidSkene, SingleWorkerFixedPoint) {
  const auto a = rows_to_matrix(1, {{1}, {-1}, {1}, {1}, {-1}});
  const auto fit = dawid_skene_em(a);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(fit.estimates.label(i), a.row(i)[0].label);
  const auto& pi = fit.model.confusion[0];
  EXPECT_GT(pi(0, 0), pi(0, 1));
  EXPECT_GT(pi(1, 1), pi(1, 0));
}

TEST(DawidSkene, MatchesGridSearchOracle) {
  const auto a = ds_instance();
  const auto oracle = ds_grid_search(a);
  const auto fit = dawid_skene_em(a);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(fit.estimates.label(i), oracle[i]) << i;
}

TEST(DawidSkene, ContrarianWorker) {
  std::vector<std::vector<int>> rows;
  const int y[10] = {1, -1, 1, 1, -1, -1, 1, -1, 1, 1};
  for (int v : y) rows.push_back({v, v, -v});
  const auto fit = dawid_skene_em(rows_to_matrix(3, rows));
  const auto& pi = fit.model.confusion[2];
  EXPECT_GT(pi(0, 1), pi(0, 0));
  EXPECT_GT(pi(1, 0), pi(1, 1));
}

TEST(DawidSkene, ModelInvariantsAndMultiClass) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CategoricalLabels labels;
  labels.n_samples = 120;
  labels.n_workers = 6;
  labels.n_classes = 3;
  std::vector<std::size_t> truth;
  for (std::size_t i = 0; i < labels.n_samples; ++i) {
    const std::size_t c = rng() % 3;
    truth.push_back(c);
    for (std::size_t j = 0; j < labels.n_workers; ++j) {
      const std::size_t l = u(rng) < 0.75 ? c : (c + 1 + rng() % 2) % 3;
      labels.entries.push_back({i, j, l});
    }
  }
  const auto fit = dawid_skene_em(labels);
  std::size_t right = 0;
  for (std::size_t i = 0; i < labels.n_samples; ++i) {
    Eigen::Index c;
    fit.class_posterior.row(static_cast<Eigen::Index>(i)).maxCoeff(&c);
    right += static_cast<std::size_t>(c) == truth[i];
    EXPECT_NEAR(fit.class_posterior.row(static_cast<Eigen::Index>(i)).sum(), 1.0, 1e-9);
  }
  EXPECT_GE(right, 110u);
  EXPECT_NEAR(fit.model.class_prior.sum(), 1.0, 1e-9);
  for (const auto& pi : fit.model.confusion) {
    EXPECT_TRUE((pi.array() >= 0).all());
    for (Eigen::Index r = 0; r < 3; ++r) EXPECT_NEAR(pi.row(r).sum(), 1.0, 1e-9);
  }
}

TEST(DawidSkene, EmptySampleIsAnError) {
  EXPECT_THROW(dawid_skene_em(LabelMatrix(2, 1, {{0, 0, 1}})), DataError);
}

TEST(DawidSkene, HardIdentityInitAvailable) {
  const auto a = rows_to_matrix(2, {{1, 1}, {-1, -1}, {1, -1}});
  DawidSkeneOptions opt;
  opt.init_diagonal = 1.0;
  EXPECT_NO_THROW(dawid_skene_em(a, opt));
}

// --- Bayesian sensitivity / specificity ------------------------------------------

TEST(SensSpec, SplitSampleIsUndecided) {
  const auto fit = bayes_sensspec_em(rows_to_matrix(2, {{1, -1}}), SensSpecPrior{2, 1, 2, 1, 2, 2});
  EXPECT_NEAR(fit.estimates.posterior(0), 0.5, 1e-9);
}

TEST(SensSpec, SingleObservationOneUpdate) {
  // One sample, one worker saying +1, one iteration from the majority start mu = 1.
  const SensSpecPrior h{3, 2, 4, 2, 2, 3};
  EmOptions opt;
  opt.max_iterations = 1;
  const auto fit = bayes_sensspec_em(rows_to_matrix(1, {{1}}), h, opt);
  const double sens = (h.a1 - 1 + 1.0) / (h.a1 + h.a2 - 2 + 1.0);
  const double spec = (h.b1 - 1 + 0.0) / (h.b1 + h.b2 - 2 + 0.0);
  const double prior = (h.p1 - 1 + 1.0) / (h.p1 + h.p2 - 2 + 1.0);
  EXPECT_NEAR(fit.model.sensitivity[0], sens, 1e-12);
  EXPECT_NEAR(fit.model.specificity[0], spec, 1e-12);
  EXPECT_NEAR(fit.model.class_prior, prior, 1e-12);
  const double a = prior * sens, b = (1 - prior) * (1 - spec);
  EXPECT_NEAR(fit.estimates.posterior(0), a / (a + b), 1e-12);
}

TEST(SensSpec, PerfectWorkerAtLeastPriorMean) {
  std::vector<std::vector<int>> rows;
  // Workers 0 and 1 always agree; worker 2 errs once.
  for (int i = 0; i < 9; ++i) {
    const int v = i % 3 ? 1 : -1;
    rows.push_back({v, v, i == 4 ? -v : v});
  }
  const SensSpecPrior h{};
  const auto fit = bayes_sensspec_em(rows_to_matrix(3, rows), h);
  EXPECT_GE(fit.model.sensitivity[0], h.a1 / (h.a1 + h.a2));
  EXPECT_GE(fit.model.specificity[0], h.b1 / (h.b1 + h.b2));
}

TEST(SensSpec, HyperparameterDomain) {
  const auto a = rows_to_matrix(1, {{1}});
  EXPECT_THROW(bayes_sensspec_em(a, SensSpecPrior{0.5, 1, 1, 1, 1, 1}), std::domain_error);
}

TEST(SensSpec, FlatPriorsGiveLikelihood) {
  std::mt19937_64 rng(3);
  const auto g = generate(40, 5, {0.8, 0.7, 0.9, 0.6, 0.75}, 0.7, rng);
  const auto fit = bayes_sensspec_em(g.a, SensSpecPrior{1, 1, 1, 1, 1, 1});
  EXPECT_NEAR(fit.diagnostics.objective.back(), sensspec_log_likelihood(g.a, fit.model), 1e-12);
}

// --- one-coin accuracy EM ---------------------------------------------------------

TEST(AccuracyEm, RecoversWorkers) {
  std::mt19937_64 rng(7);
  const std::vector<double> acc{0.95, 0.9, 0.8, 0.7, 0.6, 0.55};
  const auto g = generate(600, 6, acc, 0.8, rng);
  const auto fit = accuracy_em(g.a);
  for (std::size_t j = 0; j < acc.size(); ++j) EXPECT_NEAR(fit.model.accuracy[j], acc[j], 0.06) << j;
  EXPECT_TRUE(fit.diagnostics.converged);
  expect_nondecreasing(fit.diagnostics.objective, 1e-9, "accuracy");
  AccuracyOptions shared;
  shared.shared = true;
  const auto s = accuracy_em(g.a, shared);
  ASSERT_EQ(s.model.accuracy.size(), 1u);
  EXPECT_NEAR(s.model.accuracy[0], 0.75, 0.05);
}

TEST(AccuracyEm, EstimatedClassPrior) {
  std::mt19937_64 rng(9);
  const auto g = generate(300, 5, {0.9, 0.85, 0.8, 0.7, 0.9}, 0.9, rng);
  AccuracyOptions opt;
  opt.class_prior = std::nullopt;
  const auto fit = accuracy_em(g.a, opt);
  EXPECT_NEAR(fit.model.class_prior, 0.5, 0.08);
  expect_nondecreasing(fit.diagnostics.objective, 1e-9, "accuracy");
}

// --- GLAD ------------------------------------------------------------------------

TEST(Glad, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int rep = 0; rep < 5; ++rep) {
    const auto a = testutil::random_matrix(5, 4, 0.7, rng);
    Eigen::VectorXd mu(5), alpha(4), lb(5);
    for (auto& x : mu) x = u(rng);
    for (auto& x : alpha) x = 1.0 + n01(rng);
    for (auto& x : lb) x = 0.5 * n01(rng);
    for (bool prior : {false, true}) {
      GladOptions o;
      if (!prior) o.ability_prior_variance = o.log_difficulty_prior_variance = 0.0;
      Eigen::VectorXd ga, gb;
      glad_q_gradient(a, mu, alpha, lb, o, ga, gb);
      const double h = 1e-6;
      auto check = [&](Eigen::VectorXd& v, const Eigen::VectorXd& g) {
        for (Eigen::Index k = 0; k < v.size(); ++k) {
          const double keep = v(k);
          v(k) = keep + h;
          const double up = glad_q(a, mu, alpha, lb, o);
          v(k) = keep - h;
          const double down = glad_q(a, mu, alpha, lb, o);
          v(k) = keep;
          const double fd = (up - down) / (2 * h);
          EXPECT_LT(std::abs(fd - g(k)), 1e-4 * std::max(1.0, std::abs(fd))) << k;
        }
      };
      check(alpha, ga);
      check(lb, gb);
    }
  }
}

TEST(Glad, FlagsAdversarialWorker) {
  std::mt19937_64 rng(17);
  const auto g = generate(200, 4, {0.85, 0.8, 0.9, 0.0}, 1.0, rng);
  const auto fit = glad_em(g.a);
  EXPECT_LT(fit.model.ability(3), 0.0);
  for (Eigen::Index j = 0; j < 3; ++j) EXPECT_GT(fit.model.ability(j), 0.0);
  EXPECT_TRUE((fit.model.inverse_difficulty.array() > 0).all());
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < 200; ++i) wrong += fit.estimates.label(i) != g.gold[i];
  EXPECT_LE(wrong, 10u);
}

TEST(Glad, InvalidPrior) {
  GladOptions o;
  o.class_prior = 1.0;
  EXPECT_THROW(glad_em(rows_to_matrix(1, {{1}}), o), std::invalid_argument);
}

// --- monotonicity on random instances ----------------------------------------------

TEST(EmHealth, MonotoneOnRandomInstances) {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.5, 0.95), dens(0.3, 0.9);
  for (int k = 0; k < 50; ++k) {
    const std::size_t n = 10 + rng() % 30, r = 3 + rng() % 6;
    std::vector<double> acc(r);
    for (auto& p : acc) p = u(rng);
    const auto g = generate(n, r, acc, dens(rng), rng);

    const auto ds = dawid_skene_em(g.a);
    expect_nondecreasing(ds.diagnostics.objective, 1e-9, "dawid-skene");

    const auto ss = bayes_sensspec_em(g.a);
    expect_nondecreasing(ss.diagnostics.objective, 1e-9, "sensspec");

    GladOptions go;
    go.em.max_iterations = 100;
    const auto gl = glad_em(g.a, go);
    for (const auto& [before, after] : gl.m_step_q) EXPECT_GE(after, before - 1e-9) << "glad Q";
    expect_nondecreasing(gl.diagnostics.objective, 1e-9, "glad");
  }
}

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "crowd/aggregators.hpp"
#include "crowd/errors.hpp"
#include "crowd/numerics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace crowd;
using namespace oracles;


// --- majority ---------------------------------------------------------------------

TEST(MajorityVote, RowExamples) {
  const auto a = rows_to_matrix(3, {{1, 1, -1}, {0, 0, 0}, {1, -1, 0}});
  const auto e = majority_vote(a);
  EXPECT_DOUBLE_EQ(e.posterior(0), 2.0 / 3.0);
  EXPECT_EQ(e.label(0), 1);
  EXPECT_EQ(e.posterior(1), 0.5);
  EXPECT_EQ(e.label(1), 1);
  EXPECT_EQ(e.posterior(2), 0.5);
  EXPECT_EQ(e.uncertainty(2), 0.5);
}

TEST(MajorityVote, FlipEquivariance) {
  std::mt19937_64 rng(8);
  const auto a = testutil::random_matrix(40, 7, 0.5, rng);
  const auto e = majority_vote(a), f = majority_vote(a.flipped());
  for (std::size_t i = 0; i < a.n_samples(); ++i) {
    if (e.posterior(i) != 0.5) EXPECT_EQ(e.label(i), -f.label(i));
  }
}

TEST(MvQuality, Values) {
  EXPECT_NEAR(mv_quality(0.7, 1), 0.784, 1e-12);
  for (std::size_t l = 0; l <= 10; ++l) EXPECT_NEAR(mv_quality(0.5, l), 0.5, 1e-12);
  for (double p : {0.55, 0.7, 0.95}) EXPECT_NEAR(mv_quality(p, 0), p, 1e-12);
}

TEST(MvQuality, MatchesOutcomeEnumeration) {
  for (double p : {0.3, 0.6, 0.85}) {
    for (std::size_t l = 0; l <= 5; ++l) {
      const std::size_t n = 2 * l + 1;
      double q = 0.0;
      for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        const auto right = static_cast<std::size_t>(__builtin_popcountll(mask));
        if (right > l) q += std::pow(p, static_cast<double>(right)) * std::pow(1 - p, static_cast<double>(n - right));
      }
      EXPECT_NEAR(mv_quality(p, l), q, 1e-12);
    }
  }
}

TEST(MvQuality, MonotoneAndDiminishing) {
  for (double p : {0.6, 0.7, 0.8, 0.9}) {
    EXPECT_GT(mv_quality(p, 1), p);
    for (std::size_t l = 0; l < 10; ++l) EXPECT_GT(mv_quality(p, l + 1), mv_quality(p, l)) << p << " " << l;
  }
  EXPECT_LT(mv_quality(0.4, 1), 0.4);
  EXPECT_LT(mv_quality(0.9, 2) - 0.9, mv_quality(0.7, 2) - 0.7);
}

TEST(FilteredVote, Examples) {
  const std::vector<double> acc{0.55, 0.85, 0.75, 0.6, 0.8};
  const std::vector<std::size_t> all{0, 1, 2, 3, 4}, best3{1, 4, 2}, best1{1};
  EXPECT_NEAR(filtered_vote_quality(acc, all), 0.86, 0.005);
  EXPECT_NEAR(filtered_vote_quality(acc, best3), 0.90, 0.005);
  EXPECT_NEAR(filtered_vote_quality(acc, best1), 0.85, 1e-12);
  // Three-worker majority by hand: all right, or exactly one wrong.
  const double a = 0.85, b = 0.8, c = 0.75;
  EXPECT_NEAR(filtered_vote_quality(acc, best3), a * b * c + (1 - a) * b * c + a * (1 - b) * c + a * b * (1 - c), 1e-12);
}

TEST(FilteredVote, Errors) {
  const std::vector<double> acc{0.6, 0.7};
  const std::vector<std::size_t> even{0, 1}, none{}, bad{5};
  EXPECT_THROW(filtered_vote_quality(acc, even), std::invalid_argument);
  EXPECT_THROW(filtered_vote_quality(acc, none), std::invalid_argument);
  EXPECT_THROW(filtered_vote_quality(acc, bad), std::invalid_argument);
}

// --- weighted posterior -------------------------------------------------------------

TEST(WeightedPosterior, SharedAccuracyAgreesWithMajority) {
  std::mt19937_64 rng(2);
  const auto a = testutil::random_matrix(30, 5, 0.6, rng);
  const auto mv = majority_vote(a);
  const auto w = weighted_posterior(a, AccuracyModel{std::vector<double>(5, 0.75), 0.5, false});
  for (std::size_t i = 0; i < a.n_samples(); ++i) EXPECT_EQ(mv.label(i), w.label(i));
}

TEST(WeightedPosterior, PerfectWorkerDominates) {
  const auto a = rows_to_matrix(3, {{1, -1, -1}, {-1, 1, 1}});
  const auto w = weighted_posterior(a, AccuracyModel{{1.0, 0.9, 0.9}, 0.5, false});
  EXPECT_EQ(w.label(0), 1);
  EXPECT_EQ(w.label(1), -1);
}

TEST(WeightedPosterior, MatchesBruteForceOnSmallInstance) {
  std::mt19937_64 rng(17);
  const auto a = testutil::random_matrix(4, 3, 0.7, rng);
  for (const auto& model : random_models(4, 3, rng)) {
    EXPECT_LT(max_gap(weighted_posterior(a, model), brute_force_posterior(a, model)), 1e-9);
  }
}

TEST(WeightedPosterior, ExhaustiveOverTinyMatrices) {
  std::mt19937_64 rng(23);
  // Every {-1, 0, +1} matrix with N * R <= 6.
  for (std::size_t n = 1; n <= 6; ++n) {
    for (std::size_t r = 1; n * r <= 6 && r <= 4; ++r) {
      const auto models = random_models(n, r, rng);
      std::size_t cells = n * r, count = 1;
      for (std::size_t k = 0; k < cells; ++k) count *= 3;
      for (std::size_t code = 0; code < count; ++code) {
        std::vector<Response> entries;
        std::size_t c = code;
        for (std::size_t k = 0; k < cells; ++k, c /= 3) {
          if (c % 3) entries.push_back({k / r, k % r, c % 3 == 1 ? 1 : -1});
        }
        const LabelMatrix a(n, r, std::move(entries));
        for (const auto& model : models) {
          ASSERT_LT(max_gap(weighted_posterior(a, model), brute_force_posterior(a, model)), 1e-9);
        }
      }
    }
  }
}

TEST(WeightedPosterior, RandomInstancesUpToSixByFour) {
  std::mt19937_64 rng(29);
  for (std::size_t n = 1; n <= 6; ++n) {
    for (std::size_t r = 1; r <= 4; ++r) {
      for (int rep = 0; rep < 20; ++rep) {
        const auto a = testutil::random_matrix(n, r, 0.6, rng);
        for (const auto& model : random_models(n, r, rng)) {
          ASSERT_LT(max_gap(weighted_posterior(a, model), brute_force_posterior(a, model)), 1e-9);
        }
      }
    }
  }
}

TEST(WeightedPosterior, DimensionMismatch) {
  const auto a = rows_to_matrix(3, {{1, 1, 1}});
  EXPECT_THROW(weighted_posterior(a, AccuracyModel{{0.7, 0.7}, 0.5, false}), std::invalid_argument);
  GladModel g{Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(2), 0.5};
  EXPECT_THROW(weighted_posterior(a, g), std::invalid_argument);
}

TEST(WeightedPosterior, ZeroAbilityIsUninformative) {
  const auto a = rows_to_matrix(2, {{1, 1}, {-1, 1}});
  const auto e = weighted_posterior(a, GladModel{Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2), 0.5});
  EXPECT_EQ(e.posterior(0), 0.5);
  EXPECT_EQ(e.posterior(1), 0.5);
}

TEST(WeightedPosterior, PiecesSumToRowLogOdds) {
  std::mt19937_64 rng(31);
  const auto a = testutil::random_matrix(5, 4, 0.7, rng);
  for (const auto& model : random_models(5, 4, rng)) {
    for (std::size_t i = 0; i < 5; ++i) {
      double lo = prior_log_odds(model);
      for (const auto& e : a.row(i)) lo += response_log_odds(model, i, e.worker, e.label);
      EXPECT_NEAR(lo, posterior_log_odds(a, i, model), 1e-12);
    }
  }
}

// --- message passing and spectral ---------------------------------------------------

TEST(Kos, UnanimousPositive) {
  const auto a = rows_to_matrix(3, {{1, 1, 1}, {1, 1, 1}, {1, 1, 1}, {1, 1, 0}});
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    const auto fit = kos_iterate(a, 10, seed);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(fit.estimates.label(i), 1);
  }
}

TEST(Kos, HandTraceOneRound) {
  const auto a = rows_to_matrix(2, {{1, 1}, {1, -1}});
  const std::vector<double> ones(4, 1.0);
  const auto fit = kos_iterate(a, 1, ones);
  // s_i = sum_j A_ij p_j->i with p = 1: (1 + 1, 1 - 1).
  EXPECT_EQ(fit.messages.sample_score(0), 2.0);
  EXPECT_EQ(fit.messages.sample_score(1), 0.0);
  EXPECT_EQ(fit.estimates.label(0), 1);
  EXPECT_EQ(fit.estimates.label(1), 1);
  // s_{i->j} excludes j: entries (0,0) (0,1) (1,0) (1,1).
  EXPECT_EQ(fit.messages.sample_to_worker, (std::vector<double>{1, 1, -1, 1}));
}

TEST(Kos, HandTraceTwoRounds) {
  const auto a = rows_to_matrix(2, {{1, 1}, {1, -1}});
  const std::vector<double> ones(4, 1.0);
  const auto fit = kos_iterate(a, 2, ones);
  // p_{0->0} = A_10 s_{1->0} = -1, p_{1->0} = A_11 s_{1->1} = -1, p_{0->1} = A_00 s_{0->0} = 1,
  // p_{1->1} = A_01 s_{0->1} = 1; then s_0 = -1 - 1, s_1 = 1 - 1.
  EXPECT_EQ(fit.messages.worker_to_sample, (std::vector<double>{-1, -1, 1, 1}));
  EXPECT_EQ(fit.messages.sample_score(0), -2.0);
  EXPECT_EQ(fit.messages.sample_score(1), 0.0);
}

TEST(Kos, FlipEquivariance) {
  std::mt19937_64 rng(41);
  const auto a = testutil::random_matrix(30, 6, 0.5, rng);
  const auto e = kos_iterate(a, 8, 5).messages.sample_score;
  const auto f = kos_iterate(a.flipped(), 8, 5).messages.sample_score;
  for (Eigen::Index i = 0; i < e.size(); ++i) EXPECT_NEAR(e(i), -f(i), 1e-12 * (1 + std::abs(e(i))));
}

TEST(Kos, LargeRoundCountsStayFinite) {
  std::mt19937_64 rng(43);
  const auto a = testutil::random_matrix(50, 10, 0.4, rng);
  const auto fit = kos_iterate(a, 400, 7);
  EXPECT_TRUE(fit.messages.sample_score.allFinite());
  EXPECT_GT(fit.messages.log_scale, 0.0);
}

TEST(Spectral, RankOneRecoversLabels) {
  const std::vector<int> y{1, -1, -1, 1, 1, -1};
  const std::vector<double> w{0.5, 1.0, 2.0, 0.3};
  Eigen::MatrixXd m(6, 4);
  std::vector<std::vector<int>> rows(6, std::vector<int>(4));
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 4; ++j) rows[i][j] = y[i];
  }
  const auto fit = spectral_estimate(rows_to_matrix(4, rows), 1000, 3);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(fit.estimates.label(i), y[i]);
  // Weighted rank one through the template entry point.
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 4; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = y[i] * w[j];
  }
  const auto pair = leading_singular_pair(m, 1000, 9);
  const double sign = pair.right(0) > 0 ? 1.0 : -1.0;
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(sign * pair.left(static_cast<Eigen::Index>(i)) > 0, y[i] > 0);
}

TEST(Spectral, MatchesFullSvd) {
  std::mt19937_64 rng(51);
  for (int k = 0; k < 50; ++k) {
    const auto a = testutil::random_matrix(20, 10, 0.6, rng);
    const Eigen::MatrixXd d = a.dense();
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(d, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto pair = leading_singular_pair(d, 100000, static_cast<std::uint64_t>(k), 1e-15);
    EXPECT_GE(std::abs(pair.left.dot(svd.matrixU().col(0))), 1 - 1e-8) << k;
    EXPECT_GE(std::abs(pair.right.dot(svd.matrixV().col(0))), 1 - 1e-8) << k;
    EXPECT_NEAR(pair.value, svd.singularValues()(0), 1e-8 * svd.singularValues()(0));
  }
}

TEST(Spectral, GlobalFlipNegatesEstimates) {
  // The orientation rule looks only at the right vector, whose mass split is unchanged by A -> -A;
  // the left vector changes sign, so every hard label flips.
  std::mt19937_64 rng(61);
  for (int k = 0; k < 10; ++k) {
    const auto a = testutil::random_matrix(20, 8, 0.6, rng);
    const auto e = spectral_estimate(a, 5000, 4).estimates;
    const auto f = spectral_estimate(a.flipped(), 5000, 4).estimates;
    for (std::size_t i = 0; i < a.n_samples(); ++i) {
      if (e.posterior(i) != 0.5) EXPECT_EQ(e.label(i), -f.label(i));
    }
  }
}

TEST(Spectral, ZeroMatrix) { EXPECT_THROW(spectral_estimate(LabelMatrix(3, 3, {}), 10, 1), DataError); }

// --- dispatch -----------------------------------------------------------------------

TEST(Integrate, NamesRoundTrip) {
  for (auto m : {Integrator::majority, Integrator::accuracy, Integrator::sensspec, Integrator::dawid_skene,
                 Integrator::glad, Integrator::reliability, Integrator::spectral}) {
    EXPECT_EQ(integrator_from_string(to_string(m)), m);
  }
  EXPECT_THROW(integrator_from_string("bogus"), std::invalid_argument);
}

TEST(Integrate, UnlabeledSamplesGetPrior) {
  std::mt19937_64 rng(71);
  auto base = testutil::random_matrix(12, 5, 0.7, rng);
  std::vector<Response> entries(base.entries().begin(), base.entries().end());
  const LabelMatrix a(15, 6, entries);  // samples 12..14 and worker 5 unused
  IntegratorOptions opt;
  for (auto m : {Integrator::majority, Integrator::accuracy, Integrator::sensspec, Integrator::dawid_skene,
                 Integrator::glad, Integrator::reliability, Integrator::spectral}) {
    const auto out = integrate(m, a, opt);
    ASSERT_EQ(out.estimates.size(), 15u) << to_string(m);
    EXPECT_EQ(out.model.has_value(), has_worker_model(m));
    if (out.model) {
      const auto w = weighted_posterior(a, *out.model);
      for (std::size_t i = 0; i < 15; ++i) EXPECT_NEAR(w.posterior(i), out.estimates.posterior(i), 1e-9) << to_string(m);
    } else {
      for (std::size_t i = 12; i < 15; ++i) EXPECT_EQ(out.estimates.posterior(i), 0.5);
    }
  }
  const auto empty = integrate(Integrator::glad, LabelMatrix(4, 2, {}), opt);
  EXPECT_EQ(empty.estimates, EstimateSet::uninformed(4));
}

TEST(Integrate, EstimatesSerialize) {
  const EstimateSet e(Eigen::Vector2d(0.25, 0.5));
  std::ostringstream out;
  write_estimates_csv(out, e, {"a", "b"});
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "sample,posterior,label,uncertainty");
  EXPECT_NE(out.str().find("a,0.25,-1,0.25"), std::string::npos);
  EXPECT_EQ(estimates_to_json(e).size(), 2u);
}

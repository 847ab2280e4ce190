#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/core.h>

#include "crowd/aggregators.hpp"
#include "crowd/errors.hpp"
#include "crowd/numerics.hpp"

namespace crowd {
namespace {

using Entry = CategoricalLabels::Entry;

struct Rows {
  std::vector<Entry> entries;
  std::vector<std::size_t> offsets;
};

Rows group_rows(const CategoricalLabels& labels) {
  if (labels.n_classes < 2) throw std::invalid_argument("dawid_skene_em: need at least 2 classes");
  Rows rows;
  rows.entries = labels.entries;
  for (const auto& e : rows.entries) {
    if (e.sample >= labels.n_samples || e.worker >= labels.n_workers ||
        e.label >= labels.n_classes) {
      throw DataError(fmt::format("dawid_skene_em: entry ({}, {}, {}) out of range", e.sample,
                                  e.worker, e.label));
    }
  }
  std::stable_sort(rows.entries.begin(), rows.entries.end(),
                   [](const Entry& a, const Entry& b) { return a.sample < b.sample; });
  rows.offsets.assign(labels.n_samples + 1, 0);
  for (const auto& e : rows.entries) ++rows.offsets[e.sample + 1];
  for (std::size_t i = 0; i < labels.n_samples; ++i) {
    if (rows.offsets[i + 1] == 0) {
      throw DataError(fmt::format("dawid_skene_em: sample {} has no labels", i));
    }
    rows.offsets[i + 1] += rows.offsets[i];
  }
  return rows;
}

// Unnormalized log P(C_j) + sum log pi for every class of sample i.
Eigen::VectorXd class_log_scores(const Rows& rows, std::size_t i, const ConfusionModel& m) {
  const Eigen::Index J = m.class_prior.size();
  Eigen::VectorXd s(J);
  for (Eigen::Index j = 0; j < J; ++j) s(j) = safe_log(m.class_prior(j));
  for (std::size_t k = rows.offsets[i]; k < rows.offsets[i + 1]; ++k) {
    const auto& e = rows.entries[k];
    const auto& pi = m.confusion[e.worker];
    for (Eigen::Index j = 0; j < J; ++j) s(j) += safe_log(pi(j, static_cast<Eigen::Index>(e.label)));
  }
  return s;
}

double log_normalize(Eigen::VectorXd& s) {
  const double mx = s.maxCoeff();
  const double lse = mx + std::log((s.array() - mx).exp().sum());
  s = (s.array() - lse).exp();
  return lse;
}

double log_likelihood(const Rows& rows, std::size_t n, const ConfusionModel& m) {
  double ll = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd s = class_log_scores(rows, i, m);
    ll += log_normalize(s);
  }
  return ll;
}

Eigen::MatrixXd e_step(const Rows& rows, std::size_t n, const ConfusionModel& m) {
  Eigen::MatrixXd t(static_cast<Eigen::Index>(n), m.class_prior.size());
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd s = class_log_scores(rows, i, m);
    log_normalize(s);
    t.row(static_cast<Eigen::Index>(i)) = s.transpose();
  }
  return t;
}

ConfusionModel m_step(const Rows& rows, const CategoricalLabels& labels, const Eigen::MatrixXd& t) {
  const auto J = static_cast<Eigen::Index>(labels.n_classes);
  ConfusionModel m;
  m.confusion.assign(labels.n_workers, Eigen::MatrixXd::Zero(J, J));
  for (const auto& e : rows.entries) {
    m.confusion[e.worker].col(static_cast<Eigen::Index>(e.label)) +=
        t.row(static_cast<Eigen::Index>(e.sample)).transpose();
  }
  for (auto& pi : m.confusion) {
    for (Eigen::Index j = 0; j < J; ++j) {
      const double total = pi.row(j).sum();
      if (total > 0.0) {
        pi.row(j) /= total;
      } else {
        pi.row(j).setConstant(1.0 / static_cast<double>(J));
      }
    }
  }
  m.class_prior = t.colwise().sum().transpose() / static_cast<double>(labels.n_samples);
  return m;
}

double max_change(const ConfusionModel& x, const ConfusionModel& y) {
  double d = (x.class_prior - y.class_prior).cwiseAbs().maxCoeff();
  for (std::size_t k = 0; k < x.confusion.size(); ++k) {
    d = std::max(d, (x.confusion[k] - y.confusion[k]).cwiseAbs().maxCoeff());
  }
  return d;
}

}  // namespace

CategoricalLabels CategoricalLabels::from_binary(const LabelMatrix& a) {
  CategoricalLabels out;
  out.n_samples = a.n_samples();
  out.n_workers = a.n_workers();
  out.n_classes = 2;
  out.entries.reserve(a.size());
  for (const auto& e : a.entries()) {
    out.entries.push_back({e.sample, e.worker, e.label == 1 ? std::size_t{1} : std::size_t{0}});
  }
  return out;
}

double dawid_skene_log_likelihood(const CategoricalLabels& labels, const ConfusionModel& model) {
  return log_likelihood(group_rows(labels), labels.n_samples, model);
}

DawidSkeneFit dawid_skene_em(const CategoricalLabels& labels, const DawidSkeneOptions& options) {
  if (!(options.init_diagonal > 0.0 && options.init_diagonal <= 1.0)) {
    throw std::invalid_argument("dawid_skene_em: init_diagonal must lie in (0, 1]");
  }
  const Rows rows = group_rows(labels);
  const auto J = static_cast<Eigen::Index>(labels.n_classes);
  const std::size_t n = labels.n_samples;

  ConfusionModel model;
  model.class_prior = Eigen::VectorXd::Constant(J, 1.0 / static_cast<double>(J));
  const double off = (1.0 - options.init_diagonal) / static_cast<double>(J - 1);
  Eigen::MatrixXd init = Eigen::MatrixXd::Constant(J, J, off);
  init.diagonal().setConstant(options.init_diagonal);
  model.confusion.assign(labels.n_workers, init);

  EmDiagnostics diag;
  Eigen::MatrixXd t;
  for (std::size_t it = 0; it < options.em.max_iterations; ++it) {
    t = e_step(rows, n, model);
    ConfusionModel next = m_step(rows, labels, t);
    const double change = max_change(model, next);
    model = std::move(next);
    diag.iterations = it + 1;
    diag.objective.push_back(log_likelihood(rows, n, model));
    if (change < options.em.tolerance) {
      diag.converged = true;
      break;
    }
  }
  t = e_step(rows, n, model);
  Eigen::VectorXd positive = t.col(J - 1);
  return {std::move(model), std::move(t), EstimateSet(std::move(positive)), std::move(diag)};
}

DawidSkeneFit dawid_skene_em(const LabelMatrix& a, const DawidSkeneOptions& options) {
  return dawid_skene_em(CategoricalLabels::from_binary(a), options);
}

}  // namespace crowd

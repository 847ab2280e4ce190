#include <array>
#include <stdexcept>

#include <fmt/core.h>

#include "crowd/aggregators.hpp"

namespace crowd {
namespace {

constexpr std::array<std::pair<Integrator, std::string_view>, 7> kNames{{
    {Integrator::majority, "majority"},
    {Integrator::accuracy, "accuracy"},
    {Integrator::sensspec, "sensspec"},
    {Integrator::dawid_skene, "dawid-skene"},
    {Integrator::glad, "glad"},
    {Integrator::reliability, "reliability"},
    {Integrator::spectral, "spectral"},
}};

// Rows with at least one label, re-indexed densely.
struct Compact {
  LabelMatrix matrix;
  std::vector<std::size_t> original;  // compact row -> original row
  bool identity = true;
};

Compact compact(const LabelMatrix& a) {
  Compact c;
  std::vector<std::size_t> index(a.n_samples(), 0);
  for (std::size_t i = 0; i < a.n_samples(); ++i) {
    if (a.row_size(i) == 0) {
      c.identity = false;
      continue;
    }
    index[i] = c.original.size();
    c.original.push_back(i);
  }
  if (c.identity) {
    c.matrix = a;
    return c;
  }
  std::vector<Response> entries(a.entries().begin(), a.entries().end());
  for (auto& e : entries) e.sample = index[e.sample];
  c.matrix = LabelMatrix(c.original.size(), a.n_workers(), std::move(entries));
  return c;
}

Eigen::VectorXd expand(const Compact& c, const Eigen::VectorXd& values, std::size_t n, double fill) {
  if (c.identity) return values;
  Eigen::VectorXd out = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), fill);
  for (std::size_t k = 0; k < c.original.size(); ++k) {
    out(static_cast<Eigen::Index>(c.original[k])) = values(static_cast<Eigen::Index>(k));
  }
  return out;
}

}  // namespace

std::string_view to_string(Integrator integrator) {
  for (const auto& [value, name] : kNames) {
    if (value == integrator) return name;
  }
  return "unknown";
}

Integrator integrator_from_string(std::string_view name) {
  for (const auto& [value, text] : kNames) {
    if (text == name) return value;
  }
  throw std::invalid_argument(fmt::format("unknown integrator '{}'", name));
}

bool has_worker_model(Integrator integrator) {
  switch (integrator) {
    case Integrator::accuracy:
    case Integrator::sensspec:
    case Integrator::dawid_skene:
    case Integrator::glad:
      return true;
    default:
      return false;
  }
}

Integration integrate(Integrator integrator, const LabelMatrix& a, const IntegratorOptions& options,
                      const WorkerModel* warm_start) {
  const std::size_t n = a.n_samples();
  switch (integrator) {
    case Integrator::majority:
      return {majority_vote(a), std::nullopt};
    case Integrator::reliability:
      return {kos_iterate(a, options.kos_iterations, options.seed).estimates, std::nullopt};
    default:
      break;
  }

  const Compact c = compact(a);
  if (c.matrix.size() == 0) return {EstimateSet::uninformed(n), std::nullopt};

  switch (integrator) {
    case Integrator::spectral: {
      auto fit = spectral_estimate(c.matrix, options.spectral_iterations, options.seed);
      return {EstimateSet(expand(c, fit.estimates.posteriors(), n, 0.5)), std::nullopt};
    }
    case Integrator::accuracy: {
      AccuracyOptions opt = options.accuracy;
      opt.em = options.em;
      const auto* warm = warm_start ? std::get_if<AccuracyModel>(warm_start) : nullptr;
      auto fit = accuracy_em(c.matrix, opt, warm);
      const double prior = fit.model.class_prior;
      return {EstimateSet(expand(c, fit.estimates.posteriors(), n, prior)), std::move(fit.model)};
    }
    case Integrator::sensspec: {
      const auto* warm = warm_start ? std::get_if<SensSpecModel>(warm_start) : nullptr;
      auto fit = bayes_sensspec_em(c.matrix, options.sensspec_prior, options.em, warm);
      const double prior = fit.model.class_prior;
      return {EstimateSet(expand(c, fit.estimates.posteriors(), n, prior)), std::move(fit.model)};
    }
    case Integrator::dawid_skene: {
      DawidSkeneOptions opt = options.dawid_skene;
      opt.em = options.em;
      auto fit = dawid_skene_em(c.matrix, opt);
      const double prior = fit.model.class_prior(1);
      return {EstimateSet(expand(c, fit.estimates.posteriors(), n, prior)), std::move(fit.model)};
    }
    case Integrator::glad: {
      GladOptions opt = options.glad;
      opt.em = options.em;
      std::optional<GladModel> warm;
      if (const auto* w = warm_start ? std::get_if<GladModel>(warm_start) : nullptr;
          w && static_cast<std::size_t>(w->inverse_difficulty.size()) == n) {
        warm = GladModel{w->ability, Eigen::VectorXd(static_cast<Eigen::Index>(c.original.size())),
                         w->class_prior};
        for (std::size_t k = 0; k < c.original.size(); ++k) {
          warm->inverse_difficulty(static_cast<Eigen::Index>(k)) =
              w->inverse_difficulty(static_cast<Eigen::Index>(c.original[k]));
        }
      }
      auto fit = glad_em(c.matrix, opt, warm ? &*warm : nullptr);
      GladModel model = fit.model;
      model.inverse_difficulty = expand(c, fit.model.inverse_difficulty, n, 1.0);
      return {EstimateSet(expand(c, fit.estimates.posteriors(), n, model.class_prior)),
              std::move(model)};
    }
    default:
      break;
  }
  throw std::invalid_argument("integrate: unhandled integrator");
}

}  // namespace crowd

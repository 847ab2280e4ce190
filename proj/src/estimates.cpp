#include "crowd/estimates.hpp"

#include <stdexcept>

#include <fmt/core.h>

#include "crowd/errors.hpp"

namespace crowd {

EstimateSet::EstimateSet(Eigen::VectorXd posterior) : posterior_(std::move(posterior)) {
  for (Eigen::Index i = 0; i < posterior_.size(); ++i) {
    if (!(posterior_(i) >= 0.0 && posterior_(i) <= 1.0)) {
      throw std::invalid_argument(
          fmt::format("estimate set: posterior {} of sample {} outside [0, 1]", posterior_(i), i));
    }
  }
}

EstimateSet EstimateSet::uninformed(std::size_t n) {
  return EstimateSet(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 0.5));
}

std::vector<int> EstimateSet::labels() const {
  std::vector<int> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = label(i);
  return out;
}

double score(const EstimateSet& estimates, const GoldStandards& gold) {
  std::size_t known = 0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (!gold.known(i)) continue;
    if (i >= estimates.size()) {
      throw DataError(fmt::format("score: gold sample {} has no estimate", i));
    }
    ++known;
    if (estimates.label(i) != gold.labels[i]) ++wrong;
  }
  return known == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(known);
}

namespace {
std::string sample_name(const std::vector<std::string>& ids, std::size_t i) {
  return i < ids.size() ? ids[i] : std::to_string(i);
}
}  // namespace

void write_estimates_csv(std::ostream& out, const EstimateSet& estimates,
                         const std::vector<std::string>& sample_ids) {
  out << "sample,posterior,label,uncertainty\n";
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    out << fmt::format("{},{:.17g},{},{:.17g}\n", sample_name(sample_ids, i),
                       estimates.posterior(i), estimates.label(i), estimates.uncertainty(i));
  }
}

nlohmann::json estimates_to_json(const EstimateSet& estimates,
                                 const std::vector<std::string>& sample_ids) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    rows.push_back({{"sample", sample_name(sample_ids, i)},
                    {"posterior", estimates.posterior(i)},
                    {"label", estimates.label(i)},
                    {"uncertainty", estimates.uncertainty(i)}});
  }
  return rows;
}

}  // namespace crowd

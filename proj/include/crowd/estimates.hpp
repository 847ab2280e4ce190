#ifndef CROWD_ESTIMATES_HPP
#define CROWD_ESTIMATES_HPP

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "crowd/label_store.hpp"

namespace crowd {

/// Per-sample posterior P(y_i = +1 | data) with derived hard label and uncertainty.
///
/// The hard label is +1 iff the posterior is at least 0.5, so an exact tie resolves to +1.
class EstimateSet {
 public:
  EstimateSet() = default;
  /// Throws std::invalid_argument if any posterior lies outside [0, 1].
  explicit EstimateSet(Eigen::VectorXd posterior);

  /// Every posterior at 0.5.
  static EstimateSet uninformed(std::size_t n);

  std::size_t size() const { return static_cast<std::size_t>(posterior_.size()); }
  double posterior(std::size_t i) const { return posterior_(static_cast<Eigen::Index>(i)); }
  const Eigen::VectorXd& posteriors() const { return posterior_; }
  int label(std::size_t i) const { return posterior(i) >= 0.5 ? 1 : -1; }
  double uncertainty(std::size_t i) const { return std::min(posterior(i), 1.0 - posterior(i)); }
  std::vector<int> labels() const;

  friend bool operator==(const EstimateSet& a, const EstimateSet& b) {
    return a.posterior_.size() == b.posterior_.size() && a.posterior_ == b.posterior_;
  }

 private:
  Eigen::VectorXd posterior_;
};

/// Fraction of gold-labeled samples whose hard estimate differs from gold.
/// Throws DataError if a gold-labeled sample has no estimate.
double score(const EstimateSet& estimates, const GoldStandards& gold);

/// CSV `sample,posterior,label,uncertainty`; sample ids default to indices.
void write_estimates_csv(std::ostream& out, const EstimateSet& estimates,
                         const std::vector<std::string>& sample_ids = {});
nlohmann::json estimates_to_json(const EstimateSet& estimates,
                                 const std::vector<std::string>& sample_ids = {});

}  // namespace crowd

#endif  // CROWD_ESTIMATES_HPP

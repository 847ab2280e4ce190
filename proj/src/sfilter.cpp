#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "crowd/numerics.hpp"
#include "crowd/sequential.hpp"

namespace crowd {
namespace {

constexpr double kWidth = kAccuracyHi - kAccuracyLo;

// Mean-zero drift truncated to keep the particle inside (lo, hi].
double draw_truncated(double p, double sigma, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double fa = normal_cdf((kAccuracyLo - p) / sigma);
  const double fb = normal_cdf((kAccuracyHi - p) / sigma);
  const double u = fa + unit(rng) * (fb - fa);
  double x = p;
  if (u > 0.0 && u < 1.0) x = p + sigma * normal_quantile(u);
  return std::clamp(x, std::nextafter(kAccuracyLo, kAccuracyHi), kAccuracyHi);
}

void normalize(Eigen::VectorXd& w) {
  const double total = w.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw DegeneratePosterior("accuracy posterior: total mass underflowed");
  }
  w /= total;
}

void systematic_resample(AccuracyPosterior& post, Rng& rng) {
  const auto n = post.weights.size();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double step = 1.0 / static_cast<double>(n);
  double u = unit(rng) * step;
  Eigen::VectorXd points(n);
  double cumulative = post.weights(0);
  Eigen::Index k = 0;
  for (Eigen::Index m = 0; m < n; ++m) {
    while (u > cumulative && k + 1 < n) cumulative += post.weights(++k);
    points(m) = post.points(k);
    u += step;
  }
  post.points = std::move(points);
  post.weights.setConstant(step);
}

double peer_agreement(int response, double peer_label_posterior) {
  return response == 1 ? peer_label_posterior : 1.0 - peer_label_posterior;
}

}  // namespace

void validate(const SFilterConfig& c) {
  if (!(c.sigma > 0.0)) throw std::invalid_argument("sfilter: sigma must be positive");
  if (c.grid_resolution < 16) throw std::invalid_argument("sfilter: grid resolution must be >= 16");
  if (c.particles < 100) throw std::invalid_argument("sfilter: particle count must be >= 100");
  if (!c.prior_density.empty()) {
    if (c.prior_density.size() != c.grid_resolution) {
      throw std::invalid_argument(fmt::format("sfilter: prior density has {} values, expected {}",
                                              c.prior_density.size(), c.grid_resolution));
    }
    const bool ok = std::all_of(c.prior_density.begin(), c.prior_density.end(),
                                [](double d) { return d >= 0.0 && std::isfinite(d); });
    if (!ok || std::accumulate(c.prior_density.begin(), c.prior_density.end(), 0.0) <= 0.0) {
      throw std::invalid_argument("sfilter: prior density must be non-negative with positive mass");
    }
  }
}

double AccuracyPosterior::variance() const {
  const double m = mean();
  return weights.dot((points.array() - m).square().matrix());
}

double AccuracyPosterior::density(std::size_t k) const {
  return weights(static_cast<Eigen::Index>(k)) * static_cast<double>(weights.size()) / kWidth;
}

AccuracyFilter::AccuracyFilter(SFilterConfig config) : config_(std::move(config)) {
  validate(config_);
  const auto m = static_cast<Eigen::Index>(config_.grid_resolution);
  const double h = kWidth / static_cast<double>(m);
  midpoints_.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) midpoints_(k) = kAccuracyLo + (static_cast<double>(k) + 0.5) * h;
  if (config_.mode != FilterMode::grid) return;
  transition_.resize(m, m);
  for (Eigen::Index from = 0; from < m; ++from) {
    for (Eigen::Index to = 0; to < m; ++to) {
      const double a = kAccuracyLo + static_cast<double>(to) * h;
      transition_(to, from) =
          trunc_gauss_mass(a, a + h, midpoints_(from), config_.sigma, kAccuracyLo, kAccuracyHi);
    }
    transition_.col(from) /= transition_.col(from).sum();
  }
}

AccuracyPosterior AccuracyFilter::initial() const {
  AccuracyPosterior post;
  post.mode = config_.mode;
  const auto m = midpoints_.size();
  Eigen::VectorXd cell_mass = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  if (!config_.prior_density.empty()) {
    cell_mass = Eigen::Map<const Eigen::VectorXd>(config_.prior_density.data(), m);
    cell_mass /= cell_mass.sum();
  }
  if (config_.mode == FilterMode::grid) {
    post.weights = std::move(cell_mass);
    post.points = midpoints_;
    return post;
  }
  Rng rng(derive_seed(config_.seed, "init"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(config_.particles);
  const double h = kWidth / static_cast<double>(m);
  std::vector<double> cumulative(static_cast<std::size_t>(m));
  std::partial_sum(cell_mass.begin(), cell_mass.end(), cumulative.begin());
  post.points.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = unit(rng) * cumulative.back();
    const auto cell = std::min<std::ptrdiff_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin(), m - 1);
    // 1 - offset keeps the point inside (lo, hi]
    post.points(i) = kAccuracyLo + h * (static_cast<double>(cell) + 1.0 - unit(rng));
  }
  post.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  return post;
}

AccuracyPosterior AccuracyFilter::predict(const AccuracyPosterior& post) const {
  AccuracyPosterior next = post;
  if (post.mode == FilterMode::grid) {
    next.weights = transition_ * post.weights;
    return next;
  }
  Rng rng(derive_seed(config_.seed, "predict", post.t));
  for (auto& x : next.points) x = draw_truncated(x, config_.sigma, rng);
  return next;
}

AccuracyPosterior AccuracyFilter::observe(const AccuracyPosterior& post, int response,
                                          double peer_label_posterior) const {
  if (response != 1 && response != -1) throw std::invalid_argument("sfilter: response must be +-1");
  if (!(peer_label_posterior >= 0.0 && peer_label_posterior <= 1.0)) {
    throw std::invalid_argument("sfilter: peer posterior must lie in [0, 1]");
  }
  AccuracyPosterior next = predict(post);
  const double q = peer_agreement(response, peer_label_posterior);
  next.weights.array() *= next.points.array() * q + (1.0 - next.points.array()) * (1.0 - q);
  normalize(next.weights);
  next.t = post.t + 1;
  if (next.mode == FilterMode::particle) {
    const double ess = 1.0 / next.weights.squaredNorm();
    if (ess < 0.5 * static_cast<double>(next.weights.size())) {
      Rng rng(derive_seed(config_.seed, "resample", post.t));
      systematic_resample(next, rng);
    }
  }
  return next;
}

AccuracyPosterior sfilter_observe(const AccuracyPosterior& post, int response,
                                  double peer_label_posterior, const SFilterConfig& config) {
  return AccuracyFilter(config).observe(post, response, peer_label_posterior);
}

std::vector<TrackPoint> sfilter_track(std::span<const StreamStep> stream, const SFilterConfig& config) {
  const AccuracyFilter filter(config);
  AccuracyPosterior post = filter.initial();
  std::vector<TrackPoint> out;
  out.reserve(stream.size());
  for (const auto& step : stream) {
    post = filter.observe(post, step.response, step.peer_posterior);
    out.push_back({post.mean(), post.variance()});
  }
  return out;
}

std::vector<WorkerTrack> track_pool(const LabelPool& pool, const SFilterConfig& config) {
  struct Arrival {
    std::size_t order, sample, worker;
    int label;
  };
  std::vector<Arrival> arrivals;
  for (std::size_t i = 0; i < pool.n_samples(); ++i) {
    for (const auto& l : pool.labels[i]) arrivals.push_back({l.order, i, l.worker, l.label});
  }
  std::sort(arrivals.begin(), arrivals.end(),
            [](const Arrival& a, const Arrival& b) { return a.order < b.order; });

  std::vector<WorkerTrack> tracks(pool.n_workers());
  std::vector<AccuracyFilter> filters;
  std::vector<AccuracyPosterior> state;
  std::vector<double> current_mean(pool.n_workers());
  {
    // One grid transition shared by every worker; particle streams get their own seeds.
    const AccuracyFilter shared(config);
    for (std::size_t j = 0; j < pool.n_workers(); ++j) {
      tracks[j].worker = j;
      state.push_back(shared.initial());
      current_mean[j] = state.back().mean();
    }
    if (config.mode == FilterMode::grid) filters.push_back(shared);
  }
  if (config.mode == FilterMode::particle) {
    for (std::size_t j = 0; j < pool.n_workers(); ++j) {
      SFilterConfig c = config;
      c.seed = derive_seed(config.seed, j);
      filters.emplace_back(c);
      state[j] = filters.back().initial();
    }
  }

  std::vector<std::vector<std::pair<std::size_t, int>>> seen(pool.n_samples());
  std::size_t positives = 0;
  std::size_t total = 0;
  for (const auto& a : arrivals) {
    const double prior = (static_cast<double>(positives) + 1.0) / (static_cast<double>(total) + 2.0);
    double log_odds = std::log(prior) - std::log1p(-prior);
    for (const auto& [k, z] : seen[a.sample]) {
      const double p = clamp_probability(current_mean[k]);
      log_odds += z * (std::log(p) - std::log1p(-p));
    }
    const AccuracyFilter& filter = filters[config.mode == FilterMode::grid ? 0 : a.worker];
    state[a.worker] = filter.observe(state[a.worker], a.label, sigmoid(log_odds));
    current_mean[a.worker] = state[a.worker].mean();
    tracks[a.worker].points.push_back({current_mean[a.worker], state[a.worker].variance()});
    seen[a.sample].emplace_back(a.worker, a.label);
    positives += a.label == 1 ? 1 : 0;
    ++total;
  }
  return tracks;
}

void write_trajectory_csv(std::ostream& out, std::span<const WorkerTrack> tracks,
                          const std::vector<std::string>& worker_ids) {
  out << "worker,step,mean,variance\n";
  for (const auto& track : tracks) {
    const std::string id =
        track.worker < worker_ids.size() ? worker_ids[track.worker] : std::to_string(track.worker);
    for (std::size_t s = 0; s < track.points.size(); ++s) {
      out << fmt::format("{},{},{:.17g},{:.17g}\n", id, s + 1, track.points[s].mean,
                         track.points[s].variance);
    }
  }
}

}  // namespace crowd

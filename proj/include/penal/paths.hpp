#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "penal/rng.hpp"

namespace penal {

enum class Model : std::uint32_t { kBrownian = 0, kStable = 1, kLangevin = 2 };

std::string_view to_string(Model m);
Model model_from_string(std::string_view name);

/// A point of the augmented state space.
///
/// Brownian / stable: (x, y, l) = (position, supremum, local_time).
/// Langevin: (b, a, y) = (velocity, position, supremum); `position` is the
/// integrated Brownian motion and `supremum` its recorded maximum.
struct ModelState {
  Model model = Model::kBrownian;
  double position = 0.0;
  double supremum = 0.0;
  double local_time = 0.0;
  double velocity = 0.0;

  static ModelState brownian(double x, double y, double l) {
    return {Model::kBrownian, x, y, l, 0.0};
  }
  static ModelState stable(double x, double y, double l) { return {Model::kStable, x, y, l, 0.0}; }
  static ModelState langevin(double b, double a, double y) {
    return {Model::kLangevin, a, y, 0.0, b};
  }
  /// Build from the three coordinates in model order ((x,y,l) or (b,a,y)).
  static ModelState from_components(Model m, const Eigen::Vector3d& c);

  /// Coordinates in model order: (x, y, l) or (b, a, y).
  Eigen::Vector3d components() const;

  bool operator==(const ModelState&) const = default;
};

/// Throws ConfigError unless y >= x (resp. y >= a) and l >= 0.
void validate_state(const ModelState& s);

/// Strictly stable law with characteristic exponent
/// c_theta |lambda|^alpha (1 - i beta sgn(lambda) tan(pi alpha / 2)).
struct StableParams {
  double alpha = 1.5;
  double beta = 0.0;
  double c_theta = 1.0;
};

/// Throws ConfigError unless 1 < alpha < 2, |beta| <= 1, c_theta > 0.
void validate_stable(const StableParams& p);

/// Uniform time grid 0, dt, ..., steps * dt.
struct Grid {
  double dt = 0.0;
  std::int64_t steps = 0;

  double horizon() const { return dt * static_cast<double>(steps); }
  /// Index of grid time t; throws UsageError when t is not on the grid.
  std::int64_t index_of(double t) const;

  /// Validated grid; T must be a positive integer multiple of dt.
  static Grid make(double horizon, double dt);
};

/// Everything a sampler needs besides the start state and RNG key.
struct SamplerConfig {
  Model model = Model::kBrownian;
  StableParams stable;
  double dt = 1e-3;
  double eps = 0.0;  ///< local-time bandwidth; <= 0 selects sqrt(dt)

  double bandwidth() const;
};

/// One simulated trajectory on a uniform grid with aggregate columns and
/// RNG provenance. Columns have length steps + 1.
struct PathSample {
  Model model = Model::kBrownian;
  double dt = 0.0;
  std::int64_t steps = 0;
  double eps = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  /// Absolute RNG step index of states[0]; nonzero for shifted paths.
  std::int64_t first_step = 0;
  /// Lane of the bridge-crossing uniforms read by indicator weights.
  Lane bridge_lane = Lane::kBridge;

  Eigen::ArrayXd position;
  Eigen::ArrayXd supremum;
  Eigen::ArrayXd local_time;
  Eigen::ArrayXd velocity;

  double horizon() const { return dt * static_cast<double>(steps); }
  std::int64_t size() const { return steps + 1; }
  ModelState state(std::int64_t k) const;
  Grid grid() const { return {dt, steps}; }
  /// Path restarted at grid index k (theta_{k dt}); aggregates stay as
  /// recorded at k, which is the re-based start of the shifted path.
  PathSample shifted(std::int64_t k) const;
};

/// Fresh-aggregate update shared by every model: y' = max(y, pos'),
/// l' = l + dt/(2 eps) 1{|pos| <= eps} (left endpoint).
ModelState advance_aggregates(const ModelState& prev, double next_position,
                              double next_velocity, double dt, double eps);

/// Generates grid states one step at a time. Step k maps state index k to
/// k + 1 and draws only from RNG counter k, so the trajectory is a pure
/// function of (config, seed, stream).
class PathStepper {
 public:
  PathStepper(const SamplerConfig& cfg, CounterRng rng);

  /// Raw increment (d position, d velocity) of absolute step k.
  void increment(std::uint64_t k, double velocity, double& d_position, double& d_velocity);

  ModelState step(const ModelState& s, std::uint64_t k);

  const SamplerConfig& config() const { return cfg_; }
  const CounterRng& rng() const { return rng_; }

 private:
  double brownian_normal(std::uint64_t k);

  SamplerConfig cfg_;
  CounterRng rng_;
  double eps_;
  double sqrt_dt_;
  double stable_scale_;
  double cms_b_;
  double cms_s_;
  std::uint64_t cached_pair_ = ~std::uint64_t{0};
  double cached_[2] = {0.0, 0.0};
};

/// One standard strictly stable variate (scale 1) via Chambers-Mallows-Stuck,
/// given V ~ U(-pi/2, pi/2) and W ~ Exp(1).
double chambers_mallows_stuck(const StableParams& p, double v, double w);

PathSample sample_brownian_triple(const ModelState& x0, double horizon, double dt, double eps,
                                  std::uint64_t seed, std::uint64_t stream);
PathSample sample_stable_triple(const StableParams& p, const ModelState& x0, double horizon,
                                double dt, double eps, std::uint64_t seed, std::uint64_t stream);
PathSample sample_langevin(const ModelState& x0, double horizon, double dt, std::uint64_t seed,
                           std::uint64_t stream);
/// Generic entry used by the CLI and the ensemble engine.
PathSample sample_path(const SamplerConfig& cfg, const ModelState& x0, double horizon,
                       std::uint64_t seed, std::uint64_t stream);

/// Norm of a 3-d Brownian motion from (x0, 0, 0), sampled on the grid.
Eigen::ArrayXd sample_bessel3(double x0, double horizon, double dt, std::uint64_t seed,
                              std::uint64_t stream);

/// e / q with e ~ Exp(1) drawn from a lane disjoint from path noise.
double exponential_clock(double q, std::uint64_t seed, std::uint64_t stream);

// Columnar little-endian dump: file header, then per path a header
// (model, dt, T, eps, seed, stream, first_step, n) and three float64 columns
// in model component order.
void write_path_dump(std::ostream& out, const std::vector<PathSample>& paths);
std::vector<PathSample> read_path_dump(std::istream& in);

}  // namespace penal

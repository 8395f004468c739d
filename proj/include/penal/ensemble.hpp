#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "penal/paths.hpp"
#include "penal/phi.hpp"
#include "penal/weights.hpp"

namespace penal {

/// Worker count: PENAL_THREADS if set, else the hardware concurrency.
unsigned default_threads();

/// Runs fn(begin, end) over fixed-size chunks of [0, n) on a worker pool.
/// Chunk boundaries do not depend on the thread count.
void parallel_chunks(std::int64_t n, std::int64_t chunk, unsigned threads,
                     const std::function<void(std::int64_t, std::int64_t)>& fn);

/// Stream id of path i in an ensemble with base stream `base`.
inline std::uint64_t path_stream(std::uint64_t base, std::int64_t i) {
  return derive_stream(base, 0, static_cast<std::uint64_t>(i));
}

struct EnsembleConfig {
  SamplerConfig sampler;  ///< dt is the reported step
  ModelState x0;
  double horizon = 1.0;
  /// Record times on the dt grid; the horizon is appended when missing.
  std::vector<double> checkpoints;
  std::int64_t n = 1000;
  std::uint64_t seed = 0;
  std::uint64_t stream_base = 0;
  /// Simulate at dt/2 and aggregate the same noise on the dt grid as a
  /// coupled coarse path.
  bool halving = false;
  /// Stop stepping a path once every tracked weight is zero.
  bool stop_when_dead = false;
  unsigned threads = 0;  ///< 0 selects default_threads()
};

/// Optional martingale tilt M_t = Gamma_t phi(X_t) / phi(x0) for one of the
/// tracked weights, with stage-wise systematic resampling.
struct Penalisation {
  std::size_t weight = 0;
  PhiFn phi;
  bool resample = false;
  double ess_fraction = 0.1;  ///< resample when n_eff < ess_fraction * n
  /// Extra stage boundaries (resampling opportunities) every stage_length.
  double stage_length = 0.0;
};

/// What a probe sees at a checkpoint for one path.
struct ParticleView {
  std::int64_t index = 0;
  double time = 0.0;
  const ModelState* state = nullptr;
  const double* gamma = nullptr;  ///< one entry per tracked weight
  const ModelState* coarse = nullptr;
  const double* coarse_gamma = nullptr;
  double martingale = 0.0;  ///< NaN without a penalisation
  double* payload = nullptr;  ///< per-path scratch carried through resampling
};

using Probe = std::function<void(const ParticleView& view, std::size_t checkpoint, double* out)>;

struct EnsembleResult {
  std::vector<double> times;
  std::size_t width = 0;
  Eigen::ArrayXXd records;       ///< n x (checkpoints * width)
  std::vector<double> n_eff;     ///< per checkpoint, penalised runs only
  std::vector<double> resampled; ///< times at which resampling happened
  double seconds = 0.0;

  auto column(std::size_t checkpoint, std::size_t j) const {
    return records.col(static_cast<Eigen::Index>(checkpoint * width + j));
  }
};

/// Simulates n paths and calls the probe at every checkpoint.
EnsembleResult run_ensemble(const EnsembleConfig& cfg, const std::vector<WeightSpec>& weights,
                            const std::optional<Penalisation>& pen, std::size_t width,
                            std::size_t payload_width, const Probe& probe);

/// State and Gamma values after one path has run to `horizon` from `x0`.
struct PathEnd {
  ModelState state;
  std::vector<double> gamma;
};

/// Single-path helper used for inner sub-ensembles.
PathEnd simulate_path_end(const SamplerConfig& sampler, const ModelState& x0, double horizon,
                          const std::vector<WeightSpec>& weights, std::uint64_t seed,
                          std::uint64_t stream, bool stop_when_dead);

}  // namespace penal

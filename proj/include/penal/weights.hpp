#pragma once

#include <string>

#include "penal/functions.hpp"
#include "penal/paths.hpp"
#include "penal/rng.hpp"

namespace penal {

enum class WeightKind {
  kSupF,
  kLtF,
  kKac,
  kHev,
  kStayNegativeA,
  kStayNegativeB,
  kAvoidZero,
};

std::string_view to_string(WeightKind k);
WeightKind weight_kind_from_string(std::string_view name);

/// One of the seven multiplicative weights with its parameters.
///
///   sup_f          f(X^sup_t) / f(X^sup_0), profile zero above y0
///   lt_f           f(X^lt_t) / f(X^lt_0), profile zero above l0
///   kac            exp(-int_0^t v(X_s) ds)
///   hev            exp(-lambda int_0^t 1{X_s > 0} ds)
///   stay_negative_A  1{integrated position stays < 0} (Langevin)
///   stay_negative_B  1{Brownian coordinate stays < 0}
///   avoid_zero     1{X never hits 0} (Brownian)
struct WeightSpec {
  WeightKind kind = WeightKind::kHev;
  Model model = Model::kBrownian;
  ScalarFn f;                 ///< profile for sup_f / lt_f
  double threshold = kInf;    ///< y0 for sup_f, l0 for lt_f
  ScalarFn v;                 ///< Kac potential
  double lambda = 0.5;        ///< Heaviside rate
  std::string id;

  static WeightSpec sup_f(Model m, ScalarFn f, double y0 = kInf);
  static WeightSpec lt_f(Model m, ScalarFn f, double l0 = kInf);
  static WeightSpec kac(ScalarFn v);
  static WeightSpec hev(double lambda);
  static WeightSpec stay_negative_a();
  static WeightSpec stay_negative_b(Model m = Model::kBrownian);
  static WeightSpec avoid_zero();

  /// f(u) 1{u <= threshold} for the aggregate-ratio weights.
  double profile(double u) const;
  /// True for weights taking values in {0, 1}.
  bool is_indicator() const;
};

/// Checks parameter ranges and the integrability conditions each weight
/// needs for its invariant function. Throws ConfigError. Stable sup_f
/// additionally needs the process parameters.
void validate_weight(const WeightSpec& spec, const StableParams* stable = nullptr);

/// True iff the state lies in the weight's domain S^Gamma.
bool membership(const WeightSpec& spec, const ModelState& state);

/// Streaming evaluation of Gamma along a path, one grid step at a time.
/// Copyable; carries its own bridge RNG so a path and its weights are a pure
/// function of (seed, stream).
class WeightTracker {
 public:
  WeightTracker(const WeightSpec& spec, double dt, CounterRng rng, Lane bridge_lane);

  void start(const ModelState& s0);
  /// Transition prev -> next over absolute step `step`.
  void advance(const ModelState& prev, const ModelState& next, std::uint64_t step);
  /// Re-base at the current state: Gamma restarts at 1 on the continuation.
  /// With keep_carry the value so far is kept as a multiplicative factor.
  void restart(const ModelState& s, bool keep_carry);
  /// Replace the bridge RNG (used when a particle is resampled).
  void reseed(CounterRng rng) { rng_ = rng; }

  double value() const;
  bool dead() const { return dead_; }

 private:
  const WeightSpec* spec_;
  double dt_;
  CounterRng rng_;
  Lane lane_;
  bool dead_ = false;
  double carry_ = 1.0;
  double base_ = 1.0;     // profile at the (re)start
  double current_ = 1.0;  // profile now
  double integral_ = 0.0; // Kac / Heaviside exponent
};

/// Gamma_t on a stored path; t must be a grid time.
double evaluate_weight(const WeightSpec& spec, const PathSample& path, double t);

/// Gamma_t - Gamma_s * (Gamma_{t-s} o theta_s) with the shifted path re-based
/// at grid index s.
double multiplicativity_residual(const WeightSpec& spec, const PathSample& path, double s,
                                 double t);

/// First grid time with the state outside S^Gamma (Gamma = 0); +inf if none.
double exit_time(const WeightSpec& spec, const PathSample& path);

}  // namespace penal

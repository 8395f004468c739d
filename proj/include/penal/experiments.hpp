#pragma once

#include <string>
#include <vector>

#include "penal/measure.hpp"

namespace penal {

/// Normaliser of a penalisation clock: rho(t) for a constant clock, r(q) for
/// an exponential one.
struct ClockSpec {
  enum class Kind { kConstant, kExponential };
  enum class Form { kSqrtPiTOver2, kPower };

  Kind kind = Kind::kConstant;
  Form form = Form::kSqrtPiTOver2;
  double coef = 1.0;      ///< c in c v^p; for exponential clocks <= 0 means "calibrate"
  double exponent = 0.5;  ///< p in c v^p

  double operator()(double v) const;
  /// Checks that the normaliser diverges in the right direction (p > 0 for
  /// t -> inf, p < 0 for q -> 0). Power laws are slowly varying in the
  /// rho(t)/rho(t-s) -> 1 sense, so no further check is needed.
  void validate() const;
  std::string describe() const;

  /// sqrt(pi t / 2).
  static ClockSpec brownian();
  /// c t^p.
  static ClockSpec power(double c, double p);
  /// c q^p with p < 0.
  static ClockSpec exponential(double c, double p);
};

struct ConvergencePoint {
  double grid = 0.0;
  std::int64_t n = 0;
  MCEstimate raw;        ///< E[Gamma_t] or E[Gamma_e(q)]
  MCEstimate estimate;   ///< normaliser times raw
  MCEstimate ratio;      ///< E[F_s Gamma; e > s] / E[Gamma; e > s]
  /// Coupled coarse-step estimate and its drift (halving runs only).
  MCEstimate coarse;
  MCEstimate drift;      ///< fine - coarse, paired
  bool halved = false;
  double reference = 0.0;
  double ratio_reference = 0.0;
  double rel_error = 0.0;
  bool pass = false;
};

struct ConvergenceReport {
  std::string quantity;
  std::string grid_name;  ///< "t" or "q"
  std::vector<ConvergencePoint> points;
  double reference = 0.0;
  /// Log-log slope of the normalised estimate against the grid.
  MCEstimate slope;
  /// Exponential clocks: |estimate(q1) - estimate(q2)| / combined SE over
  /// the two smallest q.
  double flatness_z = 0.0;
  double calibrated_coef = 0.0;
  bool pass = false;
};

struct MartingaleRow {
  ModelState x0;
  double t = 0.0;
  double target = 0.0;
  MCEstimate estimate;  ///< at the reported step (fine step when halved)
  MCEstimate coarse;
  MCEstimate drift;     ///< paired fine - coarse
  double z = 0.0;
  bool halved = false;
  bool shrinks = true;
  bool pass = false;
};

struct MartingaleReport {
  std::vector<MartingaleRow> rows;
  double seconds = 0.0;
  bool pass = false;
};

/// E[Gamma_t phi(X_t)] against phi(x0) for every (x0, t). With
/// opt.halving each estimate comes from step dt/2 with the coupled dt path as
/// the coarse reference; a row passes when the fine estimate is within 3 SE
/// and |fine - phi| <= |coarse - phi| + 3 SE(fine - coarse), the latter
/// waived when |drift| + 3 SE(drift) is below the SE of the estimate.
MartingaleReport martingale_identity_suite(const WeightSpec& spec, const PhiFn& phi,
                                           const std::vector<ModelState>& x0s,
                                           const std::vector<double>& times, const SimOptions& opt);

/// rho(t) E[Gamma_t] and E[F_s Gamma_t] / E[Gamma_t] per t. The reference of
/// the ratio is E[F_s M_s] from the same runs. Sample sizes scale with
/// rho(t)^2 up to n_cap (n_cap <= 0 keeps opt.n). A point passes when the
/// normalised estimate is within rel_tol of phi(x0).
ConvergenceReport constant_clock_limit(const WeightSpec& spec, const PhiFn& phi,
                                       const ClockSpec& clock, const ModelState& x0,
                                       const StateFunctional& f, double s,
                                       const std::vector<double>& t_grid, const SimOptions& opt,
                                       double rel_tol = 0.1, std::int64_t n_cap = 0);

/// Same with a per-path exponential horizon e(q) (rounded down to the grid).
/// A clock coefficient <= 0 is calibrated so that the smallest q reproduces
/// phi(x0). Paths longer than t_cap are truncated at t_cap.
ConvergenceReport exponential_clock_limit(const WeightSpec& spec, const PhiFn& phi,
                                          const ClockSpec& clock, const ModelState& x0,
                                          const StateFunctional& f, double s,
                                          const std::vector<double>& q_grid, const SimOptions& opt,
                                          double t_cap = 1e4);

struct PersistenceReport {
  std::vector<double> times;
  std::vector<double> survival;         ///< at dt
  std::vector<double> survival_coarse;  ///< at 2 dt (same noise)
  MCEstimate slope;                     ///< bootstrap SE
  MCEstimate slope_coarse;
  MCEstimate slope_shift;               ///< slope(dt) - slope(2 dt)
  std::int64_t survivors = 0;
  bool too_few_survivors = false;
  double seconds = 0.0;
};

/// Log-log slope of P(tau^A > t) over t_grid at step opt.sampler.dt, with the
/// same noise aggregated at 2 dt for the discretisation check.
PersistenceReport persistence_exponent_langevin(const ModelState& x0, const std::vector<double>& t_grid,
                                                const SimOptions& opt, int bootstrap = 200);

struct DirectionReport {
  double horizon = 0.0;
  double level = 5.0;
  MCEstimate above;      ///< P^Gamma(X_T > K)
  MCEstimate below;      ///< P^Gamma(X_T < -K)
  MCEstimate split;      ///< above / (above + below)
  MCEstimate projected;  ///< E^Gamma[p_+(X_T)], exact martingale when p_+ is known
  double reference = 0.0;  ///< p_+(x0); NaN when no closed form exists
  double n_eff = 0.0;
  bool has_reference = false;
};

/// Closed-form P^Gamma(X -> +inf) from a state, NaN when unknown.
double direction_probability(const PhiFn& phi, const ModelState& s);

DirectionReport direction_statistics(const WeightSpec& spec, const PhiFn& phi, const ModelState& x0,
                                     double horizon, double level, const SimOptions& opt);

struct Calibration {
  StableParams stable;
  MCEstimate k;        ///< y^alpha P(sup_[0,1] Z > y)
  double k_level = 0.0;
  MCEstimate c_ab;     ///< occupation-estimator C_{alpha,beta}
  double c_ab_reference = 0.0;
  MCEstimate c_r;      ///< stable exponential-clock constant
  double c_r_q = 0.0;
  MCEstimate c1;       ///< Langevin t^{1/4} constant
  double c1_t = 0.0;
};

struct CalibrationOptions {
  double k_level = 10.0;
  double c_ab_t = 16.0;
  double c_r_q = 0.05;
  double c1_t = 64.0;
  ModelState langevin_x0 = ModelState::langevin(0.0, -1.0, -1.0);
};

/// Monte Carlo calibration of the constants the closed forms leave open.
/// opt.sampler.stable selects the stable law; opt.sampler.dt is used for
/// every model.
Calibration calibrate(const SimOptions& opt, const CalibrationOptions& c = {});

}  // namespace penal

#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "penal/ensemble.hpp"
#include "penal/phi.hpp"
#include "penal/stats.hpp"
#include "penal/weights.hpp"

namespace penal {

/// Sampling settings shared by every ensemble-based operation.
struct SimOptions {
  SamplerConfig sampler;
  std::int64_t n = 10000;
  std::uint64_t seed = 1;
  std::uint64_t stream_base = 0;
  bool halving = false;
  bool resample = false;
  double ess_fraction = 0.1;
  double stage_length = 0.0;
  unsigned threads = 0;
};

/// A real functional of the augmented state at one time.
struct StateFunctional {
  std::string name = "one";
  std::function<double(const ModelState&)> fn = [](const ModelState&) { return 1.0; };
  bool is_one = true;

  double operator()(const ModelState& s) const { return fn(s); }

  static StateFunctional one();
  /// 1{position > c}.
  static StateFunctional position_above(double c);
  /// 1{lo <= position <= hi}.
  static StateFunctional position_in(double lo, double hi);
};

/// Weighted ensemble approximating P^Gamma_{x0} at the recorded times.
struct WeightedEnsemble {
  std::vector<double> times;
  std::int64_t n = 0;
  Model model = Model::kBrownian;
  /// weight[k](i) = M_{t_k} for path i (Gamma phi(X) / phi(x0), carried
  /// through resampling).
  std::vector<Eigen::ArrayXd> weight;
  /// state components in model order, n x 3 per time.
  std::vector<Eigen::ArrayXXd> state;
  /// Gamma_t and phi(X_t) (phi is 0 where Gamma_t = 0).
  std::vector<Eigen::ArrayXd> gamma;
  std::vector<Eigen::ArrayXd> phi;
  /// Auxiliary weights tracked on the same paths, n x aux per time.
  std::vector<Eigen::ArrayXXd> aux;
  /// Mark values F(X_s) recorded at their mark time and carried with the
  /// particle (through resampling); zero before the mark time.
  std::vector<Eigen::ArrayXXd> marks;
  std::vector<double> n_eff;
  std::vector<double> resampled;
  bool degenerate = false;
  double seconds = 0.0;

  /// (1/n) sum_i M_i g(X_i) at time index k.
  MCEstimate expect(std::size_t k, const StateFunctional& g) const;
  MCEstimate mean_weight(std::size_t k) const;
  ModelState state_at(std::size_t k, Eigen::Index i, Model m) const;
};

WeightedEnsemble build_penalised_ensemble(const WeightSpec& spec, const PhiFn& phi,
                                          const ModelState& x0, double horizon,
                                          const std::vector<double>& times, const SimOptions& opt,
                                          const std::vector<WeightSpec>& aux = {},
                                          const std::vector<std::pair<double, StateFunctional>>& marks = {});

struct LongtimeRow {
  double horizon = 0.0;
  MCEstimate survival;       ///< P^Gamma(tau > T)
  double median_phi = 0.0;   ///< weighted median of phi(X_T)
  MCEstimate below;          ///< P^Gamma(X_T < -K)
  MCEstimate above;          ///< P^Gamma(X_T > K)
  double median_z = 0.0;     ///< Langevin: weighted median of (-B)^3 / (-A)
  double n_eff = 0.0;
};

struct LongtimeReport {
  std::vector<LongtimeRow> rows;
  double level = 5.0;
  bool median_increasing = false;
  bool degenerate = false;
};

LongtimeReport penalised_longtime_stats(const WeightSpec& spec, const PhiFn& phi,
                                        const ModelState& x0, const std::vector<double>& horizons,
                                        double level, const SimOptions& opt);

struct MarkovCheck {
  MCEstimate lhs;
  MCEstimate rhs;
  double z = 0.0;
  double inner_degenerate_fraction = 0.0;
  bool degenerate = false;
};

/// Both sides of the subsequent Markov identity with F a functional of the
/// state at t and g a functional of the state at the horizon of the
/// restarted path (H - t after the restart).
MarkovCheck subsequent_markov_check(const WeightSpec& spec, const PhiFn& phi, const ModelState& x0,
                                    double t, double horizon, const StateFunctional& f,
                                    const StateFunctional& g, std::int64_t inner,
                                    const SimOptions& opt);

struct UniversalityRow {
  double horizon = 0.0;
  /// phi^E / phi^Gamma weighted under P^Gamma and under P^E.
  MCEstimate ratio_under_gamma;
  MCEstimate ratio_under_e;
  /// Same ratios with the other weight's Gamma_T as an extra tilt
  /// (restricts each law to the event where both weights survive).
  MCEstimate tilted_under_gamma;
  MCEstimate tilted_under_e;
  double n_eff_gamma = 0.0;
  double n_eff_e = 0.0;
};

struct UniversalityReport {
  std::vector<UniversalityRow> rows;
  /// Finite-horizon identity.
  MCEstimate identity_lhs;
  MCEstimate identity_rhs;
  double identity_z = 0.0;
  bool identity_evaluated = false;
};

/// Ratio diagnostics for weights Gamma and E from x0. When identity_s > 0 the
/// two-sided identity is evaluated at identity_t (one of the horizons; <= 0
/// picks the last) with F = f at time s.
UniversalityReport universality_ratio_test(const WeightSpec& gamma, const PhiFn& phi_gamma,
                                           const WeightSpec& e, const PhiFn& phi_e,
                                           const ModelState& x0, const std::vector<double>& horizons,
                                           const SimOptions& opt, double identity_s = 0.0,
                                           const StateFunctional& f = StateFunctional::one(),
                                           double identity_t = 0.0);

}  // namespace penal

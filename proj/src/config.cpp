#include "penal/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "penal/errors.hpp"

namespace penal {

namespace {

using nlohmann::json;

constexpr std::pair<Experiment, std::string_view> kExperimentNames[] = {
    {Experiment::kMartingaleSuite, "martingale_identity_suite"},
    {Experiment::kConstantClock, "constant_clock_limit"},
    {Experiment::kExponentialClock, "exponential_clock_limit"},
    {Experiment::kPersistence, "persistence_exponent_langevin"},
    {Experiment::kDirection, "direction_statistics"},
    {Experiment::kEnsemble, "build_penalised_ensemble"},
    {Experiment::kLongtime, "penalised_longtime_stats"},
    {Experiment::kSubsequentMarkov, "subsequent_markov_check"},
    {Experiment::kUniversality, "universality_ratio_test"},
    {Experiment::kCalibrate, "calibrate"},
};

double parse_double(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar()) throw ConfigError(path + ": expected a number");
  std::string s = n.Scalar();
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "inf" || s == "+inf" || s == ".inf" || s == "+.inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf" || s == "-.inf") return -std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(path + ": expected a number, got '" + n.Scalar() + "'");
  }
}

std::int64_t parse_int(const YAML::Node& n, const std::string& path) {
  const double v = parse_double(n, path);
  if (!(std::abs(v) < 9e15) || v != std::floor(v)) throw ConfigError(path + ": expected an integer");
  return static_cast<std::int64_t>(v);
}

bool parse_bool(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar()) throw ConfigError(path + ": expected true or false");
  const std::string& s = n.Scalar();
  if (s == "true" || s == "True") return true;
  if (s == "false" || s == "False") return false;
  throw ConfigError(path + ": expected true or false, got '" + s + "'");
}

std::uint64_t parse_u64(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar()) throw ConfigError(path + ": expected an unsigned integer");
  try {
    std::size_t used = 0;
    const std::string& s = n.Scalar();
    if (!s.empty() && s[0] == '-') throw std::invalid_argument(s);
    const unsigned long long v = std::stoull(s, &used, 0);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(path + ": expected an unsigned integer, got '" + n.Scalar() + "'");
  }
}

// A YAML mapping whose keys must all be consumed.
class Section {
 public:
  Section(const YAML::Node& n, std::string path) : node_(n), path_(std::move(path)) {
    if (n && !n.IsNull() && !n.IsMap()) throw ConfigError(path_ + ": expected a mapping");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    const YAML::Node& n = node_;
    return n && n.IsMap() && n[key] && !n[key].IsNull();
  }
  YAML::Node at(const std::string& key) {
    seen_.insert(key);
    const YAML::Node& n = node_;
    return n[key];
  }
  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double num(const std::string& key, double def) { return has(key) ? parse_double(at(key), sub(key)) : def; }
  std::int64_t integer(const std::string& key, std::int64_t def) {
    return has(key) ? parse_int(at(key), sub(key)) : def;
  }
  bool flag(const std::string& key, bool def) { return has(key) ? parse_bool(at(key), sub(key)) : def; }
  std::string str(const std::string& key, const std::string& def) {
    if (!has(key)) return def;
    const YAML::Node n = at(key);
    if (!n.IsScalar()) throw ConfigError(sub(key) + ": expected a string");
    return n.Scalar();
  }
  std::vector<double> list(const std::string& key, std::vector<double> def) {
    if (!has(key)) return def;
    const YAML::Node n = at(key);
    std::vector<double> out;
    if (n.IsScalar()) return {parse_double(n, sub(key))};
    if (!n.IsSequence()) throw ConfigError(sub(key) + ": expected a list of numbers");
    for (std::size_t i = 0; i < n.size(); ++i) out.push_back(parse_double(n[i], sub(key) + "[" + std::to_string(i) + "]"));
    return out;
  }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const std::string k = kv.first.as<std::string>();
      if (!seen_.count(k)) throw ConfigError(sub(k) + ": unknown key");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

json yaml_to_json(const YAML::Node& n, const std::string& path) {
  if (!n || n.IsNull()) return nullptr;
  if (n.IsMap()) {
    json j = json::object();
    for (const auto& kv : n) {
      const std::string k = kv.first.as<std::string>();
      j[k] = yaml_to_json(kv.second, path + "." + k);
    }
    return j;
  }
  if (n.IsSequence()) {
    json j = json::array();
    for (std::size_t i = 0; i < n.size(); ++i) j.push_back(yaml_to_json(n[i], path));
    return j;
  }
  const std::string& s = n.Scalar();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  return s;
}

double json_num(const json& j, const char* key, double def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == ".inf") return std::numeric_limits<double>::infinity();
  }
  throw ConfigError(std::string(key) + ": expected a number");
}

ScalarFn parse_fn(const YAML::Node& n, const std::string& path) {
  Section s(n, path);
  const std::string kind = s.str("kind", "");
  ScalarFn f;
  if (kind == "exp_decay") {
    f = ScalarFn::exp_decay(s.num("rate", 1.0));
  } else if (kind == "constant") {
    f = ScalarFn::constant(s.num("value", 1.0));
  } else if (kind == "indicator") {
    f = ScalarFn::indicator(s.num("threshold", 0.0), s.num("value", 1.0));
  } else if (kind == "box") {
    f = ScalarFn::box(s.num("height", 1.0), s.num("half_width", 1.0), s.num("center", 0.0));
  } else if (kind == "tabulated") {
    const bool zero = s.flag("zero_outside", false);
    if (s.has("file")) {
      f = ScalarFn::from_csv(s.str("file", ""), zero);
    } else {
      f = ScalarFn::tabulated(s.list("args", {}), s.list("values", {}), zero);
    }
  } else {
    throw ConfigError(s.sub("kind") + ": unknown function kind '" + kind +
                      "' (exp_decay, constant, indicator, box, tabulated)");
  }
  s.finish();
  return f;
}

json fn_to_json(const ScalarFn& f) {
  switch (f.kind()) {
    case ScalarFn::Kind::kExpDecay:
      return {{"kind", "exp_decay"}, {"rate", f.p0()}};
    case ScalarFn::Kind::kConstant:
      return {{"kind", "constant"}, {"value", f.p0()}};
    case ScalarFn::Kind::kIndicator:
      return {{"kind", "indicator"}, {"threshold", f.p1()}, {"value", f.p0()}};
    case ScalarFn::Kind::kBox:
      return {{"kind", "box"}, {"height", f.p0()}, {"half_width", f.p1()}, {"center", f.p2()}};
    case ScalarFn::Kind::kTabulated:
      return {{"kind", "tabulated"}, {"args", f.args()}, {"values", f.values()}, {"zero_outside", f.zero_outside()}};
  }
  return nullptr;
}

json num_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

WeightSpec parse_weight(const YAML::Node& n, const std::string& path, Model model) {
  Section s(n, path);
  const std::string kind_name = s.str("kind", "");
  WeightKind kind;
  try {
    kind = weight_kind_from_string(kind_name);
  } catch (const std::exception& e) {
    throw ConfigError(s.sub("kind") + ": " + e.what());
  }
  WeightSpec w;
  switch (kind) {
    case WeightKind::kSupF:
    case WeightKind::kLtF: {
      if (!s.has("f")) throw ConfigError(s.sub("f") + ": required for " + kind_name);
      const ScalarFn f = parse_fn(s.at("f"), s.sub("f"));
      const double thr = s.num("threshold", std::numeric_limits<double>::infinity());
      w = kind == WeightKind::kSupF ? WeightSpec::sup_f(model, f, thr) : WeightSpec::lt_f(model, f, thr);
      break;
    }
    case WeightKind::kKac:
      if (!s.has("v")) throw ConfigError(s.sub("v") + ": required for kac_v");
      w = WeightSpec::kac(parse_fn(s.at("v"), s.sub("v")));
      break;
    case WeightKind::kHev:
      w = WeightSpec::hev(s.num("lambda", 0.5));
      break;
    case WeightKind::kStayNegativeA:
      w = WeightSpec::stay_negative_a();
      break;
    case WeightKind::kStayNegativeB:
      w = WeightSpec::stay_negative_b(model);
      break;
    case WeightKind::kAvoidZero:
      w = WeightSpec::avoid_zero();
      break;
  }
  w.id = s.str("id", std::string(to_string(kind)));
  s.finish();
  return w;
}

json weight_to_json(const WeightSpec& w) {
  json j{{"kind", to_string(w.kind)}, {"id", w.id}};
  switch (w.kind) {
    case WeightKind::kSupF:
    case WeightKind::kLtF:
      j["f"] = fn_to_json(w.f);
      j["threshold"] = num_or_inf(w.threshold);
      break;
    case WeightKind::kKac:
      j["v"] = fn_to_json(w.v);
      break;
    case WeightKind::kHev:
      j["lambda"] = w.lambda;
      break;
    default:
      break;
  }
  return j;
}

ModelState parse_state(const YAML::Node& n, Model m, const std::string& path) {
  if (!n.IsSequence() || n.size() != 3) throw ConfigError(path + ": a state is a list of three numbers");
  const Eigen::Vector3d c(parse_double(n[0], path + "[0]"), parse_double(n[1], path + "[1]"),
                          parse_double(n[2], path + "[2]"));
  const ModelState s = ModelState::from_components(m, c);
  try {
    validate_state(s);
  } catch (const std::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return s;
}

std::vector<ModelState> parse_states(const YAML::Node& n, Model m, const std::string& path) {
  if (!n.IsSequence() || n.size() == 0) throw ConfigError(path + ": expected a state or a list of states");
  if (n[0].IsScalar()) return {parse_state(n, m, path)};
  std::vector<ModelState> out;
  for (std::size_t i = 0; i < n.size(); ++i) out.push_back(parse_state(n[i], m, path + "[" + std::to_string(i) + "]"));
  return out;
}

json state_to_json(const ModelState& s) {
  const Eigen::Vector3d c = s.components();
  return json::array({c[0], c[1], c[2]});
}

}  // namespace

std::string_view to_string(Experiment e) {
  for (const auto& [k, name] : kExperimentNames) {
    if (k == e) return name;
  }
  return "unknown";
}

Experiment experiment_from_string(std::string_view name) {
  for (const auto& [k, n] : kExperimentNames) {
    if (n == name) return k;
  }
  std::string all;
  for (const auto& kv : kExperimentNames) all += (all.empty() ? "" : ", ") + std::string(kv.second);
  throw ConfigError("experiment: unknown experiment '" + std::string(name) + "' (" + all + ")");
}

StateFunctional functional_from_json(const json& j) {
  const std::string kind = j.value("kind", "one");
  for (const auto& kv : j.items()) {
    static const std::set<std::string> allowed{"kind", "c", "lo", "hi"};
    if (!allowed.count(kv.key())) throw ConfigError("functional: unknown key '" + kv.key() + "'");
  }
  if (kind == "one") return StateFunctional::one();
  if (kind == "position_above") return StateFunctional::position_above(json_num(j, "c", 0.0));
  if (kind == "position_in") return StateFunctional::position_in(json_num(j, "lo", 0.0), json_num(j, "hi", 1.0));
  throw ConfigError("functional: unknown kind '" + kind + "' (one, position_above, position_in)");
}

ExperimentConfig parse_config(const YAML::Node& root) {
  if (!root.IsMap()) throw ConfigError("config: top level must be a mapping");
  // A run manifest is accepted as a config: its resolved block is replayed.
  if (const YAML::Node resolved = root["resolved_config"]; resolved) return parse_config(resolved);
  Section top(root, "");
  ExperimentConfig c;
  // phi-eval and dump-paths ignore the selector, so it may be omitted.
  c.experiment = experiment_from_string(top.str("experiment", std::string(to_string(c.experiment))));

  Section model(top.at("model"), "model");
  c.sampler.model = model_from_string(model.str("kind", "brownian"));
  if (c.sampler.model != Model::kStable && c.experiment != Experiment::kCalibrate) {
    for (const char* key : {"alpha", "beta", "c_theta"}) {
      if (model.has(key)) throw ConfigError(model.sub(key) + ": only valid for kind stable");
    }
  }
  c.sampler.stable.alpha = model.num("alpha", 1.5);
  c.sampler.stable.beta = model.num("beta", 0.0);
  c.sampler.stable.c_theta = model.num("c_theta", 1.0);
  model.finish();
  if (c.sampler.model == Model::kStable || c.experiment == Experiment::kCalibrate) {
    validate_stable(c.sampler.stable);
  }
  c.phi.stable = c.sampler.stable;

  if (top.has("weight")) c.weight = parse_weight(top.at("weight"), "weight", c.sampler.model);
  if (top.has("second_weight")) {
    c.second_weight = parse_weight(top.at("second_weight"), "second_weight", c.sampler.model);
  }

  Section phi(top.at("phi"), "phi");
  c.phi.stable_lt_c = phi.num("stable_lt_c", 0.0);
  c.phi.kac_truncation = phi.num("kac_truncation", 10.0);
  c.phi.kac_intervals = static_cast<int>(phi.integer("kac_intervals", 10000));
  c.phi.kac_richardson = phi.flag("kac_richardson", true);
  phi.finish();

  Section clock(top.at("clock"), "clock");
  const std::string ck = clock.str("kind", "constant");
  const std::string form = clock.str("form", ck == "constant" ? "sqrt_pi_t_over_2" : "power");
  if (ck != "constant" && ck != "exponential") throw ConfigError("clock.kind: expected constant or exponential");
  if (form == "sqrt_pi_t_over_2") {
    c.clock = ClockSpec::brownian();
  } else if (form == "power") {
    c.clock = ck == "constant" ? ClockSpec::power(clock.num("coef", 1.0), clock.num("exponent", 0.5))
                               : ClockSpec::exponential(clock.num("coef", 0.0), clock.num("exponent", -0.5));
  } else {
    throw ConfigError("clock.form: expected sqrt_pi_t_over_2 or power");
  }
  if (ck == "exponential") c.clock.kind = ClockSpec::Kind::kExponential;
  clock.finish();
  if (top.has("clock")) {
    try {
      c.clock.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("clock: ") + e.what());
    }
  }

  Section smp(top.at("sampling"), "sampling");
  c.sampler.dt = smp.num("dt", 1e-3);
  c.sampler.eps = smp.num("eps", 0.0);
  c.sim.n = smp.integer("n", 10000);
  c.sim.seed = smp.has("seed") ? parse_u64(smp.at("seed"), "sampling.seed") : 1;
  c.sim.stream_base = smp.has("stream_base") ? parse_u64(smp.at("stream_base"), "sampling.stream_base") : 0;
  c.sim.halving = smp.flag("halving", false);
  c.sim.resample = smp.flag("resample", false);
  c.sim.ess_fraction = smp.num("ess_fraction", 0.1);
  c.sim.stage_length = smp.num("stage_length", 0.0);
  c.sim.threads = static_cast<unsigned>(smp.integer("threads", 0));
  c.n_cap = smp.integer("n_cap", 0);
  c.inner = smp.integer("inner", 32);
  c.bootstrap = static_cast<int>(smp.integer("bootstrap", 200));
  smp.finish();
  if (!(c.sampler.dt > 0.0)) throw ConfigError("sampling.dt: must be positive");
  if (c.sim.n < 2) throw ConfigError("sampling.n: must be at least 2");
  if (!(c.sim.ess_fraction > 0.0 && c.sim.ess_fraction <= 1.0)) throw ConfigError("sampling.ess_fraction: must be in (0, 1]");
  c.sim.sampler = c.sampler;

  Section prm(top.at("params"), "params");
  if (prm.has("x0")) c.x0 = parse_states(prm.at("x0"), c.sampler.model, "params.x0");
  c.times = prm.list("times", {});
  c.rates = prm.list("rates", {});
  c.s = prm.num("s", 0.5);
  c.t = prm.num("t", 0.5);
  c.horizon = prm.num("horizon", 1.0);
  c.level = prm.num("level", 5.0);
  c.rel_tol = prm.num("rel_tol", 0.1);
  c.coarse_rel_tol = prm.num("coarse_rel_tol", 0.0);
  c.t_cap = prm.num("t_cap", 1e4);
  c.identity_s = prm.num("identity_s", 0.0);
  c.identity_t = prm.num("identity_t", 0.0);
  c.ratio_band = prm.num("ratio_band", 0.0);
  c.expected_slope = prm.num("expected_slope", -0.25);
  c.slope_tol = prm.num("slope_tol", 0.05);
  c.shift_tol = prm.num("shift_tol", 0.02);
  if (prm.has("marks")) {
    const json m = yaml_to_json(prm.at("marks"), "params.marks");
    if (!m.is_array()) throw ConfigError("params.marks: expected a list of functionals");
    for (std::size_t i = 0; i < m.size(); ++i) {
      try {
        c.marks.push_back(functional_from_json(m[i]));
      } catch (const ConfigError& e) {
        throw ConfigError("params.marks[" + std::to_string(i) + "]: " + e.what());
      }
      c.mark_specs.push_back(m[i]);
    }
  }
  c.mark_references = prm.list("mark_references", {});
  if (!c.mark_references.empty() && c.mark_references.size() != c.marks.size()) {
    throw ConfigError("params.mark_references: one value per mark expected");
  }
  c.mark_rel_tol = prm.num("mark_rel_tol", 0.01);
  c.exact_check = prm.flag("exact_check", false);
  c.ks_tol = prm.num("ks_tol", 0.02);
  c.ratio_decreasing = prm.flag("ratio_decreasing", false);
  c.ratio_last_below = prm.num("ratio_last_below", 0.0);
  if (prm.has("F")) c.f_spec = yaml_to_json(prm.at("F"), "params.F");
  if (prm.has("g")) c.g_spec = yaml_to_json(prm.at("g"), "params.g");
  c.calibration.k_level = prm.num("k_level", c.calibration.k_level);
  c.calibration.c_ab_t = prm.num("c_ab_t", c.calibration.c_ab_t);
  c.calibration.c_r_q = prm.num("c_r_q", c.calibration.c_r_q);
  c.calibration.c1_t = prm.num("c1_t", c.calibration.c1_t);
  if (prm.has("langevin_x0")) {
    c.calibration.langevin_x0 = parse_state(prm.at("langevin_x0"), Model::kLangevin, "params.langevin_x0");
  }
  prm.finish();
  c.f = functional_from_json(c.f_spec);
  c.g = functional_from_json(c.g_spec);

  Section out(top.at("output"), "output");
  c.output_dir = out.str("dir", "out");
  c.prefix = out.str("prefix", "report");
  out.finish();
  top.finish();

  // Cross-block consistency: weight and phi must match the model.
  if (c.weight) {
    try {
      validate_weight(*c.weight, &c.sampler.stable);
      if (c.second_weight) validate_weight(*c.second_weight, &c.sampler.stable);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("weight: ") + e.what());
    }
  }
  return c;
}

void require_experiment_inputs(const ExperimentConfig& c) {
  const bool needs_weight = c.experiment != Experiment::kPersistence && c.experiment != Experiment::kCalibrate;
  if (needs_weight && !c.weight) throw ConfigError("weight: required for " + std::string(to_string(c.experiment)));
  if (c.experiment == Experiment::kUniversality && !c.second_weight) {
    throw ConfigError("second_weight: required for universality_ratio_test");
  }
  if (c.experiment != Experiment::kCalibrate && c.x0.empty()) throw ConfigError("params.x0: required");
}

ExperimentConfig load_config(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw ConfigError("config: cannot read '" + path + "'");
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: YAML syntax error: ") + e.what());
  }
  return parse_config(root);
}

ExperimentConfig load_config_string(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: YAML syntax error: ") + e.what());
  }
  return parse_config(root);
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = to_string(c.experiment);
  j["model"] = {{"kind", to_string(c.sampler.model)}};
  if (c.sampler.model == Model::kStable || c.experiment == Experiment::kCalibrate) {
    j["model"]["alpha"] = c.sampler.stable.alpha;
    j["model"]["beta"] = c.sampler.stable.beta;
    j["model"]["c_theta"] = c.sampler.stable.c_theta;
  }
  if (c.weight) j["weight"] = weight_to_json(*c.weight);
  if (c.second_weight) j["second_weight"] = weight_to_json(*c.second_weight);
  j["phi"] = {{"stable_lt_c", c.phi.stable_lt_c},
              {"kac_truncation", c.phi.kac_truncation},
              {"kac_intervals", c.phi.kac_intervals},
              {"kac_richardson", c.phi.kac_richardson}};
  j["clock"] = {{"kind", c.clock.kind == ClockSpec::Kind::kConstant ? "constant" : "exponential"},
                {"form", c.clock.form == ClockSpec::Form::kPower ? "power" : "sqrt_pi_t_over_2"}};
  if (c.clock.form == ClockSpec::Form::kPower) {
    j["clock"]["coef"] = c.clock.coef;
    j["clock"]["exponent"] = c.clock.exponent;
  }
  j["sampling"] = {{"dt", c.sampler.dt},
                   {"eps", c.sampler.eps},
                   {"n", c.sim.n},
                   {"seed", c.sim.seed},
                   {"stream_base", c.sim.stream_base},
                   {"halving", c.sim.halving},
                   {"resample", c.sim.resample},
                   {"ess_fraction", c.sim.ess_fraction},
                   {"stage_length", c.sim.stage_length},
                   {"n_cap", c.n_cap},
                   {"inner", c.inner},
                   {"bootstrap", c.bootstrap}};
  j["params"] = {{"times", c.times},
                 {"rates", c.rates},
                 {"s", c.s},
                 {"t", c.t},
                 {"horizon", c.horizon},
                 {"level", c.level},
                 {"rel_tol", c.rel_tol},
                 {"coarse_rel_tol", c.coarse_rel_tol},
                 {"t_cap", c.t_cap},
                 {"identity_s", c.identity_s},
                 {"identity_t", c.identity_t},
                 {"ratio_band", c.ratio_band},
                 {"expected_slope", c.expected_slope},
                 {"slope_tol", c.slope_tol},
                 {"shift_tol", c.shift_tol},
                 {"marks", c.mark_specs},
                 {"mark_references", c.mark_references},
                 {"mark_rel_tol", c.mark_rel_tol},
                 {"exact_check", c.exact_check},
                 {"ks_tol", c.ks_tol},
                 {"ratio_decreasing", c.ratio_decreasing},
                 {"ratio_last_below", c.ratio_last_below},
                 {"F", c.f_spec},
                 {"g", c.g_spec},
                 {"k_level", c.calibration.k_level},
                 {"c_ab_t", c.calibration.c_ab_t},
                 {"c_r_q", c.calibration.c_r_q},
                 {"c1_t", c.calibration.c1_t},
                 {"langevin_x0", state_to_json(c.calibration.langevin_x0)}};
  if (!c.x0.empty()) {
    json x0 = json::array();
    for (const auto& s : c.x0) x0.push_back(state_to_json(s));
    j["params"]["x0"] = x0;
  }
  j["output"] = {{"dir", c.output_dir}, {"prefix", c.prefix}};
  return j;
}

}  // namespace penal

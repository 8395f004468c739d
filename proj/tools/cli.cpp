#include "cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include <CLI11.hpp>

#include "penal/ensemble.hpp"
#include "penal/errors.hpp"
#include "penal/runner.hpp"

namespace penal::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = -1;
  bool check = false;
};

void write_text(const fs::path& p, const std::string& text) {
  std::error_code ec;
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot open '" + p.string() + "' for writing");
  f << text;
  if (!f) throw IoError("write failed for '" + p.string() + "'");
}

ExperimentConfig load(const Common& o, bool allow_missing, const char* fallback) {
  ExperimentConfig c = o.config.empty() && allow_missing ? load_config_string(fallback) : load_config(o.config);
  if (o.seed) c.sim.seed = *o.seed;
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.threads > 0) c.sim.threads = static_cast<unsigned>(o.threads);
  if (c.sim.threads == 0) c.sim.threads = default_threads();
  return c;
}

/// Outcome of a subcommand, written to the manifest whatever happens.
struct Status {
  int code = kOk;
  std::string status = "ok";
  json reason = nullptr;
};

Status classify(const std::exception& e) {
  Status s;
  auto set = [&s, &e](int code, const char* status) {
    s.code = code;
    s.status = status;
    s.reason = {{"code", status}, {"message", e.what()}};
  };
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DomainError*>(&e) ||
      dynamic_cast<const UsageError*>(&e) || dynamic_cast<const YAML::Exception*>(&e)) {
    set(kValidation, "validation_error");
  } else if (dynamic_cast<const NumericalError*>(&e)) {
    set(kNumerical, "numerical_error");
  } else if (dynamic_cast<const IoError*>(&e)) {
    set(kNumerical, "io_error");
  } else {
    set(kNumerical, "internal_error");
  }
  return s;
}

/// Runs body, then writes <dir>/<prefix>.manifest.json with the outcome.
int with_manifest(const std::string& command, const Common& o, std::ostream& err,
                  const std::function<void(json&, Status&, ExperimentConfig*&)>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  json m{{"command", command}, {"version", std::string(version())}};
  Status st;
  ExperimentConfig* cfg = nullptr;
  try {
    body(m, st, cfg);
  } catch (const std::exception& e) {
    st = classify(e);
    err << "penal " << command << ": " << e.what() << "\n";
  }
  m["status"] = st.status;
  m["exit_code"] = st.code;
  m["reason"] = st.reason;
  m["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  fs::path dir = o.out.empty() ? fs::path("out") : fs::path(o.out);
  std::string prefix = "report";
  if (cfg) {
    dir = cfg->output_dir;
    prefix = cfg->prefix;
  }
  try {
    write_text(dir / (prefix + ".manifest.json"), m.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "penal " << command << ": " << e.what() << "\n";
    if (st.code == kOk) st.code = kNumerical;
  }
  return st.code;
}

void record_config(json& m, const ExperimentConfig& c) {
  m["resolved_config"] = config_to_json(c);
  m["seed"] = c.sim.seed;
  m["threads"] = c.sim.threads;
  m["eps_resolved"] = c.sampler.bandwidth();
}

int cmd_run(const Common& o, bool calibrate_only, std::ostream& out, std::ostream& err) {
  ExperimentConfig holder;
  return with_manifest(calibrate_only ? "calibrate" : "run", o, err,
                       [&](json& m, Status& st, ExperimentConfig*& cfg) {
    holder = load(o, calibrate_only, "experiment: calibrate\n");
    if (calibrate_only) holder.experiment = Experiment::kCalibrate;
    cfg = &holder;
    record_config(m, holder);
    const RunOutput r = run_experiment(holder);
    const fs::path dir = holder.output_dir;
    const fs::path csv = dir / (holder.prefix + ".csv");
    const fs::path js = dir / (holder.prefix + ".json");
    write_text(csv, r.csv);
    write_text(js, r.report.dump(2) + "\n");
    json outputs = {csv.string(), js.string()};
    if (calibrate_only) {
      YAML::Emitter y;
      y.SetDoublePrecision(17);
      y << YAML::BeginMap;
      for (const char* key : {"k", "C_alpha_beta", "c_r", "c1"}) {
        y << YAML::Key << key << YAML::Value << YAML::BeginMap << YAML::Key << "value" << YAML::Value
          << r.report[key]["mean"].get<double>() << YAML::Key << "se" << YAML::Value
          << r.report[key]["se"].get<double>() << YAML::EndMap;
      }
      y << YAML::EndMap;
      const fs::path constants = dir / "constants.yaml";
      write_text(constants, std::string(y.c_str()) + "\n");
      outputs.push_back(constants.string());
    }
    m["outputs"] = outputs;
    m["pass"] = r.pass;
    m["failures"] = r.failures;
    m["run_seconds"] = r.seconds;
    out << holder.prefix << ": " << (r.pass ? "pass" : "FAIL") << " (" << r.seconds << " s)\n";
    for (const auto& f : r.failures) out << "  " << f << "\n";
    if (o.check && !r.pass) {
      st.code = kCheckFailed;
      st.status = "check_failed";
      st.reason = {{"code", "check_failed"}, {"message", r.failures.empty() ? "" : r.failures.front()}};
    }
  });
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

int cmd_phi_eval(const Common& o, const std::string& states, std::ostream& out, std::ostream& err) {
  try {
    const ExperimentConfig c = load(o, false, "");
    if (!c.weight) throw ConfigError("weight: required for phi-eval");
    const PhiFn phi = make_phi(*c.weight, c.phi);
    std::ifstream file;
    std::istream* in = &std::cin;
    if (states != "-") {
      file.open(states);
      if (!file) throw ConfigError("states: cannot read '" + states + "'");
      in = &file;
    }
    const bool lang = c.sampler.model == Model::kLangevin;
    CsvTable t(lang ? std::vector<std::string>{"b", "a", "y", "phi", "error"}
                    : std::vector<std::string>{"x", "y", "l", "phi", "error"});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::string line;
    bool first = true;
    while (std::getline(*in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      const auto cells = split_csv_line(line);
      Eigen::Vector3d v = Eigen::Vector3d::Constant(nan);
      bool numeric = cells.size() == 3;
      for (std::size_t i = 0; numeric && i < 3; ++i) {
        char* end = nullptr;
        v[static_cast<Eigen::Index>(i)] = std::strtod(cells[i].c_str(), &end);
        numeric = end != cells[i].c_str() && *end == '\0';
      }
      if (first && !numeric) {  // header line
        first = false;
        continue;
      }
      first = false;
      if (!numeric) {
        for (std::size_t i = 0; i < 3; ++i) t.cell(i < cells.size() ? cells[i] : std::string());
        t.cell(nan).cell(std::string("error: expected three numeric components"));
      } else {
        t.cell(v[0]).cell(v[1]).cell(v[2]);
        try {
          const ModelState s = ModelState::from_components(c.sampler.model, v);
          validate_state(s);
          t.cell(phi(s)).cell(std::string());
        } catch (const std::exception& e) {
          t.cell(nan).cell(std::string("error: ") + e.what());
        }
      }
      t.end_row();
    }
    out << t.str();
    return kOk;
  } catch (const std::exception& e) {
    err << "penal phi-eval: " << e.what() << "\n";
    return classify(e).code;
  }
}

int cmd_dump_paths(const Common& o, std::int64_t count, std::ostream& out, std::ostream& err) {
  ExperimentConfig holder;
  return with_manifest("dump-paths", o, err, [&](json& m, Status&, ExperimentConfig*& cfg) {
    holder = load(o, false, "");
    cfg = &holder;
    record_config(m, holder);
    if (holder.x0.empty()) throw ConfigError("params.x0: required for dump-paths");
    if (count < 1) throw UsageError("--count must be positive");
    std::vector<PathSample> paths;
    for (std::int64_t i = 0; i < count; ++i) {
      paths.push_back(sample_path(holder.sampler, holder.x0.front(), holder.horizon, holder.sim.seed,
                                  path_stream(holder.sim.stream_base, i)));
    }
    std::ostringstream bin;
    write_path_dump(bin, paths);
    const fs::path p = fs::path(holder.output_dir) / (holder.prefix + ".paths");
    write_text(p, bin.str());
    m["outputs"] = {p.string()};
    m["paths"] = count;
    out << p.string() << ": " << count << " paths\n";
  });
}

}  // namespace

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Penalised path ensembles: invariant functions, weighted Monte Carlo and limit checks"};
  app.require_subcommand(1);
  Common o;
  std::string states = "-";
  std::int64_t count = 4;

  auto add_common = [&o](CLI::App* sub, bool config_required) {
    auto* cfg = sub->add_option("--config", o.config, "YAML config file (a run manifest also works)");
    if (config_required) cfg->required();
    sub->add_option("--seed", o.seed, "override sampling.seed");
    sub->add_option("--out", o.out, "override output.dir");
    sub->add_option("--threads", o.threads, "worker threads (default: PENAL_THREADS, else all cores)")
        ->check(CLI::NonNegativeNumber);
  };
  auto* run = app.add_subcommand("run", "run the configured experiment and write CSV, JSON and a manifest");
  add_common(run, true);
  run->add_flag("--check", o.check, "exit 4 when the acceptance check fails");
  auto* phi = app.add_subcommand("phi-eval", "evaluate phi at states read as CSV rows and print CSV");
  add_common(phi, true);
  phi->add_option("--states", states, "CSV file of state components ('-' reads stdin)");
  auto* dump = app.add_subcommand("dump-paths", "write sampled paths as a little-endian binary dump");
  add_common(dump, true);
  dump->add_option("--count", count, "number of paths");
  auto* cal = app.add_subcommand("calibrate", "estimate k, c_r, c1 and C_alpha_beta into constants.yaml");
  add_common(cal, false);
  cal->add_flag("--check", o.check, "accepted for symmetry; calibration always passes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kValidation;
  }
  if (*run) return cmd_run(o, false, out, err);
  if (*cal) return cmd_run(o, true, out, err);
  if (*phi) return cmd_phi_eval(o, states, out, err);
  return cmd_dump_paths(o, count, out, err);
}

}  // namespace penal::cli

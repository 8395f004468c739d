#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "penal/config.hpp"
#include "penal/errors.hpp"

using namespace penal;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "penal_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "penal");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

const char* kSmall = R"(experiment: martingale_identity_suite
model: {kind: brownian}
weight: {kind: lt_f, f: {kind: exp_decay, rate: 1.0}}
sampling: {dt: 0.01, n: 2000, seed: 7}
params:
  x0: [[0, 0, 0], [1, 1, 0]]
  times: [0.5, 1, 2]
)";

}  // namespace

TEST_SUITE("config_cli") {
  TEST_CASE("schema is fail-closed") {
    CHECK_THROWS_WITH_AS(load_config_string("experiment: martingale_identity_suite\nbogus: 1\n"),
                         doctest::Contains("bogus"), ConfigError);
    CHECK_THROWS_AS(load_config_string("experiment: nope\n"), ConfigError);
    CHECK_THROWS_AS(load_config_string("model: {kind: brownian, alpha: 1.5}\n"), ConfigError);
    CHECK_THROWS_AS(load_config_string("sampling: {dt: -1}\n"), ConfigError);
    const ExperimentConfig c = load_config_string(kSmall);
    CHECK(c.x0.size() == 2);
    CHECK(c.times.size() == 3);
    CHECK(c.sim.n == 2000);
  }

  TEST_CASE("resolved config round-trips through JSON") {
    const ExperimentConfig c = load_config_string(kSmall);
    const nlohmann::json j = config_to_json(c);
    const ExperimentConfig d = load_config_string(nlohmann::json{{"resolved_config", j}}.dump());
    CHECK(config_to_json(d) == j);
  }

  TEST_CASE("minimal run writes one CSV row per (x0, t)") {
    const fs::path dir = scratch("minimal");
    const fs::path cfg = write(dir / "c.yaml", kSmall);
    const Result r = run({"run", "--config", cfg.string(), "--out", dir.string()});
    CHECK(r.code == 0);
    const std::string csv = slurp(dir / "report.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
    CHECK(csv.find("\r\n") != std::string::npos);
    const auto m = nlohmann::json::parse(slurp(dir / "report.manifest.json"));
    CHECK(m["status"] == "ok");
    CHECK(m["exit_code"] == 0);
    CHECK(m["seed"] == 7);
    CHECK(m.contains("resolved_config"));
  }

  TEST_CASE("reruns and manifest replays are byte-identical") {
    const fs::path a = scratch("det_a"), b = scratch("det_b"), c = scratch("det_c");
    const fs::path cfg = write(a / "c.yaml", kSmall);
    REQUIRE(run({"run", "--config", cfg.string(), "--out", a.string()}).code == 0);
    REQUIRE(run({"run", "--config", cfg.string(), "--out", b.string(), "--threads", "2"}).code == 0);
    REQUIRE(run({"run", "--config", (a / "report.manifest.json").string(), "--out", c.string()}).code == 0);
    for (const char* f : {"report.csv", "report.json"}) {
      CHECK(slurp(a / f) == slurp(b / f));
      CHECK(slurp(a / f) == slurp(c / f));
    }
    const fs::path d = scratch("det_d");
    REQUIRE(run({"run", "--config", cfg.string(), "--out", d.string(), "--seed", "8"}).code == 0);
    CHECK(slurp(a / "report.csv") != slurp(d / "report.csv"));
  }

  TEST_CASE("validation errors exit 2 with a machine-readable reason") {
    const fs::path dir = scratch("domain");
    const fs::path cfg = write(dir / "c.yaml", R"(experiment: martingale_identity_suite
model: {kind: langevin}
weight: {kind: sup_f, f: {kind: constant}, threshold: 0.5}
params: {x0: [[0, -1, -1]], times: [1]}
)");
    const Result r = run({"run", "--config", cfg.string(), "--out", dir.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("domain: y0 must be <= 0") != std::string::npos);
    const auto m = nlohmann::json::parse(slurp(dir / "report.manifest.json"));
    CHECK(m["status"] == "validation_error");
    CHECK(m["reason"]["code"] == "validation_error");
    CHECK(run({"run"}).code == 2);
    CHECK(run({"run", "--config", (dir / "missing.yaml").string(), "--out", dir.string()}).code == 2);
  }

  TEST_CASE("--check exits 4 when a check fails") {
    const fs::path dir = scratch("check");
    // An impossible slope tolerance forces the check to fail.
    const fs::path cfg = write(dir / "c.yaml", R"(experiment: persistence_exponent_langevin
model: {kind: langevin}
sampling: {dt: 0.05, n: 2000, seed: 3, bootstrap: 10}
params: {x0: [-0.5, -0.5, -0.5], times: [1, 2, 4], slope_tol: 1e-9}
)");
    CHECK(run({"run", "--config", cfg.string(), "--out", dir.string()}).code == 0);
    CHECK(run({"run", "--config", cfg.string(), "--out", dir.string(), "--check"}).code == 4);
  }

  TEST_CASE("phi-eval") {
    const fs::path dir = scratch("phi");
    const fs::path hev = write(dir / "hev.yaml", "model: {kind: brownian}\nweight: {kind: hev, lambda: 0.5}\n");
    const fs::path states = write(dir / "s.csv", "x,y,l\n0,0,0\n-1,0,0\nfoo,1,2\n");
    Result r = run({"phi-eval", "--config", hev.string(), "--states", states.string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("0,0,0,1,\r\n") != std::string::npos);
    CHECK(r.out.find("-1,0,0,2,\r\n") != std::string::npos);
    CHECK(r.out.find("foo,1,2,nan,error") != std::string::npos);

    const fs::path sup = write(dir / "sup.yaml",
                               "model: {kind: brownian}\n"
                               "weight: {kind: sup_f, f: {kind: constant}, threshold: 0}\n");
    write(dir / "t.csv", "-2,-1,0\n1,2,0\n");
    r = run({"phi-eval", "--config", sup.string(), "--states", (dir / "t.csv").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("-2,-1,0,2,\r\n") != std::string::npos);
    CHECK(r.out.find("1,2,0,nan,\"error: state outside") != std::string::npos);

    const fs::path st = write(dir / "st.yaml",
                              "model: {kind: stable, alpha: 1.5, beta: 0}\n"
                              "weight: {kind: sup_f, f: {kind: indicator, threshold: 0}}\n");
    write(dir / "u.csv", "-1,-1,0\n");
    r = run({"phi-eval", "--config", st.string(), "--states", (dir / "u.csv").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("-1,-1,0,1") != std::string::npos);
  }

  TEST_CASE("dump-paths is deterministic") {
    const fs::path a = scratch("dump_a"), b = scratch("dump_b");
    const fs::path cfg = write(a / "c.yaml", "model: {kind: langevin}\nsampling: {dt: 0.1, seed: 5}\n"
                                             "params: {x0: [[0, -1, -1]], horizon: 2}\n");
    REQUIRE(run({"dump-paths", "--config", cfg.string(), "--out", a.string(), "--count", "3"}).code == 0);
    REQUIRE(run({"dump-paths", "--config", cfg.string(), "--out", b.string(), "--count", "3"}).code == 0);
    const std::string x = slurp(a / "report.paths");
    CHECK(!x.empty());
    CHECK(x == slurp(b / "report.paths"));
    std::istringstream in(x);
    const auto paths = read_path_dump(in);
    REQUIRE(paths.size() == 3);
    CHECK(paths[0].model == Model::kLangevin);
    CHECK(paths[0].dt == 0.1);
    CHECK(paths[0].steps == 20);
    CHECK(paths[0].seed == 5);
  }
}

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hkest/bounds.hpp"
#include "hkest/commands.hpp"
#include "hkest/error.hpp"
#include "hkest/run_config.hpp"

using namespace hkest;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hkest_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig stable(double beta) {
  RunConfig c;
  c.potential.beta = beta;
  c.n0 = 5;
  return c;
}

int run(const std::vector<std::string>& args, std::string* out_text = nullptr) {
  std::vector<const char*> argv{"hkest"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str() + err.str();
  return code;
}

std::vector<std::vector<std::string>> read_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("config round trip") {
  RunConfig c = stable(0.5);
  c.profile.family = "exponential";
  c.profile.core_gamma = 0.5;
  c.sigma0 = 0.25;
  c.times = {31.5, 77.0};
  c.mc.enabled = true;
  c.mc.x0 = {0.0, 2.5};
  c.seed = 123456789012345ULL;
  c.verify.spectral_times = {0.1, 3.0};
  const RunConfig back = parse_config(serialize_config(c));
  CHECK(back == c);
  CHECK(parse_config(serialize_config(RunConfig{})) == RunConfig{});
}

TEST_CASE("malformed configs name the field and line") {
  try {
    parse_config("profile:\n  family: poly\n  alpah: 1.0\n");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "profile.alpah");
    CHECK(e.line() == 3);
  }
  try {
    parse_config("grid:\n  M: 40\n  N: -5\n");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "grid.N");
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_config("grid:\n  M: [1, 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("times: [10, -3]\n"), ConfigError);
}

TEST_CASE("check command") {
  const auto dir = scratch("check");
  std::ostringstream log;
  CHECK(cmd_check(stable(2.0), dir, log) == 0);
  CHECK(fs::exists(dir / "check.yaml"));

  RunConfig bad = stable(1.0);
  bad.profile.family = "exponential";
  bad.profile.gamma = 0.5;
  bad.potential.family = "power";
  std::ostringstream log2;
  CHECK(cmd_check(bad, dir, log2) != 0);
  CHECK(log2.str().find("direct-jump") != std::string::npos);
}

TEST_CASE("classify command") {
  const auto dir = scratch("classify");
  CHECK(run_classify(stable(2.0)).headline == "aIUC; window = inf");
  CHECK(run_classify(stable(1.0)).regime.kind == Regime::AIUC);
  RunConfig half = stable(0.5);
  half.times = {35.0};
  const auto r = run_classify(half);
  CHECK(r.regime.kind == Regime::NonAIUC);
  REQUIRE(r.windows.size() == 1);
  const double K2 = r.pack.K2;
  CHECK(r.windows[0].radius == doctest::Approx(std::exp(std::pow(35.0 / (2.0 * K2), 2.0))).epsilon(1e-10));
  std::ostringstream log;
  CHECK(cmd_classify(half, dir, log) == 0);
  CHECK(log.str().rfind("non-aIUC", 0) == 0);
}

TEST_CASE("bounds command") {
  RunConfig c = stable(2.0);
  c.times = {20.0, 40.0, 200.0};
  c.bounds.xs = {0.0, 3.0, 12.0};
  c.bounds.ys = {1.0, 25.0};
  const auto rows = run_bounds(c);
  CHECK(rows.size() == 18);
  const Model m = make_run_model(c);
  ConstantsOptions opt = make_constants_options(c, std::nullopt);
  opt.compute_C3 = false;
  const auto pack = estimate_constants(m, opt);
  int checked = 0;
  for (const auto& r : rows) {
    if (r.t == 20.0) {
      CHECK(r.region == "uncovered");
      CHECK(std::isnan(r.lower));
    } else if (r.t == 40.0) {
      // below the closed-form threshold: general envelope, same call as here
      const auto e = envelope_heat_kernel(r.t, on_axis(r.x), on_axis(r.y), pack, m);
      CHECK(r.lower == e.lower);
      CHECK(r.upper == e.upper);
      CHECK(r.result_id == e.result_id);
      ++checked;
    } else {
      CHECK(r.result_id == "ground-state");
    }
  }
  CHECK(checked == 6);

  // thread count does not change a byte
  c.threads = 1;
  const std::string one = bounds_csv(run_bounds(c));
  c.threads = 4;
  CHECK(bounds_csv(run_bounds(c)) == one);
  const auto csv = read_csv(one);
  CHECK(csv[0] == std::vector<std::string>{"t", "x", "y", "region", "lower", "upper", "result_id"});
}

TEST_CASE("bounds switch to the tail form at the window") {
  RunConfig c = stable(0.5);
  c.times = {100.0};
  const auto k = run_classify(c);
  const double w = k.windows[0].radius;
  REQUIRE(std::isfinite(w));
  c.bounds.xs = {w * 0.98, w * 1.02};
  c.bounds.ys = {w * 3.0};
  const auto rows = run_bounds(c);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].result_id == "piuc-window");
  CHECK(rows[1].result_id == "doubling-tail");
}

TEST_CASE("command line entry point") {
  const auto dir = scratch("entry");
  const fs::path cfg = dir / "run.yaml";
  {
    std::ofstream out(cfg);
    out << serialize_config(stable(2.0));
  }
  std::string text;
  CHECK(run({"classify", "--config", cfg.string(), "--out", (dir / "o").string()}, &text) == 0);
  CHECK(text.find("aIUC; window = inf") != std::string::npos);
  CHECK(fs::exists(dir / "o" / "classify.yaml"));
  CHECK(run({"bounds", "--config", cfg.string(), "--out", (dir / "o").string(), "--threads", "2"}) == 0);
  CHECK(run({"classify"}) != 0);
  CHECK(run({"nosuch", "--config", cfg.string()}) != 0);

  const fs::path bad = dir / "bad.yaml";
  {
    std::ofstream out(bad);
    out << "profile:\n  alpha: 1\n  bogus: 2\n";
  }
  CHECK(run({"check", "--config", bad.string()}, &text) == 2);
  CHECK(text.find("profile.bogus") != std::string::npos);
  CHECK(text.find(":3") != std::string::npos);
}

TEST_CASE("verify rejects an under-resolved grid") {
  const auto dir = scratch("tiny");
  RunConfig c = stable(2.0);
  c.grid.N = 64;
  std::ostringstream log;
  CHECK(cmd_verify(c, dir, log) != 0);
  const std::string report = slurp(dir / "verify_report.yaml");
  CHECK(report.find("grid-resolution") != std::string::npos);
  CHECK(report.find("pass: false") != std::string::npos);
}

TEST_CASE("verify end to end on a small grid") {
  const auto dir = scratch("verify");
  RunConfig c = stable(2.0);
  c.grid.M = 20;
  c.grid.N = 320;
  c.verify.r_max = 14;
  c.verify.stride = 2;
  c.verify.refine = true;
  std::ostringstream log;
  CHECK(cmd_verify(c, dir, log) == 0);
  const auto spectrum = read_csv(slurp(dir / "spectrum.csv"));
  CHECK(spectrum[0] == std::vector<std::string>{"k", "lambda"});
  CHECK(spectrum.size() == 320);  // header + N - 1 eigenvalues
  const auto ratios = read_csv(slurp(dir / "ratios.csv"));
  CHECK(ratios[0] == std::vector<std::string>{"t", "x", "y", "ratio", "region"});
  CHECK(ratios.size() > 1);
}

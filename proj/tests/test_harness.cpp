#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "neckspec/harness.hpp"

using namespace neckspec;

namespace {
const std::filesystem::path kConfigs = std::filesystem::path(NECKSPEC_SOURCE_DIR) / "configs";

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("neckspec_harness_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::string& cmd, const std::string& config, const std::filesystem::path& out) {
  std::ostringstream o, e;
  const int code = run_command(cmd, kConfigs / config, out, o, e);
  return {code, o.str(), e.str()};
}
}  // namespace

TEST_CASE("config parsing is strict") {
  const std::string spec = R"("spectrum": {"builtin": "circle", "length": 6.283185307179586, "modes": 2})";
  auto cfg = parse_config("{" + spec + R"(, "q": [1], "T": [10, 20], "s": [4], "seed": 99})", ".");
  CHECK(cfg.q == std::vector<int>{1});
  CHECK(cfg.seed == 99u);
  CHECK(cfg.h == 1.0 / 16);
  CHECK(cfg.mode_cutoff() == doctest::Approx(25.0 * std::pow(std::numbers::pi / 20.0, 2) * 4.0));
  CHECK_FALSE(cfg.block1.has_value());
  CHECK_THROWS_AS(parse_config("{" + spec + R"(, "colour": 1})", "."), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"q": [1]})", "."), ConfigError);
  CHECK_THROWS_AS(parse_config("{" + spec + R"(, "h": -0.1})", "."), ConfigError);
  CHECK_THROWS_AS(parse_config("{" + spec + R"(, "q": [0.5]})", "."), ConfigError);
  CHECK_THROWS_AS(parse_config("{" + spec + R"(, "blocks": [{"L": 1, "boundary": "neumann", "mu": 1}]})", "."),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("{" + spec + R"(, "blocks": [{"L": 1, "boundary": "x", "mu": 1}, {}]})", "."),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("{not json", "."), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"spectrum": {"builtin": "sphere"}})", "."), ConfigError);
}

TEST_CASE("roots command") {
  const auto out = scratch("roots");
  auto r = run("roots", "circle_q1.json", out);
  CHECK(r.code == 0);
  CHECK(r.out.find("roots PASS: 2 zero modes") != std::string::npos);
  // two zero modes, each with the real root 0 of order 2
  const auto csv = slurp(out / "roots.csv");
  int real_rows = 0;
  std::istringstream in(csv);
  for (std::string line; std::getline(in, line);)
    if (line.ends_with(",0,0,2,1")) ++real_rows;
  CHECK(real_rows == 2);
  CHECK(run("roots", "torus_q2.json", out).out.find("3 zero modes") != std::string::npos);
  auto missing = run("roots", "missing_spectrum.json", out);
  CHECK(missing.code == 2);
  CHECK(missing.err.find("not found") != std::string::npos);
  CHECK(run("roots", "no_such_config.json", out).code == 2);
  CHECK(run("bogus", "circle_q1.json", out).code == 2);
  std::filesystem::remove_all(out);
}

TEST_CASE("q0check reports the growth exponent") {
  const auto out = scratch("q0");
  auto r = run("q0check", "q0check.json", out);
  CHECK(r.code == 0);
  std::istringstream in(slurp(out / "q0check.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "q,T,kind,q0_norm,relative_residual,fitted_exponent");
  int checked = 0;
  while (std::getline(in, line))
    if (line.find(",laplace,") != std::string::npos) {
      const double d = std::stod(line.substr(line.rfind(',') + 1));
      CHECK(d == doctest::Approx(2.0).epsilon(0.1));
      ++checked;
    }
  CHECK(checked == 4);
  std::filesystem::remove_all(out);
}

TEST_CASE("paircheck and glue commands") {
  const auto out = scratch("pg");
  CHECK(run("paircheck", "paircheck.json", out).code == 0);
  auto g = run("glue", "glue_circle.json", out);
  CHECK(g.code == 0);
  CHECK(std::filesystem::exists(out / "glue.csv"));
  CHECK(slurp(out / "glue_history.csv").starts_with("q,T,iter,residual,eta,u_norm_over_f_norm\n"));
  auto m = run("glue", "glue_mismatch.json", out);
  CHECK(m.code == 2);
  CHECK(m.err.find("matching condition violated") != std::string::npos);
  // glue without blocks is a config error
  CHECK(run("glue", "circle_q1.json", out).code == 2);
  std::filesystem::remove_all(out);
}

TEST_CASE("density command is deterministic") {
  const auto a = scratch("da"), b = scratch("db");
  CHECK(run("density", "density_b1.json", a).code == 0);
  setenv("NECKSPEC_THREADS", "1", 1);
  CHECK(run("density", "density_b1.json", b).code == 0);
  CHECK(slurp(a / "density_q0.csv") == slurp(b / "density_q0.csv"));
  CHECK(std::filesystem::exists(a / "density_q0_T40.dat"));
  for (const auto& e : std::filesystem::directory_iterator(a)) CHECK(e.path().extension() != ".tmp");
  setenv("NECKSPEC_THREADS", "zero", 1);
  CHECK(run("density", "density_b1.json", b).code == 2);
  unsetenv("NECKSPEC_THREADS");
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
}

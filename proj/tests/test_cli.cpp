#include "pnk/cli.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace pnk;
using namespace pnk::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = PNK_SOURCE_DIR;

json read_json(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in);
  return json::parse(in);
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("pnk_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int run_tool(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" + std::string(PNK_TOOL) + "\" " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::vector<fs::path> shipped_configs() {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(kSource / "configs"))
    if (e.path().extension() == ".json") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

json hopf_config() {
  return json::parse(R"({
    "system": {"name": "hopf", "params": {"omega": 1.0, "eps0": 0.1}},
    "analysis": {"type": "monodromy", "alpha": [1], "eps": [0.1]}
  })");
}

void expect_invalid(const json& j, const std::string& fragment) {
  try {
    parse_config(j);
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
    CHECK(std::string(e.what()).find(fragment) != std::string::npos);
  }
}

}  // namespace

TEST_CASE("config validation") {
  SUBCASE("unknown keys are rejected at every level") {
    json j = hopf_config();
    j["extra"] = 1;
    expect_invalid(j, "extra: unknown key");
    j = hopf_config();
    j["analysis"]["alpah"] = {1};
    expect_invalid(j, "analysis.alpah");
    j = hopf_config();
    j["system"]["params"]["omeg"] = 1.0;
    expect_invalid(j, "system.params.omeg");
  }
  SUBCASE("dimensions must agree") {
    json j = hopf_config();
    j["analysis"]["alpha"] = {1, 0};
    expect_invalid(j, "analysis.alpha");
    j = hopf_config();
    j["analysis"]["eps"] = {0.1, 0.2};
    expect_invalid(j, "analysis.eps");
    j = read_json(kSource / "configs" / "straightened_monodromy.json");
    j["system"]["params"]["C"] = {{1.0, 2.0}, {0.0, 1.0}};
    expect_invalid(j, "C must be r x p");
  }
  SUBCASE("zero class") {
    expect_invalid(read_json(kSource / "tests" / "data" / "zero_class.json"), "zero class");
  }
  SUBCASE("continuation needs a path") {
    json j = hopf_config();
    j["analysis"]["type"] = "continue";
    expect_invalid(j, "analysis.path");
  }
  SUBCASE("polynomial degree bound") {
    json j = read_json(kSource / "configs" / "polynomial_oscillators.json");
    j["system"]["params"]["fields"][0][0][0]["x"] = {0, 0, 2, 0};
    expect_invalid(j, "max_degree");
  }
  SUBCASE("exit codes by error kind") {
    CHECK(exit_code(ErrorKind::Validation) == 2);
    CHECK(exit_code(ErrorKind::ZeroClass) == 2);
    CHECK(exit_code(ErrorKind::NoConvergence) == 3);
    CHECK(exit_code(ErrorKind::OpenLoop) == 3);
    CHECK(exit_code(ErrorKind::NonCommuting) == 4);
  }
}

TEST_CASE("config round trip") {
  for (const auto& path : shipped_configs()) {
    CAPTURE(path.string());
    const RunConfig cfg = load_config(path);
    const json echo = to_json(cfg);
    CHECK(to_json(parse_config(echo)) == echo);
    CHECK(to_json(parse_config(echo)).dump() == echo.dump());
  }
}

TEST_CASE("hopf monodromy through the CLI") {
  RunOptions o;
  o.dry = true;
  const RunOutcome out = run(parse_config(hopf_config()), o);
  CHECK(out.exit_code == 0);
  const auto& mu = out.report["results"]["monodromy"]["transversal_spectrum"][0];
  CHECK(std::abs(mu[0].get<double>() / std::exp(-0.4 * std::numbers::pi) - 1.0) <= 1e-6);
  CHECK(mu[1].get<double>() == 0.0);
  CHECK(to_json(parse_config(out.report["config"])) == out.report["config"]);
  CHECK(out.report["tool"]["version"] == kVersion);
}

TEST_CASE("numerical failures are reported") {
  json j = read_json(kSource / "configs" / "straightened_torus.json");
  j["analysis"]["max_iters"] = 0;
  RunOptions o;
  o.dry = true;
  const RunOutcome out = run(parse_config(j), o);
  CHECK(out.exit_code == 3);
  CHECK(out.report["status"] == "failed");
  CHECK(out.report["error"]["kind"] == "NoConvergence");
  CHECK(out.report["error"]["message"].get<std::string>().find("NoConvergence") == 0);
}

TEST_CASE("emit_branch_table") {
  const fs::path dir = scratch("branch");
  SUBCASE("21 points give 21 rows") {
    const RunOutcome out = run(load_config(kSource / "configs" / "straightened_continue.json"), {dir});
    REQUIRE(out.exit_code == 0);
    std::ifstream in(dir / "branch.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "eps_1,u_1,u_2,abs_lambda_1,abs_lambda_2,dist_from_one,newton_iters,residual");
    std::vector<std::string> rows;
    for (std::string line; std::getline(in, line);) rows.push_back(line);
    REQUIRE(rows.size() == 21);
    // 17 significant digits reproduce the stored doubles exactly.
    const auto& pts = out.report["results"]["continue"]["branch"]["points"];
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::stringstream ss(rows[i]);
      std::string cell;
      std::getline(ss, cell, ',');
      CHECK(std::stod(cell) == pts[i]["eps"][0].get<double>());
      std::getline(ss, cell, ',');
      CHECK(std::stod(cell) == pts[i]["u"][0].get<double>());
    }
  }
  SUBCASE("a stopped branch keeps its rows and status") {
    json j = read_json(kSource / "configs" / "pitchfork_bifurcate.json");
    j["analysis"]["type"] = "continue";
    j["analysis"].erase("probe_offsets");
    j["analysis"]["path"] = {{"from", {-0.1}}, {"to", {0.1}}, {"steps", 21}};
    const RunOutcome out = run(parse_config(j), {dir});
    CHECK(out.exit_code == 0);
    CHECK(out.report["results"]["continue"]["branch"]["status"] == "stopped_at_critical");
    std::ifstream in(dir / "branch.csv");
    int lines = 0;
    for (std::string line; std::getline(in, line);) ++lines;
    CHECK(lines == 1 + 10);
  }
  SUBCASE("empty branch") {
    ContinuationBranch empty;
    CHECK_THROWS_AS(emit_branch_table(empty, dir / "x.csv"), Error);
  }
}

TEST_CASE("determinism and golden reports") {
  for (const auto& path : shipped_configs()) {
    CAPTURE(path.string());
    const fs::path golden = kSource / "tests" / "golden" / path.filename();
    REQUIRE(fs::exists(golden));
    RunOptions o;
    o.dry = true;
    const RunConfig cfg = load_config(path);
    const json a = strip_timing(run(cfg, o).report);
    const json b = strip_timing(run(cfg, o).report);
    CHECK(a.dump() == b.dump());
    // Non-finite values are written as null, so compare the serialized form.
    CHECK(json::parse(a.dump()) == strip_timing(read_json(golden)));
  }
}

TEST_CASE("pnk executable") {
  const fs::path dir = scratch("tool");
  const std::string cfg = (kSource / "configs" / "hopf_monodromy.json").string();
  CHECK(run_tool("validate \"" + cfg + "\"") == 0);
  CHECK(run_tool("run \"" + cfg + "\" --out \"" + dir.string() + "\" --verbose") == 0);
  CHECK(fs::exists(dir / "report.json"));
  CHECK(run_tool("run \"" + (kSource / "tests" / "data" / "noncommuting.json").string() + "\" --out \"" +
                 dir.string() + "\"") == 4);
  CHECK(run_tool("validate \"" + (kSource / "tests" / "data" / "zero_class.json").string() + "\"") == 2);
  CHECK(run_tool("run \"" + (kSource / "tests" / "data" / "zero_class.json").string() + "\"") == 2);
  CHECK(run_tool("run \"" + (dir / "missing.json").string() + "\"") == 3);
  CHECK(run_tool("run \"" + cfg + "\" --out \"" + dir.string() + "\"", "PNK_THREADS=zero") == 2);
  CHECK(run_tool("run \"" + cfg + "\" --out \"" + dir.string() + "\"", "PNK_THREADS=2") == 0);
  CHECK(run_tool("frobnicate") == 2);
}

#pragma once

#include "pnk/bifurcation.hpp"
#include "pnk/catalog.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pnk::cli {

inline constexpr const char* kVersion = "0.1.0";

/// One monomial coef * prod x_j^x[j] * prod eps_l^eps[l].
struct PolyTerm {
  double coef = 0.0;
  Eigen::VectorXi x;
  Eigen::VectorXi eps;
};

struct PolynomialSpec {
  int n = 0;
  int k = 0;
  int p = 0;
  int max_degree = 4;
  /// fields[i][c] lists the terms of component c of X_i.
  std::vector<std::vector<std::vector<PolyTerm>>> fields;
};

struct SystemConfig {
  std::string name;
  StraightenedSpec straightened;
  double omega = 1.0;
  int n_dof = 2;
  double rotation = 0.18;
  double c = 1.0;
  double a1 = -0.03;
  double a2 = 0.02;
  double eps0 = 0.0;
  PolynomialSpec polynomial;
};

struct TorusConfig {
  /// Polynomial systems: torus swept from `base` by the flows at `eps0`.
  Vector base;
  Vector eps0;
  std::vector<int> angle_coords;
  /// oscillator_pair: energies h_i.
  Vector energies;
};

struct PathConfig {
  Vector from;
  Vector to;
  int steps = 0;
};

struct AnalysisConfig {
  std::string type;
  Eigen::VectorXi alpha;
  std::optional<Vector> eps;
  std::optional<PathConfig> path;
  double flow_tol = 1e-11;
  double newton_tol = 1e-10;
  int max_iters = 20;
  double delta_min = 1e-6;
  double verify_tol = 1e-8;
  int verify_grid = 4;
  int grid = 16;
  double torus_tol = 1e-8;
  int floquet_samples = 256;
  int basepoint_samples = 0;
  double eps_tol = 1e-6;
  std::vector<double> probe_offsets;
  bool parallel = false;
};

struct OutputConfig {
  std::string dir = "pnk_out";
  std::vector<std::string> formats{"json", "csv"};
};

struct RunConfig {
  SystemConfig system;
  TorusConfig torus;
  AnalysisConfig analysis;
  OutputConfig output;
};

/// Throws Error(Validation) naming the offending key. Unknown keys are errors.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
/// Normalized form: every option spelled out, defaults filled in.
nlohmann::json to_json(const RunConfig& cfg);

struct BuiltSystem {
  VectorFieldFamily family;
  TorusSeed seed;
};

BuiltSystem build_system(const RunConfig& cfg);

/// 0 ok, 2 validation, 3 numerical failure, 4 non-commutation.
int exit_code(ErrorKind kind);

struct RunOutcome {
  nlohmann::json report;
  int exit_code = 0;
};

struct RunOptions {
  /// Overrides output.dir when set.
  std::optional<std::filesystem::path> out_dir;
  bool verbose = false;
  /// Worker count for parallel continuation; 0 uses PNK_THREADS or the hardware.
  int threads = 0;
  /// Skip writing files.
  bool dry = false;
};

/// Runs the configured analysis and writes report.json and tables. Numerical
/// failures are caught and recorded in the report.
RunOutcome run(const RunConfig& cfg, const RunOptions& opts = {});

/// CSV with one row per branch point: eps_*, u_*, abs_lambda_*, dist_from_one,
/// newton_iters, residual. Throws Validation on an empty branch, Io on write errors.
void emit_branch_table(const ContinuationBranch& branch, const std::filesystem::path& path);

/// Report with the timing block removed, for golden comparisons.
nlohmann::json strip_timing(nlohmann::json report);

}  // namespace pnk::cli

#pragma once

#include "pnk/pn_map.hpp"

#include <string>
#include <vector>

namespace pnk {

struct HyperbolicityReport {
  CVector spectrum;
  /// min_i |lambda_i - 1|
  double dist_from_one = 0.0;
  /// min_i ||lambda_i| - 1|
  double dist_from_unit_circle = 0.0;
  bool B_invertible = false;
  /// Condition number of I - L.
  double B_condition = 0.0;
};

HyperbolicityReport hyperbolicity_report(const Matrix& L, double delta = 1e-6);

/// No multiplier on the unit circle: no second invariant torus meets the
/// section near the fixed point.
bool isolation_check(const HyperbolicityReport& report, double tol = 1e-10);

struct NewtonOptions {
  double tol = 1e-10;
  int max_iters = 20;
  /// I - L counts as singular below this reciprocal condition number.
  double singular_rcond = 1e-12;
  FlowTolerance flow{1e-11};
};

struct FixedPoint {
  Vector u;
  /// Derivative of the map at u.
  Matrix L;
  CVector spectrum;
  int iterations = 0;
  double residual = 0.0;
};

/// Full Newton on u - P(u) = 0, with I - DP(u) from a variational pass at
/// every iterate. Throws SingularJacobian or NoConvergence.
FixedPoint newton_fixed_point(const PoincareNekhoroshevMap& map, const Vector& u_guess,
                              const NewtonOptions& opts = {});

FixedPoint newton_fixed_point(const VectorFieldFamily& family, const TorusSeed& seed,
                              const HomotopyClass& alpha, const SectionFrame& frame,
                              const ParamVector& eps, const Vector& u_guess, double tol = 1e-10,
                              int max_iters = 20);

enum class BranchStatus { Completed, StoppedAtCritical, Diverged };

std::string to_string(BranchStatus s);

struct ContinuationPoint {
  ParamVector eps;
  Vector u;
  /// Multipliers from the map derivative at the fixed point.
  CVector spectrum;
  int newton_iters = 0;
  double residual = 0.0;
  double dist_from_one = 0.0;
  /// Residual of an independent map evaluation at u.
  double verify_residual = 0.0;
  /// Largest mismatch between eig(I - DP(u)) and 1 - lambda_i, with lambda_i
  /// from the total monodromy at the fixed point. NaN when the loop through
  /// the fixed point does not close.
  double beta_defect = 0.0;
};

struct ContinuationOptions {
  NewtonOptions newton;
  double delta_min = 1e-6;
  /// Solve slices concurrently, each seeded from the first solved point.
  bool parallel = false;
  /// Worker count for the parallel mode; 0 means hardware concurrency.
  int threads = 0;
  /// Compute the monodromy-based multiplier check at every point.
  bool check_beta = true;
};

struct ContinuationBranch {
  SectionFrame frame;
  HomotopyClass alpha;
  std::vector<ContinuationPoint> points;
  BranchStatus status = BranchStatus::Completed;
  /// Parameter of the slice that stopped the branch, if any.
  ParamVector stop_eps;
  std::string message;
};

/// Fixed points of the PN map along eps_path on the section through the seed
/// base point. Failures end the branch and are recorded in `status`.
ContinuationBranch continue_branch(const VectorFieldFamily& family, const TorusSeed& seed,
                                   const HomotopyClass& alpha,
                                   const std::vector<ParamVector>& eps_path,
                                   const ContinuationOptions& opts = {});

/// Evenly spaced path from a to b with `steps` points (steps >= 1).
std::vector<ParamVector> linear_path(const ParamVector& a, const ParamVector& b, int steps);

struct TorusSamples {
  int grid = 0;
  /// grid^k points; the index of (j_1, ..., j_k) is sum_i j_i grid^{i-1}.
  std::vector<PhasePoint> points;
  /// Largest wrap-around defect |Phi^{1/grid}_{2 pi X_i}(x_last) - x_first|.
  double closure_defect = 0.0;
};

/// Transports the fixed point over the grid by the flows of 2 pi X_i. Throws
/// OpenTorus when the closure defect exceeds tol.
TorusSamples reconstruct_torus(const VectorFieldFamily& family, const TorusSeed& seed,
                               const ParamVector& eps, const SectionFrame& frame,
                               const Vector& u_fixed, int grid_per_angle = 32, double tol = 1e-8,
                               const FlowTolerance& flow = FlowTolerance{1e-12});

/// Symmetric Hausdorff distance between two sampled tori.
double hausdorff_distance(const TorusSeed& seed, const TorusSamples& a, const TorusSamples& b);

}  // namespace pnk

#pragma once

#include "pnk/types.hpp"

#include <Eigen/Core>

#include <functional>
#include <utility>
#include <vector>

namespace pnk {

/// k parametric vector fields X_i(x; eps) on an n-dimensional chart with p
/// parameters. Jacobians come from the supplied callback when present and
/// from fourth-order central differences otherwise.
class VectorFieldFamily {
public:
  using EvalFn = std::function<Vector(int, const Vector&, const Vector&)>;
  using JacobianFn = std::function<Matrix(int, const Vector&, const Vector&)>;

  VectorFieldFamily(int n, int k, int p, EvalFn eval, JacobianFn jacobian = {},
                    JacobianFn param_jacobian = {});

  int n() const noexcept { return n_; }
  int k() const noexcept { return k_; }
  int p() const noexcept { return p_; }
  bool has_analytic_jacobian() const noexcept { return static_cast<bool>(jacobian_); }

  Vector eval(int i, const Vector& x, const Vector& eps) const;
  /// n x n spatial derivative of X_i.
  Matrix jacobian(int i, const Vector& x, const Vector& eps) const;
  /// n x p derivative of X_i with respect to the parameters.
  Matrix param_jacobian(int i, const Vector& x, const Vector& eps) const;
  /// Columns X_1(x), ..., X_k(x).
  Matrix frame(const Vector& x, const Vector& eps) const;

  void check_point(const Vector& x, const Vector& eps) const;

private:
  int n_;
  int k_;
  int p_;
  EvalFn eval_;
  JacobianFn jacobian_;
  JacobianFn param_jacobian_;
};

/// Fourth-order central-difference derivative of `f` at `x`, step
/// 1e-5 * max(1, |x|_inf).
Matrix central_difference(const std::function<Vector(const Vector&)>& f, const Vector& x);

/// A single (non-parametric in use) vector field with its derivatives, e.g. a
/// loop field or one member of a family.
struct VectorField {
  int n = 0;
  int p = 0;
  std::function<Vector(const Vector&, const Vector&)> eval;
  std::function<Matrix(const Vector&, const Vector&)> jacobian;
  std::function<Matrix(const Vector&, const Vector&)> param_jacobian;

  /// c * X, for rescaling checks.
  VectorField scaled(double c) const;
};

/// Winding numbers of a loop on the k-torus around its basis cycles.
struct HomotopyClass {
  Eigen::VectorXi winding;

  HomotopyClass() = default;
  explicit HomotopyClass(Eigen::VectorXi w) : winding(std::move(w)) {}
  HomotopyClass(std::initializer_list<int> w);

  int size() const { return static_cast<int>(winding.size()); }
  bool is_zero() const { return winding.size() == 0 || (winding.array() == 0).all(); }
  /// Loop coefficients c_i = 2 pi alpha_i.
  Vector coefficients() const;
};

/// Combination sum_i c_i X_i of the family members.
VectorField linear_combination(const VectorFieldFamily& family, const Vector& coeffs);

/// X_i alone.
VectorField member_field(const VectorFieldFamily& family, int i);

/// X_alpha = 2 pi sum_i alpha_i X_i: its time-one orbits through the torus are
/// closed loops of class alpha.
VectorField loop_field(const VectorFieldFamily& family, const HomotopyClass& alpha);

/// Parametrized invariant k-torus at eps0, with optional angle-valued chart
/// coordinates. Angle coordinates are kept unnormalized; displacement() and
/// same_point() reduce them mod 2 pi.
class TorusSeed {
public:
  using EmbedFn = std::function<Vector(const Vector&)>;
  using TangentFn = std::function<Matrix(const Vector&)>;

  TorusSeed(int k, EmbedFn embed, Vector eps0, std::vector<int> angle_coords = {},
            TangentFn tangent = {});

  /// Torus swept from `base` by the flows of X_1..X_k, angle phi_i meaning flow
  /// time phi_i under X_i. Requires the flows to close at 2 pi.
  static TorusSeed from_flow(const VectorFieldFamily& family, const Vector& base, Vector eps0,
                             std::vector<int> angle_coords = {}, double tol = 1e-12);

  int k() const noexcept { return k_; }
  const Vector& eps0() const noexcept { return eps0_; }
  const std::vector<int>& angle_coords() const noexcept { return angle_coords_; }

  PhasePoint embed(const Vector& phi) const;
  PhasePoint base_point() const { return embed(Vector::Zero(k_)); }
  /// n x k matrix of d embed / d phi_j.
  Matrix tangent(const Vector& phi) const;

  /// x - y with angle components reduced to (-pi, pi].
  Vector displacement(const Vector& x, const Vector& y) const;
  bool same_point(const Vector& x, const Vector& y, double tol = 1e-9) const;

private:
  int k_;
  EmbedFn embed_;
  Vector eps0_;
  std::vector<int> angle_coords_;
  TangentFn tangent_;
};

/// [X_i, X_j] = (DX_j) X_i - (DX_i) X_j at (x, eps).
Vector lie_bracket(const VectorFieldFamily& family, int i, int j, const Vector& x,
                   const Vector& eps);

struct CommutationReport {
  double max_residual = 0.0;
  std::pair<int, int> worst_pair{-1, -1};
  bool pass = true;
};

CommutationReport verify_commuting_family(
    const VectorFieldFamily& family,
    const std::vector<std::pair<PhasePoint, ParamVector>>& samples, double tol);

struct InvarianceReport {
  double max_normal_residual = 0.0;
  bool pass = true;
};

/// Splits every X_i(embed(phi)) on a grid into tangent and normal parts.
InvarianceReport verify_torus_invariance(const VectorFieldFamily& family, const TorusSeed& seed,
                                         int grid_per_angle, double tol);

/// Regular grid of `grid_per_angle`^k angle vectors in [0, 2 pi)^k, first
/// angle varying fastest.
std::vector<Vector> angle_grid(int k, int grid_per_angle);

}  // namespace pnk

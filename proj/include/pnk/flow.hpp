#pragma once

#include "pnk/core_model.hpp"
#include "pnk/integrator.hpp"
#include "pnk/section.hpp"

namespace pnk {

/// Integration accuracy. `tol` is the relative tolerance; the absolute
/// tolerance is tol / 100. Tangent (variational) components use a far smaller
/// absolute floor so strongly contracting directions keep relative accuracy.
struct FlowTolerance {
  double tol = 1e-10;
  double atol_ratio = 1e-2;
  double tangent_atol_ratio = 1e-10;
  long max_steps = 200000;
};

struct FlowResult {
  PhasePoint endpoint;
  long steps_taken = 0;
  double est_error = 0.0;
};

struct VariationalResult {
  PhasePoint endpoint;
  /// Derivative of the time-t flow map at the initial point.
  Matrix tangent;
  long steps_taken = 0;
};

FlowResult integrate_flow(const VectorField& field, const PhasePoint& x0, const ParamVector& eps,
                          double t, const FlowTolerance& tol = {});
inline FlowResult integrate_flow(const VectorField& field, const PhasePoint& x0,
                                 const ParamVector& eps, double t, double tol) {
  return integrate_flow(field, x0, eps, t, FlowTolerance{tol});
}

/// Joint integration of x' = X(x), M' = DX(x) M, M(0) = I.
VariationalResult integrate_variational(const VectorField& field, const PhasePoint& x0,
                                        const ParamVector& eps, double t,
                                        const FlowTolerance& tol = {});
inline VariationalResult integrate_variational(const VectorField& field, const PhasePoint& x0,
                                               const ParamVector& eps, double t, double tol) {
  return integrate_variational(field, x0, eps, t, FlowTolerance{tol});
}

/// Flow y successively for time s_i under X_i. With `with_tangent` the
/// derivative of the composition with respect to y is returned as well.
VariationalResult compose_group_flows(const VectorFieldFamily& family, const PhasePoint& y,
                                      const ParamVector& eps, const Vector& s,
                                      const FlowTolerance& tol, bool with_tangent);

struct ReturnTimes {
  Vector s;
  /// Point reached on the section.
  PhasePoint landed;
  int iterations = 0;
};

/// Group times s with constraints(Phi_s(y) - m) = 0, by Newton iteration whose
/// Jacobian pairs the constraints with the fields at the current point.
ReturnTimes solve_return_times(const VectorFieldFamily& family, const PhasePoint& y,
                               const ParamVector& eps, const SectionFrame& section,
                               const FlowTolerance& tol = {}, int max_iters = 25);

}  // namespace pnk

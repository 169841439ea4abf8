#pragma once

#include "pnk/core_model.hpp"
#include "pnk/flow.hpp"
#include "pnk/section.hpp"

#include <utility>
#include <vector>

namespace pnk {

/// Section through m orthogonal (in chart coordinates) to span{X_i(m)}, with
/// constraints dual to the group directions.
SectionFrame build_section(const VectorFieldFamily& family, const TorusSeed& seed,
                           const PhasePoint& m, const ParamVector& eps, double scale = 1.0);

struct TotalMonodromy {
  Matrix total;
  double closure_defect = 0.0;
};

/// Derivative at m of the time-one map of the loop field X_alpha. Throws
/// OpenLoop when the orbit of m does not close to within closure_factor * tol.
TotalMonodromy total_monodromy(const VectorFieldFamily& family, const TorusSeed& seed,
                               const HomotopyClass& alpha, const PhasePoint& m,
                               const ParamVector& eps, const FlowTolerance& tol = {},
                               double closure_factor = 10.0);

/// Restriction of A to S after projecting along the group directions; r x r
/// in the frame's transversal coordinates.
Matrix transversal_linearization(const Matrix& total, const SectionFrame& frame);

struct MonodromyReport {
  Matrix total;
  Matrix transversal;
  CVector full_spectrum;
  CVector transversal_spectrum;
  /// Eigenvalues of `total` within unit_tol of 1.
  int trivial_unit_count = 0;
  double closure_defect = 0.0;
  /// Matching distance between full_spectrum and transversal_spectrum plus k ones.
  double splitting_distance = 0.0;
};

MonodromyReport monodromy_report(const VectorFieldFamily& family, const TorusSeed& seed,
                                 const HomotopyClass& alpha, const SectionFrame& frame,
                                 const FlowTolerance& tol = {}, double unit_tol = 1e-8,
                                 double closure_factor = 10.0);

/// The Poincare-Nekhoroshev map of class alpha on a fixed section, written in
/// transversal coordinates u (x = m + S u).
class PoincareNekhoroshevMap {
public:
  PoincareNekhoroshevMap(VectorFieldFamily family, HomotopyClass alpha, SectionFrame frame,
                         ParamVector eps, FlowTolerance tol = {});

  int dim() const { return frame_.r(); }
  const SectionFrame& frame() const { return frame_; }
  const ParamVector& eps() const { return eps_; }
  const VectorFieldFamily& family() const { return family_; }
  const HomotopyClass& alpha() const { return alpha_; }

  /// Full-space image of a section point.
  PhasePoint apply_point(const PhasePoint& x) const;
  Vector apply(const Vector& u) const;
  /// Image and derivative D P(u), both from one variational pass.
  std::pair<Vector, Matrix> apply_with_jacobian(const Vector& u) const;

private:
  VectorFieldFamily family_;
  HomotopyClass alpha_;
  SectionFrame frame_;
  ParamVector eps_;
  FlowTolerance tol_;
  VectorField loop_;
};

/// Time-one flow under X_alpha followed by the return onto the section.
PhasePoint evaluate_pn_map(const VectorFieldFamily& family, const TorusSeed& seed,
                           const HomotopyClass& alpha, const SectionFrame& frame,
                           const PhasePoint& x, const ParamVector& eps,
                           const FlowTolerance& tol = {});

struct BasepointReport {
  double max_spectral_distance = 0.0;
  bool pass = true;
  std::vector<CVector> spectra;
};

/// Transversal spectra at embed(phi) for each sample angle, compared pairwise.
BasepointReport basepoint_spectrum_check(const VectorFieldFamily& family, const TorusSeed& seed,
                                         const HomotopyClass& alpha,
                                         const std::vector<Vector>& sample_angles,
                                         const ParamVector& eps, double tol,
                                         const FlowTolerance& flow_tol = {});

}  // namespace pnk

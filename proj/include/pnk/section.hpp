#pragma once

#include "pnk/types.hpp"

#include <vector>

namespace pnk {

/// Affine transversal section through a base point m of an invariant torus.
///
/// The section is m + span(transversal). `group` holds X_i(m) column-wise and
/// `constraints` are covectors with constraints * transversal = 0 and
/// constraints * group = I, so that `constraints * (x - m) = 0` cuts out the
/// section and the pairing matrix is the identity at m.
struct SectionFrame {
  PhasePoint base;
  ParamVector eps;
  Matrix transversal;   // n x r, orthonormal columns
  Matrix group;         // n x k
  Matrix constraints;   // k x n
  std::vector<int> angle_coords;
  /// Length scale of the section; the return-time solve trusts offsets up to
  /// 0.1 * scale along the group directions.
  double scale = 1.0;

  int n() const { return static_cast<int>(base.size()); }
  int k() const { return static_cast<int>(group.cols()); }
  int r() const { return static_cast<int>(transversal.cols()); }
  double trust_radius() const { return 0.1 * scale; }

  /// x - m with angle components reduced to (-pi, pi].
  Vector displacement(const Vector& x) const;
  Vector constraint_values(const Vector& x) const { return constraints * displacement(x); }
  /// Transversal coordinates u of a point (orthogonal projection onto S).
  Vector coords(const Vector& x) const { return transversal.transpose() * displacement(x); }
  PhasePoint point(const Vector& u) const { return base + transversal * u; }
  /// Projector onto S along the group directions, as an r x n map into
  /// transversal coordinates.
  Matrix projector_coords() const;
};

/// Reduce an angle difference to (-pi, pi].
double wrap_angle(double a);

Vector wrapped_difference(const Vector& x, const Vector& y, const std::vector<int>& angle_coords);

}  // namespace pnk

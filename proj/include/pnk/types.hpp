#pragma once

#include <Eigen/Core>

#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pnk {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

/// Chart coordinates of a point of the phase space.
using PhasePoint = Vector;
/// Parameter values, one entry per parameter direction.
using ParamVector = Vector;

enum class ErrorKind {
  Validation,
  ZeroClass,
  DegenerateTangent,
  StepFailure,
  NonFinite,
  NoConvergence,
  SingularGeometry,
  OpenLoop,
  Escape,
  SingularJacobian,
  OpenTorus,
  SingularMonodromy,
  Resonance,
  NonCommuting,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above so the
/// CLI can map it onto an exit status without parsing messages.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

/// Short scientific rendering of a double for error messages.
std::string format_number(double v);

}  // namespace pnk

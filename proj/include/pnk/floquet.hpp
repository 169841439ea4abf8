#pragma once

#include "pnk/core_model.hpp"
#include "pnk/flow.hpp"

#include <functional>
#include <vector>

namespace pnk {

using MatrixFn = std::function<Matrix(double)>;
using VectorFn = std::function<Vector(double)>;

/// Periodic samples t_j = j T / N, j = 0..N-1, read back with periodic
/// four-point cubic interpolation.
class PeriodicSamples {
public:
  PeriodicSamples() = default;
  PeriodicSamples(double period, std::vector<Matrix> values);

  Matrix operator()(double t) const;
  int size() const { return static_cast<int>(values_.size()); }
  double period() const { return period_; }
  const std::vector<Matrix>& values() const { return values_; }

private:
  double period_ = 1.0;
  std::vector<Matrix> values_;
};

/// Coefficients of the linearized flow along the loop through the base point:
///   u' = Ahat u + Bhat eps,  theta' = Phat u + Qhat eps.
struct LinearizedCoefficients {
  double T = 1.0;
  PeriodicSamples Ahat;  // r x r
  PeriodicSamples Bhat;  // r x p
  PeriodicSamples Phat;  // k x r
  PeriodicSamples Qhat;  // k x p
  std::vector<double> times;
  /// Section basis at t = 0.
  Matrix transversal;

  MatrixFn A() const {
    return [a = Ahat](double t) { return a(t); };
  }
  /// Column `j` of Bhat as a periodic forcing.
  VectorFn b(int j = 0) const {
    return [bh = Bhat, j](double t) -> Vector { return bh(t).col(j); };
  }
};

/// Samples the blocks along the orbit of X_alpha through the seed base point,
/// in a moving orthonormal frame S(t) complementary to span{X_i}.
LinearizedCoefficients extract_linearization(const VectorFieldFamily& family, const TorusSeed& seed,
                                             const HomotopyClass& alpha, const ParamVector& eps0,
                                             int n_samples = 256, const FlowTolerance& tol = {});

struct FundamentalSolution {
  double T = 0.0;
  std::vector<double> times;
  std::vector<Matrix> theta;
  Matrix Q;
};

/// Theta' = A(t) Theta, Theta(0) = I on [0, T], sampled at n_samples + 1 times.
FundamentalSolution fundamental_matrix(const MatrixFn& A, double T, double tol = 1e-10,
                                       int n_samples = 64);

struct FloquetDecomposition {
  Matrix Q;
  /// Q = exp(B T).
  CMatrix B;
  CVector multipliers;
  /// exponents[i] = log(multipliers[i]) / T on the principal branch.
  CVector exponents;
  std::vector<double> times;
  /// M(t) = Theta(t) exp(-B t) at `times`.
  std::vector<CMatrix> periodic_part;
  bool real_form = true;
  double log_residual = 0.0;
  double periodicity_defect = 0.0;
  double reconstruction_residual = 0.0;
};

FloquetDecomposition floquet_decompose(const FundamentalSolution& fs, double tol = 1e-10);

struct ForcedResponse {
  std::vector<double> times;
  std::vector<Vector> u;
  Vector u0;
  CVector multipliers;
  double periodicity_residual = 0.0;
};

/// The T-periodic solution of u' = A(t) u + b(t). Throws Resonance when a
/// multiplier lies within resonance_tol of 1.
ForcedResponse forced_response(const MatrixFn& A, const VectorFn& b, double T, double tol = 1e-10,
                               int n_samples = 64, double resonance_tol = 1e-8);

struct BlockSpectrumReport {
  CVector block_spectrum;
  CVector expected;
  double distance = 0.0;
  bool pass = false;
};

/// spec([[A, B], [0, 0]]) against spec(A) and p zeros.
BlockSpectrumReport block_spectrum_check(const Matrix& A, const Matrix& B, double tol = 1e-10);

}  // namespace pnk

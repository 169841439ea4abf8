#pragma once

#include "pnk/core_model.hpp"

#include <functional>
#include <vector>

namespace pnk {

// ---------------------------------------------------------------------------
// Straightened systems: chart (phi_1..phi_k, u_1..u_r), fields
//   X_i = d/dphi_i + A_i (g(u) + C eps) d/du,
// with g(u) = u, or g(u) = u + kappa .* u^3 when the cubic flag is set.
// The torus u = g^{-1}(-C eps) is invariant for every eps.
// ---------------------------------------------------------------------------

struct StraightenedSpec {
  int k = 1;
  int r = 1;
  int p = 1;
  std::vector<Matrix> A;  // k commuting r x r matrices
  Matrix C;               // r x p
  bool cubic = false;     // requires diagonal A_i
  Vector kappa;           // cubic coefficients, length r (defaults to ones)
};

/// Closed forms for a straightened system.
class StraightenedOracle {
public:
  explicit StraightenedOracle(StraightenedSpec spec) : spec_(std::move(spec)) {}

  /// Linear part sum_i 2 pi alpha_i A_i of the loop field in u.
  Matrix loop_generator(const HomotopyClass& alpha) const;
  /// exp(2 pi sum_i alpha_i A_i).
  Matrix transversal_monodromy(const HomotopyClass& alpha) const;
  CVector transversal_spectrum(const HomotopyClass& alpha) const;
  /// Transversal spectrum followed by k ones.
  CVector full_spectrum(const HomotopyClass& alpha) const;
  /// u*(eps): -C eps, or the componentwise real root of u + kappa u^3 = -C eps.
  Vector fixed_point(const Vector& eps) const;
  const StraightenedSpec& spec() const { return spec_; }

private:
  StraightenedSpec spec_;
};

struct StraightenedSystem {
  VectorFieldFamily family;
  TorusSeed seed;
  StraightenedOracle oracle;
};

/// Throws NonCommuting when the A_i fail to commute (or the cubic flag is set
/// with a non-diagonal A_i, which breaks commutation).
StraightenedSystem make_straightened(const StraightenedSpec& spec);

/// Real root of kappa u^3 + u = c for kappa >= 0.
double cubic_root(double kappa, double c);

// ---------------------------------------------------------------------------
// Planar Hopf normal form, rescaled by 1/omega so the limit cycle has angular
// speed one:  X = (1/omega) (eps x - omega y - x r^2, omega x + eps y - y r^2).
// ---------------------------------------------------------------------------

struct HopfSystem {
  VectorFieldFamily family;
  TorusSeed seed;
  double omega;
  double eps0;

  double cycle_radius(double eps) const;
  /// Transversal multiplier exp(-4 pi eps / omega).
  double multiplier(double eps) const;
};

HopfSystem make_hopf(double omega_rot, double eps0 = 0.1);

// ---------------------------------------------------------------------------
// Hamiltonian families on R^{2 n_dof}, coordinates (q_1..q_n, p_1..p_n).
// ---------------------------------------------------------------------------

struct HamiltonianPair {
  int n_dof = 1;
  int k = 1;
  int p = 0;
  std::function<double(int, const Vector&, const Vector&)> H;
  /// Optional analytic gradient (dH/dq, dH/dp).
  std::function<Vector(int, const Vector&, const Vector&)> gradient;
  /// Optional analytic Hessian.
  std::function<Matrix(int, const Vector&, const Vector&)> hessian;

  Vector grad(int i, const Vector& x, const Vector& eps) const;
  Matrix hess(int i, const Vector& x, const Vector& eps) const;
};

/// Symplectic gradient (dH/dp, -dH/dq), i.e. i_X omega = dH.
Vector hamiltonian_field(const HamiltonianPair& pair, int i, const Vector& x, const Vector& eps);

/// {H_i, H_j} = sum dH_i/dq dH_j/dp - dH_i/dp dH_j/dq.
double poisson_bracket(const HamiltonianPair& pair, int i, int j, const Vector& x,
                       const Vector& eps);

VectorFieldFamily hamiltonian_family(const HamiltonianPair& pair);

/// H_i = (q_i^2 + p_i^2) / 2, i = 1..n_dof; parameters are the k energy shifts.
HamiltonianPair uncoupled_oscillators(int n_dof = 2);

/// Torus {q_i^2 + p_i^2 = 2 h_i} with phi_i the flow time of X_i.
TorusSeed oscillator_torus(const HamiltonianPair& pair, const Vector& energies);

// ---------------------------------------------------------------------------
// Single-loop families (k = 1) on the circle times R^r with u = 0 invariant
// for every eps and one controlled critical multiplier.
// ---------------------------------------------------------------------------

struct BifurcationSystem {
  VectorFieldFamily family;
  TorusSeed seed;
  /// Critical parameter value(s) in increasing order.
  std::vector<double> critical_eps;
  /// Analytic d|mu|/deps of the critical multiplier at each crossing.
  std::vector<double> transversality;
};

/// u' = eps u - u^3: multiplier exp(2 pi eps) through +1, fixed points +-sqrt(eps).
BifurcationSystem make_pitchfork_flow(double eps0 = -0.05);

/// Half-twisted plane: in the co-rotating frame v' = (eps v1 - v1^3, -v2). The
/// multipliers are -exp(2 pi eps) and -exp(-2 pi); period-two points (+-sqrt(eps), 0).
BifurcationSystem make_flip_flow(double eps0 = -0.05);

/// u' = (eps - c |u|^2) u + rotation J u: multipliers exp(2 pi eps) exp(+-2 pi i rotation),
/// invariant circle of radius sqrt(eps / c).
BifurcationSystem make_neimark_sacker_flow(double rotation = 0.18, double c = 1.0,
                                           double eps0 = -0.05);

/// u' = diag(eps - a1, eps - a2) u: two real multipliers crossing +1 at a1 and a2.
BifurcationSystem make_double_crossing_flow(double a1 = -0.03, double a2 = 0.02,
                                            double eps0 = -0.06);

}  // namespace pnk

#include "pnk/catalog.hpp"

#include "pnk/linalg.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace pnk {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Matrix rotation(double theta) {
  Matrix r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

Matrix quarter_turn() {
  Matrix j(2, 2);
  j << 0.0, -1.0, 1.0, 0.0;
  return j;
}

bool is_diagonal(const Matrix& a) {
  return (a - Matrix(a.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
}

// Seed for k = 1 systems on the circle times R^r: the zero section.
TorusSeed circle_seed(int r, double eps0) {
  auto embed = [r](const Vector& phi) -> Vector {
    Vector x = Vector::Zero(1 + r);
    x[0] = phi[0];
    return x;
  };
  auto tangent = [r](const Vector&) -> Matrix {
    Matrix t = Matrix::Zero(1 + r, 1);
    t(0, 0) = 1.0;
    return t;
  };
  return TorusSeed(1, embed, Vector::Constant(1, eps0), {0}, tangent);
}

// k = 1 family d/dphi + F(phi, u; eps) d/du from the transversal part and its derivatives.
struct CircleField {
  std::function<Vector(double, const Vector&, double)> f;
  std::function<Matrix(double, const Vector&, double)> du;    // r x r
  std::function<Vector(double, const Vector&, double)> dphi;  // r
  std::function<Vector(double, const Vector&, double)> deps;  // r
};

VectorFieldFamily circle_family(int r, CircleField cf) {
  auto eval = [r, cf](int, const Vector& x, const Vector& eps) -> Vector {
    Vector v(1 + r);
    v[0] = 1.0;
    v.tail(r) = cf.f(x[0], x.tail(r), eps[0]);
    return v;
  };
  auto jac = [r, cf](int, const Vector& x, const Vector& eps) -> Matrix {
    Matrix j = Matrix::Zero(1 + r, 1 + r);
    j.block(1, 0, r, 1) = cf.dphi(x[0], x.tail(r), eps[0]);
    j.block(1, 1, r, r) = cf.du(x[0], x.tail(r), eps[0]);
    return j;
  };
  auto pjac = [r, cf](int, const Vector& x, const Vector& eps) -> Matrix {
    Matrix j = Matrix::Zero(1 + r, 1);
    j.block(1, 0, r, 1) = cf.deps(x[0], x.tail(r), eps[0]);
    return j;
  };
  return VectorFieldFamily(1 + r, 1, 1, eval, jac, pjac);
}

}  // namespace

// --- straightened -----------------------------------------------------------

double cubic_root(double kappa, double c) {
  if (kappa == 0.0) return c;
  // u^3 + P u + Q = 0 with P = 1/kappa > 0: one real root (Cardano).
  const double P = 1.0 / kappa;
  const double Q = -c / kappa;
  const double disc = std::sqrt(Q * Q / 4.0 + P * P * P / 27.0);
  return std::cbrt(-Q / 2.0 + disc) + std::cbrt(-Q / 2.0 - disc);
}

Matrix StraightenedOracle::loop_generator(const HomotopyClass& alpha) const {
  Matrix g = Matrix::Zero(spec_.r, spec_.r);
  for (int i = 0; i < spec_.k; ++i) g += kTwoPi * alpha.winding[i] * spec_.A[i];
  return g;
}

Matrix StraightenedOracle::transversal_monodromy(const HomotopyClass& alpha) const {
  return matrix_exp(loop_generator(alpha));
}

CVector StraightenedOracle::transversal_spectrum(const HomotopyClass& alpha) const {
  return eigenvalues(transversal_monodromy(alpha));
}

CVector StraightenedOracle::full_spectrum(const HomotopyClass& alpha) const {
  CVector out(spec_.r + spec_.k);
  out << transversal_spectrum(alpha), CVector::Ones(spec_.k);
  return out;
}

Vector StraightenedOracle::fixed_point(const Vector& eps) const {
  const Vector target = -spec_.C * eps;
  if (!spec_.cubic) return target;
  Vector u(spec_.r);
  for (int m = 0; m < spec_.r; ++m) u[m] = cubic_root(spec_.kappa[m], target[m]);
  return u;
}

StraightenedSystem make_straightened(const StraightenedSpec& in) {
  StraightenedSpec spec = in;
  if (spec.k < 1 || spec.r < 0 || spec.p < 0) {
    throw Error(ErrorKind::Validation, "invalid straightened dimensions");
  }
  if (static_cast<int>(spec.A.size()) != spec.k) {
    throw Error(ErrorKind::Validation, "need one matrix A_i per field");
  }
  for (const Matrix& a : spec.A)
    if (a.rows() != spec.r || a.cols() != spec.r)
      throw Error(ErrorKind::Validation, "A_i must be r x r");
  if (spec.C.size() == 0) spec.C = Matrix::Zero(spec.r, spec.p);
  if (spec.C.rows() != spec.r || spec.C.cols() != spec.p) {
    throw Error(ErrorKind::Validation, "C must be r x p");
  }
  if (spec.kappa.size() == 0) spec.kappa = Vector::Ones(spec.r);
  if (spec.kappa.size() != spec.r) throw Error(ErrorKind::Validation, "kappa must have length r");

  for (int i = 0; i < spec.k; ++i) {
    for (int j = i + 1; j < spec.k; ++j) {
      const Matrix comm = spec.A[i] * spec.A[j] - spec.A[j] * spec.A[i];
      const double scale = 1.0 + spec.A[i].norm() * spec.A[j].norm();
      if (comm.cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw Error(ErrorKind::NonCommuting,
                    "A_" + std::to_string(i) + " and A_" + std::to_string(j) + " do not commute");
      }
    }
  }
  if (spec.cubic) {
    for (const Matrix& a : spec.A)
      if (!is_diagonal(a))
        throw Error(ErrorKind::NonCommuting, "cubic terms require diagonal A_i to commute");
    if ((spec.kappa.array() < 0.0).any())
      throw Error(ErrorKind::Validation, "cubic coefficients must be non-negative");
  }

  const int k = spec.k, r = spec.r, n = spec.k + spec.r;
  auto eval = [spec, k, r, n](int i, const Vector& x, const Vector& eps) -> Vector {
    Vector v = Vector::Zero(n);
    v[i] = 1.0;
    Vector g = x.tail(r);
    if (spec.cubic) g += spec.kappa.cwiseProduct(g.cwiseProduct(g).cwiseProduct(g));
    v.tail(r) = spec.A[i] * (g + spec.C * eps);
    (void)k;
    return v;
  };
  auto jac = [spec, k, r, n](int i, const Vector& x, const Vector&) -> Matrix {
    Matrix j = Matrix::Zero(n, n);
    Vector dg = Vector::Ones(r);
    if (spec.cubic) dg += 3.0 * spec.kappa.cwiseProduct(x.tail(r).cwiseProduct(x.tail(r)));
    j.block(k, k, r, r) = spec.A[i] * dg.asDiagonal();
    return j;
  };
  auto pjac = [spec, k, r, n](int i, const Vector&, const Vector&) -> Matrix {
    Matrix j = Matrix::Zero(n, spec.p);
    j.block(k, 0, r, spec.p) = spec.A[i] * spec.C;
    return j;
  };
  VectorFieldFamily family(n, k, spec.p, eval, jac, pjac);

  StraightenedOracle oracle(spec);
  const Vector eps0 = Vector::Zero(spec.p);
  const Vector u0 = oracle.fixed_point(eps0);
  auto embed = [k, r, u0](const Vector& phi) -> Vector {
    Vector x(k + r);
    x << phi, u0;
    return x;
  };
  auto tangent = [k, r](const Vector&) -> Matrix {
    Matrix t = Matrix::Zero(k + r, k);
    t.topRows(k).setIdentity();
    return t;
  };
  std::vector<int> angles(k);
  for (int i = 0; i < k; ++i) angles[i] = i;
  TorusSeed seed(k, embed, eps0, angles, tangent);
  return StraightenedSystem{std::move(family), std::move(seed), std::move(oracle)};
}

// --- Hopf ---------------------------------------------------------------------

double HopfSystem::cycle_radius(double eps) const { return std::sqrt(eps); }

double HopfSystem::multiplier(double eps) const { return std::exp(-4.0 * std::numbers::pi * eps / omega); }

HopfSystem make_hopf(double omega_rot, double eps0) {
  if (omega_rot == 0.0) throw Error(ErrorKind::Validation, "rotation frequency must be nonzero");
  if (!(eps0 > 0.0)) throw Error(ErrorKind::Validation, "Hopf seed needs eps0 > 0");
  const double w = omega_rot;
  auto eval = [w](int, const Vector& x, const Vector& eps) -> Vector {
    const double e = eps[0], r2 = x.squaredNorm();
    Vector v(2);
    v << e * x[0] - w * x[1] - x[0] * r2, w * x[0] + e * x[1] - x[1] * r2;
    return v / w;
  };
  auto jac = [w](int, const Vector& x, const Vector& eps) -> Matrix {
    const double e = eps[0], a = x[0], b = x[1];
    Matrix j(2, 2);
    j << e - 3 * a * a - b * b, -w - 2 * a * b, w - 2 * a * b, e - a * a - 3 * b * b;
    return j / w;
  };
  auto pjac = [w](int, const Vector& x, const Vector&) -> Matrix { return x / w; };
  VectorFieldFamily family(2, 1, 1, eval, jac, pjac);

  const double rad = std::sqrt(eps0);
  const double sign = w > 0 ? 1.0 : -1.0;
  auto embed = [rad, sign](const Vector& phi) -> Vector {
    Vector x(2);
    x << rad * std::cos(sign * phi[0]), rad * std::sin(sign * phi[0]);
    return x;
  };
  auto tangent = [rad, sign](const Vector& phi) -> Matrix {
    Matrix t(2, 1);
    t << -sign * rad * std::sin(sign * phi[0]), sign * rad * std::cos(sign * phi[0]);
    return t;
  };
  TorusSeed seed(1, embed, Vector::Constant(1, eps0), {}, tangent);
  return HopfSystem{std::move(family), std::move(seed), w, eps0};
}

// --- Hamiltonian --------------------------------------------------------------

Vector HamiltonianPair::grad(int i, const Vector& x, const Vector& eps) const {
  if (gradient) return gradient(i, x, eps);
  const Matrix row = central_difference(
      [&](const Vector& y) { return Vector::Constant(1, H(i, y, eps)); }, x);
  return row.transpose();
}

Matrix HamiltonianPair::hess(int i, const Vector& x, const Vector& eps) const {
  if (hessian) return hessian(i, x, eps);
  return central_difference([&](const Vector& y) { return grad(i, y, eps); }, x);
}

Vector hamiltonian_field(const HamiltonianPair& pair, int i, const Vector& x, const Vector& eps) {
  const int d = pair.n_dof;
  if (x.size() != 2 * d) throw Error(ErrorKind::Validation, "phase point must have length 2 n_dof");
  const Vector g = pair.grad(i, x, eps);
  Vector v(2 * d);
  v << g.tail(d), -g.head(d);
  return v;
}

double poisson_bracket(const HamiltonianPair& pair, int i, int j, const Vector& x,
                       const Vector& eps) {
  const int d = pair.n_dof;
  const Vector gi = pair.grad(i, x, eps);
  const Vector gj = pair.grad(j, x, eps);
  return gi.head(d).dot(gj.tail(d)) - gi.tail(d).dot(gj.head(d));
}

VectorFieldFamily hamiltonian_family(const HamiltonianPair& pair) {
  const int d = pair.n_dof;
  auto eval = [pair](int i, const Vector& x, const Vector& eps) -> Vector {
    return hamiltonian_field(pair, i, x, eps);
  };
  auto jac = [pair, d](int i, const Vector& x, const Vector& eps) -> Matrix {
    const Matrix h = pair.hess(i, x, eps);
    Matrix j(2 * d, 2 * d);
    j << h.bottomRows(d), -h.topRows(d);
    return j;
  };
  return VectorFieldFamily(2 * d, pair.k, pair.p, eval, jac);
}

HamiltonianPair uncoupled_oscillators(int n_dof) {
  HamiltonianPair pair;
  pair.n_dof = n_dof;
  pair.k = n_dof;
  pair.p = n_dof;
  pair.H = [n_dof](int i, const Vector& x, const Vector&) {
    return 0.5 * (x[i] * x[i] + x[n_dof + i] * x[n_dof + i]);
  };
  pair.gradient = [n_dof](int i, const Vector& x, const Vector&) -> Vector {
    Vector g = Vector::Zero(2 * n_dof);
    g[i] = x[i];
    g[n_dof + i] = x[n_dof + i];
    return g;
  };
  pair.hessian = [n_dof](int i, const Vector&, const Vector&) -> Matrix {
    Matrix h = Matrix::Zero(2 * n_dof, 2 * n_dof);
    h(i, i) = 1.0;
    h(n_dof + i, n_dof + i) = 1.0;
    return h;
  };
  return pair;
}

TorusSeed oscillator_torus(const HamiltonianPair& pair, const Vector& energies) {
  const int d = pair.n_dof;
  if (energies.size() != d || (energies.array() <= 0.0).any()) {
    throw Error(ErrorKind::Validation, "need one positive energy per degree of freedom");
  }
  const Vector amp = (2.0 * energies).cwiseSqrt();
  auto embed = [d, amp](const Vector& phi) -> Vector {
    Vector x(2 * d);
    for (int i = 0; i < d; ++i) {
      x[i] = amp[i] * std::cos(phi[i]);
      x[d + i] = -amp[i] * std::sin(phi[i]);
    }
    return x;
  };
  auto tangent = [d, amp](const Vector& phi) -> Matrix {
    Matrix t = Matrix::Zero(2 * d, d);
    for (int i = 0; i < d; ++i) {
      t(i, i) = -amp[i] * std::sin(phi[i]);
      t(d + i, i) = -amp[i] * std::cos(phi[i]);
    }
    return t;
  };
  return TorusSeed(d, embed, Vector::Zero(pair.p), {}, tangent);
}

// --- bifurcation families -----------------------------------------------------

BifurcationSystem make_pitchfork_flow(double eps0) {
  CircleField cf;
  cf.f = [](double, const Vector& u, double e) -> Vector {
    return Vector::Constant(1, e * u[0] - u[0] * u[0] * u[0]);
  };
  cf.du = [](double, const Vector& u, double e) -> Matrix {
    return Matrix::Constant(1, 1, e - 3.0 * u[0] * u[0]);
  };
  cf.dphi = [](double, const Vector&, double) -> Vector { return Vector::Zero(1); };
  cf.deps = [](double, const Vector& u, double) -> Vector { return u; };
  return BifurcationSystem{circle_family(1, cf), circle_seed(1, eps0), {0.0}, {kTwoPi}};
}

BifurcationSystem make_flip_flow(double eps0) {
  // u = R(phi/2) v; the frame turns by pi per loop, so the v1 multiplier
  // exp(2 pi eps) appears with a minus sign.
  auto inner = [](const Vector& v, double e) -> Vector {
    Vector f(2);
    f << e * v[0] - v[0] * v[0] * v[0], -v[1];
    return f;
  };
  auto inner_d = [](const Vector& v, double e) -> Matrix {
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = e - 3.0 * v[0] * v[0];
    d(1, 1) = -1.0;
    return d;
  };
  const Matrix J = quarter_turn();
  CircleField cf;
  cf.f = [=](double phi, const Vector& u, double e) -> Vector {
    const Matrix R = rotation(phi / 2.0);
    return 0.5 * J * u + R * inner(R.transpose() * u, e);
  };
  cf.du = [=](double phi, const Vector& u, double e) -> Matrix {
    const Matrix R = rotation(phi / 2.0);
    return 0.5 * J + R * inner_d(R.transpose() * u, e) * R.transpose();
  };
  cf.dphi = [=](double phi, const Vector& u, double e) -> Vector {
    const Matrix R = rotation(phi / 2.0);
    const Vector v = R.transpose() * u;
    return 0.5 * (J * R * inner(v, e) - R * inner_d(v, e) * J * v);
  };
  cf.deps = [](double phi, const Vector& u, double) -> Vector {
    const Matrix R = rotation(phi / 2.0);
    const Vector v = R.transpose() * u;
    return R * Vector::Unit(2, 0) * v[0];
  };
  return BifurcationSystem{circle_family(2, cf), circle_seed(2, eps0), {0.0}, {kTwoPi}};
}

BifurcationSystem make_neimark_sacker_flow(double rotation_number, double c, double eps0) {
  if (!(c > 0.0)) throw Error(ErrorKind::Validation, "radial damping must be positive");
  const Matrix J = quarter_turn();
  CircleField cf;
  cf.f = [=](double, const Vector& u, double e) -> Vector {
    return (e - c * u.squaredNorm()) * u + rotation_number * J * u;
  };
  cf.du = [=](double, const Vector& u, double e) -> Matrix {
    return (e - c * u.squaredNorm()) * Matrix::Identity(2, 2) - 2.0 * c * u * u.transpose() +
           rotation_number * J;
  };
  cf.dphi = [](double, const Vector&, double) -> Vector { return Vector::Zero(2); };
  cf.deps = [](double, const Vector& u, double) -> Vector { return u; };
  return BifurcationSystem{circle_family(2, cf), circle_seed(2, eps0), {0.0}, {kTwoPi}};
}

BifurcationSystem make_double_crossing_flow(double a1, double a2, double eps0) {
  CircleField cf;
  cf.f = [=](double, const Vector& u, double e) -> Vector {
    Vector v(2);
    v << (e - a1) * u[0], (e - a2) * u[1];
    return v;
  };
  cf.du = [=](double, const Vector&, double e) -> Matrix {
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = e - a1;
    d(1, 1) = e - a2;
    return d;
  };
  cf.dphi = [](double, const Vector&, double) -> Vector { return Vector::Zero(2); };
  cf.deps = [](double, const Vector& u, double) -> Vector { return u; };
  std::vector<double> crit{a1, a2};
  std::sort(crit.begin(), crit.end());
  return BifurcationSystem{circle_family(2, cf), circle_seed(2, eps0), crit, {kTwoPi, kTwoPi}};
}

}  // namespace pnk

#include "pnk/core_model.hpp"

#include "pnk/section.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace pnk {

VectorFieldFamily::VectorFieldFamily(int n, int k, int p, EvalFn eval, JacobianFn jacobian,
                                     JacobianFn param_jacobian)
    : n_(n), k_(k), p_(p), eval_(std::move(eval)), jacobian_(std::move(jacobian)),
      param_jacobian_(std::move(param_jacobian)) {
  if (k < 1 || k > n) throw Error(ErrorKind::Validation, "need 1 <= k <= n");
  if (p < 0) throw Error(ErrorKind::Validation, "parameter dimension must be non-negative");
  if (!eval_) throw Error(ErrorKind::Validation, "family needs an evaluation callback");
}

void VectorFieldFamily::check_point(const Vector& x, const Vector& eps) const {
  if (x.size() != n_) {
    throw Error(ErrorKind::Validation, "phase point has length " + std::to_string(x.size()) +
                                           ", family expects " + std::to_string(n_));
  }
  if (eps.size() != p_) {
    throw Error(ErrorKind::Validation, "parameter vector has length " +
                                           std::to_string(eps.size()) + ", family expects " +
                                           std::to_string(p_));
  }
  if (!x.allFinite() || !eps.allFinite()) {
    throw Error(ErrorKind::NonFinite, "non-finite phase point or parameter");
  }
}

Vector VectorFieldFamily::eval(int i, const Vector& x, const Vector& eps) const {
  if (i < 0 || i >= k_) throw Error(ErrorKind::Validation, "field index out of range");
  Vector v = eval_(i, x, eps);
  if (v.size() != n_) throw Error(ErrorKind::Validation, "field value has wrong length");
  return v;
}

Matrix central_difference(const std::function<Vector(const Vector&)>& f, const Vector& x) {
  const double h = 1e-5 * std::max(1.0, x.size() ? x.cwiseAbs().maxCoeff() : 0.0);
  const Vector f0 = f(x);
  Matrix d(f0.size(), x.size());
  Vector xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double xj = x[j];
    xp[j] = xj + 2 * h;
    const Vector fp2 = f(xp);
    xp[j] = xj + h;
    const Vector fp1 = f(xp);
    xp[j] = xj - h;
    const Vector fm1 = f(xp);
    xp[j] = xj - 2 * h;
    const Vector fm2 = f(xp);
    xp[j] = xj;
    d.col(j) = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h);
  }
  return d;
}

Matrix VectorFieldFamily::jacobian(int i, const Vector& x, const Vector& eps) const {
  if (jacobian_) {
    Matrix j = jacobian_(i, x, eps);
    if (j.rows() != n_ || j.cols() != n_) {
      throw Error(ErrorKind::Validation, "jacobian callback returned wrong shape");
    }
    return j;
  }
  return central_difference([&](const Vector& y) { return eval(i, y, eps); }, x);
}

Matrix VectorFieldFamily::param_jacobian(int i, const Vector& x, const Vector& eps) const {
  if (p_ == 0) return Matrix(n_, 0);
  if (param_jacobian_) return param_jacobian_(i, x, eps);
  return central_difference([&](const Vector& e) { return eval(i, x, e); }, eps);
}

Matrix VectorFieldFamily::frame(const Vector& x, const Vector& eps) const {
  Matrix g(n_, k_);
  for (int i = 0; i < k_; ++i) g.col(i) = eval(i, x, eps);
  return g;
}

VectorField VectorField::scaled(double c) const {
  VectorField out = *this;
  auto e = eval;
  auto j = jacobian;
  auto pj = param_jacobian;
  out.eval = [e, c](const Vector& x, const Vector& eps) -> Vector { return c * e(x, eps); };
  out.jacobian = [j, c](const Vector& x, const Vector& eps) -> Matrix { return c * j(x, eps); };
  if (pj) {
    out.param_jacobian = [pj, c](const Vector& x, const Vector& eps) -> Matrix {
      return c * pj(x, eps);
    };
  }
  return out;
}

HomotopyClass::HomotopyClass(std::initializer_list<int> w) : winding(static_cast<int>(w.size())) {
  int i = 0;
  for (int v : w) winding[i++] = v;
}

Vector HomotopyClass::coefficients() const {
  return 2.0 * std::numbers::pi * winding.cast<double>();
}

VectorField linear_combination(const VectorFieldFamily& family, const Vector& coeffs) {
  if (coeffs.size() != family.k()) {
    throw Error(ErrorKind::Validation, "need one coefficient per field");
  }
  // The family is captured by value: fields must outlive temporaries.
  VectorField f;
  f.n = family.n();
  f.p = family.p();
  f.eval = [family, coeffs](const Vector& x, const Vector& eps) -> Vector {
    Vector v = Vector::Zero(family.n());
    for (int i = 0; i < family.k(); ++i)
      if (coeffs[i] != 0.0) v += coeffs[i] * family.eval(i, x, eps);
    return v;
  };
  f.jacobian = [family, coeffs](const Vector& x, const Vector& eps) -> Matrix {
    Matrix j = Matrix::Zero(family.n(), family.n());
    for (int i = 0; i < family.k(); ++i)
      if (coeffs[i] != 0.0) j += coeffs[i] * family.jacobian(i, x, eps);
    return j;
  };
  f.param_jacobian = [family, coeffs](const Vector& x, const Vector& eps) -> Matrix {
    Matrix j = Matrix::Zero(family.n(), family.p());
    for (int i = 0; i < family.k(); ++i)
      if (coeffs[i] != 0.0) j += coeffs[i] * family.param_jacobian(i, x, eps);
    return j;
  };
  return f;
}

VectorField member_field(const VectorFieldFamily& family, int i) {
  Vector c = Vector::Zero(family.k());
  c[i] = 1.0;
  return linear_combination(family, c);
}

VectorField loop_field(const VectorFieldFamily& family, const HomotopyClass& alpha) {
  if (alpha.size() != family.k()) {
    throw Error(ErrorKind::Validation, "homotopy class length must equal k");
  }
  if (alpha.is_zero()) throw Error(ErrorKind::ZeroClass, "homotopy class is zero");
  return linear_combination(family, alpha.coefficients());
}

TorusSeed::TorusSeed(int k, EmbedFn embed, Vector eps0, std::vector<int> angle_coords,
                     TangentFn tangent)
    : k_(k), embed_(std::move(embed)), eps0_(std::move(eps0)),
      angle_coords_(std::move(angle_coords)), tangent_(std::move(tangent)) {
  if (k < 1) throw Error(ErrorKind::Validation, "torus dimension must be positive");
  if (!embed_) throw Error(ErrorKind::Validation, "torus seed needs an embedding");
}

PhasePoint TorusSeed::embed(const Vector& phi) const {
  if (phi.size() != k_) throw Error(ErrorKind::Validation, "need k torus angles");
  return embed_(phi);
}

Matrix TorusSeed::tangent(const Vector& phi) const {
  if (tangent_) return tangent_(phi);
  // Derivative of a 2 pi periodic map: step independent of |phi|.
  const double h = 1e-3;
  const Vector x0 = embed(phi);
  Matrix t(x0.size(), k_);
  Vector q = phi;
  for (int j = 0; j < k_; ++j) {
    auto at = [&](double d) {
      q[j] = phi[j] + d;
      return embed(q);
    };
    const Vector fp2 = at(2 * h), fp1 = at(h), fm1 = at(-h), fm2 = at(-2 * h);
    q[j] = phi[j];
    // Angle coordinates may jump by 2 pi across the stencil; unwrap first.
    Vector d = -wrapped_difference(fp2, x0, angle_coords_) +
               8.0 * wrapped_difference(fp1, x0, angle_coords_) -
               8.0 * wrapped_difference(fm1, x0, angle_coords_) +
               wrapped_difference(fm2, x0, angle_coords_);
    t.col(j) = d / (12.0 * h);
  }
  return t;
}

Vector TorusSeed::displacement(const Vector& x, const Vector& y) const {
  return wrapped_difference(x, y, angle_coords_);
}

bool TorusSeed::same_point(const Vector& x, const Vector& y, double tol) const {
  return displacement(x, y).cwiseAbs().maxCoeff() <= tol;
}

Vector lie_bracket(const VectorFieldFamily& family, int i, int j, const Vector& x,
                   const Vector& eps) {
  if (i == j) throw Error(ErrorKind::Validation, "bracket needs two distinct fields");
  family.check_point(x, eps);
  const Vector xi = family.eval(i, x, eps);
  const Vector xj = family.eval(j, x, eps);
  return family.jacobian(j, x, eps) * xi - family.jacobian(i, x, eps) * xj;
}

CommutationReport verify_commuting_family(
    const VectorFieldFamily& family,
    const std::vector<std::pair<PhasePoint, ParamVector>>& samples, double tol) {
  if (samples.empty()) throw Error(ErrorKind::Validation, "no sample points");
  CommutationReport rep;
  for (const auto& [x, eps] : samples) {
    for (int i = 0; i < family.k(); ++i) {
      for (int j = i + 1; j < family.k(); ++j) {
        const double r = lie_bracket(family, i, j, x, eps).cwiseAbs().maxCoeff();
        if (r > rep.max_residual || rep.worst_pair.first < 0) {
          rep.max_residual = std::max(rep.max_residual, r);
          rep.worst_pair = {i, j};
        }
      }
    }
  }
  rep.pass = rep.max_residual <= tol;
  return rep;
}

std::vector<Vector> angle_grid(int k, int grid_per_angle) {
  std::vector<Vector> out;
  long total = 1;
  for (int i = 0; i < k; ++i) total *= grid_per_angle;
  out.reserve(static_cast<std::size_t>(total));
  for (long idx = 0; idx < total; ++idx) {
    Vector phi(k);
    long rest = idx;
    for (int i = 0; i < k; ++i) {
      phi[i] = 2.0 * std::numbers::pi * static_cast<double>(rest % grid_per_angle) / grid_per_angle;
      rest /= grid_per_angle;
    }
    out.push_back(phi);
  }
  return out;
}

InvarianceReport verify_torus_invariance(const VectorFieldFamily& family, const TorusSeed& seed,
                                         int grid_per_angle, double tol) {
  if (grid_per_angle < 4) throw Error(ErrorKind::Validation, "grid needs >= 4 points per angle");
  if (seed.k() != family.k()) throw Error(ErrorKind::Validation, "torus and family disagree on k");
  InvarianceReport rep;
  for (const Vector& phi : angle_grid(seed.k(), grid_per_angle)) {
    const Vector x = seed.embed(phi);
    const Matrix t = seed.tangent(phi);
    Eigen::ColPivHouseholderQR<Matrix> qr(t);
    qr.setThreshold(1e-10);
    if (qr.rank() < seed.k()) {
      throw Error(ErrorKind::DegenerateTangent, "torus tangent vectors are rank-deficient");
    }
    for (int i = 0; i < family.k(); ++i) {
      const Vector v = family.eval(i, x, seed.eps0());
      const Vector normal = v - t * qr.solve(v);
      rep.max_normal_residual = std::max(rep.max_normal_residual, normal.cwiseAbs().maxCoeff());
    }
  }
  rep.pass = rep.max_normal_residual <= tol;
  return rep;
}

double wrap_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(a, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

Vector wrapped_difference(const Vector& x, const Vector& y, const std::vector<int>& angle_coords) {
  Vector d = x - y;
  for (int c : angle_coords) d[c] = wrap_angle(d[c]);
  return d;
}

Vector SectionFrame::displacement(const Vector& x) const {
  return wrapped_difference(x, base, angle_coords);
}

Matrix SectionFrame::projector_coords() const {
  const Matrix pairing = constraints * group;
  const Matrix n_ = Matrix::Identity(n(), n()) - group * pairing.lu().solve(constraints);
  return transversal.transpose() * n_;
}

}  // namespace pnk

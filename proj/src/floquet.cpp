#include "pnk/floquet.hpp"

#include "pnk/linalg.hpp"
#include "pnk/pn_map.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace pnk {

namespace {

using Integrator = DormandPrince45<double>;

StepControl<double> linear_control(double tol) {
  if (!(tol > 0.0)) throw Error(ErrorKind::Validation, "tolerance must be positive");
  StepControl<double> c;
  c.rtol = tol;
  c.atol = tol * 1e-6;
  return c;
}

Vector flatten(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unflatten(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

// Orthogonal projector P onto the complement of span G, its time derivative
// given G' along the orbit, and the pseudo-inverse of G.
struct Projector {
  Matrix P;
  Matrix Pdot;
  Matrix Gplus;
};

Projector projector(const Matrix& G, const Matrix& Gdot) {
  const Eigen::Index n = G.rows();
  const Matrix K = (G.transpose() * G).inverse();
  const Matrix Kdot = -K * (Gdot.transpose() * G + G.transpose() * Gdot) * K;
  Projector out;
  out.P = Matrix::Identity(n, n) - G * K * G.transpose();
  out.Pdot = -(Gdot * K * G.transpose() + G * Kdot * G.transpose() + G * K * Gdot.transpose());
  out.Gplus = K * G.transpose();
  return out;
}

Matrix group_rate(const VectorFieldFamily& family, const PhasePoint& x, const ParamVector& eps,
                  const Vector& xa) {
  Matrix Gdot(family.n(), family.k());
  for (int i = 0; i < family.k(); ++i) Gdot.col(i) = family.jacobian(i, x, eps) * xa;
  return Gdot;
}

}  // namespace

PeriodicSamples::PeriodicSamples(double period, std::vector<Matrix> values)
    : period_(period), values_(std::move(values)) {
  if (!(period > 0.0)) throw Error(ErrorKind::Validation, "period must be positive");
  if (values_.size() < 4) throw Error(ErrorKind::Validation, "need at least 4 periodic samples");
}

Matrix PeriodicSamples::operator()(double t) const {
  const int n = size();
  if (n == 0) throw Error(ErrorKind::Validation, "no samples");
  const double s = t / period_ * n;
  const double fl = std::floor(s);
  const double f = s - fl;
  const long j = static_cast<long>(fl);
  auto at = [&](long i) -> const Matrix& { return values_[static_cast<size_t>(((i % n) + n) % n)]; };
  if (f == 0.0) return at(j);
  const double wm = -f * (f - 1) * (f - 2) / 6.0;
  const double w0 = (f + 1) * (f - 1) * (f - 2) / 2.0;
  const double w1 = -(f + 1) * f * (f - 2) / 2.0;
  const double w2 = (f + 1) * f * (f - 1) / 6.0;
  return wm * at(j - 1) + w0 * at(j) + w1 * at(j + 1) + w2 * at(j + 2);
}

LinearizedCoefficients extract_linearization(const VectorFieldFamily& family, const TorusSeed& seed,
                                             const HomotopyClass& alpha, const ParamVector& eps0,
                                             int n_samples, const FlowTolerance& tol) {
  if (n_samples < 4) throw Error(ErrorKind::Validation, "need at least 4 samples");
  const VectorField loop = loop_field(family, alpha);
  const PhasePoint x0 = seed.base_point();
  const SectionFrame frame0 = build_section(family, seed, x0, eps0);
  const Matrix& S0 = frame0.transversal;
  const Eigen::Index n = family.n();
  const Eigen::Index r = S0.cols();
  const double T = 1.0;
  const double h = T / n_samples;

  // Parallel transport of the transversal frame, S' = (P' P - P P') S, which
  // keeps S orthonormal, inside range P, and with S^T S' = 0.
  auto rhs = [&](double, const Vector& y) -> Vector {
    const PhasePoint x = y.head(n);
    const Vector xa = loop.eval(x, eps0);
    const Projector pr = projector(family.frame(x, eps0), group_rate(family, x, eps0, xa));
    const Matrix S = unflatten(y.tail(n * r), n, r);
    const Matrix PdS = pr.Pdot * S;
    Vector dy(y.size());
    dy.head(n) = xa;
    dy.tail(n * r) = flatten(PdS - pr.P * PdS);
    return dy;
  };
  StepControl<double> ctl;
  ctl.rtol = tol.tol;
  ctl.atol = tol.tol * tol.atol_ratio;
  ctl.max_steps = tol.max_steps;
  const Integrator rk(ctl);

  std::vector<PhasePoint> xs;
  std::vector<Matrix> ss;
  Vector y(n + n * r);
  y.head(n) = x0;
  y.tail(n * r) = flatten(S0);
  for (int j = 0; j <= n_samples; ++j) {
    if (j > 0) y = rk.integrate(rhs, y, (j - 1) * h, j * h).y;
    xs.push_back(y.head(n));
    ss.push_back(symmetric_orthonormalize(unflatten(y.tail(n * r), n, r)));
  }
  if (!seed.same_point(xs.back(), x0, 1000.0 * tol.tol * std::max(1.0, x0.cwiseAbs().maxCoeff()))) {
    throw Error(ErrorKind::OpenLoop, "orbit of the loop field does not close");
  }

  // Holonomy S(T) = S0 H; the frame S(t) exp(t K) with exp(K T) = H^T is periodic.
  const Matrix H = S0.transpose() * ss.back();
  const CMatrix logH = matrix_log(Matrix(H.transpose()));
  if (logH.imag().cwiseAbs().maxCoeff() > 1e-8) {
    throw Error(ErrorKind::SingularGeometry, "transversal frame has orientation-reversing holonomy");
  }
  const Matrix K = logH.real() / T;

  std::vector<Matrix> a, b, p, q;
  std::vector<double> times;
  for (int j = 0; j < n_samples; ++j) {
    const double t = j * h;
    const PhasePoint& x = xs[j];
    const Matrix S = ss[j] * matrix_exp(Matrix(K * t));
    const Vector xa = loop.eval(x, eps0);
    const Projector pr = projector(family.frame(x, eps0), group_rate(family, x, eps0, xa));
    const Matrix J = loop.jacobian(x, eps0);
    const Matrix dxa = loop.param_jacobian(x, eps0);
    times.push_back(t);
    a.push_back(S.transpose() * J * S - K);
    b.push_back(S.transpose() * dxa);
    p.push_back(pr.Gplus * (J * S - pr.Pdot * S));
    q.push_back(pr.Gplus * dxa);
  }

  LinearizedCoefficients out;
  out.T = T;
  out.Ahat = PeriodicSamples(T, std::move(a));
  out.Bhat = PeriodicSamples(T, std::move(b));
  out.Phat = PeriodicSamples(T, std::move(p));
  out.Qhat = PeriodicSamples(T, std::move(q));
  out.times = std::move(times);
  out.transversal = S0;
  return out;
}

FundamentalSolution fundamental_matrix(const MatrixFn& A, double T, double tol, int n_samples) {
  if (!(T > 0.0)) throw Error(ErrorKind::Validation, "period must be positive");
  if (n_samples < 1) throw Error(ErrorKind::Validation, "need at least one sample interval");
  const Matrix A0 = A(0.0);
  if (A0.rows() != A0.cols()) throw Error(ErrorKind::Validation, "coefficient matrix must be square");
  const Eigen::Index r = A0.rows();

  auto rhs = [&](double t, const Vector& y) -> Vector {
    return flatten(A(t) * unflatten(y, r, r));
  };
  const Integrator rk(linear_control(tol));
  FundamentalSolution out;
  out.T = T;
  Vector y = flatten(Matrix::Identity(r, r));
  out.times.push_back(0.0);
  out.theta.push_back(Matrix::Identity(r, r));
  for (int j = 1; j <= n_samples; ++j) {
    const double t0 = T * (j - 1) / n_samples;
    const double t1 = T * j / n_samples;
    y = rk.integrate(rhs, y, t0, t1).y;
    out.times.push_back(t1);
    out.theta.push_back(unflatten(y, r, r));
  }
  out.Q = out.theta.back();
  return out;
}

FloquetDecomposition floquet_decompose(const FundamentalSolution& fs, double tol) {
  const Matrix& Q = fs.Q;
  const Eigen::Index r = Q.rows();
  FloquetDecomposition out;
  out.Q = Q;
  out.times = fs.times;
  if (r == 0) return out;

  const Eigen::JacobiSVD<Matrix> svd(Q);
  const Vector sv = svd.singularValues();
  if (!(sv[r - 1] > sv[0] * r * std::numeric_limits<double>::epsilon())) {
    throw Error(ErrorKind::SingularMonodromy, "monodromy matrix is singular");
  }

  out.multipliers = eigenvalues(Q);
  out.exponents.resize(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    const Complex mu = out.multipliers[i];
    out.exponents[i] = std::log(mu) / fs.T;
    if (mu.real() < 0.0 && std::abs(mu.imag()) <= 1e-12 * std::abs(mu)) out.real_form = false;
  }
  out.B = matrix_log(Q) / fs.T;
  if (out.real_form) out.B = out.B.real().cast<Complex>();

  const CMatrix Qc = Q.cast<Complex>();
  out.log_residual = (Qc - matrix_exp(CMatrix(out.B * fs.T))).cwiseAbs().maxCoeff();
  for (size_t j = 0; j < fs.theta.size(); ++j) {
    const CMatrix th = fs.theta[j].cast<Complex>();
    const CMatrix m = th * matrix_exp(CMatrix(-out.B * fs.times[j]));
    out.reconstruction_residual = std::max(
        out.reconstruction_residual, (th - m * matrix_exp(CMatrix(out.B * fs.times[j]))).cwiseAbs().maxCoeff());
    out.periodic_part.push_back(m);
  }
  out.periodicity_defect = (out.periodic_part.front() - out.periodic_part.back()).cwiseAbs().maxCoeff();
  (void)tol;
  return out;
}

ForcedResponse forced_response(const MatrixFn& A, const VectorFn& b, double T, double tol,
                               int n_samples, double resonance_tol) {
  if (!(T > 0.0)) throw Error(ErrorKind::Validation, "period must be positive");
  if (n_samples < 1) throw Error(ErrorKind::Validation, "need at least one sample interval");
  const Eigen::Index r = A(0.0).rows();
  if (b(0.0).size() != r) throw Error(ErrorKind::Validation, "forcing has wrong length");

  // Theta and the zero-start particular solution, jointly.
  auto joint = [&](double t, const Vector& y) -> Vector {
    const Matrix a = A(t);
    Vector dy(r * r + r);
    dy.head(r * r) = flatten(a * unflatten(y.head(r * r), r, r));
    dy.tail(r) = a * y.tail(r) + b(t);
    return dy;
  };
  const Integrator rk(linear_control(0.1 * tol));
  Vector y0 = Vector::Zero(r * r + r);
  y0.head(r * r) = flatten(Matrix::Identity(r, r));
  const Vector yT = rk.integrate(joint, y0, 0.0, T).y;
  const Matrix Q = unflatten(yT.head(r * r), r, r);

  ForcedResponse out;
  out.multipliers = eigenvalues(Q);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (std::abs(out.multipliers[i] - 1.0) <= resonance_tol) {
      throw Error(ErrorKind::Resonance, "multiplier at 1: no unique periodic response");
    }
  }
  out.u0 = (Matrix::Identity(r, r) - Q).partialPivLu().solve(yT.tail(r));

  auto affine = [&](double t, const Vector& u) -> Vector { return A(t) * u + b(t); };
  Vector u = out.u0;
  out.times.push_back(0.0);
  out.u.push_back(u);
  for (int j = 1; j <= n_samples; ++j) {
    u = rk.integrate(affine, u, T * (j - 1) / n_samples, T * j / n_samples).y;
    out.times.push_back(T * j / n_samples);
    out.u.push_back(u);
  }
  out.periodicity_residual = r == 0 ? 0.0 : (u - out.u0).cwiseAbs().maxCoeff();
  const double scale = 1.0 + (r == 0 ? 0.0 : out.u0.cwiseAbs().maxCoeff());
  if (out.periodicity_residual > 10.0 * tol * scale) {
    throw Error(ErrorKind::NoConvergence, "forced response does not close after one period");
  }
  return out;
}

BlockSpectrumReport block_spectrum_check(const Matrix& A, const Matrix& B, double tol) {
  const Eigen::Index r = A.rows();
  const Eigen::Index p = B.cols();
  if (A.cols() != r || B.rows() != r) throw Error(ErrorKind::Validation, "block sizes disagree");
  Matrix W = Matrix::Zero(r + p, r + p);
  W.topLeftCorner(r, r) = A;
  W.topRightCorner(r, p) = B;

  BlockSpectrumReport out;
  out.block_spectrum = eigenvalues(W);
  out.expected.resize(r + p);
  out.expected.head(r) = eigenvalues(A);
  out.expected.tail(p).setZero();
  out.distance = spectral_distance(out.block_spectrum, out.expected);
  out.pass = out.distance <= tol;
  return out;
}

}  // namespace pnk

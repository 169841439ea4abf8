#include "pnk/pn_map.hpp"

#include "pnk/linalg.hpp"

#include <Eigen/Dense>

namespace pnk {

SectionFrame build_section(const VectorFieldFamily& family, const TorusSeed& seed,
                           const PhasePoint& m, const ParamVector& eps, double scale) {
  family.check_point(m, eps);
  if (seed.k() != family.k()) throw Error(ErrorKind::Validation, "torus and family disagree on k");
  SectionFrame f;
  f.base = m;
  f.eps = eps;
  f.angle_coords = seed.angle_coords();
  f.scale = scale;
  f.group = family.frame(m, eps);

  Eigen::ColPivHouseholderQR<Matrix> qr(f.group);
  qr.setThreshold(1e-10);
  if (qr.rank() < family.k()) {
    throw Error(ErrorKind::DegenerateTangent, "fields are linearly dependent at the base point");
  }
  f.transversal = orthonormal_complement(f.group);
  // Dual covectors: rows annihilate S and pair to the identity with the group.
  const Matrix gram = f.group.transpose() * f.group;
  f.constraints = gram.ldlt().solve(f.group.transpose());
  return f;
}

TotalMonodromy total_monodromy(const VectorFieldFamily& family, const TorusSeed& seed,
                               const HomotopyClass& alpha, const PhasePoint& m,
                               const ParamVector& eps, const FlowTolerance& tol,
                               double closure_factor) {
  family.check_point(m, eps);
  const VectorField loop = loop_field(family, alpha);
  const auto res = integrate_variational(loop, m, eps, 1.0, tol);
  TotalMonodromy out;
  out.total = res.tangent;
  out.closure_defect = seed.displacement(res.endpoint, m).cwiseAbs().maxCoeff();
  const double bound = closure_factor * tol.tol * std::max(1.0, m.cwiseAbs().maxCoeff());
  if (out.closure_defect > bound) {
    throw Error(ErrorKind::OpenLoop, "orbit does not close: defect " +
                                         format_number(out.closure_defect) + " > " +
                                         format_number(bound));
  }
  return out;
}

Matrix transversal_linearization(const Matrix& total, const SectionFrame& frame) {
  return frame.projector_coords() * total * frame.transversal;
}

MonodromyReport monodromy_report(const VectorFieldFamily& family, const TorusSeed& seed,
                                 const HomotopyClass& alpha, const SectionFrame& frame,
                                 const FlowTolerance& tol, double unit_tol,
                                 double closure_factor) {
  const auto tm = total_monodromy(family, seed, alpha, frame.base, frame.eps, tol, closure_factor);
  MonodromyReport rep;
  rep.total = tm.total;
  rep.closure_defect = tm.closure_defect;
  rep.transversal = transversal_linearization(tm.total, frame);
  rep.full_spectrum = eigenvalues(rep.total);
  rep.transversal_spectrum = eigenvalues(rep.transversal);
  for (Eigen::Index i = 0; i < rep.full_spectrum.size(); ++i)
    if (std::abs(rep.full_spectrum[i] - 1.0) <= unit_tol) ++rep.trivial_unit_count;

  CVector expected(rep.full_spectrum.size());
  expected << rep.transversal_spectrum, CVector::Ones(frame.k());
  rep.splitting_distance = spectral_distance(rep.full_spectrum, expected);
  return rep;
}

PoincareNekhoroshevMap::PoincareNekhoroshevMap(VectorFieldFamily family, HomotopyClass alpha,
                                               SectionFrame frame, ParamVector eps,
                                               FlowTolerance tol)
    : family_(std::move(family)), alpha_(std::move(alpha)), frame_(std::move(frame)),
      eps_(std::move(eps)), tol_(tol), loop_(loop_field(family_, alpha_)) {
  family_.check_point(frame_.base, eps_);
}

namespace {

// Integrator blow-ups inside the map mean the orbit left the chart.
template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NonFinite) throw Error(ErrorKind::Escape, e.what());
    throw;
  }
}

}  // namespace

PhasePoint PoincareNekhoroshevMap::apply_point(const PhasePoint& x) const {
  const double off = frame_.constraint_values(x).cwiseAbs().maxCoeff();
  if (off > 1e-8 * std::max(1.0, frame_.scale)) {
    throw Error(ErrorKind::Validation, "point is not on the section");
  }
  return guarded([&] {
    const Vector y = integrate_flow(loop_, x, eps_, 1.0, tol_).endpoint;
    if (frame_.displacement(y).cwiseAbs().maxCoeff() > 1e3 * frame_.scale) {
      throw Error(ErrorKind::Escape, "orbit left the chart neighbourhood");
    }
    const auto ret = solve_return_times(family_, y, eps_, frame_, tol_);
    // Land exactly on the section plane; the residual is below tol.
    return frame_.point(frame_.coords(ret.landed));
  });
}

Vector PoincareNekhoroshevMap::apply(const Vector& u) const {
  if (u.size() != dim()) throw Error(ErrorKind::Validation, "section coordinate has wrong length");
  return frame_.coords(apply_point(frame_.point(u)));
}

std::pair<Vector, Matrix> PoincareNekhoroshevMap::apply_with_jacobian(const Vector& u) const {
  if (u.size() != dim()) throw Error(ErrorKind::Validation, "section coordinate has wrong length");
  return guarded([&] {
    const Vector x = frame_.point(u);
    const auto flow = integrate_variational(loop_, x, eps_, 1.0, tol_);
    if (frame_.displacement(flow.endpoint).cwiseAbs().maxCoeff() > 1e3 * frame_.scale) {
      throw Error(ErrorKind::Escape, "orbit left the chart neighbourhood");
    }
    const auto ret = solve_return_times(family_, flow.endpoint, eps_, frame_, tol_);
    const auto back = compose_group_flows(family_, flow.endpoint, eps_, ret.s, tol_, true);
    // z = Phi_s(y); ds = -(N X(z))^{-1} N Dz/dy dy; project along X(z).
    const Matrix xz = family_.frame(back.endpoint, eps_);
    const Matrix pairing = frame_.constraints * xz;
    const Matrix proj = Matrix::Identity(frame_.n(), frame_.n()) -
                        xz * pairing.lu().solve(frame_.constraints);
    const Matrix jac =
        frame_.transversal.transpose() * proj * back.tangent * flow.tangent * frame_.transversal;
    return std::pair<Vector, Matrix>{frame_.coords(back.endpoint), jac};
  });
}

PhasePoint evaluate_pn_map(const VectorFieldFamily& family, const TorusSeed& seed,
                           const HomotopyClass& alpha, const SectionFrame& frame,
                           const PhasePoint& x, const ParamVector& eps, const FlowTolerance& tol) {
  if (seed.k() != family.k()) throw Error(ErrorKind::Validation, "torus and family disagree on k");
  return PoincareNekhoroshevMap(family, alpha, frame, eps, tol).apply_point(x);
}

BasepointReport basepoint_spectrum_check(const VectorFieldFamily& family, const TorusSeed& seed,
                                         const HomotopyClass& alpha,
                                         const std::vector<Vector>& sample_angles,
                                         const ParamVector& eps, double tol,
                                         const FlowTolerance& flow_tol) {
  BasepointReport rep;
  for (const Vector& phi : sample_angles) {
    const PhasePoint m = seed.embed(phi);
    const SectionFrame frame = build_section(family, seed, m, eps);
    const auto tm = total_monodromy(family, seed, alpha, m, eps, flow_tol);
    rep.spectra.push_back(eigenvalues(transversal_linearization(tm.total, frame)));
  }
  for (std::size_t i = 0; i < rep.spectra.size(); ++i)
    for (std::size_t j = i + 1; j < rep.spectra.size(); ++j)
      rep.max_spectral_distance =
          std::max(rep.max_spectral_distance, spectral_distance(rep.spectra[i], rep.spectra[j]));
  rep.pass = rep.max_spectral_distance <= tol;
  return rep;
}

}  // namespace pnk

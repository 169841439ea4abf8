#include "pnk/flow.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace pnk {

namespace {

using Integrator = DormandPrince45<double>;

StepControl<double> state_control(const FlowTolerance& tol, Eigen::Index n) {
  if (!(tol.tol > 0.0)) throw Error(ErrorKind::Validation, "tolerance must be positive");
  StepControl<double> c;
  c.rtol = tol.tol;
  c.atol = tol.tol * tol.atol_ratio;
  c.max_steps = tol.max_steps;
  (void)n;
  return c;
}

StepControl<double> variational_control(const FlowTolerance& tol, Eigen::Index n) {
  StepControl<double> c = state_control(tol, n);
  c.atol_per_component.resize(n + n * n);
  c.atol_per_component.head(n).setConstant(tol.tol * tol.atol_ratio);
  c.atol_per_component.tail(n * n).setConstant(tol.tol * tol.atol_ratio * tol.tangent_atol_ratio);
  return c;
}

}  // namespace

FlowResult integrate_flow(const VectorField& field, const PhasePoint& x0, const ParamVector& eps,
                          double t, const FlowTolerance& tol) {
  if (!std::isfinite(t)) throw Error(ErrorKind::Validation, "integration time is not finite");
  if (x0.size() != field.n) throw Error(ErrorKind::Validation, "initial point has wrong length");
  const Integrator rk(state_control(tol, x0.size()));
  auto rhs = [&](double, const Vector& y) -> Vector { return field.eval(y, eps); };
  const auto res = rk.integrate(rhs, x0, 0.0, t);
  return FlowResult{res.y, res.steps, res.max_error_norm * tol.tol};
}

VariationalResult integrate_variational(const VectorField& field, const PhasePoint& x0,
                                        const ParamVector& eps, double t,
                                        const FlowTolerance& tol) {
  if (!std::isfinite(t)) throw Error(ErrorKind::Validation, "integration time is not finite");
  if (!field.jacobian) throw Error(ErrorKind::Validation, "field has no jacobian");
  const Eigen::Index n = x0.size();
  if (n != field.n) throw Error(ErrorKind::Validation, "initial point has wrong length");

  Vector y0(n + n * n);
  y0.head(n) = x0;
  Eigen::Map<Matrix>(y0.data() + n, n, n).setIdentity();

  auto rhs = [&](double, const Vector& y) -> Vector {
    Vector dy(y.size());
    const Vector x = y.head(n);
    dy.head(n) = field.eval(x, eps);
    Eigen::Map<Matrix>(dy.data() + n, n, n) =
        field.jacobian(x, eps) * Eigen::Map<const Matrix>(y.data() + n, n, n);
    return dy;
  };
  const Integrator rk(variational_control(tol, n));
  const auto res = rk.integrate(rhs, y0, 0.0, t);
  VariationalResult out;
  out.endpoint = res.y.head(n);
  out.tangent = Eigen::Map<const Matrix>(res.y.data() + n, n, n);
  out.steps_taken = res.steps;
  return out;
}

VariationalResult compose_group_flows(const VectorFieldFamily& family, const PhasePoint& y,
                                      const ParamVector& eps, const Vector& s,
                                      const FlowTolerance& tol, bool with_tangent) {
  VariationalResult out;
  out.endpoint = y;
  out.tangent = Matrix::Identity(family.n(), family.n());
  for (int i = 0; i < family.k(); ++i) {
    if (s[i] == 0.0) continue;
    const VectorField xi = member_field(family, i);
    if (with_tangent) {
      const auto r = integrate_variational(xi, out.endpoint, eps, s[i], tol);
      out.endpoint = r.endpoint;
      out.tangent = r.tangent * out.tangent;
      out.steps_taken += r.steps_taken;
    } else {
      const auto r = integrate_flow(xi, out.endpoint, eps, s[i], tol);
      out.endpoint = r.endpoint;
      out.steps_taken += r.steps_taken;
    }
  }
  return out;
}

ReturnTimes solve_return_times(const VectorFieldFamily& family, const PhasePoint& y,
                               const ParamVector& eps, const SectionFrame& section,
                               const FlowTolerance& tol, int max_iters) {
  const int k = family.k();
  ReturnTimes out;
  out.s = Vector::Zero(k);
  out.landed = y;

  Vector g = section.constraint_values(y);
  if (g.cwiseAbs().maxCoeff() > section.trust_radius()) {
    throw Error(ErrorKind::NoConvergence,
                "point lies outside the trust radius of the section (offset " +
                    format_number(g.cwiseAbs().maxCoeff()) + ")");
  }
  // The fields commute, so d/ds_i of the composed flow is X_i at the landed point.
  for (int it = 0; it <= max_iters; ++it) {
    const Matrix pairing = section.constraints * family.frame(out.landed, eps);
    Eigen::FullPivLU<Matrix> lu(pairing);
    if (!lu.isInvertible() || lu.rcond() < 1e-12) {
      throw Error(ErrorKind::SingularGeometry, "fields are tangent to the section");
    }
    const Vector ds = -lu.solve(g);
    const bool converged = g.cwiseAbs().maxCoeff() <= tol.tol && ds.cwiseAbs().maxCoeff() <= tol.tol;
    if (converged) {
      out.iterations = it;
      return out;
    }
    if (it == max_iters) break;
    out.s += ds;
    if (out.s.cwiseAbs().maxCoeff() > 10.0 * section.trust_radius()) {
      throw Error(ErrorKind::NoConvergence, "return-time iteration left the trust region");
    }
    out.landed = compose_group_flows(family, y, eps, out.s, tol, false).endpoint;
    g = section.constraint_values(out.landed);
  }
  throw Error(ErrorKind::NoConvergence, "return-time Newton iteration did not converge");
}

TorusSeed TorusSeed::from_flow(const VectorFieldFamily& family, const Vector& base, Vector eps0,
                               std::vector<int> angle_coords, double tol) {
  family.check_point(base, eps0);
  const FlowTolerance ft{tol};
  auto embed = [family, base, eps0, ft](const Vector& phi) -> Vector {
    return compose_group_flows(family, base, eps0, phi, ft, false).endpoint;
  };
  auto tangent = [family, embed, eps0](const Vector& phi) -> Matrix {
    return family.frame(embed(phi), eps0);
  };
  return TorusSeed(family.k(), embed, std::move(eps0), std::move(angle_coords), tangent);
}

}  // namespace pnk

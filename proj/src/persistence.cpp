#include "pnk/persistence.hpp"

#include "pnk/linalg.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

namespace pnk {

HyperbolicityReport hyperbolicity_report(const Matrix& L, double delta) {
  if (!L.allFinite()) throw Error(ErrorKind::NonFinite, "linearization is not finite");
  HyperbolicityReport rep;
  rep.spectrum = eigenvalues(L);
  rep.dist_from_one = std::numeric_limits<double>::infinity();
  rep.dist_from_unit_circle = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < rep.spectrum.size(); ++i) {
    const Complex lam = rep.spectrum[i];
    rep.dist_from_one = std::min(rep.dist_from_one, std::abs(lam - 1.0));
    rep.dist_from_unit_circle = std::min(rep.dist_from_unit_circle, std::abs(std::abs(lam) - 1.0));
  }
  rep.B_invertible = rep.dist_from_one >= delta;
  rep.B_condition = condition_number(Matrix::Identity(L.rows(), L.cols()) - L);
  return rep;
}

bool isolation_check(const HyperbolicityReport& report, double tol) {
  return report.dist_from_unit_circle > tol;
}

FixedPoint newton_fixed_point(const PoincareNekhoroshevMap& map, const Vector& u_guess,
                              const NewtonOptions& opts) {
  const int r = map.dim();
  if (u_guess.size() != r) throw Error(ErrorKind::Validation, "initial guess has wrong length");
  FixedPoint fp;
  fp.u = u_guess;
  for (int it = 0;; ++it) {
    const auto [image, jac] = map.apply_with_jacobian(fp.u);
    const Vector F = fp.u - image;
    fp.residual = r == 0 ? 0.0 : F.cwiseAbs().maxCoeff();
    fp.L = jac;
    if (fp.residual <= opts.tol) break;
    if (it >= opts.max_iters) {
      throw Error(ErrorKind::NoConvergence,
                  "Newton did not converge in " + std::to_string(opts.max_iters) + " iterations");
    }
    const Eigen::PartialPivLU<Matrix> lu(Matrix::Identity(r, r) - jac);
    if (!(lu.rcond() > opts.singular_rcond)) {
      throw Error(ErrorKind::SingularJacobian, "I - DP is singular: a multiplier is at 1");
    }
    fp.u -= lu.solve(F);
    fp.iterations = it + 1;
  }
  fp.spectrum = eigenvalues(fp.L);
  return fp;
}

FixedPoint newton_fixed_point(const VectorFieldFamily& family, const TorusSeed& seed,
                              const HomotopyClass& alpha, const SectionFrame& frame,
                              const ParamVector& eps, const Vector& u_guess, double tol,
                              int max_iters) {
  if (seed.k() != family.k()) throw Error(ErrorKind::Validation, "torus and family disagree on k");
  NewtonOptions opts;
  opts.tol = tol;
  opts.max_iters = max_iters;
  return newton_fixed_point(PoincareNekhoroshevMap(family, alpha, frame, eps, opts.flow), u_guess,
                            opts);
}

std::string to_string(BranchStatus s) {
  switch (s) {
    case BranchStatus::Completed: return "completed";
    case BranchStatus::StoppedAtCritical: return "stopped_at_critical";
    case BranchStatus::Diverged: return "diverged";
  }
  return "unknown";
}

std::vector<ParamVector> linear_path(const ParamVector& a, const ParamVector& b, int steps) {
  if (steps < 1) throw Error(ErrorKind::Validation, "path needs at least one point");
  if (a.size() != b.size()) throw Error(ErrorKind::Validation, "path endpoints differ in length");
  std::vector<ParamVector> out;
  for (int i = 0; i < steps; ++i) {
    const double s = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    out.push_back(a + s * (b - a));
  }
  return out;
}

namespace {

struct SliceResult {
  bool ok = false;
  bool critical = false;
  ContinuationPoint point;
  std::string message;
};

double beta_defect(const VectorFieldFamily& family, const TorusSeed& seed,
                   const HomotopyClass& alpha, const PhasePoint& x, const ParamVector& eps,
                   const Matrix& map_jac, const FlowTolerance& flow) {
  try {
    const SectionFrame here = build_section(family, seed, x, eps);
    const auto tm = total_monodromy(family, seed, alpha, x, eps, flow);
    const CVector lam = eigenvalues(transversal_linearization(tm.total, here));
    const Eigen::Index r = lam.size();
    const CVector beta = eigenvalues(Matrix(Matrix::Identity(r, r) - map_jac));
    return spectral_distance(beta, CVector(CVector::Ones(r) - lam));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::OpenLoop) return std::numeric_limits<double>::quiet_NaN();
    throw;
  }
}

SliceResult solve_slice(const VectorFieldFamily& family, const TorusSeed& seed,
                        const HomotopyClass& alpha, const SectionFrame& frame,
                        const ParamVector& eps, const Vector& guess, const ContinuationOptions& opts) {
  SliceResult res;
  try {
    const PoincareNekhoroshevMap map(family, alpha, frame, eps, opts.newton.flow);
    const FixedPoint fp = newton_fixed_point(map, guess, opts.newton);
    ContinuationPoint& pt = res.point;
    pt.eps = eps;
    pt.u = fp.u;
    pt.spectrum = fp.spectrum;
    pt.newton_iters = fp.iterations;
    pt.residual = fp.residual;
    const auto hyp = hyperbolicity_report(fp.L, opts.delta_min);
    pt.dist_from_one = hyp.dist_from_one;
    if (!hyp.B_invertible) {
      res.critical = true;
      res.message = "hyperbolicity margin " + format_number(hyp.dist_from_one) + " below delta_min";
      return res;
    }
    pt.verify_residual =
        (map.apply(fp.u) - fp.u).cwiseAbs().maxCoeff();
    pt.beta_defect = opts.check_beta ? beta_defect(family, seed, alpha, frame.point(fp.u), eps, fp.L,
                                                   opts.newton.flow)
                                     : 0.0;
    res.ok = true;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::SingularJacobian) {
      res.critical = true;
    }
    res.message = e.what();
  }
  return res;
}

Vector secant_predictor(const std::vector<ContinuationPoint>& pts, const ParamVector& eps) {
  const std::size_t m = pts.size();
  if (m == 1) return pts.back().u;
  const ContinuationPoint& a = pts[m - 2];
  const ContinuationPoint& b = pts[m - 1];
  const Vector de = b.eps - a.eps;
  const double len2 = de.squaredNorm();
  if (len2 == 0.0) return b.u;
  const double s = (eps - b.eps).dot(de) / len2;
  return b.u + s * (b.u - a.u);
}

}  // namespace

ContinuationBranch continue_branch(const VectorFieldFamily& family, const TorusSeed& seed,
                                   const HomotopyClass& alpha,
                                   const std::vector<ParamVector>& eps_path,
                                   const ContinuationOptions& opts) {
  if (eps_path.empty()) throw Error(ErrorKind::Validation, "parameter path is empty");
  for (const auto& e : eps_path) {
    if (e.size() != family.p()) throw Error(ErrorKind::Validation, "parameter has wrong length");
  }
  ContinuationBranch branch;
  branch.alpha = alpha;
  branch.frame = build_section(family, seed, seed.base_point(), seed.eps0());
  const int r = branch.frame.r();

  auto stop = [&](const SliceResult& s, const ParamVector& eps) {
    branch.status = s.critical ? BranchStatus::StoppedAtCritical : BranchStatus::Diverged;
    branch.stop_eps = eps;
    branch.message = s.message;
  };

  const SliceResult first = solve_slice(family, seed, alpha, branch.frame, eps_path[0],
                                        Vector::Zero(r), opts);
  if (!first.ok) {
    stop(first, eps_path[0]);
    return branch;
  }
  branch.points.push_back(first.point);

  if (!opts.parallel) {
    for (std::size_t i = 1; i < eps_path.size(); ++i) {
      const Vector guess = secant_predictor(branch.points, eps_path[i]);
      const SliceResult s = solve_slice(family, seed, alpha, branch.frame, eps_path[i], guess, opts);
      if (!s.ok) {
        stop(s, eps_path[i]);
        return branch;
      }
      branch.points.push_back(s.point);
    }
    return branch;
  }

  // Parallel mode: every slice starts from the first solved point, so the
  // outcome does not depend on scheduling.
  const std::size_t m = eps_path.size();
  std::vector<SliceResult> results(m);
  std::atomic<std::size_t> next{1};
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers =
      std::min<std::size_t>(m - 1, opts.threads > 0 ? static_cast<std::size_t>(opts.threads) : hw);
  auto work = [&] {
    for (std::size_t i = next++; i < m; i = next++) {
      results[i] = solve_slice(family, seed, alpha, branch.frame, eps_path[i], first.point.u, opts);
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  for (std::size_t i = 1; i < m; ++i) {
    if (!results[i].ok) {
      stop(results[i], eps_path[i]);
      return branch;
    }
    branch.points.push_back(results[i].point);
  }
  return branch;
}

TorusSamples reconstruct_torus(const VectorFieldFamily& family, const TorusSeed& seed,
                               const ParamVector& eps, const SectionFrame& frame,
                               const Vector& u_fixed, int grid_per_angle, double tol,
                               const FlowTolerance& flow) {
  const int k = family.k();
  const int g = grid_per_angle;
  if (g < 2) throw Error(ErrorKind::Validation, "torus grid needs at least 2 points per angle");
  std::size_t total = 1;
  for (int i = 0; i < k; ++i) total *= static_cast<std::size_t>(g);

  std::vector<VectorField> steps;
  for (int i = 0; i < k; ++i) steps.push_back(member_field(family, i).scaled(2.0 * std::numbers::pi));
  const double dt = 1.0 / g;

  TorusSamples out;
  out.grid = g;
  out.points.assign(total, PhasePoint());
  out.points[0] = frame.point(u_fixed);
  // Fill axis by axis: the block of indices with j_i > 0 comes from j_i - 1.
  std::size_t stride = 1;
  for (int i = 0; i < k; ++i) {
    for (std::size_t base = 0; base < stride; ++base) {
      for (int j = 1; j < g; ++j) {
        const std::size_t from = base + static_cast<std::size_t>(j - 1) * stride;
        out.points[base + static_cast<std::size_t>(j) * stride] =
            integrate_flow(steps[i], out.points[from], eps, dt, flow).endpoint;
      }
    }
    stride *= static_cast<std::size_t>(g);
  }

  // Wrap-around edges in every direction.
  stride = 1;
  for (int i = 0; i < k; ++i) {
    for (std::size_t idx = 0; idx < total; ++idx) {
      if ((idx / stride) % static_cast<std::size_t>(g) != static_cast<std::size_t>(g - 1)) continue;
      const PhasePoint y = integrate_flow(steps[i], out.points[idx], eps, dt, flow).endpoint;
      const std::size_t first = idx - static_cast<std::size_t>(g - 1) * stride;
      out.closure_defect =
          std::max(out.closure_defect, seed.displacement(y, out.points[first]).cwiseAbs().maxCoeff());
    }
    stride *= static_cast<std::size_t>(g);
  }
  if (!(out.closure_defect <= tol)) {
    throw Error(ErrorKind::OpenTorus,
                "group orbit of the fixed point does not close: defect " + format_number(out.closure_defect));
  }
  return out;
}

double hausdorff_distance(const TorusSeed& seed, const TorusSamples& a, const TorusSamples& b) {
  auto directed = [&](const TorusSamples& p, const TorusSamples& q) {
    double worst = 0.0;
    for (const auto& x : p.points) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& y : q.points) best = std::min(best, seed.displacement(x, y).norm());
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

}  // namespace pnk

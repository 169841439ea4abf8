#include "pnk/bifurcation.hpp"

#include "pnk/linalg.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace pnk {

namespace {

constexpr double kPi = std::numbers::pi;

double inf() { return std::numeric_limits<double>::infinity(); }

Eigen::Index nearest(const CVector& values, Complex target) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i)
    if (std::abs(values[i] - target) < std::abs(values[best] - target)) best = i;
  return best;
}

PoincareNekhoroshevMap map_at(const PoincareNekhoroshevMap& proto, const ParamVector& eps,
                              const NewtonOptions& newton) {
  return PoincareNekhoroshevMap(proto.family(), proto.alpha(), proto.frame(), eps, newton.flow);
}

struct Slice {
  Vector u;
  Matrix L;
  CVector spectrum;
};

Slice solve_at(const PoincareNekhoroshevMap& proto, const ParamVector& eps, const Vector& guess,
               const NewtonOptions& newton) {
  const FixedPoint fp = newton_fixed_point(map_at(proto, eps, newton), guess, newton);
  return Slice{fp.u, fp.L, fp.spectrum};
}

int sign_of(double s) { return (s > 0.0) - (s < 0.0); }

}  // namespace

SectionMap as_section_map(const PoincareNekhoroshevMap& map) {
  SectionMap m;
  m.dim = map.dim();
  m.eval = [map](const Vector& u) { return map.apply_with_jacobian(u); };
  return m;
}

SectionMap explicit_map(int dim, std::function<Vector(const Vector&)> f,
                        std::function<Matrix(const Vector&)> df) {
  SectionMap m;
  m.dim = dim;
  m.eval = [f = std::move(f), df = std::move(df)](const Vector& u) {
    return std::pair<Vector, Matrix>{f(u), df(u)};
  };
  return m;
}

SectionMap iterate_map(const SectionMap& map, int times) {
  if (times < 1) throw Error(ErrorKind::Validation, "iteration count must be positive");
  SectionMap m;
  m.dim = map.dim;
  m.eval = [map, times](const Vector& u) {
    Vector x = u;
    Matrix jac = Matrix::Identity(map.dim, map.dim);
    for (int i = 0; i < times; ++i) {
      auto [y, d] = map.eval(x);
      jac = d * jac;
      x = std::move(y);
    }
    return std::pair<Vector, Matrix>{x, jac};
  };
  return m;
}

MultiplierPaths track_multipliers(const ContinuationBranch& branch, double tie_tol) {
  if (branch.points.size() < 2) throw Error(ErrorKind::Validation, "need at least two branch points");
  MultiplierPaths out;
  for (std::size_t i = 0; i < branch.points.size(); ++i) {
    const auto& pt = branch.points[i];
    out.eps.push_back(pt.eps);
    out.u.push_back(pt.u);
    if (i == 0) {
      out.values.push_back(pt.spectrum);
      continue;
    }
    const CVector& prev = out.values.back();
    const SpectrumMatch m = match_spectra(prev, pt.spectrum, tie_tol);
    CVector ordered(prev.size());
    for (Eigen::Index j = 0; j < prev.size(); ++j) ordered[j] = pt.spectrum[m.perm[j]];
    out.values.push_back(ordered);
    if (m.ambiguous) {
      out.ambiguous = true;
      out.ambiguous_at.push_back(static_cast<int>(i));
    }
  }
  return out;
}

std::vector<CrossingInterval> grid_crossings(const MultiplierPaths& paths, double circle_tol) {
  std::vector<CrossingInterval> out;
  auto gap = [&](std::size_t i, int j) {
    const double s = std::abs(paths.values[i][j]) - 1.0;
    return std::abs(s) <= circle_tol ? 0.0 : s;
  };
  for (int j = 0; j < paths.count(); ++j) {
    for (std::size_t i = 0; i + 1 < paths.values.size(); ++i) {
      const double a = gap(i, j);
      const double b = gap(i + 1, j);
      if ((a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0)) {
        CrossingInterval c;
        c.path = j;
        c.index = static_cast<int>(i);
        c.eps_lo = paths.eps[i];
        c.eps_hi = paths.eps[i + 1];
        c.u_lo = paths.u[i];
        c.u_hi = paths.u[i + 1];
        c.mu_lo = paths.values[i][j];
        c.mu_hi = paths.values[i + 1][j];
        out.push_back(c);
      }
    }
  }
  return out;
}

CrossingInterval refine_crossing(const PoincareNekhoroshevMap& prototype, const CrossingInterval& c,
                                 double eps_tol, const NewtonOptions& newton) {
  CrossingInterval b = c;
  const int s_lo = sign_of(std::abs(b.mu_lo) - 1.0);
  while ((b.eps_hi - b.eps_lo).norm() > eps_tol) {
    const ParamVector mid = 0.5 * (b.eps_lo + b.eps_hi);
    const Slice s = solve_at(prototype, mid, 0.5 * (b.u_lo + b.u_hi), newton);
    const Complex mu = s.spectrum[nearest(s.spectrum, b.mu_lo)];
    const int sm = sign_of(std::abs(mu) - 1.0);
    if (sm == 0) {
      b.eps_lo = b.eps_hi = mid;
      b.u_lo = b.u_hi = s.u;
      b.mu_lo = b.mu_hi = mu;
      break;
    }
    if (sm == s_lo) {
      b.eps_lo = mid;
      b.u_lo = s.u;
      b.mu_lo = mu;
    } else {
      b.eps_hi = mid;
      b.u_hi = s.u;
      b.mu_hi = mu;
    }
  }
  return b;
}

std::vector<CrossingInterval> detect_crossings(const VectorFieldFamily& family,
                                               const ContinuationBranch& branch,
                                               const MultiplierPaths& paths, double eps_tol,
                                               const NewtonOptions& newton, double circle_tol) {
  const PoincareNekhoroshevMap proto(family, branch.alpha, branch.frame, paths.eps.front(), newton.flow);
  std::vector<CrossingInterval> out;
  for (const auto& c : grid_crossings(paths, circle_tol)) out.push_back(refine_crossing(proto, c, eps_tol, newton));
  std::sort(out.begin(), out.end(), [&](const CrossingInterval& a, const CrossingInterval& b) {
    if (a.index != b.index) return a.index < b.index;
    const double da = (a.eps_lo - paths.eps[a.index]).norm();
    const double db = (b.eps_lo - paths.eps[b.index]).norm();
    if (da != db) return da < db;
    return a.path < b.path;
  });
  return out;
}

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::CaseA: return "CaseA";
    case EventKind::CaseB: return "CaseB";
    case EventKind::CaseC: return "CaseC";
    case EventKind::Degenerate: return "Degenerate";
  }
  return "unknown";
}

Classification classify_multipliers(const CVector& spectrum, double crit_tol, double angle_tol) {
  Classification c;
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
    if (std::abs(std::abs(spectrum[i]) - 1.0) <= crit_tol) {
      c.critical.push_back(spectrum[i]);
      c.critical_index.push_back(static_cast<int>(i));
    }
  }
  c.split_margin = inf();
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
    if (std::find(c.critical_index.begin(), c.critical_index.end(), static_cast<int>(i)) !=
        c.critical_index.end())
      continue;
    c.split_margin = std::min(c.split_margin, std::abs(std::abs(spectrum[i]) - 1.0));
  }

  if (c.critical.size() == 1) {
    const double a = std::abs(std::arg(c.critical[0]));
    c.angle = a;
    if (a <= angle_tol) {
      c.kind = EventKind::CaseB;
      c.scenario =
          "multiplier +1, case (b). Case (b) is listed with a pair of period-two points (one new "
          "torus meeting the section twice); the usual reading of a +1 crossing is a pitchfork with "
          "two new fixed points (two new k-tori). The probe searches for both.";
    } else if (kPi - a <= angle_tol) {
      c.kind = EventKind::CaseA;
      c.scenario =
          "multiplier -1, case (a). Case (a) is listed with two new fixed points (two new k-tori); "
          "the usual reading of a -1 crossing is period doubling, a 2-cycle of the section map (one "
          "new torus meeting the section twice). The probe searches for both.";
    } else {
      c.scenario = "single critical multiplier off the real axis";
    }
    return c;
  }
  if (c.critical.size() == 2) {
    const Complex a = c.critical[0];
    const Complex b = c.critical[1];
    const bool pair = std::abs(a.imag()) > 0.0 &&
                      std::abs(a - std::conj(b)) <= 1e-8 * std::max(1.0, std::abs(a));
    if (pair) {
      const double th = std::abs(std::arg(a));
      c.angle = th;
      if (th <= angle_tol || kPi - th <= angle_tol) {
        c.scenario = std::string("complex pair within angle_tol of ") + (th <= angle_tol ? "+1" : "-1") +
                     ": candidates " + (th <= angle_tol ? "CaseB" : "CaseA") + " and CaseC";
        return c;
      }
      c.kind = EventKind::CaseC;
      for (int q = 3; q <= 6; ++q)
        for (int p = 1; p < q; ++p)
          if (std::abs(th - 2.0 * kPi * p / q) <= angle_tol) c.resonance_warning = true;
      c.scenario =
          "complex pair exp(+-i theta), case (c): an invariant circle of the section map, i.e. a new "
          "invariant (k+1)-torus.";
      if (c.resonance_warning) c.scenario += " theta is close to a rational rotation with denominator <= 6.";
      return c;
    }
  }
  c.scenario = c.critical.empty() ? "no multiplier on the unit circle"
                                  : "more than one independent critical multiplier";
  return c;
}

BifurcationEvent classify_event(const PoincareNekhoroshevMap& prototype, const CrossingInterval& c,
                                const NewtonOptions& newton, const EventOptions& opts) {
  BifurcationEvent ev;
  ev.eps_lo = c.eps_lo;
  ev.eps_hi = c.eps_hi;
  ev.eps_critical = 0.5 * (c.eps_lo + c.eps_hi);
  const Slice s = solve_at(prototype, ev.eps_critical, 0.5 * (c.u_lo + c.u_hi), newton);
  ev.u_critical = s.u;
  ev.spectrum = s.spectrum;
  const Classification cl = classify_multipliers(s.spectrum, opts.crit_tol, opts.angle_tol);
  ev.kind = cl.kind;
  ev.critical_multipliers = cl.critical;
  ev.split_margin = cl.split_margin;
  ev.resonance_warning = cl.resonance_warning;
  ev.scenario = cl.scenario;

  // d|mu|/d eps along the path direction, tracking the crossing multiplier.
  Vector dir = c.eps_hi - c.eps_lo;
  if (dir.norm() == 0.0) {
    dir = Vector::Zero(c.eps_hi.size());
    if (dir.size() > 0) dir[0] = 1.0;
  }
  dir.normalize();
  const Complex mu_c = s.spectrum[nearest(s.spectrum, c.mu_hi)];
  const double h = opts.fd_step;
  const Slice plus = solve_at(prototype, ev.eps_critical + h * dir, s.u, newton);
  const Slice minus = solve_at(prototype, ev.eps_critical - h * dir, s.u, newton);
  ev.transversality = (std::abs(plus.spectrum[nearest(plus.spectrum, mu_c)]) -
                       std::abs(minus.spectrum[nearest(minus.spectrum, mu_c)])) /
                      (2.0 * h);
  return ev;
}

Matrix critical_plane(const Matrix& jac, const std::vector<Complex>& critical) {
  const Eigen::Index r = jac.rows();
  if (critical.empty() || r == 0) return Matrix(r, 0);
  Eigen::EigenSolver<Matrix> es(jac);
  const CVector values = es.eigenvalues();
  const Eigen::Index i = nearest(values, critical.front());
  const CVector v = es.eigenvectors().col(i);
  if (std::abs(values[i].imag()) == 0.0 || r == 1) {
    return v.real().normalized();
  }
  Matrix w(r, 2);
  w.col(0) = v.real();
  w.col(1) = v.imag();
  const Eigen::HouseholderQR<Matrix> qr(w);
  return qr.householderQ() * Matrix::Identity(r, 2);
}

namespace {

struct NewtonOutcome {
  bool ok = false;
  Vector u;
  Matrix jac;
  double residual = inf();
};

NewtonOutcome probe_newton(const SectionMap& m, const Vector& start, const Vector& u0,
                           const ProbeOptions& opts) {
  NewtonOutcome out;
  Vector u = start;
  const int r = m.dim;
  try {
    for (int it = 0; it <= opts.max_iters; ++it) {
      auto [img, jac] = m.eval(u);
      const Vector F = u - img;
      const double res = F.cwiseAbs().maxCoeff();
      if (!std::isfinite(res)) return out;
      if (res <= opts.tol) {
        out.ok = true;
        out.u = u;
        out.jac = jac;
        out.residual = res;
        return out;
      }
      const Eigen::PartialPivLU<Matrix> lu(Matrix::Identity(r, r) - jac);
      if (!(lu.rcond() > 1e-14)) return out;
      u -= lu.solve(F);
      if ((u - u0).norm() > 4.0 * opts.search_radius) return out;
    }
  } catch (const Error&) {
  }
  return out;
}

std::vector<Vector> star(const Vector& u0, const Matrix& plane, const ProbeOptions& opts) {
  const Eigen::Index r = u0.size();
  Matrix basis = plane;
  if (basis.cols() == 1 && r >= 2) {
    Matrix b2(r, 2);
    b2.col(0) = plane.col(0);
    b2.col(1) = orthonormal_complement(plane).col(0);
    basis = b2;
  }
  std::vector<Vector> dirs;
  if (basis.cols() == 1) {
    dirs = {basis.col(0), -basis.col(0)};
  } else {
    for (int d = 0; d < opts.directions; ++d) {
      const double th = 2.0 * kPi * d / opts.directions;
      dirs.push_back(std::cos(th) * basis.col(0) + std::sin(th) * basis.col(1));
    }
  }
  const double lo = 10.0 * opts.tol;
  const double hi = opts.search_radius;
  std::vector<Vector> pts;
  for (int k = 0; k < opts.radii; ++k) {
    const double rad = opts.radii == 1 ? hi : lo * std::pow(hi / lo, static_cast<double>(k) / (opts.radii - 1));
    for (const auto& d : dirs) pts.push_back(u0 + rad * d);
  }
  return pts;
}

bool seen(const std::vector<Vector>& list, const Vector& u, double distinct) {
  for (const auto& v : list)
    if ((v - u).norm() <= distinct) return true;
  return false;
}

}  // namespace

ProbeReport postcritical_probe(const SectionMap& map, const Vector& u0, EventKind kind,
                               const Matrix& plane, const ProbeOptions& opts) {
  if (u0.size() != map.dim) throw Error(ErrorKind::Validation, "base point has wrong length");
  if (plane.rows() != map.dim || plane.cols() < 1)
    throw Error(ErrorKind::Validation, "critical plane has wrong shape");
  ProbeReport rep;
  rep.kind = kind;
  rep.u0 = u0;
  const auto starts = star(u0, plane, opts);

  if (kind == EventKind::CaseA || kind == EventKind::CaseB || kind == EventKind::Degenerate) {
    std::vector<Vector> found{u0};
    for (const auto& s : starts) {
      const NewtonOutcome n = probe_newton(map, s, u0, opts);
      if (!n.ok || (n.u - u0).norm() > opts.search_radius || seen(found, n.u, opts.distinct)) continue;
      found.push_back(n.u);
      rep.fixed_points.push_back(ProbeFixedPoint{n.u, eigenvalues(n.jac), n.residual});
    }
    const SectionMap twice = iterate_map(map, 2);
    std::vector<Vector> cyc{u0};
    for (const auto& s : starts) {
      const NewtonOutcome n = probe_newton(twice, s, u0, opts);
      if (!n.ok || (n.u - u0).norm() > opts.search_radius || seen(cyc, n.u, opts.distinct)) continue;
      const Vector image = map.apply(n.u);
      if ((image - n.u).norm() <= opts.distinct) continue;  // a fixed point of P itself
      cyc.push_back(n.u);
      cyc.push_back(image);
      rep.cycles.push_back(ProbeCycle{n.u, image, eigenvalues(n.jac), n.residual});
    }
    if (!rep.fixed_points.empty())
      rep.notes.push_back(std::to_string(rep.fixed_points.size()) +
                          " new fixed point(s): each lies on a new invariant k-torus");
    if (!rep.cycles.empty())
      rep.notes.push_back(std::to_string(rep.cycles.size()) +
                          " 2-cycle(s): one invariant k-torus meeting the section at both points");
    rep.found = !rep.fixed_points.empty() || !rep.cycles.empty();
  }

  if (kind == EventKind::CaseC) {
    if (plane.cols() < 2) throw Error(ErrorKind::Validation, "invariant circle search needs a plane");
    try {
      const double rad0 = opts.radii >= 2
                              ? 10.0 * opts.tol *
                                    std::pow(opts.search_radius / (10.0 * opts.tol),
                                             static_cast<double>(opts.radii - 2) / (opts.radii - 1))
                              : opts.search_radius;
      Vector u = u0 + rad0 * plane.col(0);
      for (int i = 0; i < opts.transient; ++i) u = map.apply(u);
      const int M = opts.fourier_modes;
      Matrix design(opts.samples, 1 + 2 * M);
      Vector rho(opts.samples);
      for (int i = 0; i < opts.samples; ++i) {
        u = map.apply(u);
        const Vector d = u - u0;
        const double x = plane.col(0).dot(d);
        const double y = plane.col(1).dot(d);
        const double th = std::atan2(y, x);
        rho[i] = std::hypot(x, y);
        design(i, 0) = 1.0;
        for (int m = 1; m <= M; ++m) {
          design(i, 2 * m - 1) = std::cos(m * th);
          design(i, 2 * m) = std::sin(m * th);
        }
      }
      const Vector coef = design.colPivHouseholderQr().solve(rho);
      const Vector resid = design * coef - rho;
      rep.circle.mean_radius = coef[0];
      rep.circle.fit_residual = std::sqrt(resid.squaredNorm() / opts.samples);
      rep.circle.samples = opts.samples;
      rep.has_circle = (rho - Vector::Constant(opts.samples, coef[0])).cwiseAbs().maxCoeff() <
                           opts.search_radius &&
                       rho.minCoeff() > opts.distinct && rho.maxCoeff() <= opts.search_radius;
    } catch (const Error& e) {
      rep.notes.push_back(std::string("orbit sampling failed: ") + e.what());
    }
    if (rep.has_circle)
      rep.notes.push_back("invariant circle: a new invariant (k+1)-torus (not reconstructed)");
    rep.found = rep.has_circle;
  }

  if (!rep.found) rep.notes.push_back("nothing found within the search radius (possibly subcritical)");
  return rep;
}

BifurcationAnalysis analyze_bifurcations(const VectorFieldFamily& family, const TorusSeed& seed,
                                         const HomotopyClass& alpha,
                                         const std::vector<ParamVector>& eps_path,
                                         const BifurcationOptions& opts) {
  BifurcationAnalysis out;
  ContinuationOptions copts = opts.continuation;
  copts.delta_min = 0.0;
  copts.check_beta = false;
  out.branch = continue_branch(family, seed, alpha, eps_path, copts);
  if (out.branch.points.size() < 2) return out;
  out.paths = track_multipliers(out.branch);
  const NewtonOptions& newton = copts.newton;
  const auto crossings =
      detect_crossings(family, out.branch, out.paths, opts.eps_tol, newton, opts.circle_tol);
  const PoincareNekhoroshevMap proto(family, alpha, out.branch.frame, eps_path.front(), newton.flow);

  for (const auto& c : crossings) {
    // Partner of a complex pair, or a second multiplier in the same bracket.
    bool merged = false;
    for (const auto& ev : out.events) {
      if ((ev.eps_lo - c.eps_lo).norm() <= opts.eps_tol && (ev.eps_hi - c.eps_hi).norm() <= opts.eps_tol) {
        merged = true;
      }
    }
    if (merged) continue;
    out.events.push_back(classify_event(proto, c, newton, opts.event));
  }

  for (const auto& ev : out.events) {
    std::vector<ProbeAtOffset> probes;
    Vector dir = ev.eps_hi - ev.eps_lo;
    if (dir.norm() == 0.0 && eps_path.size() >= 2) dir = eps_path.back() - eps_path.front();
    if (dir.norm() > 0.0) dir.normalize();
    for (double off : opts.probe_offsets) {
      ProbeAtOffset p;
      p.eps = ev.eps_critical + off * dir;
      const PoincareNekhoroshevMap m(family, alpha, out.branch.frame, p.eps, newton.flow);
      const FixedPoint fp = newton_fixed_point(m, ev.u_critical, newton);
      const Matrix plane = critical_plane(fp.L, ev.critical_multipliers);
      if (plane.cols() == 0) {
        p.report.u0 = fp.u;
        p.report.notes.push_back("no critical direction to search along");
      } else {
        p.report = postcritical_probe(as_section_map(m), fp.u, ev.kind, plane, opts.probe);
      }
      probes.push_back(std::move(p));
    }
    out.probes.push_back(std::move(probes));
  }
  return out;
}

}  // namespace pnk

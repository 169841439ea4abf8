#include "pnk/cli.hpp"

#include "pnk/floquet.hpp"
#include "pnk/linalg.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>

namespace pnk::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json cvec_json(const CVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back({v[i].real(), v[i].imag()});
  return out;
}

json cvec_json(const std::vector<Complex>& v) {
  return cvec_json(CVector(Eigen::Map<const CVector>(v.data(), static_cast<Eigen::Index>(v.size()))));
}

json mat_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
  return rows;
}

json cmat_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(cvec_json(CVector(m.row(i).transpose())));
  return rows;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double monomial(const Vector& v, const Eigen::VectorXi& e) {
  double m = 1.0;
  for (Eigen::Index j = 0; j < e.size(); ++j)
    for (int q = 0; q < e[j]; ++q) m *= v[j];
  return m;
}

/// d/dv_j of prod v^e.
double monomial_diff(const Vector& v, const Eigen::VectorXi& e, Eigen::Index j) {
  if (e[j] == 0) return 0.0;
  Eigen::VectorXi f = e;
  f[j] -= 1;
  return e[j] * monomial(v, f);
}

VectorFieldFamily polynomial_family(const PolynomialSpec& s) {
  auto eval = [s](int i, const Vector& x, const Vector& eps) {
    Vector out = Vector::Zero(s.n);
    for (int c = 0; c < s.n; ++c)
      for (const auto& t : s.fields[i][c]) out[c] += t.coef * monomial(x, t.x) * monomial(eps, t.eps);
    return out;
  };
  auto jac = [s](int i, const Vector& x, const Vector& eps) {
    Matrix out = Matrix::Zero(s.n, s.n);
    for (int c = 0; c < s.n; ++c)
      for (const auto& t : s.fields[i][c]) {
        const double pe = t.coef * monomial(eps, t.eps);
        for (int j = 0; j < s.n; ++j) out(c, j) += pe * monomial_diff(x, t.x, j);
      }
    return out;
  };
  auto pjac = [s](int i, const Vector& x, const Vector& eps) {
    Matrix out = Matrix::Zero(s.n, s.p);
    for (int c = 0; c < s.n; ++c)
      for (const auto& t : s.fields[i][c]) {
        const double px = t.coef * monomial(x, t.x);
        for (int l = 0; l < s.p; ++l) out(c, l) += px * monomial_diff(eps, t.eps, l);
      }
    return out;
  };
  return VectorFieldFamily(s.n, s.k, s.p, eval, jac, pjac);
}

class Logger {
public:
  explicit Logger(bool on) : on_(on), t0_(std::chrono::steady_clock::now()) {}
  void operator()(const std::string& msg) const {
    if (!on_) return;
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    std::fprintf(stderr, "[pnk %8.3fs] %s\n", s, msg.c_str());
  }

private:
  bool on_;
  std::chrono::steady_clock::time_point t0_;
};

int thread_count(const RunOptions& opts) {
  if (opts.threads > 0) return opts.threads;
  if (const char* env = std::getenv("PNK_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1 || v > 1024)
      throw Error(ErrorKind::Validation, std::string("PNK_THREADS must be a positive integer, got '") + env + "'");
    return static_cast<int>(v);
  }
  return 0;
}

/// Deterministic points on and near the seed torus for the commutation check.
std::vector<std::pair<PhasePoint, ParamVector>> verification_samples(const BuiltSystem& sys,
                                                                     const std::vector<ParamVector>& eps,
                                                                     int grid) {
  std::mt19937 gen(20240917u);
  std::vector<std::pair<PhasePoint, ParamVector>> out;
  for (const auto& e : eps) {
    for (const auto& phi : angle_grid(sys.seed.k(), grid)) {
      const PhasePoint x = sys.seed.embed(phi);
      out.emplace_back(x, e);
      Vector off(x.size());
      for (Eigen::Index i = 0; i < off.size(); ++i) off[i] = static_cast<double>(gen()) / 4294967296.0 - 0.5;
      out.emplace_back(x + 0.1 * off, e);
    }
  }
  return out;
}

ContinuationOptions continuation_options(const AnalysisConfig& an, int threads) {
  ContinuationOptions co;
  co.newton.tol = an.newton_tol;
  co.newton.max_iters = an.max_iters;
  co.newton.flow = FlowTolerance{an.flow_tol};
  co.delta_min = an.delta_min;
  co.parallel = an.parallel;
  co.threads = threads;
  return co;
}

json hyperbolicity_json(const HyperbolicityReport& h) {
  return {{"dist_from_one", h.dist_from_one},
          {"dist_from_unit_circle", h.dist_from_unit_circle},
          {"B_invertible", h.B_invertible},
          {"B_condition", h.B_condition},
          {"isolated", isolation_check(h)}};
}

json branch_json(const ContinuationBranch& br) {
  json pts = json::array();
  for (const auto& p : br.points) {
    pts.push_back({{"eps", vec_json(p.eps)},
                   {"u", vec_json(p.u)},
                   {"spectrum", cvec_json(p.spectrum)},
                   {"newton_iters", p.newton_iters},
                   {"residual", p.residual},
                   {"dist_from_one", p.dist_from_one},
                   {"verify_residual", p.verify_residual},
                   {"beta_defect", p.beta_defect}});
  }
  json j = {{"status", to_string(br.status)}, {"points", pts}, {"message", br.message}};
  j["stop_eps"] = br.stop_eps.size() > 0 ? vec_json(br.stop_eps) : json(nullptr);
  return j;
}

std::vector<ParamVector> path_of(const AnalysisConfig& an) {
  return linear_path(an.path->from, an.path->to, an.path->steps);
}

/// Angles spread over the torus by an additive recurrence.
std::vector<Vector> basepoint_angles(int k, int count) {
  const double gens[] = {0.6180339887498949, 0.4142135623730951, 0.7320508075688772,
                         0.2360679774997897, 0.6457513110645906, 0.3166247903554};
  std::vector<Vector> out;
  for (int j = 0; j < count; ++j) {
    Vector phi(k);
    for (int i = 0; i < k; ++i) {
      const double f = j * gens[i % 6];
      phi[i] = 2.0 * std::numbers::pi * (f - std::floor(f));
    }
    out.push_back(phi);
  }
  return out;
}

struct Context {
  const RunConfig& cfg;
  const BuiltSystem& sys;
  HomotopyClass alpha;
  FlowTolerance flow;
  int threads;
  bool csv;
  fs::path dir;
  const Logger& log;
};

json analysis_monodromy(const Context& c) {
  const auto& an = c.cfg.analysis;
  const ParamVector eps = an.eps.value_or(c.sys.seed.eps0());
  json out;
  out["eps"] = vec_json(eps);
  PhasePoint m = c.sys.seed.base_point();
  if ((eps - c.sys.seed.eps0()).norm() > 0.0) {
    // Off the seed parameter the torus moves: locate it on the seed section first.
    const SectionFrame f0 = build_section(c.sys.family, c.sys.seed, m, c.sys.seed.eps0());
    NewtonOptions no;
    no.tol = an.newton_tol;
    no.max_iters = an.max_iters;
    no.flow = c.flow;
    const FixedPoint fp =
        newton_fixed_point(PoincareNekhoroshevMap(c.sys.family, c.alpha, f0, eps, c.flow), Vector::Zero(f0.r()), no);
    m = f0.point(fp.u);
    out["fixed_point"] = {{"u", vec_json(fp.u)}, {"newton_iters", fp.iterations}, {"residual", fp.residual}};
    c.log("fixed point located in " + std::to_string(fp.iterations) + " Newton iterations");
  }
  const SectionFrame frame = build_section(c.sys.family, c.sys.seed, m, eps);
  const MonodromyReport rep = monodromy_report(c.sys.family, c.sys.seed, c.alpha, frame, c.flow);
  out["base_point"] = vec_json(m);
  out["total_spectrum"] = cvec_json(rep.full_spectrum);
  out["transversal_spectrum"] = cvec_json(rep.transversal_spectrum);
  out["transversal_matrix"] = mat_json(rep.transversal);
  out["trivial_unit_count"] = rep.trivial_unit_count;
  out["closure_defect"] = rep.closure_defect;
  out["splitting_distance"] = rep.splitting_distance;
  out["hyperbolicity"] = hyperbolicity_json(hyperbolicity_report(rep.transversal, an.delta_min));
  if (an.basepoint_samples > 0) {
    const auto angles = basepoint_angles(c.sys.seed.k(), an.basepoint_samples);
    const BasepointReport bp =
        basepoint_spectrum_check(c.sys.family, c.sys.seed, c.alpha, angles, eps, 1e-6, c.flow);
    json spectra = json::array();
    for (const auto& s : bp.spectra) spectra.push_back(cvec_json(s));
    out["basepoint_check"] = {{"samples", an.basepoint_samples},
                              {"max_spectral_distance", bp.max_spectral_distance},
                              {"pass", bp.pass},
                              {"spectra", spectra}};
  }
  return out;
}

json analysis_floquet(const Context& c) {
  const auto& an = c.cfg.analysis;
  const ParamVector eps = an.eps.value_or(c.sys.seed.eps0());
  const LinearizedCoefficients lin =
      extract_linearization(c.sys.family, c.sys.seed, c.alpha, eps, an.floquet_samples, c.flow);
  c.log("linearization sampled at " + std::to_string(an.floquet_samples) + " times");
  const FundamentalSolution fsol = fundamental_matrix(lin.A(), lin.T, an.flow_tol);
  const FloquetDecomposition dec = floquet_decompose(fsol, an.flow_tol);
  json out;
  out["eps"] = vec_json(eps);
  out["period"] = lin.T;
  out["monodromy_matrix"] = mat_json(dec.Q);
  out["multipliers"] = cvec_json(dec.multipliers);
  out["exponents"] = cvec_json(dec.exponents);
  out["B"] = cmat_json(dec.B);
  out["real_form"] = dec.real_form;
  out["log_residual"] = dec.log_residual;
  out["periodicity_defect"] = dec.periodicity_defect;
  out["reconstruction_residual"] = dec.reconstruction_residual;

  const SectionFrame frame = build_section(c.sys.family, c.sys.seed, c.sys.seed.base_point(), eps);
  const MonodromyReport mono = monodromy_report(c.sys.family, c.sys.seed, c.alpha, frame, c.flow);
  out["monodromy_spectrum"] = cvec_json(mono.transversal_spectrum);
  out["multiplier_distance"] = spectral_distance(dec.multipliers, mono.transversal_spectrum);

  const BlockSpectrumReport bs = block_spectrum_check(lin.Ahat(0.0), lin.Bhat(0.0));
  out["block_spectrum"] = {{"spectrum", cvec_json(bs.block_spectrum)},
                           {"expected", cvec_json(bs.expected)},
                           {"distance", bs.distance},
                           {"pass", bs.pass}};

  json forced = json::array();
  for (int j = 0; j < c.sys.family.p(); ++j) {
    try {
      const ForcedResponse fr = forced_response(lin.A(), lin.b(j), lin.T, an.flow_tol);
      forced.push_back({{"param", j}, {"resonant", false}, {"u0", vec_json(fr.u0)},
                        {"periodicity_residual", fr.periodicity_residual}});
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Resonance) throw;
      forced.push_back({{"param", j}, {"resonant", true}, {"message", e.what()}});
    }
  }
  out["forced_response"] = forced;
  return out;
}

json analysis_continue(const Context& c, int& code, json& error) {
  const auto path = path_of(c.cfg.analysis);
  const ContinuationBranch br =
      continue_branch(c.sys.family, c.sys.seed, c.alpha, path, continuation_options(c.cfg.analysis, c.threads));
  c.log("branch " + to_string(br.status) + " with " + std::to_string(br.points.size()) + " points");
  if (c.csv && !br.points.empty()) emit_branch_table(br, c.dir / "branch.csv");
  if (br.status == BranchStatus::Diverged) {
    code = 3;
    error = {{"kind", "Diverged"}, {"message", br.message}};
  }
  return {{"branch", branch_json(br)}};
}

json probe_json(const ProbeReport& r) {
  json fps = json::array(), cycles = json::array();
  for (const auto& f : r.fixed_points)
    fps.push_back({{"u", vec_json(f.u)}, {"spectrum", cvec_json(f.spectrum)}, {"residual", f.residual}});
  for (const auto& f : r.cycles)
    cycles.push_back({{"u", vec_json(f.u)},
                      {"image", vec_json(f.image)},
                      {"spectrum", cvec_json(f.spectrum)},
                      {"residual", f.residual}});
  json j = {{"kind", to_string(r.kind)}, {"u0", vec_json(r.u0)}, {"fixed_points", fps},
            {"cycles", cycles},          {"found", r.found},       {"notes", r.notes}};
  j["circle"] = r.has_circle ? json{{"mean_radius", r.circle.mean_radius},
                                    {"fit_residual", r.circle.fit_residual},
                                    {"samples", r.circle.samples}}
                             : json(nullptr);
  return j;
}

json analysis_bifurcate(const Context& c) {
  const auto& an = c.cfg.analysis;
  BifurcationOptions bo;
  bo.continuation = continuation_options(an, c.threads);
  bo.eps_tol = an.eps_tol;
  bo.probe_offsets = an.probe_offsets;
  const BifurcationAnalysis res = analyze_bifurcations(c.sys.family, c.sys.seed, c.alpha, path_of(an), bo);
  c.log(std::to_string(res.events.size()) + " crossing(s) found");
  if (c.csv && !res.branch.points.empty()) emit_branch_table(res.branch, c.dir / "branch.csv");
  json events = json::array();
  for (std::size_t e = 0; e < res.events.size(); ++e) {
    const auto& ev = res.events[e];
    json probes = json::array();
    for (const auto& p : res.probes[e]) probes.push_back({{"eps", vec_json(p.eps)}, {"report", probe_json(p.report)}});
    json j = {{"eps_lo", vec_json(ev.eps_lo)},
              {"eps_hi", vec_json(ev.eps_hi)},
              {"eps_critical", vec_json(ev.eps_critical)},
              {"u_critical", vec_json(ev.u_critical)},
              {"spectrum", cvec_json(ev.spectrum)},
              {"critical_multipliers", cvec_json(ev.critical_multipliers)},
              {"kind", to_string(ev.kind)},
              {"transversality", ev.transversality},
              {"resonance_warning", ev.resonance_warning},
              {"scenario", ev.scenario},
              {"probes", probes}};
    j["split_margin"] = std::isfinite(ev.split_margin) ? json(ev.split_margin) : json(nullptr);
    events.push_back(j);
  }
  json b = branch_json(res.branch);
  b["ambiguous_matching_at"] = res.paths.ambiguous_at;
  return {{"branch", b}, {"events", events}};
}

json analysis_torus(const Context& c) {
  const auto& an = c.cfg.analysis;
  const ParamVector eps = an.eps.value_or(c.sys.seed.eps0());
  const SectionFrame frame =
      build_section(c.sys.family, c.sys.seed, c.sys.seed.base_point(), c.sys.seed.eps0());
  NewtonOptions no;
  no.tol = an.newton_tol;
  no.max_iters = an.max_iters;
  no.flow = c.flow;
  const FixedPoint fp = newton_fixed_point(PoincareNekhoroshevMap(c.sys.family, c.alpha, frame, eps, c.flow),
                                           Vector::Zero(frame.r()), no);
  const TorusSamples tor = reconstruct_torus(c.sys.family, c.sys.seed, eps, frame, fp.u, an.grid, an.torus_tol,
                                             FlowTolerance{std::min(an.flow_tol, 1e-12)});
  c.log("torus reconstructed on " + std::to_string(tor.points.size()) + " samples");
  if (c.csv) {
    std::ofstream out(c.dir / "torus.csv");
    if (!out) throw Error(ErrorKind::Io, "cannot write " + (c.dir / "torus.csv").string());
    const int n = c.sys.family.n();
    for (int i = 0; i < n; ++i) out << (i ? "," : "") << "x_" << i + 1;
    out << "\n";
    for (const auto& x : tor.points) {
      for (int i = 0; i < n; ++i) out << (i ? "," : "") << fmt17(x[i]);
      out << "\n";
    }
    if (!out) throw Error(ErrorKind::Io, "write failed for torus.csv");
  }
  return {{"eps", vec_json(eps)},
          {"u", vec_json(fp.u)},
          {"newton_iters", fp.iterations},
          {"residual", fp.residual},
          {"spectrum", cvec_json(fp.spectrum)},
          {"hyperbolicity", hyperbolicity_json(hyperbolicity_report(fp.L, an.delta_min))},
          {"grid", tor.grid},
          {"samples", tor.points.size()},
          {"closure_defect", tor.closure_defect}};
}

}  // namespace

BuiltSystem build_system(const RunConfig& cfg) {
  const SystemConfig& s = cfg.system;
  if (s.name == "straightened") {
    auto sys = make_straightened(s.straightened);
    return {std::move(sys.family), std::move(sys.seed)};
  }
  if (s.name == "hopf") {
    auto sys = make_hopf(s.omega, s.eps0);
    return {std::move(sys.family), std::move(sys.seed)};
  }
  if (s.name == "oscillator_pair") {
    const HamiltonianPair pair = uncoupled_oscillators(s.n_dof);
    return {hamiltonian_family(pair), oscillator_torus(pair, cfg.torus.energies)};
  }
  if (s.name == "polynomial") {
    VectorFieldFamily fam = polynomial_family(s.polynomial);
    TorusSeed seed = TorusSeed::from_flow(fam, cfg.torus.base, cfg.torus.eps0, cfg.torus.angle_coords);
    return {std::move(fam), std::move(seed)};
  }
  BifurcationSystem b = s.name == "pitchfork"        ? make_pitchfork_flow(s.eps0)
                        : s.name == "flip"           ? make_flip_flow(s.eps0)
                        : s.name == "neimark_sacker" ? make_neimark_sacker_flow(s.rotation, s.c, s.eps0)
                                                     : make_double_crossing_flow(s.a1, s.a2, s.eps0);
  return {std::move(b.family), std::move(b.seed)};
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation:
    case ErrorKind::ZeroClass: return 2;
    case ErrorKind::NonCommuting: return 4;
    default: return 3;
  }
}

void emit_branch_table(const ContinuationBranch& branch, const fs::path& path) {
  if (branch.points.empty()) throw Error(ErrorKind::Validation, "cannot tabulate an empty branch");
  const auto& first = branch.points.front();
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  std::vector<std::string> head;
  for (Eigen::Index i = 0; i < first.eps.size(); ++i) head.push_back("eps_" + std::to_string(i + 1));
  for (Eigen::Index i = 0; i < first.u.size(); ++i) head.push_back("u_" + std::to_string(i + 1));
  for (Eigen::Index i = 0; i < first.spectrum.size(); ++i) head.push_back("abs_lambda_" + std::to_string(i + 1));
  head.insert(head.end(), {"dist_from_one", "newton_iters", "residual"});
  for (std::size_t i = 0; i < head.size(); ++i) out << (i ? "," : "") << head[i];
  out << "\n";
  for (const auto& p : branch.points) {
    std::vector<std::string> row;
    for (Eigen::Index i = 0; i < p.eps.size(); ++i) row.push_back(fmt17(p.eps[i]));
    for (Eigen::Index i = 0; i < p.u.size(); ++i) row.push_back(fmt17(p.u[i]));
    for (Eigen::Index i = 0; i < p.spectrum.size(); ++i) row.push_back(fmt17(std::abs(p.spectrum[i])));
    row.push_back(fmt17(p.dist_from_one));
    row.push_back(std::to_string(p.newton_iters));
    row.push_back(fmt17(p.residual));
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

json strip_timing(json report) {
  report.erase("timing");
  return report;
}

RunOutcome run(const RunConfig& cfg, const RunOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const Logger log(opts.verbose);
  const AnalysisConfig& an = cfg.analysis;
  const FlowTolerance flow{an.flow_tol};

  json rep;
  rep["tool"] = {{"name", "pnk"}, {"version", kVersion}};
  rep["config"] = to_json(cfg);
  rep["integrator"] = {{"method", "Dormand-Prince 5(4), PI step control"},
                       {"rtol", flow.tol},
                       {"atol", flow.tol * flow.atol_ratio},
                       {"tangent_atol", flow.tol * flow.tangent_atol_ratio},
                       {"max_steps", flow.max_steps}};
  json results = json::object();
  json error = nullptr;
  int code = 0;

  const fs::path dir = opts.out_dir ? *opts.out_dir : fs::path(cfg.output.dir);
  const auto has_format = [&](const char* f) {
    return std::find(cfg.output.formats.begin(), cfg.output.formats.end(), f) != cfg.output.formats.end();
  };
  try {
    if (!opts.dry) {
      std::error_code ec;
      fs::create_directories(dir, ec);
      if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
    }
    const int threads = thread_count(opts);
    log("building system '" + cfg.system.name + "'");
    if (cfg.system.name == "polynomial") {
      // Sweeping the seed torus needs commuting flows, so check near the base point first.
      const VectorFieldFamily fam = polynomial_family(cfg.system.polynomial);
      std::mt19937 gen(20240917u);
      std::vector<std::pair<PhasePoint, ParamVector>> near;
      for (int s = 0; s < 16; ++s) {
        Vector off(fam.n());
        for (Eigen::Index i = 0; i < off.size(); ++i) off[i] = static_cast<double>(gen()) / 4294967296.0 - 0.5;
        near.emplace_back(cfg.torus.base + (s == 0 ? 0.0 : 0.1) * off, cfg.torus.eps0);
      }
      const CommutationReport pre = verify_commuting_family(fam, near, an.verify_tol);
      if (!pre.pass) {
        results["verification"] = {{"commutation", {{"max_residual", pre.max_residual},
                                                    {"worst_pair", {pre.worst_pair.first, pre.worst_pair.second}},
                                                    {"pass", false}}}};
        throw Error(ErrorKind::NonCommuting, "[X_" + std::to_string(pre.worst_pair.first + 1) + ", X_" +
                                                 std::to_string(pre.worst_pair.second + 1) + "] = " +
                                                 fmt17(pre.max_residual) + " exceeds verify_tol near the base point");
      }
    }
    const BuiltSystem sys = build_system(cfg);

    std::vector<ParamVector> eps_list{an.eps.value_or(sys.seed.eps0())};
    if (an.path) eps_list = {an.path->from, an.path->to};
    const CommutationReport comm =
        verify_commuting_family(sys.family, verification_samples(sys, eps_list, an.verify_grid), an.verify_tol);
    const InvarianceReport inv = verify_torus_invariance(sys.family, sys.seed, an.verify_grid, an.verify_tol);
    results["verification"] = {
        {"commutation", {{"max_residual", comm.max_residual},
                         {"worst_pair", {comm.worst_pair.first, comm.worst_pair.second}},
                         {"pass", comm.pass}}},
        {"torus_invariance", {{"max_normal_residual", inv.max_normal_residual}, {"pass", inv.pass}}}};
    log("commutation residual " + fmt17(comm.max_residual));
    if (!comm.pass)
      throw Error(ErrorKind::NonCommuting, "[X_" + std::to_string(comm.worst_pair.first + 1) + ", X_" +
                                               std::to_string(comm.worst_pair.second + 1) + "] = " +
                                               fmt17(comm.max_residual) + " exceeds verify_tol");
    if (!inv.pass)
      throw Error(ErrorKind::OpenTorus, "seed torus is not invariant: normal residual " +
                                            fmt17(inv.max_normal_residual));

    if (an.type != "verify") {
      const Context ctx{cfg, sys, HomotopyClass(an.alpha), flow, threads, has_format("csv") && !opts.dry, dir, log};
      log("running analysis '" + an.type + "'");
      if (an.type == "monodromy") results["monodromy"] = analysis_monodromy(ctx);
      else if (an.type == "floquet") results["floquet"] = analysis_floquet(ctx);
      else if (an.type == "continue") results["continue"] = analysis_continue(ctx, code, error);
      else if (an.type == "bifurcate") results["bifurcate"] = analysis_bifurcate(ctx);
      else results["torus"] = analysis_torus(ctx);
    }
  } catch (const Error& e) {
    code = exit_code(e.kind());
    error = {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}};
  }

  rep["results"] = results;
  rep["status"] = code == 0 ? "ok" : "failed";
  rep["exit_code"] = code;
  rep["error"] = error;
  rep["timing"] = {{"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};

  if (!opts.dry && has_format("json")) {
    std::ofstream out(dir / "report.json");
    out << rep.dump(2) << "\n";
    if (!out) {
      std::cerr << "pnk: cannot write " << (dir / "report.json").string() << "\n";
      if (code == 0) code = 3;
    }
  }
  return {rep, code};
}

}  // namespace pnk::cli

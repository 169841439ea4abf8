#include "pnk/cli.hpp"

#include <fstream>
#include <set>

namespace pnk::cli {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::Validation, where + ": " + what);
}

/// Typed access to one JSON object that remembers which keys were read.
class Obj {
public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) invalid(path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) invalid(where(key), "missing");
    return j_.at(key);
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double num(const std::string& key, std::optional<double> def = std::nullopt) {
    if (!has(key)) {
      if (def) return *def;
      invalid(where(key), "missing");
    }
    const json& v = at(key);
    if (!v.is_number()) invalid(where(key), "expected a number");
    return v.get<double>();
  }

  int integer(const std::string& key, std::optional<int> def = std::nullopt) {
    if (!has(key)) {
      if (def) return *def;
      invalid(where(key), "missing");
    }
    const json& v = at(key);
    if (!v.is_number_integer()) invalid(where(key), "expected an integer");
    return v.get<int>();
  }

  bool flag(const std::string& key, bool def) {
    if (!has(key)) return def;
    const json& v = at(key);
    if (!v.is_boolean()) invalid(where(key), "expected true or false");
    return v.get<bool>();
  }

  std::string str(const std::string& key, std::optional<std::string> def = std::nullopt) {
    if (!has(key)) {
      if (def) return *def;
      invalid(where(key), "missing");
    }
    const json& v = at(key);
    if (!v.is_string()) invalid(where(key), "expected a string");
    return v.get<std::string>();
  }

  Vector vec(const std::string& key) { return to_vec(at(key), where(key)); }

  Eigen::VectorXi ivec(const std::string& key) { return to_ivec(at(key), where(key)); }

  Matrix mat(const std::string& key) { return to_mat(at(key), where(key)); }

  Obj sub(const std::string& key) { return Obj(at(key), where(key)); }

  /// Rejects keys that were never read.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) invalid(where(it.key()), "unknown key");
  }

  static Vector to_vec(const json& v, const std::string& where) {
    if (!v.is_array()) invalid(where, "expected an array of numbers");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) invalid(where, "expected an array of numbers");
      out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    return out;
  }

  static Eigen::VectorXi to_ivec(const json& v, const std::string& where) {
    if (!v.is_array()) invalid(where, "expected an array of integers");
    Eigen::VectorXi out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer()) invalid(where, "expected an array of integers");
      out[static_cast<Eigen::Index>(i)] = v[i].get<int>();
    }
    return out;
  }

  static Matrix to_mat(const json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) invalid(where, "expected a nonempty array of rows");
    const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
    Matrix m(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Vector row = to_vec(v[i], where);
      if (static_cast<std::size_t>(row.size()) != cols) invalid(where, "rows have different lengths");
      m.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    return m;
  }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

const std::set<std::string> kCatalog{"straightened", "hopf",     "oscillator_pair", "pitchfork",
                                     "flip",         "neimark_sacker", "double_crossing", "polynomial"};
const std::set<std::string> kAnalyses{"verify", "monodromy", "floquet", "continue", "bifurcate", "torus"};

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json ivec_json(const Eigen::VectorXi& v) { return std::vector<int>(v.data(), v.data() + v.size()); }

json mat_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
  return rows;
}

PolynomialSpec parse_polynomial(Obj& o) {
  PolynomialSpec s;
  s.n = o.integer("n");
  s.k = o.integer("k");
  s.p = o.integer("p", 0);
  s.max_degree = o.integer("max_degree", 4);
  if (s.n < 1 || s.k < 1 || s.k > s.n || s.p < 0) invalid(o.where("n"), "need 1 <= k <= n and p >= 0");
  if (s.max_degree < 0) invalid(o.where("max_degree"), "must be nonnegative");
  const json& fields = o.at("fields");
  const std::string fw = o.where("fields");
  if (!fields.is_array() || static_cast<int>(fields.size()) != s.k) invalid(fw, "expected k fields");
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const std::string wi = fw + "[" + std::to_string(i) + "]";
    if (!fields[i].is_array() || static_cast<int>(fields[i].size()) != s.n)
      invalid(wi, "expected n components");
    std::vector<std::vector<PolyTerm>> comps;
    for (std::size_t c = 0; c < fields[i].size(); ++c) {
      const std::string wc = wi + "[" + std::to_string(c) + "]";
      if (!fields[i][c].is_array()) invalid(wc, "expected a list of terms");
      std::vector<PolyTerm> terms;
      for (std::size_t t = 0; t < fields[i][c].size(); ++t) {
        Obj term(fields[i][c][t], wc + "[" + std::to_string(t) + "]");
        PolyTerm pt;
        pt.coef = term.num("coef");
        pt.x = term.has("x") ? term.ivec("x") : Eigen::VectorXi::Zero(s.n);
        pt.eps = term.has("eps") ? term.ivec("eps") : Eigen::VectorXi::Zero(s.p);
        if (pt.x.size() != s.n) invalid(term.where("x"), "expected n exponents");
        if (pt.eps.size() != s.p) invalid(term.where("eps"), "expected p exponents");
        if ((pt.x.array() < 0).any() || (pt.eps.array() < 0).any())
          invalid(term.where("x"), "exponents must be nonnegative");
        if (pt.x.sum() + pt.eps.sum() > s.max_degree) invalid(term.where("x"), "degree exceeds max_degree");
        term.finish();
        terms.push_back(pt);
      }
      comps.push_back(std::move(terms));
    }
    s.fields.push_back(std::move(comps));
  }
  return s;
}

void parse_system(Obj sys, RunConfig& cfg) {
  SystemConfig& s = cfg.system;
  s.name = sys.str("name");
  if (!kCatalog.count(s.name)) invalid(sys.where("name"), "unknown system '" + s.name + "'");
  static const json kEmpty = json::object();
  Obj p = sys.has("params") ? sys.sub("params") : Obj(kEmpty, sys.where("params"));
  if (s.name == "straightened") {
    auto& st = s.straightened;
    st.k = p.integer("k");
    st.r = p.integer("r");
    st.p = p.integer("p", 1);
    if (st.k < 1 || st.r < 1 || st.p < 1) invalid(p.where("k"), "k, r and p must be positive");
    const json& A = p.at("A");
    if (!A.is_array() || static_cast<int>(A.size()) != st.k) invalid(p.where("A"), "expected k matrices");
    st.A.clear();
    for (std::size_t i = 0; i < A.size(); ++i) {
      Matrix a = Obj::to_mat(A[i], p.where("A"));
      if (a.rows() != st.r || a.cols() != st.r) invalid(p.where("A"), "each A_i must be r x r");
      st.A.push_back(a);
    }
    st.C = p.mat("C");
    if (st.C.rows() != st.r || st.C.cols() != st.p) invalid(p.where("C"), "C must be r x p");
    st.cubic = p.flag("cubic", false);
    st.kappa = p.has("kappa") ? p.vec("kappa") : Vector::Ones(st.r);
    if (st.kappa.size() != st.r) invalid(p.where("kappa"), "expected r coefficients");
    if ((st.kappa.array() < 0.0).any()) invalid(p.where("kappa"), "coefficients must be nonnegative");
  } else if (s.name == "hopf") {
    s.omega = p.num("omega", 1.0);
    s.eps0 = p.num("eps0", 0.1);
    if (s.omega == 0.0) invalid(p.where("omega"), "must be nonzero");
    if (!(s.eps0 > 0.0)) invalid(p.where("eps0"), "must be positive");
  } else if (s.name == "oscillator_pair") {
    s.n_dof = p.integer("n_dof", 2);
    if (s.n_dof < 1) invalid(p.where("n_dof"), "must be positive");
  } else if (s.name == "pitchfork" || s.name == "flip") {
    s.eps0 = p.num("eps0", -0.05);
  } else if (s.name == "neimark_sacker") {
    s.rotation = p.num("rotation", 0.18);
    s.c = p.num("c", 1.0);
    s.eps0 = p.num("eps0", -0.05);
    if (!(s.c > 0.0)) invalid(p.where("c"), "must be positive");
  } else if (s.name == "double_crossing") {
    s.a1 = p.num("a1", -0.03);
    s.a2 = p.num("a2", 0.02);
    s.eps0 = p.num("eps0", -0.06);
    if (!(s.a1 < s.a2)) invalid(p.where("a1"), "need a1 < a2");
  } else {
    s.polynomial = parse_polynomial(p);
  }
  p.finish();
  sys.finish();
}

std::pair<int, int> dims(const SystemConfig& s) {
  if (s.name == "straightened") return {s.straightened.k, s.straightened.p};
  if (s.name == "oscillator_pair") return {s.n_dof, s.n_dof};
  if (s.name == "polynomial") return {s.polynomial.k, s.polynomial.p};
  return {1, 1};
}

}  // namespace

RunConfig parse_config(const json& j) {
  RunConfig cfg;
  Obj root(j, "");
  parse_system(root.sub("system"), cfg);
  const auto [k, p] = dims(cfg.system);

  {
    const bool poly = cfg.system.name == "polynomial";
    const bool osc = cfg.system.name == "oscillator_pair";
    if (root.has("torus")) {
      Obj t = root.sub("torus");
      if (poly) {
        const int n = cfg.system.polynomial.n;
        cfg.torus.base = t.vec("base");
        cfg.torus.eps0 = t.has("eps0") ? t.vec("eps0") : Vector::Zero(p);
        if (t.has("angle_coords")) {
          const Eigen::VectorXi a = t.ivec("angle_coords");
          cfg.torus.angle_coords.assign(a.data(), a.data() + a.size());
        }
        if (cfg.torus.base.size() != n) invalid("torus.base", "expected n coordinates");
        if (cfg.torus.eps0.size() != p) invalid("torus.eps0", "expected p parameters");
        for (int c : cfg.torus.angle_coords)
          if (c < 0 || c >= n) invalid("torus.angle_coords", "index out of range");
      } else if (osc) {
        cfg.torus.energies = t.vec("energies");
        if (cfg.torus.energies.size() != k) invalid("torus.energies", "expected one energy per degree of freedom");
        if ((cfg.torus.energies.array() <= 0.0).any()) invalid("torus.energies", "energies must be positive");
      }
      t.finish();
    } else if (poly) {
      invalid("torus", "polynomial systems need a torus block");
    } else if (osc) {
      cfg.torus.energies = Vector::Ones(k);
    }
  }

  {
    Obj a = root.sub("analysis");
    AnalysisConfig& an = cfg.analysis;
    an.type = a.str("type");
    if (!kAnalyses.count(an.type)) invalid("analysis.type", "unknown analysis '" + an.type + "'");
    const bool needs_alpha = an.type != "verify";
    if (a.has("alpha") || needs_alpha) {
      an.alpha = a.ivec("alpha");
      if (an.alpha.size() != k) invalid("analysis.alpha", "expected " + std::to_string(k) + " winding numbers");
      if ((an.alpha.array() == 0).all()) invalid("analysis.alpha", "the zero class has no loop");
    }
    if (a.has("eps")) {
      an.eps = a.vec("eps");
      if (an.eps->size() != p) invalid("analysis.eps", "expected " + std::to_string(p) + " parameters");
    }
    if (a.has("path")) {
      Obj pth = a.sub("path");
      PathConfig pc;
      pc.from = pth.vec("from");
      pc.to = pth.vec("to");
      pc.steps = pth.integer("steps");
      pth.finish();
      if (pc.from.size() != p || pc.to.size() != p) invalid("analysis.path", "endpoints need p parameters");
      if (pc.steps < 1) invalid("analysis.path.steps", "must be positive");
      an.path = pc;
    }
    if ((an.type == "continue" || an.type == "bifurcate") && !an.path) invalid("analysis.path", "missing");
    if (an.type == "bifurcate" && an.path->steps < 2) invalid("analysis.path.steps", "need at least 2");
    an.flow_tol = a.num("flow_tol", an.flow_tol);
    an.newton_tol = a.num("newton_tol", an.newton_tol);
    an.max_iters = a.integer("max_iters", an.max_iters);
    an.delta_min = a.num("delta_min", an.delta_min);
    an.verify_tol = a.num("verify_tol", an.verify_tol);
    an.verify_grid = a.integer("verify_grid", an.verify_grid);
    an.grid = a.integer("grid", an.grid);
    an.torus_tol = a.num("torus_tol", an.torus_tol);
    an.floquet_samples = a.integer("floquet_samples", an.floquet_samples);
    an.basepoint_samples = a.integer("basepoint_samples", an.basepoint_samples);
    an.eps_tol = a.num("eps_tol", an.eps_tol);
    if (a.has("probe_offsets")) {
      const Vector v = a.vec("probe_offsets");
      an.probe_offsets.assign(v.data(), v.data() + v.size());
    }
    an.parallel = a.flag("parallel", an.parallel);
    a.finish();
    for (double t : {an.flow_tol, an.newton_tol, an.verify_tol, an.torus_tol, an.eps_tol})
      if (!(t > 0.0)) invalid("analysis", "tolerances must be positive");
    if (an.delta_min < 0.0) invalid("analysis.delta_min", "must be nonnegative");
    if (an.max_iters < 0) invalid("analysis.max_iters", "must be nonnegative");
    if (an.verify_grid < 1 || an.grid < 1) invalid("analysis.grid", "grid sizes must be positive");
    if (an.floquet_samples < 4) invalid("analysis.floquet_samples", "need at least 4");
    if (an.basepoint_samples < 0) invalid("analysis.basepoint_samples", "must be nonnegative");
  }

  if (root.has("output")) {
    Obj o = root.sub("output");
    cfg.output.dir = o.str("dir", cfg.output.dir);
    if (o.has("formats")) {
      const json& f = o.at("formats");
      if (!f.is_array()) invalid("output.formats", "expected a list");
      cfg.output.formats.clear();
      for (const auto& e : f) {
        if (!e.is_string() || (e != "json" && e != "csv")) invalid("output.formats", "allowed: json, csv");
        cfg.output.formats.push_back(e.get<std::string>());
      }
    }
    o.finish();
  }
  root.finish();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Validation, std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

json to_json(const RunConfig& cfg) {
  const SystemConfig& s = cfg.system;
  json params = json::object();
  if (s.name == "straightened") {
    const auto& st = s.straightened;
    json A = json::array();
    for (const auto& a : st.A) A.push_back(mat_json(a));
    params = {{"k", st.k}, {"r", st.r},       {"p", st.p},        {"A", A},
              {"C", mat_json(st.C)}, {"cubic", st.cubic}, {"kappa", vec_json(st.kappa)}};
  } else if (s.name == "hopf") {
    params = {{"omega", s.omega}, {"eps0", s.eps0}};
  } else if (s.name == "oscillator_pair") {
    params = {{"n_dof", s.n_dof}};
  } else if (s.name == "pitchfork" || s.name == "flip") {
    params = {{"eps0", s.eps0}};
  } else if (s.name == "neimark_sacker") {
    params = {{"rotation", s.rotation}, {"c", s.c}, {"eps0", s.eps0}};
  } else if (s.name == "double_crossing") {
    params = {{"a1", s.a1}, {"a2", s.a2}, {"eps0", s.eps0}};
  } else {
    const auto& ps = s.polynomial;
    json fields = json::array();
    for (const auto& f : ps.fields) {
      json comps = json::array();
      for (const auto& c : f) {
        json terms = json::array();
        for (const auto& t : c) terms.push_back({{"coef", t.coef}, {"x", ivec_json(t.x)}, {"eps", ivec_json(t.eps)}});
        comps.push_back(terms);
      }
      fields.push_back(comps);
    }
    params = {{"n", ps.n}, {"k", ps.k}, {"p", ps.p}, {"max_degree", ps.max_degree}, {"fields", fields}};
  }

  json out;
  out["system"] = {{"name", s.name}, {"params", params}};
  if (s.name == "polynomial") {
    out["torus"] = {{"base", vec_json(cfg.torus.base)},
                    {"eps0", vec_json(cfg.torus.eps0)},
                    {"angle_coords", cfg.torus.angle_coords}};
  } else if (s.name == "oscillator_pair") {
    out["torus"] = {{"energies", vec_json(cfg.torus.energies)}};
  }

  const AnalysisConfig& an = cfg.analysis;
  json a = {{"type", an.type},
            {"flow_tol", an.flow_tol},
            {"newton_tol", an.newton_tol},
            {"max_iters", an.max_iters},
            {"delta_min", an.delta_min},
            {"verify_tol", an.verify_tol},
            {"verify_grid", an.verify_grid},
            {"grid", an.grid},
            {"torus_tol", an.torus_tol},
            {"floquet_samples", an.floquet_samples},
            {"basepoint_samples", an.basepoint_samples},
            {"eps_tol", an.eps_tol},
            {"probe_offsets", an.probe_offsets},
            {"parallel", an.parallel}};
  if (an.alpha.size() > 0) a["alpha"] = ivec_json(an.alpha);
  if (an.eps) a["eps"] = vec_json(*an.eps);
  if (an.path)
    a["path"] = {{"from", vec_json(an.path->from)}, {"to", vec_json(an.path->to)}, {"steps", an.path->steps}};
  out["analysis"] = a;
  out["output"] = {{"dir", cfg.output.dir}, {"formats", cfg.output.formats}};
  return out;
}

}  // namespace pnk::cli

#include "pnk/linalg.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>

namespace pnk {

namespace {

CVector sorted(CVector v) {
  std::sort(v.data(), v.data() + v.size(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return v;
}

}  // namespace

CVector eigenvalues(const Matrix& a) {
  if (a.size() == 0) return CVector(0);
  Eigen::EigenSolver<Matrix> es(a, false);
  return sorted(es.eigenvalues());
}

CVector eigenvalues(const CMatrix& a) {
  if (a.size() == 0) return CVector(0);
  Eigen::ComplexEigenSolver<CMatrix> es(a, false);
  return sorted(es.eigenvalues());
}

SpectrumMatch match_spectra(const CVector& a, const CVector& b, double tie_tol) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::Validation, "spectra of different sizes cannot be matched");
  }
  const int n = static_cast<int>(a.size());
  SpectrumMatch out;
  out.perm.resize(n);
  std::iota(out.perm.begin(), out.perm.end(), 0);
  if (n == 0) return out;

  auto cost_of = [&](const std::vector<int>& p) {
    double worst = 0.0;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = std::abs(a[i] - b[p[i]]);
      worst = std::max(worst, d);
      sum += d;
    }
    return std::pair{worst, sum};
  };

  if (n <= 8) {
    std::vector<int> p(out.perm);
    auto best = std::pair{std::numeric_limits<double>::infinity(),
                          std::numeric_limits<double>::infinity()};
    do {
      const auto c = cost_of(p);
      if (c < best) {
        best = c;
        out.perm = p;
      }
    } while (std::next_permutation(p.begin(), p.end()));
    out.max_distance = best.first;
    if (tie_tol > 0.0) {
      // Repeated values tie trivially; only a near-optimal assignment pairing
      // some entry with a genuinely different value counts as ambiguous.
      std::iota(p.begin(), p.end(), 0);
      do {
        const auto c = cost_of(p);
        if (c.second - best.second > tie_tol) continue;
        for (int i = 0; i < n && !out.ambiguous; ++i) {
          out.ambiguous = std::abs(b[p[i]] - b[out.perm[i]]) > tie_tol;
        }
      } while (!out.ambiguous && std::next_permutation(p.begin(), p.end()));
    }
    return out;
  }

  // Greedy on the global list of pair distances.
  std::vector<std::tuple<double, int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) pairs.emplace_back(std::abs(a[i] - b[j]), i, j);
  std::sort(pairs.begin(), pairs.end());
  std::vector<bool> used_a(n, false), used_b(n, false);
  for (const auto& [d, i, j] : pairs) {
    if (used_a[i] || used_b[j]) continue;
    used_a[i] = used_b[j] = true;
    out.perm[i] = j;
    out.max_distance = std::max(out.max_distance, d);
  }
  return out;
}

double spectral_distance(const CVector& a, const CVector& b) {
  return match_spectra(a, b).max_distance;
}

CVector spectrum_difference(const CVector& full, const CVector& subset) {
  const int n = static_cast<int>(full.size());
  const int m = static_cast<int>(subset.size());
  if (m > n) throw Error(ErrorKind::Validation, "subset spectrum larger than full spectrum");
  std::vector<bool> taken(n, false);
  // Greedy nearest removal; adequate because the subset is matched one value at a time.
  for (int i = 0; i < m; ++i) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (taken[j]) continue;
      const double d = std::abs(full[j] - subset[i]);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    taken[best] = true;
  }
  CVector rest(n - m);
  for (int j = 0, c = 0; j < n; ++j)
    if (!taken[j]) rest[c++] = full[j];
  return rest;
}

Matrix orthonormal_complement(const Matrix& g, double rank_tol) {
  const Eigen::Index n = g.rows();
  const Eigen::Index k = g.cols();
  const Matrix gram = g.transpose() * g;
  Eigen::LDLT<Matrix> ldlt(gram);
  const Matrix proj = Matrix::Identity(n, n) - g * ldlt.solve(g.transpose());

  std::vector<Vector> chosen;
  std::vector<Eigen::Index> chosen_axis;
  std::vector<Vector> candidates;
  for (Eigen::Index j = 0; j < n; ++j) candidates.push_back(proj.col(j));

  for (Eigen::Index pick = 0; pick < n - k; ++pick) {
    Eigen::Index best = -1;
    double best_norm = rank_tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::find(chosen_axis.begin(), chosen_axis.end(), j) != chosen_axis.end()) continue;
      Vector v = candidates[j];
      for (const auto& q : chosen) v -= q.dot(v) * q;
      const double nv = v.norm();
      if (nv > best_norm * (1.0 + 1e-12)) {
        best_norm = nv;
        best = j;
      }
    }
    if (best < 0) throw Error(ErrorKind::DegenerateTangent, "complement has deficient rank");
    Vector v = candidates[best];
    for (const auto& q : chosen) v -= q.dot(v) * q;
    chosen.push_back(v / v.norm());
    chosen_axis.push_back(best);
  }

  // Re-orthonormalize in axis order so coordinate complements come out as axes.
  std::vector<Eigen::Index> order(chosen_axis);
  std::sort(order.begin(), order.end());
  Matrix s(n, n - k);
  for (std::size_t c = 0; c < order.size(); ++c) {
    Vector v = candidates[order[c]];
    for (std::size_t q = 0; q < c; ++q) v -= s.col(q).dot(v) * s.col(q);
    for (std::size_t q = 0; q < c; ++q) v -= s.col(q).dot(v) * s.col(q);
    s.col(c) = v / v.norm();
  }
  return s;
}

Matrix symmetric_orthonormalize(const Matrix& w) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(w.transpose() * w);
  return w * es.operatorInverseSqrt();
}

CMatrix matrix_log(const Matrix& a) {
  const CMatrix ca = a.cast<Complex>();
  return ca.log();
}

Matrix matrix_exp(const Matrix& a) { return a.exp(); }

CMatrix matrix_exp(const CMatrix& a) { return a.exp(); }

double condition_number(const Matrix& a) {
  if (a.size() == 0) return 1.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / smin;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation: return "Validation";
    case ErrorKind::ZeroClass: return "ZeroClass";
    case ErrorKind::DegenerateTangent: return "DegenerateTangent";
    case ErrorKind::StepFailure: return "StepFailure";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::SingularGeometry: return "SingularGeometry";
    case ErrorKind::OpenLoop: return "OpenLoop";
    case ErrorKind::Escape: return "Escape";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
    case ErrorKind::OpenTorus: return "OpenTorus";
    case ErrorKind::SingularMonodromy: return "SingularMonodromy";
    case ErrorKind::Resonance: return "Resonance";
    case ErrorKind::NonCommuting: return "NonCommuting";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace pnk

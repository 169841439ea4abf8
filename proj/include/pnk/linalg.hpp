#pragma once

#include "pnk/types.hpp"

#include <vector>

namespace pnk {

/// Eigenvalues of a real square matrix, sorted by (real, imag) for stable output.
CVector eigenvalues(const Matrix& a);
CVector eigenvalues(const CMatrix& a);

/// Minimal-distance assignment between two equally sized spectra.
/// `perm[i]` is the index in `b` matched to `a[i]`. Exhaustive up to 8 entries,
/// greedy beyond.
struct SpectrumMatch {
  std::vector<int> perm;
  double max_distance = 0.0;
  /// True when a different assignment reaches the same cost within `tie_tol`.
  bool ambiguous = false;
};

SpectrumMatch match_spectra(const CVector& a, const CVector& b, double tie_tol = 0.0);

/// Largest pairwise distance under the optimal matching.
double spectral_distance(const CVector& a, const CVector& b);

/// Removes from `full` the entries matched to `subset` and returns the rest.
CVector spectrum_difference(const CVector& full, const CVector& subset);

/// Orthonormal basis of the orthogonal complement of the column span of `g`.
/// Built by pivoted Gram-Schmidt on the projected coordinate axes, so when the
/// complement is a coordinate subspace the basis is made of those axes.
Matrix orthonormal_complement(const Matrix& g, double rank_tol = 1e-10);

/// W (W^T W)^{-1/2}; smooth in W, used for moving transversal frames.
Matrix symmetric_orthonormalize(const Matrix& w);

/// Principal matrix logarithm. Complex output; real input with eigenvalues on
/// the negative real axis gets the principal complex branch.
CMatrix matrix_log(const Matrix& a);
Matrix matrix_exp(const Matrix& a);
CMatrix matrix_exp(const CMatrix& a);

double condition_number(const Matrix& a);

}  // namespace pnk

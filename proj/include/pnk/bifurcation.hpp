#pragma once

#include "pnk/persistence.hpp"

#include <functional>
#include <string>
#include <vector>

namespace pnk {

/// A map on section coordinates with its derivative. Wraps the PN map or an
/// explicit normal form.
struct SectionMap {
  int dim = 0;
  std::function<std::pair<Vector, Matrix>(const Vector&)> eval;

  Vector apply(const Vector& u) const { return eval(u).first; }
};

SectionMap as_section_map(const PoincareNekhoroshevMap& map);
SectionMap explicit_map(int dim, std::function<Vector(const Vector&)> f,
                        std::function<Matrix(const Vector&)> df);
/// P composed with itself `times` times, derivative by the chain rule.
SectionMap iterate_map(const SectionMap& map, int times);

/// Multipliers along a branch, reordered so that column j of every row
/// follows one continuous path.
struct MultiplierPaths {
  std::vector<ParamVector> eps;
  std::vector<Vector> u;
  std::vector<CVector> values;
  bool ambiguous = false;
  /// Branch indices i where matching i-1 -> i had a tie.
  std::vector<int> ambiguous_at;

  int count() const { return values.empty() ? 0 : static_cast<int>(values.front().size()); }
};

MultiplierPaths track_multipliers(const ContinuationBranch& branch, double tie_tol = 1e-12);

struct CrossingInterval {
  int path = 0;
  int index = 0;  // grid interval [index, index + 1]
  ParamVector eps_lo, eps_hi;
  Vector u_lo, u_hi;
  Complex mu_lo, mu_hi;
};

/// Grid intervals where |mu_j| - 1 changes sign. Values within circle_tol of
/// the circle count as zero.
std::vector<CrossingInterval> grid_crossings(const MultiplierPaths& paths, double circle_tol = 0.0);

/// Bisection on eps, re-solving the fixed point at each midpoint, until the
/// bracket is no wider than eps_tol.
CrossingInterval refine_crossing(const PoincareNekhoroshevMap& prototype, const CrossingInterval& c,
                                 double eps_tol, const NewtonOptions& newton);

/// All crossings along the branch, refined and in eps order.
std::vector<CrossingInterval> detect_crossings(const VectorFieldFamily& family,
                                               const ContinuationBranch& branch,
                                               const MultiplierPaths& paths, double eps_tol = 1e-6,
                                               const NewtonOptions& newton = {},
                                               double circle_tol = 0.0);

enum class EventKind { CaseA, CaseB, CaseC, Degenerate };

std::string to_string(EventKind k);

struct Classification {
  EventKind kind = EventKind::Degenerate;
  std::vector<Complex> critical;
  std::vector<int> critical_index;
  double split_margin = 0.0;
  /// Argument of the critical multiplier (upper one for a pair).
  double angle = 0.0;
  bool resonance_warning = false;
  std::string scenario;
};

/// Labels the spectrum at a crossing: multipliers within crit_tol of the unit
/// circle are critical.
Classification classify_multipliers(const CVector& spectrum, double crit_tol = 1e-4,
                                    double angle_tol = 1e-3);

struct BifurcationEvent {
  ParamVector eps_lo, eps_hi, eps_critical;
  Vector u_critical;
  CVector spectrum;
  std::vector<Complex> critical_multipliers;
  EventKind kind = EventKind::Degenerate;
  double transversality = 0.0;
  double split_margin = 0.0;
  bool resonance_warning = false;
  std::string scenario;
};

struct EventOptions {
  double crit_tol = 1e-4;
  double angle_tol = 1e-3;
  /// Step for the difference quotient of |mu| along the path direction.
  double fd_step = 1e-4;
};

BifurcationEvent classify_event(const PoincareNekhoroshevMap& prototype, const CrossingInterval& c,
                                const NewtonOptions& newton = {}, const EventOptions& opts = {});

struct ProbeOptions {
  double search_radius = 0.5;
  double tol = 1e-10;
  int directions = 8;
  int radii = 4;
  int max_iters = 40;
  /// Orbit sampling for invariant circles.
  int transient = 1500;
  int samples = 256;
  int fourier_modes = 4;
  /// Solutions closer than this to u0 (or to each other) are not new.
  double distinct = 1e-6;
};

struct ProbeFixedPoint {
  Vector u;
  CVector spectrum;
  double residual = 0.0;
};

struct ProbeCycle {
  Vector u;
  Vector image;
  CVector spectrum;
  double residual = 0.0;
};

struct ProbeCircle {
  double mean_radius = 0.0;
  double fit_residual = 0.0;
  int samples = 0;
};

struct ProbeReport {
  EventKind kind = EventKind::Degenerate;
  Vector u0;
  std::vector<ProbeFixedPoint> fixed_points;
  std::vector<ProbeCycle> cycles;
  bool has_circle = false;
  ProbeCircle circle;
  bool found = false;
  std::vector<std::string> notes;
};

/// Searches near the fixed point u0 for the post-critical objects: fixed points
/// and 2-cycles for real crossings, an invariant circle for a complex pair.
/// `plane` spans the critical eigendirections (r x 1 or r x 2).
ProbeReport postcritical_probe(const SectionMap& map, const Vector& u0, EventKind kind,
                               const Matrix& plane, const ProbeOptions& opts = {});

/// Orthonormal basis of the real critical eigenspace of DP at u0.
Matrix critical_plane(const Matrix& jac, const std::vector<Complex>& critical);

struct BifurcationOptions {
  ContinuationOptions continuation;
  double eps_tol = 1e-6;
  double circle_tol = 0.0;
  EventOptions event;
  /// Offsets past each crossing, along the path direction, at which to probe.
  std::vector<double> probe_offsets;
  ProbeOptions probe;
};

struct ProbeAtOffset {
  ParamVector eps;
  ProbeReport report;
};

struct BifurcationAnalysis {
  ContinuationBranch branch;
  MultiplierPaths paths;
  std::vector<BifurcationEvent> events;
  /// probes[e] holds the probes of events[e].
  std::vector<std::vector<ProbeAtOffset>> probes;
};

BifurcationAnalysis analyze_bifurcations(const VectorFieldFamily& family, const TorusSeed& seed,
                                         const HomotopyClass& alpha,
                                         const std::vector<ParamVector>& eps_path,
                                         const BifurcationOptions& opts = {});

}  // namespace pnk

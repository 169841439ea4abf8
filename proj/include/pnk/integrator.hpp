#pragma once

#include "pnk/types.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace pnk {

template <typename Scalar>
struct StepControl {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Scalar rtol = Scalar(1e-10);
  Scalar atol = Scalar(1e-12);
  /// Per-component absolute tolerance; overrides `atol` when non-empty.
  Array atol_per_component;
  long max_steps = 200000;
  Scalar safety = Scalar(0.9);
  Scalar fac_min = Scalar(0.2);
  Scalar fac_max = Scalar(10.0);
  /// PI controller exponents.
  Scalar beta = Scalar(0.04);
};

template <typename Scalar>
struct IntegrationResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> y;
  long steps = 0;
  long rejected = 0;
  /// Largest accepted local error norm, in units of the scaled tolerance
  /// (always <= 1 on success).
  Scalar max_error_norm = Scalar(0);
};

/// Dormand-Prince 5(4) pair with PI step-size control, integrating
/// y' = f(t, y) from t0 to t1 (either direction).
template <typename Scalar>
class DormandPrince45 {
public:
  using State = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Rhs = std::function<State(Scalar, const State&)>;

  explicit DormandPrince45(StepControl<Scalar> control = {}) : ctl_(std::move(control)) {}

  IntegrationResult<Scalar> integrate(const Rhs& f, const State& y0, Scalar t0, Scalar t1) const {
    using std::abs;
    using std::max;
    using std::min;
    using std::pow;
    using std::sqrt;

    IntegrationResult<Scalar> out;
    out.y = y0;
    if (t1 == t0) return out;
    if (!y0.allFinite()) throw Error(ErrorKind::NonFinite, "initial state is not finite");

    const Scalar dir = t1 > t0 ? Scalar(1) : Scalar(-1);
    const Scalar span = abs(t1 - t0);
    const Scalar h_floor = Scalar(64) * std::numeric_limits<Scalar>::epsilon() *
                           max(abs(t0), abs(t1)) + std::numeric_limits<Scalar>::min();
    const auto n = y0.size();

    auto scale = [&](const State& a, const State& b) {
      Eigen::Array<Scalar, Eigen::Dynamic, 1> sc =
          ctl_.rtol * a.array().abs().max(b.array().abs());
      if (ctl_.atol_per_component.size() == n) {
        sc += ctl_.atol_per_component;
      } else {
        sc += ctl_.atol;
      }
      return sc;
    };
    auto rms = [&](const Eigen::Array<Scalar, Eigen::Dynamic, 1>& v) {
      return n == 0 ? Scalar(0) : sqrt(v.square().sum() / Scalar(n));
    };

    Scalar t = t0;
    State y = y0;
    State k1 = f(t, y);
    if (!k1.allFinite()) throw Error(ErrorKind::NonFinite, "vector field is not finite at start");

    // Initial step guess.
    Scalar h;
    {
      const auto sc = scale(y, y);
      const Scalar d0 = rms(y.array() / sc);
      const Scalar d1 = rms(k1.array() / sc);
      Scalar h0 = (d0 < Scalar(1e-5) || d1 < Scalar(1e-5)) ? Scalar(1e-6) : Scalar(0.01) * d0 / d1;
      h0 = min(h0, span);
      const State y1 = y + dir * h0 * k1;
      const State f1 = f(t + dir * h0, y1);
      const Scalar d2 = f1.allFinite() ? rms((f1 - k1).array() / sc) / h0 : Scalar(1e10);
      const Scalar dm = max(d1, d2);
      const Scalar h1 = dm <= Scalar(1e-15) ? max(Scalar(1e-6), h0 * Scalar(1e-3))
                                            : pow(Scalar(0.01) / dm, Scalar(0.2));
      h = min(Scalar(100) * h0, h1);
      h = min(h, span);
    }

    const Scalar expo1 = Scalar(0.2) - ctl_.beta * Scalar(0.75);
    Scalar err_old = Scalar(1e-4);
    bool last_rejected = false;

    State k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ynew(n), yerr(n);

    while (dir * (t1 - t) > Scalar(0)) {
      if (out.steps + out.rejected >= ctl_.max_steps) {
        throw Error(ErrorKind::StepFailure, "maximum number of steps exceeded");
      }
      bool final_step = false;
      if (h >= abs(t1 - t)) {
        h = abs(t1 - t);
        final_step = true;
      }
      const Scalar hs = dir * h;

      k2 = f(t + c2 * hs, y + hs * (a21 * k1));
      k3 = f(t + c3 * hs, y + hs * (a31 * k1 + a32 * k2));
      k4 = f(t + c4 * hs, y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
      k5 = f(t + c5 * hs, y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      k6 = f(t + hs, y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      ynew = y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      k7 = f(t + hs, ynew);
      yerr = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      Scalar err = ynew.allFinite() && k7.allFinite()
                       ? rms(yerr.array() / scale(y, ynew))
                       : std::numeric_limits<Scalar>::infinity();
      if (!(err == err)) err = std::numeric_limits<Scalar>::infinity();

      if (err <= Scalar(1)) {
        t = final_step ? t1 : t + hs;
        y = ynew;
        k1 = k7;
        ++out.steps;
        out.max_error_norm = max(out.max_error_norm, err);
        Scalar fac = err == Scalar(0)
                         ? ctl_.fac_max
                         : ctl_.safety * pow(err, -expo1) * pow(err_old, ctl_.beta);
        fac = min(ctl_.fac_max, max(ctl_.fac_min, fac));
        if (last_rejected) fac = min(fac, Scalar(1));
        err_old = max(err, Scalar(1e-4));
        h *= fac;
        last_rejected = false;
      } else {
        ++out.rejected;
        const Scalar fac = std::isfinite(static_cast<double>(err))
                               ? max(ctl_.fac_min, ctl_.safety * pow(err, -expo1))
                               : Scalar(0.1);
        h *= fac;
        last_rejected = true;
        if (h < h_floor) {
          if (!ynew.allFinite() || !k7.allFinite()) {
            throw Error(ErrorKind::NonFinite, "trajectory blew up");
          }
          throw Error(ErrorKind::StepFailure, "step size fell below the minimum");
        }
      }
    }
    out.y = y;
    return out;
  }

  const StepControl<Scalar>& control() const noexcept { return ctl_; }

private:
  StepControl<Scalar> ctl_;

  static constexpr Scalar c2 = Scalar(1) / 5, c3 = Scalar(3) / 10, c4 = Scalar(4) / 5,
                          c5 = Scalar(8) / 9;
  static constexpr Scalar a21 = Scalar(1) / 5;
  static constexpr Scalar a31 = Scalar(3) / 40, a32 = Scalar(9) / 40;
  static constexpr Scalar a41 = Scalar(44) / 45, a42 = Scalar(-56) / 15, a43 = Scalar(32) / 9;
  static constexpr Scalar a51 = Scalar(19372) / 6561, a52 = Scalar(-25360) / 2187,
                          a53 = Scalar(64448) / 6561, a54 = Scalar(-212) / 729;
  static constexpr Scalar a61 = Scalar(9017) / 3168, a62 = Scalar(-355) / 33,
                          a63 = Scalar(46732) / 5247, a64 = Scalar(49) / 176,
                          a65 = Scalar(-5103) / 18656;
  static constexpr Scalar a71 = Scalar(35) / 384, a73 = Scalar(500) / 1113,
                          a74 = Scalar(125) / 192, a75 = Scalar(-2187) / 6784,
                          a76 = Scalar(11) / 84;
  static constexpr Scalar e1 = Scalar(71) / 57600, e3 = Scalar(-71) / 16695,
                          e4 = Scalar(71) / 1920, e5 = Scalar(-17253) / 339200,
                          e6 = Scalar(22) / 525, e7 = Scalar(-1) / 40;
};

}  // namespace pnk

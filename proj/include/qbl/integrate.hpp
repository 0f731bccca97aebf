#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "qbl/error.hpp"
#include "qbl/model.hpp"
#include "qbl/params.hpp"

namespace qbl {

enum class TerminalReason {
  time_limit,
  blow_up,
  equilibrium_capture,
  section_event_count
};

const char* to_string(TerminalReason r);

struct OrbitState {
  double t;
  PhasePoint x;
};

struct Orbit {
  std::vector<OrbitState> states;
  TerminalReason reason = TerminalReason::time_limit;
};

struct IntegrateOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double blow_up_radius = 1e6;
  double capture_norm = 1e-13;
  double min_step = 1e-14;
  double fixed_step = 0.0;  // > 0: constant step, no error control
  bool store = true;        // record every accepted step in the orbit
};

// Dormand-Prince 5(4) stepper with FSAL and a quartic dense interpolant.
// Templated so the same kernel drives both the plane field and the
// chart fields near infinity.
template <typename F>
class Dopri5 {
 public:
  Dopri5(F field, double t0, Vec2 y0, IntegrateOptions opt)
      : f_(field), opt_(opt), t0_(t0), t1_(t0), y0_(y0), y1_(y0) {
    k_[0] = f_(t0, y0);
    h_ = initial_step();
  }

  double t_prev() const { return t0_; }
  double t() const { return t1_; }
  Vec2 y_prev() const { return y0_; }
  Vec2 y() const { return y1_; }
  Vec2 deriv() const { return k_[0]; }  // field at the current state

  // Take one accepted step toward t_end (never past it). Returns false when
  // already at t_end.
  bool advance(double t_end) {
    const double dir = t_end > t1_ ? 1.0 : -1.0;
    double remain = std::abs(t_end - t1_);
    if (remain <= 1e-14 * (1.0 + std::abs(t1_))) return false;

    for (int attempt = 0; attempt < 400; ++attempt) {
      double h = opt_.fixed_step > 0.0 ? opt_.fixed_step : h_;
      bool clamped = false;
      if (h >= remain) {
        h = remain;
        clamped = true;
      }
      if (!clamped && h < opt_.min_step) {
        throw NumericError(ErrorCode::step_underflow,
                           "step-size underflow in the integrator");
      }
      const double hs = dir * h;
      Vec2 k2, k3, k4, k5, k6, k7, ynew;
      stages(hs, k2, k3, k4, k5, k6, ynew);
      k7 = f_(t1_ + hs, ynew);

      double err = 0.0;
      if (opt_.fixed_step <= 0.0) {
        const Vec2 ev = (k_[0] * (71.0 / 57600.0)) +
                        (k3 * (-71.0 / 16695.0)) + (k4 * (71.0 / 1920.0)) +
                        (k5 * (-17253.0 / 339200.0)) + (k6 * (22.0 / 525.0)) +
                        (k7 * (-1.0 / 40.0));
        const double sx =
            opt_.atol + opt_.rtol * std::max(std::abs(y1_.x), std::abs(ynew.x));
        const double sy =
            opt_.atol + opt_.rtol * std::max(std::abs(y1_.y), std::abs(ynew.y));
        const double ex = hs * ev.x / sx, ey = hs * ev.y / sy;
        err = std::sqrt(0.5 * (ex * ex + ey * ey));
      }

      if (err <= 1.0) {
        prepare_dense(hs, k3, k4, k5, k6, k7, ynew);
        t0_ = t1_;
        y0_ = y1_;
        t1_ += hs;
        y1_ = ynew;
        k_[0] = k7;  // FSAL
        if (opt_.fixed_step <= 0.0) {
          const double fac =
              err == 0.0 ? 5.0
                         : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
          h_ = std::max(h * fac, opt_.min_step);
        }
        return true;
      }
      h_ = h * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
      if (h_ < opt_.min_step) {
        throw NumericError(ErrorCode::step_underflow,
                           "step-size underflow in the integrator");
      }
    }
    throw NumericError(ErrorCode::step_underflow,
                       "integrator failed to produce an accepted step");
  }

  // Interpolate inside the last accepted step, t in [t_prev, t].
  Vec2 dense(double t) const {
    const double h = t1_ - t0_;
    const double th = h == 0.0 ? 0.0 : (t - t0_) / h;
    const double th1 = 1.0 - th;
    return r1_ + (r2_ + (r3_ + (r4_ + r5_ * th1) * th) * th1) * th;
  }

 private:
  double initial_step() const {
    const double fn = k_[0].norm(), yn = y1_.norm();
    const double h = std::pow(std::max(opt_.rtol, 1e-13), 0.25) * (1.0 + yn) /
                     (1.0 + fn);
    return std::clamp(h, 1e-10, 1.0);
  }

  void stages(double h, Vec2& k2, Vec2& k3, Vec2& k4, Vec2& k5, Vec2& k6,
              Vec2& ynew) const {
    const Vec2 k1 = k_[0];
    const double t = t1_;
    const Vec2 y = y1_;
    k2 = f_(t + h * 0.2, y + (k1 * 0.2) * h);
    k3 = f_(t + h * 0.3, y + (k1 * (3.0 / 40.0) + k2 * (9.0 / 40.0)) * h);
    k4 = f_(t + h * 0.8,
            y + (k1 * (44.0 / 45.0) + k2 * (-56.0 / 15.0) + k3 * (32.0 / 9.0)) *
                    h);
    k5 = f_(t + h * (8.0 / 9.0),
            y + (k1 * (19372.0 / 6561.0) + k2 * (-25360.0 / 2187.0) +
                 k3 * (64448.0 / 6561.0) + k4 * (-212.0 / 729.0)) *
                    h);
    k6 = f_(t + h, y + (k1 * (9017.0 / 3168.0) + k2 * (-355.0 / 33.0) +
                        k3 * (46732.0 / 5247.0) + k4 * (49.0 / 176.0) +
                        k5 * (-5103.0 / 18656.0)) *
                           h);
    ynew = y + (k1 * (35.0 / 384.0) + k3 * (500.0 / 1113.0) +
                k4 * (125.0 / 192.0) + k5 * (-2187.0 / 6784.0) +
                k6 * (11.0 / 84.0)) *
                   h;
  }

  void prepare_dense(double h, const Vec2& k3, const Vec2& k4, const Vec2& k5,
                     const Vec2& k6, const Vec2& k7, const Vec2& ynew) {
    const Vec2 k1 = k_[0];
    const Vec2 ydiff = ynew - y1_;
    r1_ = y1_;
    r2_ = ydiff;
    r3_ = k1 * h - ydiff;
    r4_ = ydiff * 2.0 - (k1 + k7) * h;
    r5_ = (k1 * (-12715105075.0 / 11282082432.0) +
           k3 * (87487479700.0 / 32700410799.0) +
           k4 * (-10690763975.0 / 1880347072.0) +
           k5 * (701980252875.0 / 199316789632.0) +
           k6 * (-1453857185.0 / 822651844.0) +
           k7 * (69997945.0 / 29380423.0)) *
          h;
  }

  F f_;
  IntegrateOptions opt_;
  double t0_, t1_;
  Vec2 y0_, y1_;
  Vec2 k_[1];
  double h_ = 1e-6;
  Vec2 r1_{}, r2_{}, r3_{}, r4_{}, r5_{};
};

// Flow "field" for the plane system; gamma != 0 is applied when rotated.
struct ModelField {
  ModelParams p;
  bool rotated = false;
  Vec2 operator()(double, Vec2 v) const {
    const FieldValue f = rotated ? eval_rotated_field(p, {v.x, v.y})
                                 : eval_field(p, {v.x, v.y});
    return {f.dx, f.dy};
  }
};

// Integrate any planar field over a signed time span, recording accepted
// steps and stopping on blow-up or equilibrium capture.
template <typename F>
Orbit flow(F field, Vec2 start, double t_span, const IntegrateOptions& opt = {}) {
  Orbit orbit;
  orbit.states.push_back({0.0, start});
  if (field(0.0, start).norm() < opt.capture_norm) {
    orbit.reason = TerminalReason::equilibrium_capture;
    return orbit;
  }
  Dopri5<F> stepper(field, 0.0, start, opt);
  while (stepper.advance(t_span)) {
    if (opt.store) orbit.states.push_back({stepper.t(), stepper.y()});
    if (stepper.y().norm() > opt.blow_up_radius) {
      orbit.reason = TerminalReason::blow_up;
      if (!opt.store) orbit.states.push_back({stepper.t(), stepper.y()});
      return orbit;
    }
    if (stepper.deriv().norm() < opt.capture_norm) {
      orbit.reason = TerminalReason::equilibrium_capture;
      if (!opt.store) orbit.states.push_back({stepper.t(), stepper.y()});
      return orbit;
    }
  }
  if (!opt.store) orbit.states.push_back({stepper.t(), stepper.y()});
  orbit.reason = TerminalReason::time_limit;
  return orbit;
}

// Plane-field convenience wrapper.
Orbit integrate(const ModelParams& p, PhasePoint start, double t_span,
                bool rotated = false, const IntegrateOptions& opt = {});

}  // namespace qbl

#include "ermakov/integrate.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/roots.hpp>

#include "ermakov/error.hpp"
#include "ermakov/invariant.hpp"

namespace ermakov {

namespace {

// Dormand-Prince 5(4) tableau, error weights and dense-output weights.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

constexpr double kSafety = 0.9;
constexpr double kBeta = 0.04;
constexpr double kFacMin = 0.2;   // largest shrink per step is 1/kFacMin
constexpr double kFacMax = 10.0;  // largest growth per step

double event_value(const EventFunction& ev, double t, std::span<const double> y) {
  try {
    return ev.g(t, y);
  } catch (const EvaluationError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

bool crossed(double before, double after) {
  if (std::isnan(before) || std::isnan(after)) return false;
  return (before < 0.0 && after >= 0.0) || (before > 0.0 && after <= 0.0);
}

}  // namespace

void IntegratorConfig::validate() const {
  if (!(rel_tol > 0.0)) throw ConfigError("tolerances.rel_tol", "must be positive");
  if (!(abs_tol > 0.0)) throw ConfigError("tolerances.abs_tol", "must be positive");
  if (!(max_step > 0.0)) throw ConfigError("tolerances.max_step", "must be positive");
  if (!std::isfinite(t_start) || !std::isfinite(t_end) || t_start == t_end)
    throw ConfigError("t_span", "must be a finite, non-degenerate interval");
}

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::TurningPoint: return "TurningPoint";
    case EventKind::RadialCollapse: return "RadialCollapse";
    case EventKind::AxisCrossing: return "AxisCrossing";
    case EventKind::RhoZero: return "RhoZero";
    case EventKind::Custom: return "Custom";
  }
  return "Custom";
}

std::string to_string(Termination reason) {
  switch (reason) {
    case Termination::Completed: return "Completed";
    case Termination::Event: return "EventTermination";
    case Termination::StepSizeUnderflow: return "StepSizeUnderflow";
    case Termination::DomainError: return "DomainError";
    case Termination::MaxSteps: return "MaxStepsExceeded";
  }
  return "Unknown";
}

// ---------------------------------------------------------------- Trajectory

std::size_t Trajectory::step_index(double t) const {
  if (steps_.empty()) throw DomainError("trajectory has no steps");
  const double lo = std::min(times_.front(), times_.back());
  const double hi = std::max(times_.front(), times_.back());
  if (t < lo || t > hi) throw DomainError("time outside the integrated span");
  std::size_t k = 0;
  if (direction_ > 0) {
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    k = static_cast<std::size_t>(it - times_.begin());
  } else {
    auto it = std::upper_bound(times_.begin(), times_.end(), t, std::greater<>());
    k = static_cast<std::size_t>(it - times_.begin());
  }
  k = k == 0 ? 0 : k - 1;
  return std::min(k, steps_.size() - 1);
}

double Trajectory::dense(const Step& step, double t, std::size_t i) const {
  const std::size_t n = dimension_;
  const double s = (t - step.t0) / step.h;
  const double s1 = 1.0 - s;
  const double* c = step.coeff.data();
  return c[i] + s * (c[n + i] + s1 * (c[2 * n + i] + s * (c[3 * n + i] + s1 * c[4 * n + i])));
}

State Trajectory::at(double t) const {
  const Step& step = steps_[step_index(t)];
  State y(dimension_);
  for (std::size_t i = 0; i < dimension_; ++i) y[i] = dense(step, t, i);
  return y;
}

double Trajectory::component_at(double t, std::size_t i) const {
  return dense(steps_[step_index(t)], t, i);
}

// ---------------------------------------------------------------- stepper

class DormandPrince {
 public:
  DormandPrince(const RhsFunction& f, const IntegratorConfig& cfg,
                std::span<const EventFunction> events)
      : f_(f), cfg_(cfg), events_(events) {}

  Trajectory run(const State& y0) {
    const std::size_t n = y0.size();
    Trajectory traj;
    traj.dimension_ = n;
    traj.direction_ = cfg_.t_end > cfg_.t_start ? 1 : -1;
    const double dir = traj.direction_;

    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), y1(n), err(n);
    State y = y0;
    double t = cfg_.t_start;
    f_(t, y, k1);  // failures here propagate: the initial state must be evaluable

    traj.times_.push_back(t);
    traj.states_.push_back(y);

    std::vector<double> g_prev(events_.size());
    for (std::size_t e = 0; e < events_.size(); ++e) g_prev[e] = event_value(events_[e], t, y);

    const double span = std::abs(cfg_.t_end - cfg_.t_start);
    const double hmax = std::min(cfg_.max_step, span);
    double h = cfg_.initial_step > 0.0 ? cfg_.initial_step : initial_step(t, y, k1, hmax);
    h = std::min(h, hmax) * dir;
    double facold = 1e-4;
    bool last_rejected = false;

    for (;;) {
      if ((t - cfg_.t_end) * dir >= 0.0) break;
      if (traj.accepted_steps + traj.rejected_steps >= cfg_.max_steps) {
        traj.termination = Termination::MaxSteps;
        traj.message = "step budget exhausted at t = " + std::to_string(t);
        break;
      }
      const double hmin = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
      if (std::abs(h) < hmin) {
        traj.termination = Termination::StepSizeUnderflow;
        traj.message = "step size underflow at t = " + std::to_string(t);
        break;
      }
      bool final_step = false;
      if ((t + 1.01 * h - cfg_.t_end) * dir >= 0.0) {
        h = cfg_.t_end - t;
        final_step = true;
      }

      try {
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
        f_(t + c2 * h, ytmp, k2);
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        f_(t + c3 * h, ytmp, k3);
        for (std::size_t i = 0; i < n; ++i)
          ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f_(t + c4 * h, ytmp, k4);
        for (std::size_t i = 0; i < n; ++i)
          ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        f_(t + c5 * h, ytmp, k5);
        for (std::size_t i = 0; i < n; ++i)
          ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        f_(t + h, ytmp, k6);
        for (std::size_t i = 0; i < n; ++i)
          y1[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        f_(t + h, y1, k7);
      } catch (const EvaluationError& e) {
        ++traj.rejected_steps;
        h *= 0.25;
        last_rejected = true;
        if (std::abs(h) < hmin) {
          traj.termination = Termination::DomainError;
          traj.message = std::string(e.what()) + " near t = " + std::to_string(t);
          break;
        }
        continue;
      }

      double err_norm = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double sk = cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(y[i]), std::abs(y1[i]));
        err_norm = std::max(err_norm, std::abs(e) / sk);
      }
      if (!std::isfinite(err_norm)) err_norm = 1e10;

      const double expo = 0.2 - kBeta * 0.75;
      const double fac11 = std::pow(err_norm, expo);
      if (err_norm <= 1.0) {
        double fac = fac11 / std::pow(facold, kBeta);
        fac = std::clamp(fac / kSafety, 1.0 / kFacMax, 1.0 / kFacMin);
        double hnew = h / fac;
        facold = std::max(err_norm, 1e-4);
        ++traj.accepted_steps;

        Trajectory::Step step;
        step.t0 = t;
        step.h = h;
        step.coeff.resize(5 * n);
        for (std::size_t i = 0; i < n; ++i) {
          const double ydiff = y1[i] - y[i];
          const double bspl = h * k1[i] - ydiff;
          step.coeff[i] = y[i];
          step.coeff[n + i] = ydiff;
          step.coeff[2 * n + i] = bspl;
          step.coeff[3 * n + i] = ydiff - h * k7[i] - bspl;
          step.coeff[4 * n + i] =
              h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
        }
        const double t_new = final_step ? cfg_.t_end : t + h;
        traj.steps_.push_back(std::move(step));
        traj.times_.push_back(t_new);
        traj.states_.push_back(y1);

        if (handle_events(traj, t, t_new, y1, g_prev)) break;

        y = y1;
        std::swap(k1, k7);
        t = t_new;
        if (last_rejected) hnew = dir * std::min(std::abs(hnew), std::abs(h));
        last_rejected = false;
        h = dir * std::min(std::abs(hnew), hmax);
      } else {
        ++traj.rejected_steps;
        h /= std::min(1.0 / kFacMin, fac11 / kSafety);
        last_rejected = true;
      }
    }
    return traj;
  }

 private:
  double initial_step(double t, const State& y, const std::vector<double>& f0, double hmax) {
    const std::size_t n = y.size();
    double dnf = 0.0, dny = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sk = cfg_.abs_tol + cfg_.rel_tol * std::abs(y[i]);
      dnf += (f0[i] / sk) * (f0[i] / sk);
      dny += (y[i] / sk) * (y[i] / sk);
    }
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
    h = std::min(h, hmax);
    const double dir = cfg_.t_end > cfg_.t_start ? 1.0 : -1.0;
    std::vector<double> y1(n), f1(n);
    for (std::size_t i = 0; i < n; ++i) y1[i] = y[i] + dir * h * f0[i];
    try {
      f_(t + dir * h, y1, f1);
    } catch (const EvaluationError&) {
      return h * 1e-3;
    }
    double der2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sk = cfg_.abs_tol + cfg_.rel_tol * std::abs(y[i]);
      der2 += ((f1[i] - f0[i]) / sk) * ((f1[i] - f0[i]) / sk);
    }
    der2 = std::sqrt(der2) / h;
    const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
    return std::min({100.0 * h, h1, hmax});
  }

  // Returns true when a terminal event ended the run.
  bool handle_events(Trajectory& traj, double t0, double t1, const State& y1,
                     std::vector<double>& g_prev) {
    if (events_.empty()) return false;
    std::vector<Event> found;
    for (std::size_t e = 0; e < events_.size(); ++e) {
      const double g_new = event_value(events_[e], t1, y1);
      if (crossed(g_prev[e], g_new)) {
        const double te = locate(traj, events_[e], t0, t1);
        found.push_back({events_[e].kind, events_[e].label, te, traj.at(te), events_[e].terminal});
      }
      g_prev[e] = g_new;
    }
    const int dir = traj.direction_;
    std::sort(found.begin(), found.end(),
              [dir](const Event& a, const Event& b) { return (a.t - b.t) * dir < 0.0; });
    for (auto& ev : found) {
      traj.events.push_back(ev);
      if (ev.terminal) {
        if (ev.t == t0) {
          traj.steps_.pop_back();
          traj.times_.pop_back();
          traj.states_.pop_back();
        } else {
          traj.times_.back() = ev.t;
          traj.states_.back() = ev.y;
        }
        traj.termination = Termination::Event;
        traj.message = to_string(ev.kind) + " (" + ev.label + ") at t = " + std::to_string(ev.t);
        return true;
      }
    }
    return false;
  }

  double locate(const Trajectory& traj, const EventFunction& ev, double t0, double t1) const {
    auto g = [&](double t) { return event_value(ev, t, traj.at(t)); };
    const double tol = cfg_.event_time_tol;
    return locate_root(g, t0, t1, tol);
  }

 public:
  template <class G>
  static double locate_root(G&& g, double t0, double t1, double tol) {
    double a = std::min(t0, t1);
    double b = std::max(t0, t1);
    if (g(a) == 0.0) return a;
    if (g(b) == 0.0) return b;
    auto stop = [tol](double lo, double hi) { return std::abs(hi - lo) <= tol; };
    std::uintmax_t max_iter = 200;
    auto [lo, hi] = boost::math::tools::bisect(g, a, b, stop, max_iter);
    return 0.5 * (lo + hi);
  }

 private:
  const RhsFunction& f_;
  const IntegratorConfig& cfg_;
  std::span<const EventFunction> events_;
};

Trajectory integrate(const RhsFunction& f, const State& y0, const IntegratorConfig& cfg,
                     std::span<const EventFunction> events) {
  cfg.validate();
  return DormandPrince(f, cfg, events).run(y0);
}

std::vector<Event> detect_events(const Trajectory& traj, std::span<const EventFunction> events,
                                 double time_tol) {
  std::vector<Event> out;
  for (const auto& ev : events) {
    double before = event_value(ev, traj.times()[0], traj.state(0));
    for (std::size_t i = 1; i < traj.size(); ++i) {
      const double after = event_value(ev, traj.times()[i], traj.state(i));
      if (crossed(before, after)) {
        auto g = [&](double t) { return event_value(ev, t, traj.at(t)); };
        const double te = DormandPrince::locate_root(g, traj.times()[i - 1], traj.times()[i], time_tol);
        out.push_back({ev.kind, ev.label, te, traj.at(te), ev.terminal});
      }
      before = after;
    }
  }
  const int dir = traj.direction();
  std::sort(out.begin(), out.end(),
            [dir](const Event& a, const Event& b) { return (a.t - b.t) * dir < 0.0; });
  return out;
}

// ---------------------------------------------------------------- system adapters

PolarState polar_state(const Trajectory& traj, std::size_t i) {
  const State& y = traj.state(i);
  return {y[0], y[1], y[2], y[3], traj.times()[i]};
}

PolarState polar_state_at(const Trajectory& traj, double t) {
  const State y = traj.at(t);
  return {y[0], y[1], y[2], y[3], t};
}

CartesianState cartesian_state_at(const Trajectory& traj, double t) {
  const State y = traj.at(t);
  return {y[0], y[1], y[2], y[3], t};
}

std::vector<EventFunction> polar_events(const PolarSystem& system, const PolarEventOptions& opts) {
  std::vector<EventFunction> out;
  if (opts.turning_points) {
    out.push_back({EventKind::TurningPoint, "thetadot = 0",
                   [](double, std::span<const double> y) { return y[3]; }, false});
  }
  const double rmin = opts.collapse_radius;
  out.push_back({EventKind::RadialCollapse, "r -> 0",
                 [rmin](double, std::span<const double> y) { return y[0] - rmin; }, true});
  if (opts.axis_crossings && !system.F().is_zero()) {
    out.push_back({EventKind::AxisCrossing, "sin(theta) cos(theta) = 0",
                   [](double, std::span<const double> y) { return std::sin(2.0 * y[1]); }, true});
  }
  if (opts.rho) {
    Expression rho = *opts.rho;
    out.push_back({EventKind::RhoZero, "rho(t) = 0",
                   [rho](double t, std::span<const double>) { return rho.evaluate({{"t", t}}); },
                   true});
  }
  return out;
}

Trajectory integrate_polar(const PolarSystem& system, const PolarState& s0,
                           const IntegratorConfig& cfg, const PolarEventOptions& opts) {
  RhsFunction f = [&system](double t, std::span<const double> y, std::span<double> dy) {
    const PolarDerivative d = system.derivative({y[0], y[1], y[2], y[3], t});
    dy[0] = d.rdot;
    dy[1] = d.thetadot;
    dy[2] = d.rddot;
    dy[3] = d.thetaddot;
  };
  IntegratorConfig c = cfg;
  c.t_start = s0.t;
  const auto events = polar_events(system, opts);
  return integrate(f, {s0.r, s0.theta, s0.rdot, s0.thetadot}, c, events);
}

Trajectory integrate_cartesian(const CartesianSystem& system, const CartesianState& s0,
                               const IntegratorConfig& cfg) {
  RhsFunction f = [&system](double t, std::span<const double> y, std::span<double> dy) {
    const CartesianDerivative d = system.derivative({y[0], y[1], y[2], y[3], t});
    dy[0] = d.xdot;
    dy[1] = d.ydot;
    dy[2] = d.xddot;
    dy[3] = d.yddot;
  };
  std::vector<EventFunction> events;
  if (!system.spec().f.is_zero() || !system.spec().g.is_zero()) {
    events.push_back({EventKind::AxisCrossing, "x = 0",
                      [](double, std::span<const double> y) { return y[0]; }, true});
    events.push_back({EventKind::AxisCrossing, "y = 0",
                      [](double, std::span<const double> y) { return y[1]; }, true});
  }
  IntegratorConfig c = cfg;
  c.t_start = s0.t;
  return integrate(f, {s0.x, s0.y, s0.xdot, s0.ydot}, c, events);
}

Trajectory integrate_barred(const BarredSystem& system, const BarredState& s0,
                            const IntegratorConfig& cfg) {
  RhsFunction f = [&system](double tbar, std::span<const double> y, std::span<double> dy) {
    const PolarDerivative d = system.derivative({y[0], y[1], y[2], y[3], tbar});
    dy[0] = d.rdot;
    dy[1] = d.thetadot;
    dy[2] = d.rddot;
    dy[3] = d.thetaddot;
  };
  IntegratorConfig c = cfg;
  c.t_start = s0.tbar;
  return integrate(f, {s0.rbar, s0.theta, s0.rbar_prime, s0.theta_prime}, c);
}

DriftStats monitor_invariant(const Trajectory& traj, const Expression& V) {
  DriftStats stats;
  if (traj.size() == 0) return stats;
  stats.I0 = lewis_ray_reid_polar(polar_state(traj, 0), V).I;
  const double scale = 1.0 + std::abs(stats.I0);
  double sum_sq = 0.0;
  stats.series.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double I = lewis_ray_reid_polar(polar_state(traj, i), V).I;
    const double d = std::abs(I - stats.I0) / scale;
    stats.series.push_back(d);
    stats.max = std::max(stats.max, d);
    sum_sq += d * d;
  }
  stats.rms = std::sqrt(sum_sq / static_cast<double>(traj.size()));
  return stats;
}

void attach_invariant_drift(Trajectory& traj, const DriftStats& stats) {
  traj.invariant_drift = stats.series;
}

}  // namespace ermakov

#pragma once

// Adaptive Dormand-Prince 5(4) integration with PI step control, the pair's
// continuous extension for dense output, and event location on the dense
// output.

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ermakov/model.hpp"

namespace ermakov {

using State = std::vector<double>;

/// dydt = f(t, y). May throw DomainError; the integrator treats that as a
/// rejected trial step.
using RhsFunction = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

struct IntegratorConfig {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  double t_start = 0.0;
  double t_end = 1.0;  // may be below t_start for backward integration
  double initial_step = 0.0;  // 0 selects the curvature heuristic
  double event_time_tol = 1e-10;
  std::size_t max_steps = 1'000'000;

  /// Throws ConfigError on non-positive tolerances or a degenerate span.
  void validate() const;
};

enum class EventKind { TurningPoint, RadialCollapse, AxisCrossing, RhoZero, Custom };

std::string to_string(EventKind kind);

struct EventFunction {
  EventKind kind = EventKind::Custom;
  std::string label;
  std::function<double(double t, std::span<const double> y)> g;
  bool terminal = false;
};

struct Event {
  EventKind kind = EventKind::Custom;
  std::string label;
  double t = 0.0;
  State y;
  bool terminal = false;
};

enum class Termination { Completed, Event, StepSizeUnderflow, DomainError, MaxSteps };

std::string to_string(Termination reason);

/// Time-ordered samples at accepted steps with dense output in between.
/// Times are strictly monotone in the direction of integration.
class Trajectory {
 public:
  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return times_.size(); }
  const std::vector<double>& times() const { return times_; }
  const State& state(std::size_t i) const { return states_[i]; }
  double t_first() const { return times_.front(); }
  double t_last() const { return times_.back(); }
  int direction() const { return direction_; }

  /// Dense output; throws DomainError outside the covered span.
  State at(double t) const;
  double component_at(double t, std::size_t i) const;

  bool completed() const { return termination == Termination::Completed; }

  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  Termination termination = Termination::Completed;
  std::string message;
  std::vector<Event> events;
  std::vector<double> invariant_drift;  // filled by attach_invariant_drift

 private:
  friend class DormandPrince;
  struct Step {
    double t0 = 0.0;
    double h = 0.0;
    std::vector<double> coeff;  // 5 blocks of `dimension_`
  };

  std::size_t step_index(double t) const;
  double dense(const Step& step, double t, std::size_t i) const;

  std::size_t dimension_ = 0;
  int direction_ = 1;
  std::vector<double> times_;
  std::vector<State> states_;
  std::vector<Step> steps_;
};

/// Integrates y' = f(t, y) from cfg.t_start to cfg.t_end. Errors during
/// the run (step-size underflow, persistent domain errors, terminal events)
/// end the run early and are reported through Trajectory::termination with
/// the partial trajectory kept. Throws DomainError only if f fails at y0.
Trajectory integrate(const RhsFunction& f, const State& y0, const IntegratorConfig& cfg,
                     std::span<const EventFunction> events = {});

/// Scans a finished trajectory for sign changes of each event function and
/// locates them by bisection on the dense output.
std::vector<Event> detect_events(const Trajectory& traj, std::span<const EventFunction> events,
                                 double time_tol = 1e-10);

// Polar trajectories store (r, theta, rdot, thetadot); cartesian ones
// (x, y, xdot, ydot).
PolarState polar_state(const Trajectory& traj, std::size_t i);
PolarState polar_state_at(const Trajectory& traj, double t);
CartesianState cartesian_state_at(const Trajectory& traj, double t);

struct PolarEventOptions {
  double collapse_radius = 1e-6;
  bool turning_points = true;
  /// Axis crossings terminate only when F is not the literal zero.
  bool axis_crossings = false;
  std::optional<Expression> rho;
};

/// Turning points (thetadot = 0, non-terminal), radial collapse, axis
/// crossings with non-zero F, and rho zeros (terminal).
std::vector<EventFunction> polar_events(const PolarSystem& system, const PolarEventOptions& opts);

Trajectory integrate_polar(const PolarSystem& system, const PolarState& s0,
                           const IntegratorConfig& cfg, const PolarEventOptions& opts = {});

Trajectory integrate_cartesian(const CartesianSystem& system, const CartesianState& s0,
                               const IntegratorConfig& cfg);

/// Integrates the barred system in tbar; states are (rbar, theta, rbar', theta').
Trajectory integrate_barred(const BarredSystem& system, const BarredState& s0,
                            const IntegratorConfig& cfg);

struct DriftStats {
  double I0 = 0.0;
  double max = 0.0;
  double rms = 0.0;
  std::vector<double> series;  // |I(t) - I(t0)| / (1 + |I(t0)|) per sample
};

DriftStats monitor_invariant(const Trajectory& traj, const Expression& V);

void attach_invariant_drift(Trajectory& traj, const DriftStats& stats);

}  // namespace ermakov

#include "ermakov/linearize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>


#include "ermakov/error.hpp"

namespace ermakov {

namespace {

double eval1(const Expression& e, std::string_view name, double value) {
  if (e.is_constant()) return e.value();
  expr::Bindings env;
  env.set(name, value);
  return e.evaluate(env);
}

double eval_AB(const Expression& e, double theta, double L) {
  if (e.is_constant()) return e.value();
  return e.evaluate({{"theta", theta}, {"L", L}});
}

Expression d_dt(const Expression& e) { return expr::simplify(expr::differentiate(e, "t")); }

// Gap I - V(theta) - tol; non-finite or failing evaluations count as forbidden.
double allowed_gap(const Expression& V, const InvariantValue& I, double theta) {
  try {
    const double v = eval1(V, "theta", theta);
    if (!std::isfinite(v)) return -1.0;
    return I.I - v - turning_point_tolerance(I);
  } catch (const EvaluationError&) {
    return -1.0;
  }
}

// Boundary between an allowed angle `good` and a forbidden angle `bad`.
double locate_boundary(const Expression& V, const InvariantValue& I, double good, double bad) {
  for (int k = 0; k < 200 && std::abs(bad - good) > 1e-15 * (1.0 + std::abs(good)); ++k) {
    const double mid = 0.5 * (good + bad);
    if (allowed_gap(V, I, mid) > 0.0)
      good = mid;
    else
      bad = mid;
  }
  return 0.5 * (good + bad);
}

std::string angle_text(double theta) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", theta);
  return buf;
}

}  // namespace

// ------------------------------------------------------------------ LinearODE

LinearODE::LinearODE(const LinearizableSpec& spec, InvariantValue I, Interval domain,
                     int branch_sign)
    : spec_(spec),
      dV_(expr::simplify(expr::differentiate(spec.V, "theta"))),
      I_(std::move(I)),
      domain_(domain),
      branch_(branch_sign < 0 ? -1 : 1) {}

double LinearODE::h(double theta) const { return ermakov::h(theta, I_, spec_.V); }

double LinearODE::h_dh(double theta) const { return -eval1(dV_, "theta", theta); }

LinearODE::Coefficients LinearODE::at(double theta) const {
  const double hv = h(theta);
  const double L = branch_ * hv;
  const double a = spec_.A.is_zero() ? 0.0 : -L * eval_AB(spec_.A, theta, L);
  const double b = spec_.B.is_zero() ? 0.0 : eval_AB(spec_.B, theta, L);
  const double c = spec_.C.is_zero() ? 0.0 : eval_AB(spec_.C, theta, L);
  const double F = spec_.F.is_zero() ? 0.0 : eval1(spec_.F, "theta", theta);
  return {hv * hv, h_dh(theta) - a, hv * hv + F - b, c};
}

LinearODE build_linear_ode(const LinearizableSpec& spec, const InvariantValue& I,
                           Interval theta_domain, int branch_sign) {
  if (!(theta_domain.lo <= theta_domain.hi)) throw DomainError("empty angle domain");
  constexpr int kSamples = 2001;
  double prev = theta_domain.lo;
  for (int k = 0; k < kSamples; ++k) {
    const double theta =
        theta_domain.lo + theta_domain.length() * static_cast<double>(k) / (kSamples - 1);
    if (allowed_gap(spec.V, I, theta) <= 0.0) {
      const double where = k == 0 ? theta : locate_boundary(spec.V, I, prev, theta);
      throw ForbiddenRegion("angle domain reaches I <= V(theta) near theta = " + angle_text(where),
                            where);
    }
    prev = theta;
  }
  return LinearODE(spec, I, theta_domain, branch_sign);
}

// ------------------------------------------------------------- LinearSolution

LinearSolution::LinearSolution(const LinearODE& ode, double theta0, double c1, double c2,
                               std::optional<Trajectory> forward,
                               std::optional<Trajectory> backward)
    : ode_(ode),
      theta0_(theta0),
      c1_(c1),
      c2_(c2),
      forward_(std::move(forward)),
      backward_(std::move(backward)),
      span_{backward_ ? backward_->t_last() : theta0, forward_ ? forward_->t_last() : theta0} {}

double LinearSolution::component(double theta, std::size_t i) const {
  if (theta == theta0_) {
    static constexpr double unit[6] = {1.0, 0.0, 0.0, 1.0, 0.0, 0.0};
    return unit[i];
  }
  if (!span_.contains(theta))
    throw DomainError("linear solution queried outside its angle span at theta = " +
                      angle_text(theta));
  return theta > theta0_ ? forward_->component_at(theta, i) : backward_->component_at(theta, i);
}

double LinearSolution::psi(double theta) const {
  return c1_ * component(theta, 0) + c2_ * component(theta, 2) + component(theta, 4);
}

double LinearSolution::dpsi(double theta) const {
  return c1_ * component(theta, 1) + c2_ * component(theta, 3) + component(theta, 5);
}

double LinearSolution::wronskian(double theta) const {
  return component(theta, 0) * component(theta, 3) - component(theta, 1) * component(theta, 2);
}

std::vector<double> LinearSolution::nodes() const {
  std::vector<double> out{theta0_};
  if (forward_) out.insert(out.end(), forward_->times().begin(), forward_->times().end());
  if (backward_) out.insert(out.end(), backward_->times().begin(), backward_->times().end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ScalarFunction LinearSolution::as_function() const {
  auto self = std::make_shared<LinearSolution>(*this);
  return [self](double theta) { return self->psi(theta); };
}

LinearSolution solve_linear(const LinearODE& ode, double theta0, double psi0, double dpsi0,
                            std::span<const double> grid, const LinearSolveConfig& cfg) {
  double lo = theta0;
  double hi = theta0;
  for (double x : grid) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const Interval& dom = ode.domain();
  if (lo < dom.lo || hi > dom.hi)
    throw DomainError("requested angles leave the domain of the linear equation");

  const bool homogeneous = ode.homogeneous();
  RhsFunction f = [&ode, homogeneous](double theta, std::span<const double> y,
                                      std::span<double> dy) {
    const LinearODE::Coefficients c = ode.at(theta);
    for (std::size_t k = 0; k < 3; ++k) {
      const double source = (k == 2 && !homogeneous) ? c.rhs : 0.0;
      dy[2 * k] = y[2 * k + 1];
      dy[2 * k + 1] = (source - c.p1 * y[2 * k + 1] - c.p0 * y[2 * k]) / c.p2;
    }
  };
  const State y0{1.0, 0.0, 0.0, 1.0, 0.0, 0.0};

  auto run = [&](double end) -> std::optional<Trajectory> {
    if (end == theta0) return std::nullopt;
    IntegratorConfig ic;
    ic.rel_tol = cfg.rel_tol;
    ic.abs_tol = cfg.abs_tol;
    ic.t_start = theta0;
    ic.t_end = end;
    Trajectory traj = integrate(f, y0, ic);
    if (!traj.completed())
      throw DomainError("linear solve stopped at theta = " + angle_text(traj.t_last()) + ": " +
                        traj.message);
    return traj;
  };
  return LinearSolution(ode, theta0, psi0, dpsi0, run(hi), run(lo));
}

// ------------------------------------------------------------------- Kepler T

double quadrature_T(double theta, const InvariantValue& I, const Expression& V, double J) {
  return integrate_adaptive([&](double l) { return 1.0 / h(l, I, V); }, kTBasePoint, theta) + J;
}

std::optional<double> kepler_T_closed_form(const WinternitzParams& p, const InvariantValue& I,
                                           double theta, double J) {
  const double Iv = I.I;
  const double D2 = p.g2 * p.g2 + 4.0 * Iv * (Iv - p.g1);
  if (!(Iv > 0.0) || !(D2 > 0.0) || !(theta > 0.0) || !(theta < M_PI)) return std::nullopt;
  const double D = std::sqrt(D2);
  const auto z = [&](double x) { return (2.0 * Iv * std::cos(x) + p.g2) / D; };
  const double z0 = z(kTBasePoint);
  const double z1 = z(theta);
  if (std::abs(z0) > 1.0 || std::abs(z1) > 1.0) return std::nullopt;
  return -(std::asin(z1) - std::asin(z0)) / std::sqrt(2.0 * Iv) + J;
}

double kepler_frequency(const WinternitzParams& p, const InvariantValue& I) {
  const double w2 = 2.0 * (I.I + p.g3);
  if (!(w2 > 0.0)) throw DomainError("I + g3 must be positive for an oscillating solution");
  return std::sqrt(w2);
}

double kepler_closed_form(const WinternitzParams& p, const InvariantValue& I, double c1, double c2,
                          double J, double theta) {
  const double Omega = kepler_frequency(p, I);
  double T = 0.0;
  if (auto closed = kepler_T_closed_form(p, I, theta, J))
    T = *closed;
  else
    T = quadrature_T(theta, I, winternitz_system(p).V, J);
  return c1 * std::cos(Omega * T) + c2 * std::sin(Omega * T) + p.mu0 / (Omega * Omega);
}

// ---------------------------------------------------------- time quadrature

QuadratureSolution::QuadratureSolution(CumulativeIntegral theta_map, CumulativeIntegral time_map,
                                       double J, int branch_sign, double theta0, double t0)
    : theta_map_(std::move(theta_map)),
      time_map_(std::move(time_map)),
      J_(J),
      branch_(branch_sign),
      theta0_(theta0),
      t0_(t0) {}

double QuadratureSolution::t_of_theta(double theta) const {
  return time_map_.inverse(theta_map_(theta) - J_);
}

QuadratureSolution time_quadrature(const ScalarFunction& psi, const InvariantValue& I,
                                   const Expression& V, const Expression& rho,
                                   const QuadratureRequest& request) {
  const int branch = request.branch_sign < 0 ? -1 : 1;
  auto theta_integrand = [psi, I, V, branch](double l) {
    const double p = psi(l);
    if (!(p > 0.0))
      throw DomainError("psi is not positive at theta = " + angle_text(l) +
                        " (the orbit reaches infinity)");
    return 1.0 / (branch * h(l, I, V) * p * p);
  };
  auto time_integrand = [rho](double l) {
    const double p = eval1(rho, "t", l);
    if (p == 0.0) throw DomainError("rho(t) = 0 at t = " + angle_text(l));
    return 1.0 / (p * p);
  };
  const Interval& tw = request.theta_window;
  const Interval& ti = request.time_window;
  if (!tw.contains(request.theta0)) throw DomainError("theta0 outside the angle window");
  if (!ti.contains(request.t0)) throw DomainError("t0 outside the time window");

  CumulativeIntegral theta_map(theta_integrand, request.theta0, tw.lo, tw.hi,
                               request.theta_nodes);
  CumulativeIntegral time_map(time_integrand, request.t0, ti.lo, ti.hi);
  return QuadratureSolution(std::move(theta_map), std::move(time_map), request.J, branch,
                            request.theta0, request.t0);
}

QuadratureSolution time_quadrature(const LinearSolution& sol, const InvariantValue& I,
                                   const Expression& V, const Expression& rho,
                                   QuadratureRequest request) {
  if (request.theta_nodes.empty()) request.theta_nodes = sol.nodes();
  return time_quadrature(sol.as_function(), I, V, rho, request);
}

double invert_theta_of_t(const QuadratureSolution& q, double t) {
  if (!q.time_window().contains(t))
    throw DomainError("t = " + angle_text(t) + " outside the quadrature time window");
  return q.theta_map().inverse(q.time_integral(t) + q.J());
}

double reconstruct_orbit(const ScalarFunction& psi, const QuadratureSolution& q,
                         const Expression& rho, double theta) {
  const double p = psi(theta);
  if (!(p > 0.0)) throw DomainError("psi is not positive at theta = " + angle_text(theta));
  if (rho.is_constant()) return rho.value() / p;
  return eval1(rho, "t", q.t_of_theta(theta)) / p;
}

double reconstruct_radial(const ScalarFunction& psi, const QuadratureSolution& q,
                          const Expression& rho, double t) {
  const double theta = invert_theta_of_t(q, t);
  const double p = psi(theta);
  if (!(p > 0.0)) throw DomainError("psi is not positive at theta = " + angle_text(theta));
  return eval1(rho, "t", t) / p;
}

double free_motion_solution(double c1, double c2, double theta) { return c1 + c2 * theta; }

// ------------------------------------------------------------- compatibility

PsiInitialData psi_initial_data(const Expression& rho, const PolarState& s) {
  if (!(s.r > 0.0)) throw DomainError("radius must be positive");
  if (s.thetadot == 0.0) throw TurningPoint("dpsi/dtheta undefined where thetadot = 0", s.theta);
  const double p = eval1(rho, "t", s.t);
  const double pdot = eval1(d_dt(rho), "t", s.t);
  return {p / s.r, -(p * s.rdot - pdot * s.r) / (s.r * s.r * s.thetadot)};
}

double compatibility_residual(const Expression& omega_sq, const LinearizableSpec& spec,
                              const PolarState& s) {
  const Expression rho_ddot = d_dt(d_dt(spec.rho));
  const double p = eval1(spec.rho, "t", s.t);
  const double pdd = eval1(rho_ddot, "t", s.t);
  const double w2 = omega_sq.is_constant() ? omega_sq.value() : omega_sq.evaluate(polar_bindings(s));
  const PsiInitialData d = psi_initial_data(spec.rho, s);
  const double lhs = p * p * p * (pdd + w2 * p) / (d.psi * d.psi * d.psi);

  const double L = s.r * s.r * s.thetadot;
  const double a = spec.A.is_zero() ? 0.0 : -L * eval_AB(spec.A, s.theta, L);
  const double b = spec.B.is_zero() ? 0.0 : eval_AB(spec.B, s.theta, L);
  const double c = spec.C.is_zero() ? 0.0 : eval_AB(spec.C, s.theta, L);
  return std::abs(lhs - (a * d.dpsi + b * d.psi + c));
}

double verify_compatibility(const LinearizableSpec& spec, const PolarState& s) {
  return compatibility_residual(frequency_from_linearizable(spec), spec, s);
}

// ----------------------------------------------------------- working window

WorkingInterval working_interval(const Expression& V, const InvariantValue& I, double theta0,
                                 int direction, double max_span, double margin) {
  if (!(max_span > 0.0) || !std::isfinite(max_span))
    throw DomainError("working interval needs a finite positive span");
  if (allowed_gap(V, I, theta0) <= 0.0)
    throw TurningPoint("theta0 = " + angle_text(theta0) + " is not inside the allowed region",
                       theta0);
  constexpr double kScanStep = 1e-3;
  WorkingInterval out{{theta0, theta0}, std::nullopt, std::nullopt};

  auto grow = [&](int sign) -> std::pair<double, std::optional<double>> {
    const int n = static_cast<int>(std::ceil(max_span / kScanStep));
    double good = theta0;
    for (int k = 1; k <= n; ++k) {
      const double x = theta0 + sign * std::min(max_span, k * kScanStep);
      if (allowed_gap(V, I, x) <= 0.0) {
        const double turning = locate_boundary(V, I, good, x);
        double edge = turning - sign * margin;
        if ((edge - theta0) * sign < 0.0) edge = theta0;
        return {edge, turning};
      }
      good = x;
    }
    return {theta0 + sign * max_span, std::nullopt};
  };

  if (direction >= 0) {
    auto [edge, turning] = grow(+1);
    out.interval.hi = edge;
    out.turning_hi = turning;
  }
  if (direction <= 0) {
    auto [edge, turning] = grow(-1);
    out.interval.lo = edge;
    out.turning_lo = turning;
  }
  return out;
}

// ------------------------------------------------------------------ pipeline

LinearizedPipeline::LinearizedPipeline(const LinearizableSpec& spec, const PolarState& s0,
                                       double t_end, const PipelineConfig& cfg)
    : spec_(spec), I_(lewis_ray_reid_polar(s0, spec.V)), branch_(branch_sign_of(s0)) {
  const double t0 = s0.t;
  const int time_dir = t_end > t0 ? 1 : (t_end < t0 ? -1 : 0);
  const int theta_dir = branch_ * time_dir;

  if (cfg.theta_span) {
    window_.interval = *cfg.theta_span;
  } else {
    window_ = working_interval(spec.V, I_, s0.theta, theta_dir, cfg.max_theta_span,
                               cfg.turning_margin);
  }
  if (!window_.interval.contains(s0.theta)) throw DomainError("angle window excludes theta0");

  const LinearODE ode = build_linear_ode(spec, I_, window_.interval, branch_);
  const PsiInitialData d = psi_initial_data(spec.rho, s0);
  const std::array<double, 2> grid{window_.interval.lo, window_.interval.hi};
  LinearSolution sol = solve_linear(ode, s0.theta, d.psi, d.dpsi, grid, cfg.linear);

  // psi reaching zero means r -> infinity; the orbit never passes that angle.
  constexpr double kPsiFloor = 1e-4;
  double psi_max = std::abs(d.psi);
  const std::vector<double> nodes = sol.nodes();
  for (double x : nodes) psi_max = std::max(psi_max, std::abs(sol.psi(x)));
  const double floor = kPsiFloor * psi_max;
  auto clip = [&](int sign) {
    constexpr int kProbes = 4000;
    const double end = sign > 0 ? window_.interval.hi : window_.interval.lo;
    double good = s0.theta;
    for (int k = 1; k <= kProbes; ++k) {
      const double x = s0.theta + (end - s0.theta) * k / kProbes;
      if (!(sol.psi(x) > floor)) {
        double bad = x;
        for (int it = 0; it < 200 && std::abs(bad - good) > 1e-14; ++it) {
          const double mid = 0.5 * (good + bad);
          (sol.psi(mid) > floor ? good : bad) = mid;
        }
        return good;
      }
      good = x;
    }
    return end;
  };
  window_.interval.hi = clip(+1);
  window_.interval.lo = clip(-1);
  solution_.emplace(std::move(sol));

  QuadratureRequest req;
  req.theta0 = s0.theta;
  req.theta_window = window_.interval;
  req.t0 = t0;
  req.time_window = {std::min(t0, t_end), std::max(t0, t_end)};
  if (req.time_window.lo == req.time_window.hi) req.time_window.hi = t0 + 1e-9;
  req.J = cfg.J;
  req.branch_sign = branch_;
  quadrature_.emplace(time_quadrature(*solution_, I_, spec.V, spec.rho, req));

  covered_until_ = t_end;
  psi_fn_ = solution_->as_function();
  if (time_dir == 0) return;
  const CumulativeIntegral& tm = quadrature_->time_map();
  const CumulativeIntegral& am = quadrature_->theta_map();
  const double edge = theta_dir > 0 ? window_.interval.hi : window_.interval.lo;
  const double reach = am(edge);
  const double target = reach - cfg.J;
  const double tlo = std::min(tm.value_at_lo(), tm.value_at_hi());
  const double thi = std::max(tm.value_at_lo(), tm.value_at_hi());
  if (target > tlo && target < thi) covered_until_ = tm.inverse(target);
}

double LinearizedPipeline::r_at(double t) const {
  return reconstruct_radial(psi_fn_, *quadrature_, spec_.rho, t);
}

double LinearizedPipeline::r_of_theta(double theta) const {
  return reconstruct_orbit(psi_fn_, *quadrature_, spec_.rho, theta);
}

}  // namespace ermakov

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ermakov/commands.hpp"
#include "ermakov/config.hpp"
#include "ermakov/integrate.hpp"
#include "ermakov/invariant.hpp"
#include "ermakov/linearize.hpp"
#include "ermakov/model.hpp"
#include "oracles.hpp"

using namespace ermakov;
using expr::num;
using expr::parse;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

Outcome check(double value, double tol, const std::string& what) {
  return {value <= tol, what + " = " + sci(value) + " (tol " + sci(tol) + ")"};
}

Outcome both(const Outcome& a, const Outcome& b) {
  return {a.pass && b.pass, a.detail + "; " + b.detail};
}

// 1. Lewis-Ray-Reid drift along the Winternitz system.
Outcome invariant_conservation() {
  const WinternitzParams p{1.0, 1.0, 0.5, 1.0};
  const KeplerErmakovSpec spec = winternitz_system(p);
  const PolarSystem sys(spec);
  IntegratorConfig cfg;
  cfg.t_start = 0.0;
  cfg.t_end = 10.0;
  const PolarState s0{1.0, oracle::kPi / 2, 0.0, 2.0, 0.0};
  const Trajectory traj = integrate_polar(sys, s0, cfg);
  if (!traj.completed()) return {false, "integration stopped: " + traj.message};

  // Drift recomputed here from the stored states and the closed-form V.
  const double I0 = 0.5 * std::pow(s0.r * s0.r * s0.thetadot, 2) +
                    oracle::winternitz_V(p.g1, p.g2, s0.theta);
  double drift = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const PolarState s = polar_state(traj, i);
    const double I = 0.5 * std::pow(s.r * s.r * s.thetadot, 2) +
                     oracle::winternitz_V(p.g1, p.g2, s.theta);
    drift = std::max(drift, std::abs(I - I0) / (1.0 + std::abs(I0)));
  }
  return check(drift, 1e-6, "max relative drift over [0,10]");
}

// 2. Homogeneity for A = B = C = 0 and the usual-Ermakov compatibility.
Outcome usual_ermakov() {
  const auto dir = oracle::scratch_dir("acceptance_c2");
  const cli::RunConfig cfg = cli::parse_config(R"json({
    "system": {"kind": "linearizable",
               "functions": {"rho": "cos(t)", "A": "0", "B": "0", "C": "0",
                             "F": "0.5", "V": "0.2*sin(theta)^2", "omega_sq": "1"}},
    "initial": {"r": 1.2, "theta": 0.4, "rdot": 0.1, "thetadot": 1.1},
    "t_span": [0, 1]
  })json");
  const cli::CommandOutcome out = cli::cmd_linearize(cfg, dir);
  if (out.exit_code != 0) return {false, "linearize failed: " + out.message};
  const auto rhs = oracle::csv_column(dir / "linear.csv", "rhs");
  bool zero = !rhs.empty();
  for (const auto& cell : rhs) zero = zero && std::stod(cell) == 0.0;
  const Outcome homogeneous{zero, "rhs column exactly zero over " + std::to_string(rhs.size()) +
                                      " rows: " + (zero ? "yes" : "no")};

  LinearizableSpec spec;
  spec.rho = parse("cos(t)");
  spec.A = num(0.0);
  spec.B = num(0.0);
  spec.C = num(0.0);
  spec.F = parse("0.5");
  spec.V = parse("0.2*sin(theta)^2");
  std::mt19937_64 rng(20261016);
  std::uniform_real_distribution<double> t(-1.2, 1.2), r(0.3, 3.0), th(-3.0, 3.0), rd(-2.0, 2.0),
      thd(0.2, 3.0), sign(-1.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const PolarState s{r(rng), th(rng), rd(rng), (sign(rng) < 0 ? -1.0 : 1.0) * thd(rng), t(rng)};
    worst = std::max(worst, compatibility_residual(num(1.0), spec, s));
  }
  return both(homogeneous, check(worst, 1e-12, "max compatibility residual, 100 states"));
}

// 3. Kepler closed forms against the numeric linear solve and quadrature.
Outcome kepler_cross_check() {
  const WinternitzParams p{1.0, 0.25, 0.25, 1.0};
  const KeplerErmakovSpec kspec = winternitz_system(p);
  const LinearizableSpec spec = as_linearizable(kspec);
  const Interval domain{oracle::kPi / 6, 5 * oracle::kPi / 6};
  const double theta0 = oracle::kPi / 2;
  double psi_err = 0.0;
  double T_err = 0.0;
  int T_points = 0;
  for (double Ival : {2.0, 3.0}) {
    const InvariantValue I{Ival, ""};
    const double h0 = std::sqrt(2 * (Ival - oracle::winternitz_V(p.g1, p.g2, theta0)));
    // Initial data of an orbit through theta0 with r = 1.3, rdot = -0.2.
    const PolarState s0{1.3, theta0, -0.2, h0 / (1.3 * 1.3), 0.0};
    const PsiInitialData d = psi_initial_data(spec.rho, s0);
    const LinearODE ode = build_linear_ode(spec, I, domain, +1);
    const std::array<double, 2> grid{domain.lo, domain.hi};
    const LinearSolution sol = solve_linear(ode, theta0, d.psi, d.dpsi, grid);

    // T = 0 at theta0, so psi(0) and dpsi/dT = h dpsi/dtheta fix c1 and c2.
    const double Omega = std::sqrt(2 * (Ival + p.g3));
    const double particular = p.mu0 / (Omega * Omega);
    const double c1 = d.psi - particular;
    const double c2 = h0 * d.dpsi / Omega;
    for (int k = 0; k <= 400; ++k) {
      const double theta = domain.lo + domain.length() * k / 400;
      psi_err = std::max(psi_err,
                         std::abs(kepler_closed_form(p, I, c1, c2, 0.0, theta) - sol.psi(theta)));
      const auto closed = kepler_T_closed_form(p, I, theta, 0.0);
      if (!closed) continue;
      T_err = std::max(T_err, std::abs(quadrature_T(theta, I, kspec.V, 0.0) - *closed));
      ++T_points;
    }
  }
  if (T_points == 0) return {false, "closed-form T never valid"};
  return both(check(psi_err, 1e-8, "sup |psi closed - psi numeric|"),
              check(T_err, 1e-9, "sup |T quadrature - T arcsin| over " +
                                     std::to_string(T_points) + " angles"));
}

// Sup-norm distance between the linearized reconstruction and a direct
// integration of the polar system over [t0, t0 + span].
struct RoundTrip {
  double r_err = 0.0;
  double theta_err = 0.0;
  double span = 0.0;
  std::string note;
};

RoundTrip round_trip(const PolarSystem& sys, const LinearizableSpec& spec, const PolarState& s0,
                     double t_end) {
  RoundTrip out;
  const LinearizedPipeline pipe(spec, s0, t_end);
  const double t1 = std::min(t_end, pipe.covered_until());
  out.span = t1 - s0.t;
  IntegratorConfig cfg;
  cfg.t_start = s0.t;
  cfg.t_end = t1;
  cfg.rel_tol = 1e-11;
  cfg.abs_tol = 1e-13;
  PolarEventOptions opts;
  opts.turning_points = true;
  const Trajectory traj = integrate_polar(sys, s0, cfg, opts);
  if (!traj.completed()) {
    out.note = "direct integration stopped: " + traj.message;
    out.r_err = out.theta_err = INFINITY;
    return out;
  }
  for (const Event& e : traj.events)
    if (e.kind == EventKind::TurningPoint) out.note = "turning point inside the window";
  for (int k = 0; k <= 400; ++k) {
    const double t = s0.t + out.span * k / 400;
    const PolarState s = polar_state_at(traj, t);
    out.r_err = std::max(out.r_err, std::abs(pipe.r_at(t) - s.r));
    out.theta_err = std::max(out.theta_err, std::abs(pipe.theta_at(t) - s.theta));
  }
  return out;
}

Outcome report_round_trip(const std::string& label, const RoundTrip& rt) {
  if (!rt.note.empty()) return {false, label + ": " + rt.note};
  if (rt.span < 2.0) return {false, label + ": window only " + sci(rt.span) + " long"};
  return check(std::max(rt.r_err, rt.theta_err), 1e-5,
               label + " sup error over " + sci(rt.span) + " time units");
}

LinearizableSpec generic_spec() {
  LinearizableSpec spec;
  spec.rho = parse("1 + t^2/10");
  spec.A = parse("sin(theta)");
  spec.B = parse("L");
  spec.C = parse("1");
  spec.F = num(0.0);
  spec.V = parse("0.3*sin(theta)^2");
  return spec;
}

// 4. Round-trip reconstruction.
Outcome round_trip_reconstruction() {
  const WinternitzParams p{1.0, 1.0, 0.5, 1.0};
  const KeplerErmakovSpec kspec = winternitz_system(p);
  const PolarState w0{1.0, oracle::kPi / 2, 0.0, 2.0, 0.0};
  const Outcome a = report_round_trip(
      "(a) Winternitz", round_trip(PolarSystem(kspec), as_linearizable(kspec), w0, 10.0));

  const LinearizableSpec spec = generic_spec();
  const PolarState g0{1.0, 0.3, 0.0, 1.5, 0.0};
  const Outcome b =
      report_round_trip("(b) generic", round_trip(PolarSystem(spec), spec, g0, 3.0));
  return both(a, b);
}

// 5. Free motion with f(u) = u, rho = 1.
Outcome free_motion() {
  const FreeMotionSystem fm = free_motion_system(parse("u"), num(1.0));
  const CartesianSystem csys(fm.cartesian);
  const PolarState s0{1.0, oracle::kPi / 4, 0.1, 3.0, 0.0};
  IntegratorConfig cfg;
  cfg.t_start = 0.0;
  cfg.t_end = 0.15;
  cfg.rel_tol = 1e-12;
  cfg.abs_tol = 1e-14;
  // Direct route: cartesian equations with the cartesian frequency.
  const Trajectory traj = integrate_cartesian(csys, to_cartesian(s0), cfg);
  if (!traj.completed()) return {false, "cartesian integration stopped: " + traj.message};
  std::vector<double> th, psi;
  for (int k = 0; k <= 300; ++k) {
    const CartesianState c = cartesian_state_at(traj, cfg.t_end * k / 300);
    th.push_back(std::atan2(c.y, c.x));
    psi.push_back(1.0 / std::hypot(c.x, c.y));
  }
  const oracle::AffineFit fit = oracle::fit_affine(th, psi);
  const Outcome affine = check(fit.max_residual, 1e-8, "affine fit residual of psi(theta)");

  const InvariantValue I = lewis_ray_reid_polar(s0, fm.polar.V);
  const Interval domain{th.front(), th.back()};
  const LinearODE ode = build_linear_ode(fm.polar, I, domain, +1);
  const PsiInitialData d = psi_initial_data(fm.polar.rho, s0);
  const std::array<double, 2> grid{domain.lo, domain.hi};
  const LinearSolution sol = solve_linear(ode, s0.theta, d.psi, d.dpsi, grid);
  double line_err = 0.0;
  for (int k = 0; k <= 300; ++k) {
    const double theta = domain.lo + domain.length() * k / 300;
    line_err = std::max(line_err, std::abs(sol.psi(theta) - (d.psi + d.dpsi * (theta - s0.theta))));
  }
  return both(affine, check(line_err, 1e-9, "solve_linear distance from the straight line"));
}

// 6. Cartesian and polar integrations of random cartesian specs.
Outcome coordinate_equivalence() {
  std::mt19937_64 rng(6);
  double worst = 0.0;
  for (int k = 0; k < 5; ++k) {
    const oracle::RandomCartesian rc = oracle::random_cartesian(rng);
    const CartesianSpec spec{parse(rc.f), parse(rc.g), parse(rc.omega_sq)};
    const CartesianState c0{rc.x, rc.y, rc.xdot, rc.ydot, 0.0};
    IntegratorConfig cfg;
    cfg.t_start = 0.0;
    cfg.t_end = 2.0;
    const Trajectory ct = integrate_cartesian(CartesianSystem(spec), c0, cfg);
    const Trajectory pt = integrate_polar(PolarSystem(polar_from_cartesian(spec)), to_polar(c0), cfg);
    if (!ct.completed() || !pt.completed())
      return {false, "spec " + std::to_string(k) + " did not complete: " + ct.message + pt.message};
    for (int j = 0; j <= 400; ++j) {
      const double t = 2.0 * j / 400;
      const CartesianState a = cartesian_state_at(ct, t);
      const CartesianState b = to_cartesian(polar_state_at(pt, t));
      if (a.x * a.y == 0.0) return {false, "trajectory reached an axis"};
      worst = std::max({worst, std::abs(a.x - b.x), std::abs(a.y - b.y)});
    }
  }
  return check(worst, 1e-6, "sup |cartesian - polar| over 5 specs");
}

// 7. Quasi-invariance: direct trajectory against the barred system.
Outcome quasi_invariance() {
  const LinearizableSpec spec = generic_spec();
  const PolarState s0{1.0, 0.3, 0.0, 1.5, 0.0};
  const double t_end = 3.0;
  IntegratorConfig cfg;
  cfg.t_start = 0.0;
  cfg.t_end = t_end;
  cfg.rel_tol = 1e-11;
  cfg.abs_tol = 1e-13;
  const Trajectory direct = integrate_polar(PolarSystem(spec), s0, cfg);

  // Initial barred state from rbar = r/rho, rbar' = rho rdot - rhodot r, theta' = rho^2 thetadot
  // with rho(0) = 1, rhodot(0) = 0.
  const BarredState b0{s0.r, s0.theta, s0.rdot, s0.thetadot, 0.0};
  const double a = std::sqrt(10.0);
  IntegratorConfig bcfg = cfg;
  bcfg.t_end = oracle::rescaled_time_quadratic_rho(a, t_end);
  const Trajectory barred = integrate_barred(BarredSystem(spec), b0, bcfg);
  if (!direct.completed() || !barred.completed()) return {false, "integration stopped"};
  double worst = 0.0;
  for (int k = 0; k <= 400; ++k) {
    const double t = t_end * k / 400;
    const double rho = 1.0 + t * t / 10.0;
    const PolarState s = polar_state_at(direct, t);
    const State sb = barred.at(oracle::rescaled_time_quadratic_rho(a, t));
    worst = std::max({worst, std::abs(s.r / rho - sb[0]), std::abs(s.theta - sb[1])});
  }
  return check(worst, 1e-6, "sup distance after time reparametrization");
}

// 8. Observed order on the isotropic oscillator.
Outcome integrator_order() {
  const RhsFunction f = [](double, std::span<const double> y, std::span<double> dy) {
    dy[0] = y[2];
    dy[1] = y[3];
    dy[2] = -y[0];
    dy[3] = -y[1];
  };
  const State y0{1.0, 0.0, 0.0, 1.0};
  auto run = [&](double tol) {
    IntegratorConfig cfg;
    cfg.t_start = 0.0;
    cfg.t_end = 2 * oracle::kPi;
    cfg.rel_tol = tol;
    cfg.abs_tol = tol * 1e-3;
    return integrate(f, y0, cfg);
  };
  const Trajectory ref = run(1e-12);
  const State yr = ref.state(ref.size() - 1);
  std::vector<double> steps, errs;
  for (double tol = 1e-5; tol >= 1e-8; tol /= 2) {
    const Trajectory tr = run(tol);
    const State y = tr.state(tr.size() - 1);
    double e = 0.0;
    for (std::size_t i = 0; i < 4; ++i) e = std::max(e, std::abs(y[i] - yr[i]));
    steps.push_back(static_cast<double>(tr.accepted_steps));
    errs.push_back(e);
  }
  const double slope = -oracle::loglog_slope(steps, errs);
  return {slope >= 3.5, "endpoint error ~ steps^-p with p = " + sci(slope) + " (need >= 3.5)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 invariant conservation", invariant_conservation},
      {"2 usual-Ermakov homogeneity", usual_ermakov},
      {"3 Kepler closed-form cross-check", kepler_cross_check},
      {"4 round-trip reconstruction", round_trip_reconstruction},
      {"5 free-motion class", free_motion},
      {"6 coordinate equivalence", coordinate_equivalence},
      {"7 quasi-invariance", quasi_invariance},
      {"8 integrator order", integrator_order},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}

#include "ermakov/model.hpp"

#include <cmath>

#include "ermakov/error.hpp"
#include "ermakov/quadrature.hpp"

namespace ermakov {

using namespace expr;

namespace {

const Expression kTheta = var("theta");
const Expression kR = var("r");
const Expression kL = var("L");

double eval_at(const Expression& e, std::string_view name, double value) {
  Bindings env;
  env.set(name, value);
  return e.evaluate(env);
}

Expression derivative_in(const Expression& e, std::string_view v) {
  return simplify(differentiate(e, v));
}

}  // namespace

expr::Bindings polar_bindings(const PolarState& s) {
  return {{"t", s.t},
          {"r", s.r},
          {"theta", s.theta},
          {"rdot", s.rdot},
          {"thetadot", s.thetadot},
          {"L", s.r * s.r * s.thetadot}};
}

expr::Bindings cartesian_bindings(const CartesianState& s) {
  return {{"t", s.t}, {"x", s.x}, {"y", s.y}, {"xdot", s.xdot}, {"ydot", s.ydot}};
}

PolarState to_polar(const CartesianState& s) {
  const double r2 = s.x * s.x + s.y * s.y;
  if (r2 == 0.0) throw DomainError("polar coordinates are undefined at the origin");
  const double r = std::sqrt(r2);
  return {r, std::atan2(s.y, s.x), (s.x * s.xdot + s.y * s.ydot) / r,
          (s.x * s.ydot - s.y * s.xdot) / r2, s.t};
}

CartesianState to_cartesian(const PolarState& s) {
  const double c = std::cos(s.theta);
  const double sn = std::sin(s.theta);
  return {s.r * c, s.r * sn, s.rdot * c - s.r * s.thetadot * sn,
          s.rdot * sn + s.r * s.thetadot * c, s.t};
}

Expression F_from_fg(const Expression& f, const Expression& g) {
  if (f.is_zero() && g.is_zero()) return num(0.0);
  Expression numerator;
  if (!f.is_zero()) numerator = substitute(f, "u", tan(kTheta));
  if (!g.is_zero()) {
    Expression gs = substitute(g, "v", cos(kTheta) / sin(kTheta));
    numerator = f.is_zero() ? gs : numerator + gs;
  }
  return numerator / (sin(kTheta) * cos(kTheta));
}

double U_from_fg(const Expression& f, const Expression& g, double w) {
  if (f.is_zero() && g.is_zero()) return 0.0;
  if (!(w > 0.0)) throw DomainError("U(w) is anchored at w = 1 and needs w > 0");
  // Panel count grows with |log w| so the rule stays accurate far from the anchor.
  const int panels = 4 + static_cast<int>(8.0 * std::abs(std::log(w)));
  double total = 0.0;
  if (!f.is_zero())
    total += integrate_fixed([&](double l) { return eval_at(f, "u", l); }, 1.0, w, panels);
  if (!g.is_zero())
    total += integrate_fixed([&](double l) { return eval_at(g, "v", l); }, 1.0, 1.0 / w, panels);
  return total;
}

Expression V_from_fg(const Expression& f, const Expression& g) {
  if (f.is_zero() && g.is_zero()) return num(0.0);
  const Expression w = var(std::string(extern_placeholder));
  Expression dU;
  if (!f.is_zero()) dU = substitute(f, "u", w);
  if (!g.is_zero()) {
    Expression gterm = substitute(g, "v", num(1.0) / w) / pow(w, num(2.0));
    dU = f.is_zero() ? -gterm : dU - gterm;
  }
  return Expression::external(
      "U", [f, g](double arg) { return U_from_fg(f, g, arg); }, dU, tan(kTheta));
}

PolarSpec polar_from_cartesian(const CartesianSpec& spec) {
  const Expression c = cos(kTheta);
  const Expression s = sin(kTheta);
  const Expression rdot = var("rdot");
  const Expression thetadot = var("thetadot");
  Expression w2 = spec.omega_sq;
  w2 = substitute(w2, "x", kR * c);
  w2 = substitute(w2, "y", kR * s);
  w2 = substitute(w2, "xdot", rdot * c - kR * thetadot * s);
  w2 = substitute(w2, "ydot", rdot * s + kR * thetadot * c);
  return {F_from_fg(spec.f, spec.g), V_from_fg(spec.f, spec.g), w2};
}

PolarSpec absorb_F(const PolarSpec& spec) {
  if (spec.F.is_zero()) return spec;
  return {num(0.0), spec.V, spec.omega_sq - spec.F / pow(kR, num(4.0))};
}

Expression frequency_from_linearizable(const LinearizableSpec& spec) {
  const Expression L = pow(kR, num(2.0)) * var("thetadot");
  const Expression& rho = spec.rho;
  const Expression rho_dot = derivative_in(rho, "t");
  const Expression rho_ddot = derivative_in(rho_dot, "t");
  const Expression A = substitute(spec.A, "L", L);
  const Expression B = substitute(spec.B, "L", L);
  const Expression C = substitute(spec.C, "L", L);
  const Expression r3 = pow(kR, num(3.0));
  Expression w2 = -(rho_ddot / rho) +
                  (rho * var("rdot") - rho_dot * kR) / (rho * r3) * A +
                  B / pow(kR, num(4.0)) + C / (rho * r3);
  return simplify(w2);
}

LinearizableSpec as_linearizable(const KeplerErmakovSpec& spec) {
  return {num(1.0), num(0.0), num(0.0), spec.G, spec.F, spec.V};
}

KeplerErmakovSpec winternitz_system(const WinternitzParams& p) {
  const Expression V = (num(p.g1) + num(p.g2) * cos(kTheta)) / pow(sin(kTheta), num(2.0));
  return {num(2.0) * (V + num(p.g3)), num(p.mu0), V};
}

double winternitz_hamiltonian(const WinternitzParams& p, const PolarState& s) {
  const double sn = std::sin(s.theta);
  const double V = (p.g1 + p.g2 * std::cos(s.theta)) / (sn * sn);
  return 0.5 * (s.rdot * s.rdot + s.r * s.r * s.thetadot * s.thetadot) - p.mu0 / s.r +
         (V + p.g3) / (s.r * s.r);
}

FreeMotionSystem free_motion_system(const Expression& f, const Expression& rho) {
  // g(x/y) = -f(y/x); with this pairing f(tan) + g(cot) cancels and F = 0.
  const Expression g = f.is_zero() ? num(0.0) : -substitute(f, "u", num(1.0) / var("v"));
  const Expression V = V_from_fg(f, g);
  const Expression dV = derivative_in(V, "theta");

  FreeMotionSystem out;
  out.polar.rho = rho;
  out.polar.A = dV.is_zero() ? num(0.0) : dV / kL;
  out.polar.B = pow(kL, num(2.0));
  out.polar.C = num(0.0);
  out.polar.F = num(0.0);
  out.polar.V = V;

  const Expression x = var("x");
  const Expression y = var("y");
  const Expression xdot = var("xdot");
  const Expression ydot = var("ydot");
  const Expression rho_dot = derivative_in(rho, "t");
  const Expression rho_ddot = derivative_in(rho_dot, "t");
  const Expression ang = x * ydot - y * xdot;
  Expression w2 = -(rho_ddot / rho) + pow(ang / (pow(x, num(2.0)) + pow(y, num(2.0))), num(2.0));
  if (!f.is_zero()) {
    w2 = w2 + ((rho * xdot - rho_dot * x) * x + (rho * ydot - rho_dot * y) * y) /
                  (rho * pow(x, num(2.0)) * pow(y, num(2.0)) * ang) *
                  substitute(f, "u", y / x);
  }
  out.cartesian = {f, g, simplify(w2)};
  return out;
}

double rescaled_time(const Expression& rho, double t0, double t) {
  if (t == t0) return 0.0;
  constexpr int kProbes = 64;
  double first = eval_at(rho, "t", t0);
  for (int k = 0; k <= kProbes; ++k) {
    const double tk = t0 + (t - t0) * k / kProbes;
    const double value = eval_at(rho, "t", tk);
    if (value == 0.0 || (value > 0.0) != (first > 0.0))
      throw DomainError("rho(t) vanishes inside the time window near t = " + std::to_string(tk));
  }
  return integrate_adaptive(
      [&](double l) {
        const double p = eval_at(rho, "t", l);
        if (p == 0.0) throw DomainError("rho(t) = 0");
        return 1.0 / (p * p);
      },
      t0, t);
}

BarredState quasi_invariance_map(const Expression& rho, const PolarState& s, double t0) {
  const double p = eval_at(rho, "t", s.t);
  if (p == 0.0) throw DomainError("rho(t) = 0");
  const double pdot = eval_at(derivative_in(rho, "t"), "t", s.t);
  return {s.r / p, s.theta, p * s.rdot - pdot * s.r, p * p * s.thetadot,
          rescaled_time(rho, t0, s.t)};
}

// ---------------------------------------------------------------- PolarSystem

PolarSystem::PolarSystem(Expression F, Expression G, Expression V, Expression omega_sq)
    : F_(std::move(F)),
      G_(std::move(G)),
      V_(std::move(V)),
      dV_(derivative_in(V_, "theta")),
      omega_sq_(std::move(omega_sq)) {}

PolarSystem::PolarSystem(const PolarSpec& spec)
    : PolarSystem(spec.F, num(0.0), spec.V, spec.omega_sq) {}

PolarSystem::PolarSystem(const LinearizableSpec& spec)
    : PolarSystem(spec.F, num(0.0), spec.V, frequency_from_linearizable(spec)) {}

PolarSystem::PolarSystem(const KeplerErmakovSpec& spec)
    : PolarSystem(spec.F, spec.G, spec.V, num(0.0)) {}

double PolarSystem::omega_sq(const PolarState& s) const {
  if (omega_sq_.is_zero()) return 0.0;
  return omega_sq_.evaluate(polar_bindings(s));
}

PolarDerivative PolarSystem::derivative(const PolarState& s) const {
  if (!(s.r > 0.0)) throw DomainError("radius must stay positive");
  const Bindings env = polar_bindings(s);
  const double r = s.r;
  const double r2 = r * r;
  const double r3 = r2 * r;
  double rddot = r * s.thetadot * s.thetadot;
  if (!omega_sq_.is_zero()) rddot -= omega_sq_.evaluate(env) * r;
  if (!F_.is_zero()) rddot += F_.evaluate(env) / r3;
  if (!G_.is_zero()) rddot -= G_.evaluate(env) / r2;
  double torque = 0.0;
  if (!dV_.is_zero()) torque = -dV_.evaluate(env) / r3;
  return {s.rdot, s.thetadot, rddot, (torque - 2.0 * s.rdot * s.thetadot) / r};
}

PolarDerivative rhs_polar(const PolarSystem& system, const PolarState& s) {
  return system.derivative(s);
}

// ---------------------------------------------------------------- CartesianSystem

CartesianSystem::CartesianSystem(const CartesianSpec& spec) : spec_(spec) {}

CartesianDerivative CartesianSystem::derivative(const CartesianState& s) const {
  const double w2 = spec_.omega_sq.is_zero() ? 0.0 : spec_.omega_sq.evaluate(cartesian_bindings(s));
  double xddot = -w2 * s.x;
  double yddot = -w2 * s.y;
  if (!spec_.f.is_zero()) {
    if (s.x == 0.0 || s.y == 0.0) throw DomainError("axis crossing with non-zero coupling f");
    xddot += eval_at(spec_.f, "u", s.y / s.x) / (s.y * s.x * s.x);
  }
  if (!spec_.g.is_zero()) {
    if (s.x == 0.0 || s.y == 0.0) throw DomainError("axis crossing with non-zero coupling g");
    yddot += eval_at(spec_.g, "v", s.x / s.y) / (s.x * s.y * s.y);
  }
  return {s.xdot, s.ydot, xddot, yddot};
}

CartesianDerivative rhs_cartesian(const CartesianSystem& system, const CartesianState& s) {
  return system.derivative(s);
}

// ---------------------------------------------------------------- BarredSystem

BarredSystem::BarredSystem(const LinearizableSpec& spec)
    : spec_(spec), dV_(derivative_in(spec.V, "theta")) {}

PolarDerivative BarredSystem::derivative(const BarredState& s) const {
  if (!(s.rbar > 0.0)) throw DomainError("rescaled radius must stay positive");
  const double r = s.rbar;
  const double r2 = r * r;
  const double L = r2 * s.theta_prime;
  const Bindings env{{"theta", s.theta}, {"L", L}};
  const double A = spec_.A.is_zero() ? 0.0 : spec_.A.evaluate(env);
  const double B = spec_.B.is_zero() ? 0.0 : spec_.B.evaluate(env);
  const double C = spec_.C.is_zero() ? 0.0 : spec_.C.evaluate(env);
  const double F = spec_.F.is_zero() ? 0.0 : spec_.F.evaluate(env);
  const double dV = dV_.is_zero() ? 0.0 : dV_.evaluate(env);
  const double rddot =
      r * s.theta_prime * s.theta_prime - (A * s.rbar_prime + B / r + C) / r2 + F / (r2 * r);
  const double thddot = (-dV / (r2 * r) - 2.0 * s.rbar_prime * s.theta_prime) / r;
  return {s.rbar_prime, s.theta_prime, rddot, thddot};
}

}  // namespace ermakov

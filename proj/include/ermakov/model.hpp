#pragma once

// Ermakov system families and the conversions between them.
//
// Variable conventions inside expressions:
//   f: u (= y/x)          g: v (= x/y)
//   cartesian omega^2: t, x, y, xdot, ydot
//   polar omega^2:     t, r, theta, rdot, thetadot (L = r^2 thetadot also bound)
//   F, G, V:           theta
//   rho:               t
//   A, B, C:           theta, L

#include <string>

#include "ermakov/expr.hpp"

namespace ermakov {

using expr::Expression;

struct CartesianState {
  double x = 0.0;
  double y = 0.0;
  double xdot = 0.0;
  double ydot = 0.0;
  double t = 0.0;
};

struct PolarState {
  double r = 1.0;
  double theta = 0.0;
  double rdot = 0.0;
  double thetadot = 0.0;
  double t = 0.0;
};

/// Throws DomainError at the origin.
PolarState to_polar(const CartesianState& s);
CartesianState to_cartesian(const PolarState& s);

struct CartesianSpec {
  Expression f;
  Expression g;
  Expression omega_sq;
};

struct PolarSpec {
  Expression F;
  Expression V;
  Expression omega_sq;
};

/// The six-function linearizable family.
struct LinearizableSpec {
  Expression rho;
  Expression A;
  Expression B;
  Expression C;
  Expression F;
  Expression V;
};

struct KeplerErmakovSpec {
  Expression F;
  Expression G;
  Expression V;
};

struct WinternitzParams {
  double mu0 = 1.0;
  double g1 = 1.0;
  double g2 = 0.5;
  double g3 = 1.0;
};

/// (f(tan theta) + g(cot theta)) / (sin theta cos theta).
Expression F_from_fg(const Expression& f, const Expression& g);

/// int_1^w f + int_1^{1/w} g by composite Gauss-Legendre (so U(1) = 0).
/// Requires w > 0 unless both functions are the literal zero.
double U_from_fg(const Expression& f, const Expression& g, double w);

/// V(theta) = U(tan theta) as a callable-backed expression whose symbolic
/// derivative is exact: U'(w) = f(w) - g(1/w)/w^2.
Expression V_from_fg(const Expression& f, const Expression& g);

PolarSpec polar_from_cartesian(const CartesianSpec& spec);

/// omega^2 -> omega^2 - F/r^4, F -> 0. Idempotent.
PolarSpec absorb_F(const PolarSpec& spec);

/// omega^2 of the linearizable family in (t, r, theta, rdot, thetadot).
Expression frequency_from_linearizable(const LinearizableSpec& spec);

/// A = B = 0, C = G, rho = 1.
LinearizableSpec as_linearizable(const KeplerErmakovSpec& spec);

/// Kepler-Ermakov system generated by the non-central Hamiltonian with
/// V = (g1 + g2 cos theta)/sin^2 theta, F = 2(V + g3), G = mu0.
KeplerErmakovSpec winternitz_system(const WinternitzParams& p);

/// H = (rdot^2 + r^2 thetadot^2)/2 - mu0/r + (V + g3)/r^2.
double winternitz_hamiltonian(const WinternitzParams& p, const PolarState& s);

/// Systems whose linearized equation is psi'' = 0.
struct FreeMotionSystem {
  LinearizableSpec polar;
  CartesianSpec cartesian;
};

/// Builds the free-motion class from f and rho: g(v) = -f(1/v) (so F = 0),
/// V = U(tan theta), A = (dV/dtheta)/L, B = L^2 + F, C = 0, plus the
/// equivalent cartesian frequency.
FreeMotionSystem free_motion_system(const Expression& f, const Expression& rho);

/// State of the autonomous representation reached by the quasi-invariance
/// transformation. Primes are derivatives with respect to tbar.
struct BarredState {
  double rbar = 1.0;
  double theta = 0.0;
  double rbar_prime = 0.0;
  double theta_prime = 0.0;
  double tbar = 0.0;
};

/// rbar = r/rho, thetabar = theta, tbar = int_{t0}^t dl/rho^2.
/// Throws DomainError if rho vanishes on [t0, t].
BarredState quasi_invariance_map(const Expression& rho, const PolarState& s, double t0);

/// int_{t0}^t dl/rho^2(l), checking rho for sign changes.
double rescaled_time(const Expression& rho, double t0, double t);

struct PolarDerivative {
  double rdot = 0.0;
  double thetadot = 0.0;
  double rddot = 0.0;
  double thetaddot = 0.0;
};

/// Prepared polar equations of motion:
///   rddot = r thetadot^2 - omega^2 r + F/r^3 - G/r^2
///   thetaddot = (-(dV/dtheta)/r^3 - 2 rdot thetadot)/r
class PolarSystem {
 public:
  explicit PolarSystem(const PolarSpec& spec);
  explicit PolarSystem(const LinearizableSpec& spec);
  explicit PolarSystem(const KeplerErmakovSpec& spec);

  PolarDerivative derivative(const PolarState& s) const;
  double omega_sq(const PolarState& s) const;

  const Expression& F() const { return F_; }
  const Expression& G() const { return G_; }
  const Expression& V() const { return V_; }
  const Expression& dV() const { return dV_; }
  const Expression& omega_sq_expression() const { return omega_sq_; }

 private:
  PolarSystem(Expression F, Expression G, Expression V, Expression omega_sq);

  Expression F_, G_, V_, dV_, omega_sq_;
};

PolarDerivative rhs_polar(const PolarSystem& system, const PolarState& s);

struct CartesianDerivative {
  double xdot = 0.0;
  double ydot = 0.0;
  double xddot = 0.0;
  double yddot = 0.0;
};

/// xddot = -omega^2 x + f(y/x)/(y x^2), yddot = -omega^2 y + g(x/y)/(x y^2).
/// A coupling term whose function is the literal zero is skipped, so only
/// non-trivial couplings make the axes singular.
class CartesianSystem {
 public:
  explicit CartesianSystem(const CartesianSpec& spec);

  CartesianDerivative derivative(const CartesianState& s) const;
  const CartesianSpec& spec() const { return spec_; }

 private:
  CartesianSpec spec_;
};

CartesianDerivative rhs_cartesian(const CartesianSystem& system, const CartesianState& s);

/// Prepared equations of the barred (autonomous) system:
///   rbar'' = rbar thetabar'^2 - (A rbar' + B/rbar + C)/rbar^2 + F/rbar^3
///   rbar thetabar'' + 2 rbar' thetabar' = -(dV/dtheta)/rbar^3
/// with A, B, C evaluated at (thetabar, rbar^2 thetabar').
class BarredSystem {
 public:
  explicit BarredSystem(const LinearizableSpec& spec);
  /// Returns (rbar', thetabar', rbar'', thetabar'').
  PolarDerivative derivative(const BarredState& s) const;

 private:
  LinearizableSpec spec_;
  Expression dV_;
};

expr::Bindings polar_bindings(const PolarState& s);
expr::Bindings cartesian_bindings(const CartesianState& s);

}  // namespace ermakov

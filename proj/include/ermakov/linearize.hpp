#pragma once

// Linearization of the generalized Ermakov system in the variables
// psi = rho(t)/r and theta, and reconstruction of (r, theta)(t) from the
// linear solution through the time quadrature
//
//   int^theta dl / (h psi^2)  -  int^t dl / rho^2  =  J.
//
// On shell r^2 thetadot = branch_sign * h(theta; I), and the functions of
// the linearized equation follow from the system's A, B, C as
//   a = -L A(theta, L),  b = B(theta, L),  c = C(theta, L),  L = branch_sign * h.

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ermakov/integrate.hpp"
#include "ermakov/invariant.hpp"
#include "ermakov/model.hpp"
#include "ermakov/quadrature.hpp"

namespace ermakov {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return x >= lo && x <= hi; }
  double length() const { return hi - lo; }
};

/// p2 psi'' + p1 psi' + p0 psi = rhs at a fixed invariant value, with
///   p2 = h^2, p1 = h dh/dtheta - a, p0 = h^2 + F - b, rhs = c.
class LinearODE {
 public:
  struct Coefficients {
    double p2 = 0.0;
    double p1 = 0.0;
    double p0 = 0.0;
    double rhs = 0.0;
  };

  LinearODE(const LinearizableSpec& spec, InvariantValue I, Interval domain, int branch_sign);

  Coefficients at(double theta) const;
  double h(double theta) const;
  /// h dh/dtheta = -dV/dtheta, evaluated without dividing by h.
  double h_dh(double theta) const;

  /// C as given; the equation is homogeneous exactly when this is the literal zero.
  const Expression& rhs_expression() const { return spec_.C; }
  bool homogeneous() const { return spec_.C.is_zero(); }

  const LinearizableSpec& spec() const { return spec_; }
  const InvariantValue& invariant() const { return I_; }
  const Interval& domain() const { return domain_; }
  int branch_sign() const { return branch_; }

 private:
  LinearizableSpec spec_;
  Expression dV_;
  InvariantValue I_;
  Interval domain_;
  int branch_;
};

/// Throws ForbiddenRegion naming the first offending angle when
/// I <= V(theta) + tol somewhere on the domain.
LinearODE build_linear_ode(const LinearizableSpec& spec, const InvariantValue& I,
                           Interval theta_domain, int branch_sign = 1);

struct LinearSolveConfig {
  double rel_tol = 1e-11;
  double abs_tol = 1e-13;
};

/// psi = c1 psi1 + c2 psi2 + psi_p, where psi1, psi2 take the unit initial
/// data (1, 0) and (0, 1) at theta0 and psi_p starts from (0, 0).
class LinearSolution {
 public:
  LinearSolution(const LinearODE& ode, double theta0, double c1, double c2,
                 std::optional<Trajectory> forward, std::optional<Trajectory> backward);

  double psi(double theta) const;
  double dpsi(double theta) const;
  double psi1(double theta) const { return component(theta, 0); }
  double psi2(double theta) const { return component(theta, 2); }
  double psi_p(double theta) const { return component(theta, 4); }
  double dpsi1(double theta) const { return component(theta, 1); }
  double dpsi2(double theta) const { return component(theta, 3); }
  double wronskian(double theta) const;

  double c1() const { return c1_; }
  double c2() const { return c2_; }
  double theta0() const { return theta0_; }
  Interval span() const { return span_; }
  /// Accepted-step boundaries of the underlying integrations, sorted.
  std::vector<double> nodes() const;
  const LinearODE& ode() const { return ode_; }

  ScalarFunction as_function() const;

 private:
  double component(double theta, std::size_t i) const;

  LinearODE ode_;
  double theta0_;
  double c1_;
  double c2_;
  std::optional<Trajectory> forward_;
  std::optional<Trajectory> backward_;
  Interval span_;
};

/// Integrates the three basis problems outward from theta0 to cover the grid
/// and fixes c1 = psi0, c2 = dpsi0 (psi_p vanishes with its slope at theta0).
LinearSolution solve_linear(const LinearODE& ode, double theta0, double psi0, double dpsi0,
                            std::span<const double> grid, const LinearSolveConfig& cfg = {});

/// Angle at which the T-integral is anchored.
inline constexpr double kTBasePoint = 1.5707963267948966;

/// T(theta) = int_{pi/2}^{theta} dl / h(l; I) + J.
double quadrature_T(double theta, const InvariantValue& I, const Expression& V, double J);

/// Arcsin closed form of T for the non-central Kepler-Ermakov potential,
/// anchored at pi/2 like quadrature_T. Empty when I <= 0, when
/// g2^2 + 4 I (I - g1) <= 0, when theta is outside (0, pi) or when the
/// arcsin argument leaves [-1, 1].
std::optional<double> kepler_T_closed_form(const WinternitzParams& p, const InvariantValue& I,
                                           double theta, double J);

/// Angular frequency of the driven oscillator d2psi/dT2 + Omega^2 psi = mu0:
/// Omega^2 = h^2 + F = 2 (I + g3).
double kepler_frequency(const WinternitzParams& p, const InvariantValue& I);

/// psi = c1 cos(Omega T) + c2 sin(Omega T) + mu0 / Omega^2.
double kepler_closed_form(const WinternitzParams& p, const InvariantValue& I, double c1, double c2,
                          double J, double theta);

/// Cumulative maps Theta(theta) = int_{theta0} dl / (branch h psi^2) and
/// Tau(t) = int_{t0} dl / rho^2 with Theta(theta) - Tau(t) = J on the orbit.
class QuadratureSolution {
 public:
  QuadratureSolution(CumulativeIntegral theta_map, CumulativeIntegral time_map, double J,
                     int branch_sign, double theta0, double t0);

  double theta_integral(double theta) const { return theta_map_(theta); }
  double time_integral(double t) const { return time_map_(t); }
  double J() const { return J_; }
  int branch_sign() const { return branch_; }
  double theta0() const { return theta0_; }
  double t0() const { return t0_; }
  Interval theta_window() const { return {theta_map_.lo(), theta_map_.hi()}; }
  Interval time_window() const { return {time_map_.lo(), time_map_.hi()}; }
  const CumulativeIntegral& theta_map() const { return theta_map_; }
  const CumulativeIntegral& time_map() const { return time_map_; }

  /// Time at which the orbit passes theta.
  double t_of_theta(double theta) const;

 private:
  CumulativeIntegral theta_map_;
  CumulativeIntegral time_map_;
  double J_;
  int branch_;
  double theta0_;
  double t0_;
};

struct QuadratureRequest {
  double theta0 = 0.0;
  Interval theta_window;  // must contain theta0
  double t0 = 0.0;
  Interval time_window;   // must contain t0
  double J = 0.0;
  int branch_sign = 1;
  std::vector<double> theta_nodes;  // optional panel boundaries
};

/// Throws DomainError on psi <= 0, rho = 0 or a turning point inside the
/// windows.
QuadratureSolution time_quadrature(const ScalarFunction& psi, const InvariantValue& I,
                                   const Expression& V, const Expression& rho,
                                   const QuadratureRequest& request);

QuadratureSolution time_quadrature(const LinearSolution& sol, const InvariantValue& I,
                                   const Expression& V, const Expression& rho,
                                   QuadratureRequest request);

/// theta with Theta(theta) = Tau(t) + J. Throws DomainError when t is
/// outside the covered window or the target lies beyond the covered angles.
double invert_theta_of_t(const QuadratureSolution& q, double t);

/// r(theta) = rho(t(theta)) / psi(theta); no inversion when rho is constant.
double reconstruct_orbit(const ScalarFunction& psi, const QuadratureSolution& q,
                         const Expression& rho, double theta);

/// r(t) = rho(t) / psi(theta(t)).
double reconstruct_radial(const ScalarFunction& psi, const QuadratureSolution& q,
                          const Expression& rho, double t);

/// psi = c1 + c2 theta.
double free_motion_solution(double c1, double c2, double theta);

/// |rho^3 (rhoddot + omega^2 rho)/psi^3 - (a psi' + b psi + c)| at a state,
/// with a, b, c taken at the invariant value of that state.
double compatibility_residual(const Expression& omega_sq, const LinearizableSpec& spec,
                              const PolarState& s);

/// compatibility_residual with omega^2 from frequency_from_linearizable.
double verify_compatibility(const LinearizableSpec& spec, const PolarState& s);

/// psi and dpsi/dtheta of a polar state.
struct PsiInitialData {
  double psi = 0.0;
  double dpsi = 0.0;
};
PsiInitialData psi_initial_data(const Expression& rho, const PolarState& s);

/// Maximal interval on which I > V + tol, grown from theta0 in the
/// requested directions (+1, -1 or 0 for both) up to `max_span`. Reports
/// the limiting turning point, if one was found, through `turning`.
struct WorkingInterval {
  Interval interval;
  std::optional<double> turning_lo;
  std::optional<double> turning_hi;
};
WorkingInterval working_interval(const Expression& V, const InvariantValue& I, double theta0,
                                 int direction, double max_span, double margin = 1e-4);

struct PipelineConfig {
  LinearSolveConfig linear;
  double max_theta_span = 50.0;
  double turning_margin = 1e-4;
  std::optional<Interval> theta_span;
  double J = 0.0;
};

/// Full linearized route from an initial polar state: invariant, branch,
/// psi initial data, working angle window, linear solve and the time
/// quadrature over [s0.t, t_end].
class LinearizedPipeline {
 public:
  LinearizedPipeline(const LinearizableSpec& spec, const PolarState& s0, double t_end,
                     const PipelineConfig& cfg = {});

  double theta_at(double t) const { return invert_theta_of_t(*quadrature_, t); }
  double r_at(double t) const;
  double r_of_theta(double theta) const;
  double psi(double theta) const { return solution_->psi(theta); }

  const InvariantValue& invariant() const { return I_; }
  int branch_sign() const { return branch_; }
  const LinearODE& ode() const { return solution_->ode(); }
  const LinearSolution& solution() const { return *solution_; }
  const QuadratureSolution& quadrature() const { return *quadrature_; }
  const WorkingInterval& window() const { return window_; }
  /// Largest time the angular window can serve.
  double covered_until() const { return covered_until_; }

 private:
  LinearizableSpec spec_;
  InvariantValue I_;
  int branch_ = 1;
  WorkingInterval window_;
  std::optional<LinearSolution> solution_;
  std::optional<QuadratureSolution> quadrature_;
  ScalarFunction psi_fn_;
  double covered_until_ = 0.0;
};

}  // namespace ermakov

#include "ermakov/invariant.hpp"

#include <cmath>

#include "ermakov/error.hpp"

namespace ermakov {

namespace {

double V_at(const Expression& V, double theta) {
  if (V.is_zero()) return 0.0;
  return V.evaluate({{"theta", theta}});
}

const char* convention_for(const Expression& V) {
  return V.op() == expr::Op::Extern ? kBasePointConvention : kDirectVConvention;
}

}  // namespace

InvariantValue lewis_ray_reid_polar(const PolarState& s, const Expression& V) {
  if (!(s.r > 0.0)) throw DomainError("radius must be positive");
  const double L = s.r * s.r * s.thetadot;
  return {0.5 * L * L + V_at(V, s.theta), convention_for(V)};
}

InvariantValue lewis_ray_reid_cartesian(const CartesianState& s, const Expression& f,
                                        const Expression& g) {
  const double L = s.x * s.ydot - s.y * s.xdot;
  double U = 0.0;
  if (!f.is_zero() || !g.is_zero()) {
    if (s.x == 0.0) throw DomainError("y/x undefined on the x = 0 axis");
    U = U_from_fg(f, g, s.y / s.x);
  }
  return {0.5 * L * L + U, kBasePointConvention};
}

double turning_point_tolerance(const InvariantValue& I) { return 1e-12 * (1.0 + std::abs(I.I)); }

double h(double theta, const InvariantValue& I, const Expression& V) {
  const double gap = I.I - V_at(V, theta);
  if (std::abs(gap) <= turning_point_tolerance(I))
    throw TurningPoint("turning point at theta = " + std::to_string(theta), theta);
  if (gap < 0.0)
    throw ForbiddenRegion("I < V(theta) at theta = " + std::to_string(theta), theta);
  return std::sqrt(2.0 * gap);
}

double theta_dot_from_invariant(double r, double theta, const InvariantValue& I,
                                const Expression& V, int branch_sign) {
  if (!(r > 0.0)) throw DomainError("radius must be positive");
  return (branch_sign < 0 ? -1.0 : 1.0) * h(theta, I, V) / (r * r);
}

int branch_sign_of(const PolarState& s) {
  if (s.thetadot == 0.0) throw TurningPoint("initial state sits on a turning point", s.theta);
  return s.thetadot > 0.0 ? 1 : -1;
}

}  // namespace ermakov

#pragma once

// Lewis-Ray-Reid invariant and the on-shell angular function h(theta; I).

#include <string>

#include "ermakov/expr.hpp"
#include "ermakov/model.hpp"

namespace ermakov {

struct InvariantValue {
  double I = 0.0;
  std::string convention_note;
};

inline constexpr const char* kBasePointConvention =
    "U anchored at y/x = 1 (theta = pi/4): V(pi/4) = 0 when V is built from f, g";
inline constexpr const char* kDirectVConvention = "V supplied directly";

/// I = (r^2 thetadot)^2 / 2 + V(theta).
InvariantValue lewis_ray_reid_polar(const PolarState& s, const Expression& V);

/// I = (x ydot - y xdot)^2 / 2 + U(y/x).
InvariantValue lewis_ray_reid_cartesian(const CartesianState& s, const Expression& f,
                                        const Expression& g);

/// |I - V(theta)| at or below this is a turning point.
double turning_point_tolerance(const InvariantValue& I);

/// h = sqrt(2 (I - V(theta))) >= 0. Throws TurningPoint when I - V is
/// within the turning-point tolerance and ForbiddenRegion when I < V.
double h(double theta, const InvariantValue& I, const Expression& V);

/// thetadot = branch_sign * h(theta; I) / r^2.
double theta_dot_from_invariant(double r, double theta, const InvariantValue& I,
                                const Expression& V, int branch_sign);

/// +1 or -1 from the sign of thetadot; zero angular velocity is rejected.
int branch_sign_of(const PolarState& s);

}  // namespace ermakov

#pragma once

// Adaptive quadrature and cumulative integral tables with monotone inversion.

#include <functional>
#include <vector>

namespace ermakov {

using ScalarFunction = std::function<double(double)>;

/// Adaptive Gauss-Kronrod (7/15) of f over [a, b]; b < a gives the signed
/// result. Exceptions raised by f propagate.
double integrate_adaptive(const ScalarFunction& f, double a, double b, double rel_tol = 1e-13);

/// Composite 20-point Gauss-Legendre over `panels` equal panels. Smooth in
/// the endpoints, so it can sit inside an outer adaptive integral.
double integrate_fixed(const ScalarFunction& f, double a, double b, int panels);

/// x -> integral of f from `anchor` to x, tabulated on a node set so that
/// each query costs one short panel. The integrand must keep one sign so
/// the table is strictly monotone and invertible.
class CumulativeIntegral {
 public:
  CumulativeIntegral() = default;
  /// Nodes may be given in any order; anchor and both ends of [lo, hi] are
  /// added automatically.
  CumulativeIntegral(ScalarFunction integrand, double anchor, double lo, double hi,
                     std::vector<double> nodes = {}, std::size_t min_panels = 64);

  double operator()(double x) const;

  /// The x with (*this)(x) == value, by safeguarded bracketing on the
  /// tabulated panel. Throws DomainError outside the covered range.
  double inverse(double value) const;

  double lo() const { return nodes_.front(); }
  double hi() const { return nodes_.back(); }
  double value_at_lo() const { return values_.front(); }
  double value_at_hi() const { return values_.back(); }
  bool increasing() const { return values_.back() > values_.front(); }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& values() const { return values_; }

 private:
  ScalarFunction f_;
  double anchor_ = 0.0;
  std::vector<double> nodes_;   // strictly increasing
  std::vector<double> values_;  // integral from anchor to nodes_[k]
};

}  // namespace ermakov

#include "ermakov/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "ermakov/error.hpp"

namespace ermakov {

double integrate_adaptive(const ScalarFunction& f, double a, double b, double rel_tol) {
  if (a == b) return 0.0;
  if (b < a) return -integrate_adaptive(f, b, a, rel_tol);
  // Boost tests the unscaled panel error against a scaled tolerance, so
  // short intervals never converge. Integrating on [-1, 1] keeps both in the same units.
  const double half = 0.5 * (b - a);
  auto mapped = [&](double x) { return half * f(a + half * (1.0 + x)); };
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      mapped, -1.0, 1.0, 12, rel_tol, &error);
  if (!std::isfinite(value)) throw DomainError("quadrature produced a non-finite value");
  return value;
}

double integrate_fixed(const ScalarFunction& f, double a, double b, int panels) {
  if (panels < 1) throw DomainError("integrate_fixed needs at least one panel");
  const double width = (b - a) / panels;
  double total = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double lo = k * width;
    total += boost::math::quadrature::gauss<double, 20>::integrate(
        [&](double s) { return f(a + s); }, lo, lo + width);
  }
  if (!std::isfinite(total)) throw DomainError("quadrature produced a non-finite value");
  return total;
}

CumulativeIntegral::CumulativeIntegral(ScalarFunction integrand, double anchor, double lo,
                                       double hi, std::vector<double> nodes,
                                       std::size_t min_panels)
    : f_(std::move(integrand)), anchor_(anchor) {
  if (!(lo < hi)) throw DomainError("cumulative integral needs lo < hi");
  if (anchor < lo || anchor > hi) throw DomainError("cumulative integral anchor outside [lo, hi]");
  std::vector<double> all;
  all.reserve(nodes.size() + min_panels + 3);
  for (double x : nodes)
    if (x > lo && x < hi) all.push_back(x);
  for (std::size_t k = 0; k <= min_panels; ++k)
    all.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(min_panels));
  // Geometric grading toward both ends, where integrands are often nearly singular.
  for (double gap = 0.5 * (hi - lo); gap > 1e-12 * (hi - lo); gap *= 0.5) {
    all.push_back(lo + gap);
    all.push_back(hi - gap);
  }
  all.push_back(anchor);
  std::sort(all.begin(), all.end());
  const double min_gap =
      64.0 * std::numeric_limits<double>::epsilon() * std::max({std::abs(lo), std::abs(hi), hi - lo});
  all.erase(std::unique(all.begin(), all.end(),
                        [min_gap](double a, double b) { return b - a < min_gap; }),
            all.end());
  nodes_ = std::move(all);
  nodes_.front() = lo;
  nodes_.back() = hi;
  auto near = std::lower_bound(nodes_.begin(), nodes_.end(), anchor);
  if (near == nodes_.end() || (near != nodes_.begin() && anchor - *(near - 1) < *near - anchor))
    --near;
  *near = anchor;

  const auto k_anchor = static_cast<std::size_t>(
      std::lower_bound(nodes_.begin(), nodes_.end(), anchor) - nodes_.begin());
  values_.assign(nodes_.size(), 0.0);
  for (std::size_t k = k_anchor + 1; k < nodes_.size(); ++k)
    values_[k] = values_[k - 1] + integrate_adaptive(f_, nodes_[k - 1], nodes_[k]);
  for (std::size_t k = k_anchor; k-- > 0;)
    values_[k] = values_[k + 1] - integrate_adaptive(f_, nodes_[k], nodes_[k + 1]);

  for (std::size_t k = 1; k < values_.size(); ++k) {
    if ((values_[k] - values_[k - 1]) * (values_.back() - values_.front()) <= 0.0)
      throw DomainError("integrand changes sign; cumulative integral is not monotone");
  }
}

double CumulativeIntegral::operator()(double x) const {
  if (x < nodes_.front() || x > nodes_.back())
    throw DomainError("cumulative integral queried outside its table");
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
  std::size_t k = static_cast<std::size_t>(it - nodes_.begin());
  k = k == 0 ? 0 : k - 1;
  if (k + 1 < nodes_.size() && nodes_[k + 1] - x < x - nodes_[k])
    return values_[k + 1] - integrate_adaptive(f_, x, nodes_[k + 1]);
  return values_[k] + integrate_adaptive(f_, nodes_[k], x);
}

double CumulativeIntegral::inverse(double value) const {
  const bool up = increasing();
  const double vmin = up ? values_.front() : values_.back();
  const double vmax = up ? values_.back() : values_.front();
  if (value < vmin || value > vmax)
    throw DomainError("value outside the range covered by the cumulative integral");

  std::size_t k = 0;
  if (up) {
    auto it = std::upper_bound(values_.begin(), values_.end(), value);
    k = static_cast<std::size_t>(it - values_.begin());
  } else {
    auto it = std::upper_bound(values_.rbegin(), values_.rend(), value);
    k = values_.size() - static_cast<std::size_t>(it - values_.rbegin());
  }
  k = std::clamp<std::size_t>(k == 0 ? 0 : k - 1, 0, nodes_.size() - 2);
  if (values_[k] == value) return nodes_[k];
  if (values_[k + 1] == value) return nodes_[k + 1];

  const double x0 = nodes_[k];
  const double v0 = values_[k];
  auto residual = [&](double x) {
    if (x == x0) return v0 - value;
    return v0 + integrate_adaptive(f_, x0, x) - value;
  };
  double a = x0;
  double b = nodes_[k + 1];
  double fa = v0 - value;
  double fb = values_[k + 1] - value;
  std::uintmax_t max_iter = 200;
  auto [lo, hi] = boost::math::tools::toms748_solve(
      residual, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(), max_iter);
  return std::abs(residual(lo)) < std::abs(residual(hi)) ? lo : hi;
}

}  // namespace ermakov

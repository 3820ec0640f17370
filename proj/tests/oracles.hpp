#pragma once

// Independent reference computations shared by the unit and acceptance
// tests. Nothing here calls into the library's numerics.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

/// Fourth-order central difference.
inline double derivative(const std::function<double(double)>& f, double x, double h = 1e-3) {
  return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h);
}

inline double second_derivative(const std::function<double(double)>& f, double x,
                                double h = 1e-3) {
  return (-f(x - 2 * h) + 16 * f(x - h) - 30 * f(x) + 16 * f(x + h) - f(x + 2 * h)) /
         (12 * h * h);
}

/// Composite Simpson with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
  return s * h / 3.0;
}

/// Least-squares line y = c0 + c1 x; returns the max absolute residual.
struct AffineFit {
  double c0 = 0.0;
  double c1 = 0.0;
  double max_residual = 0.0;
};

inline AffineFit fit_affine(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  AffineFit fit;
  fit.c1 = sxy / sxx;
  fit.c0 = my - fit.c1 * mx;
  for (std::size_t i = 0; i < x.size(); ++i)
    fit.max_residual = std::max(fit.max_residual, std::abs(y[i] - fit.c0 - fit.c1 * x[i]));
  return fit;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_affine(lx, ly).c1;
}

/// int_0^t ds / (1 + s^2/a^2)^2 in closed form.
inline double rescaled_time_quadratic_rho(double a, double t) {
  const double u = t / a;
  return 0.5 * a * (u / (1.0 + u * u) + std::atan(u));
}

/// Non-central Kepler potential (g1 + g2 cos)/sin^2.
inline double winternitz_V(double g1, double g2, double theta) {
  const double s = std::sin(theta);
  return (g1 + g2 * std::cos(theta)) / (s * s);
}

/// Classical RK4 of a 4-dimensional system at a fixed step.
template <class F>
std::vector<double> rk4(F f, std::vector<double> y, double t0, double t1, int steps) {
  const double h = (t1 - t0) / steps;
  double t = t0;
  auto axpy = [](const std::vector<double>& a, double s, const std::vector<double>& b) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + s * b[i];
    return out;
  };
  for (int k = 0; k < steps; ++k) {
    const auto k1 = f(t, y);
    const auto k2 = f(t + h / 2, axpy(y, h / 2, k1));
    const auto k3 = f(t + h / 2, axpy(y, h / 2, k2));
    const auto k4 = f(t + h, axpy(y, h, k3));
    for (std::size_t i = 0; i < y.size(); ++i)
      y[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    t += h;
  }
  return y;
}

/// Column of a CSV file with a header row.
inline std::vector<std::string> csv_column(const std::filesystem::path& path,
                                           const std::string& name) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return {};
  const auto col = static_cast<std::size_t>(it - header.begin());
  std::vector<std::string> out;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t i = 0; std::getline(ss, cell, ','); ++i)
      if (i == col) out.push_back(cell);
  }
  return out;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("ermakov_tests_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Random smooth cartesian system with small couplings, as expression text.
struct RandomCartesian {
  std::string f;
  std::string g;
  std::string omega_sq;
  double x, y, xdot, ydot;
};

inline RandomCartesian random_cartesian(std::mt19937_64& rng) {
  // Positive couplings push trajectories away from the axes, where the
  // equations are singular.
  std::uniform_real_distribution<double> coupling(0.02, 0.2);
  std::uniform_real_distribution<double> small(-0.2, 0.2);
  std::uniform_real_distribution<double> freq(0.2, 0.8);
  std::uniform_real_distribution<double> pos(0.7, 1.4);
  std::uniform_real_distribution<double> vel(-0.3, 0.3);
  auto lit = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << "(" << v << ")";
    return os.str();
  };
  RandomCartesian out;
  out.f = lit(coupling(rng)) + " + " + lit(coupling(rng)) + "*u";
  out.g = lit(coupling(rng)) + " + " + lit(coupling(rng)) + "*v^2";
  out.omega_sq = lit(freq(rng)) + " + " + lit(0.5 * small(rng)) + "*sin(t) + " +
                 lit(0.5 * small(rng)) + "*(x^2 + y^2) + " + lit(0.5 * small(rng)) +
                 "*(x*ydot - y*xdot)";
  out.x = pos(rng);
  out.y = pos(rng);
  out.xdot = vel(rng);
  out.ydot = vel(rng);
  return out;
}

}  // namespace oracle

#pragma once

// Thin wrappers over Boost.Math tanh-sinh quadrature. The double-exponential
// node clustering resolves the integrable power singularities at interval
// endpoints that every Lévy-measure integral in this library has.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <limits>

#include "bfreq/error.hpp"

namespace bfreq::quad {

inline constexpr double kRelTol = 1e-13;

// Non-const: the two-argument integrate overload is not const-qualified in
// older Boost releases.
inline boost::math::quadrature::tanh_sinh<double>& tanh_sinh_instance() {
  thread_local boost::math::quadrature::tanh_sinh<double> integrator(18);
  return integrator;
}

/// ∫_a^b f(x, b - x) dx on a finite interval. The second argument is the
/// distance to the right endpoint, accurate even when x rounds to b.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = kRelTol) {
  if (!(b > a)) return 0.0;
  auto g = [&](double x, double xc) {
    const double to_b = xc > 0.0 ? xc : b - x;
    return f(x, to_b);
  };
  double err = 0.0;
  const double value = tanh_sinh_instance().integrate(g, a, b, rel_tol, &err);
  if (!std::isfinite(value)) fail(ErrorCode::DivergentMass, "non-finite quadrature result");
  return value;
}

/// ∫_a^∞ h(r) r^{-rho} dr for rho > 1 and bounded h, via u = (r/a)^{1-rho}
/// which turns the power tail into Lebesgue measure on (0,1].
template <class H>
double power_tail_integral(H&& h, double a, double rho, double rel_tol = kRelTol) {
  require(rho > 1.0, ErrorCode::DivergentMass, "power tail with exponent <= 1 diverges");
  require(a > 0.0, ErrorCode::DegenerateInput, "power tail needs a positive lower limit");
  const double inv = 1.0 / (rho - 1.0);
  auto g = [&](double u, double) {
    const double r = a * std::pow(u, -inv);
    return h(r);
  };
  return std::pow(a, 1.0 - rho) * inv * integrate(g, 0.0, 1.0, rel_tol);
}

/// Adaptive 31-point Gauss–Kronrod, used where an independent rule is wanted.
template <class F>
double integrate_gk(F&& f, double a, double b, double rel_tol = 1e-12) {
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20, rel_tol, &err);
}

}  // namespace bfreq::quad

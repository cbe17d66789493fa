#pragma once

// Generators evaluated on polynomial test functions: the two-type CSBI
// generator applied to f(x1/(x1+x2)), the three frequency generators, the
// Griffiths form of the multi-type stable case, and the generator's action
// on monomials together with the induced linear moment ODE.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <variant>
#include <vector>

#include "bfreq/csbi_model.hpp"
#include "bfreq/error.hpp"
#include "bfreq/freq_model.hpp"
#include "bfreq/polynomial.hpp"
#include "bfreq/quadrature.hpp"
#include "bfreq/stable_measures.hpp"

namespace bfreq {

namespace detail {

/// Contribution of one atom of a jump measure to ℒ(f∘g)(x), integrating
/// the radius over (0,∞). The jump u = rξ moves the frequency to
/// r0 + δ with δ = y(c - r0) and y = rσ/(z + rσ). With the compensator on,
/// the first-order term is f'(r0)·(δ - u_i ∂_i g), which reads
/// f'(r0)·r(q0 + q1 r)/(z²(z + rσ)); off the compensator it is f'(r0)·δ.
struct AtomIntegrand {
  const std::vector<double>* taylor = nullptr;
  double f1 = 0.0;  // f'(r0)
  double r0 = 0.0;
  double z = 1.0;
  double sigma = 1.0;
  double target = 1.0;
  double rho = 1.5;
  double x1 = 0.0;
  double x2 = 0.0;
  double xi1 = 1.0;
  double xi2 = 0.0;
  int type = 0;  // 1, 2 for branching of that type; 0 for immigration

  // q0 + q1 r for the compensated first-order term of a branching atom.
  [[nodiscard]] std::array<double, 2> compensated_q() const {
    if (type == 1) return {-xi2 * x1 * z, -xi1 * x2 * sigma};
    return {xi1 * x2 * z, xi2 * x1 * sigma};
  }

  // S with f(r0 + δ) - f(r0) - f'(r0)δ = δ² S(δ).
  [[nodiscard]] double second_order_factor(double delta) const {
    const auto& t = *taylor;
    double acc = 0.0;
    for (std::size_t j = t.size(); j-- > 2;) acc = acc * delta + t[j];
    return acc;
  }

  /// Integrand times r^ρ, bounded on [κ/σ, ∞); compensator off.
  [[nodiscard]] double bracket_uncompensated(double r) const {
    const double y = 1.0 / (1.0 + z / (r * sigma));
    const double d = target - r0;
    const double delta = y * d;
    return delta * delta * second_order_factor(delta) + f1 * delta;
  }

  /// Full integrand at radius r with the compensator on, written with
  /// r^{2-ρ} and r^{1-ρ} so that no 0·∞ appears near the origin.
  [[nodiscard]] double weighted_compensated(double r) const {
    if (r < 1e-200) return 0.0;
    const double d = target - r0;
    const double y = 1.0 / (1.0 + z / (r * sigma));
    const double delta = y * d;
    const double scale = sigma / (z + r * sigma);
    const double p2 = std::pow(r, 2.0 - rho);
    double out = scale * scale * d * d * second_order_factor(delta) * p2;
    const auto q = compensated_q();
    const double denom = z * z * (z + r * sigma);
    if (q[0] != 0.0) out += f1 * q[0] * std::pow(r, 1.0 - rho) / denom;
    out += f1 * q[1] * p2 / denom;
    return out;
  }

  /// Full integrand at radius r without compensator (immigration).
  [[nodiscard]] double weighted_uncompensated(double r) const {
    if (r < 1e-200) return 0.0;
    const double d = target - r0;
    const double y = 1.0 / (1.0 + z / (r * sigma));
    const double delta = y * d;
    const double scale = sigma / (z + r * sigma);
    return scale * scale * d * d * second_order_factor(delta) * std::pow(r, 2.0 - rho) +
           f1 * d * scale * std::pow(r, 1.0 - rho);
  }
};

inline double branching_atom_term(AtomIntegrand in, double cutoff) {
  const double kappa = cutoff / in.sigma;
  if (in.compensated_q()[0] != 0.0 && in.rho - 1.0 >= 1.0 && in.f1 != 0.0)
    fail(ErrorCode::DivergentMass, "first-order term diverges: off-axis branching jumps need alpha < 1");
  const double scale_point = in.z / in.sigma;
  const double b1 = std::min(kappa, scale_point);
  double total = quad::integrate([&](double r, double) { return in.weighted_compensated(r); }, 0.0, b1);
  if (scale_point < kappa) {
    total += quad::integrate([&](double r, double) { return in.weighted_compensated(r); }, scale_point, kappa);
  } else if (scale_point > kappa) {
    total += quad::integrate(
        [&](double r, double) { return in.bracket_uncompensated(r) * std::pow(r, -in.rho); }, kappa, scale_point);
  }
  const double tail_start = std::max(kappa, scale_point);
  total += quad::power_tail_integral([&](double r) { return in.bracket_uncompensated(r); }, tail_start, in.rho);
  return total;
}

inline double immigration_atom_term(AtomIntegrand in) {
  if (in.f1 != 0.0 && in.target != in.r0 && in.rho >= 2.0)
    fail(ErrorCode::DivergentMass, "immigration first-order term diverges");
  const double scale_point = in.z / in.sigma;
  double total = quad::integrate([&](double r, double) { return in.weighted_uncompensated(r); }, 0.0, scale_point);
  // Bounded bracket with a nonzero limit: the tail needs ρ > 1.
  const double limit = in.bracket_uncompensated(1e300);
  if (in.rho <= 1.0 && limit != 0.0) fail(ErrorCode::DivergentMass, "immigration measure has infinite mass at infinity");
  if (in.rho > 1.0)
    total += quad::power_tail_integral([&](double r) { return in.bracket_uncompensated(r); }, scale_point, in.rho);
  return total;
}

}  // namespace detail

/// ℒ(f∘g)(x) for g(x) = x1/(x1+x2), the CSBI generator with compensation
/// ξ_i(u) = u_i 1{u1+u2 <= cutoff}.
inline double csbi_generator_apply(const CSBIParams& p, const TruncationChoice& trunc, const TestFunction& f,
                                   std::array<double, 2> x) {
  p.validate();
  const double x1 = x[0];
  const double x2 = x[1];
  require(x1 >= 0.0 && x2 >= 0.0 && x1 + x2 > 0.0, ErrorCode::InvalidState, "state needs x >= 0 and x1 + x2 > 0");
  require(trunc.cutoff > 0.0, ErrorCode::InvalidParams, "truncation cutoff must be positive");
  const double z = x1 + x2;
  const double r0 = x1 / z;
  const double f1 = f.d1(r0);
  const double f2 = f.d2(r0);

  const double g1 = x2 / (z * z);
  const double g2 = -x1 / (z * z);
  const double g11 = -2.0 * x2 / (z * z * z);
  const double g22 = 2.0 * x1 / (z * z * z);
  double out = p.c1 * x1 * (f2 * g1 * g1 + f1 * g11) + p.c2 * x2 * (f2 * g2 * g2 + f1 * g22);
  out += (p.b11 * x1 + p.b21 * x2 + p.eta1) * f1 * g1 + (p.b22 * x2 + p.b12 * x1 + p.eta2) * f1 * g2;

  const std::vector<double> taylor = f.taylor_at(r0);
  auto base = [&](const SphereAtom& a, double rho, int type) {
    detail::AtomIntegrand in;
    in.taylor = &taylor;
    in.f1 = f1;
    in.r0 = r0;
    in.z = z;
    in.sigma = a.sum();
    in.target = a.type1_share();
    in.rho = rho;
    in.x1 = x1;
    in.x2 = x2;
    in.xi1 = a.xi1;
    in.xi2 = a.xi2;
    in.type = type;
    return in;
  };

  for (int i = 1; i <= 2; ++i) {
    const auto& m = p.branching(i);
    if (!m) continue;
    const double mass = i == 1 ? x1 : x2;
    if (mass == 0.0) continue;
    for (const auto& a : m->atoms()) {
      if (a.weight == 0.0) continue;
      out += mass * a.weight * detail::branching_atom_term(base(a, m->radial_exponent(), i), trunc.cutoff);
    }
  }
  if (p.nu)
    for (const auto& a : p.nu->atoms()) {
      if (a.weight == 0.0) continue;
      out += a.weight * detail::immigration_atom_term(base(a, p.nu->radial_exponent(), 0));
    }
  return out;
}

/// ℒ(f∘g)(x) / z^e at x = (rz, (1-r)z).
inline double normalized_generator(const CSBIParams& p, const TruncationChoice& trunc, const TestFunction& f, double r,
                                   double z, double beta_exponent) {
  return csbi_generator_apply(p, trunc, f, {r * z, (1.0 - r) * z}) / std::pow(z, beta_exponent);
}

namespace detail {

/// P(r)·scale·∫_0^1 [f(r + y(c-r)) - f(r) - f'(r)y(c-r)·1{compensated}] (1-y)^p y^{-q} dy.
inline double family_term(const JumpFamily& fam, const TestFunction& f, double r) {
  const double thin = thinning_probability(fam.thinning, r);
  if (thin == 0.0) return 0.0;
  const double d = fam.target - r;
  if (d == 0.0) return 0.0;
  const auto taylor = f.taylor_at(r);
  const double f1 = f.d1(r);
  const double p = fam.p();
  const double q = fam.q();
  const bool comp = fam.compensated();
  auto integrand = [&](double y, double one_minus_y) {
    if (y < 1e-300) return 0.0;
    const double delta = y * d;
    double s = 0.0;
    for (std::size_t j = taylor.size(); j-- > 2;) s = s * delta + taylor[j];
    double val = d * d * s * std::pow(y, 2.0 - q);
    if (!comp) val += f1 * d * std::pow(y, 1.0 - q);
    return val * std::pow(one_minus_y, p);
  };
  return thin * fam.scale * quad::integrate(integrand, 0.0, 1.0);
}

inline double gwf_apply(const GwfCoefficients& m, double f1, double f2, double r) {
  return f2 * (m.c1 * r * (1.0 - r) * (1.0 - r) + m.c2 * (1.0 - r) * r * r) +
         f1 * (2.0 * (m.c2 - m.c1) * r * (1.0 - r) + m.eta1 * (1.0 - r) - m.eta2 * r);
}

}  // namespace detail

/// A f(r) for the frequency process of the given case, jump parts by quadrature.
inline double freq_generator_apply(const FrequencyModel& model, const TestFunction& f, double r) {
  validate(model);
  require(r >= 0.0 && r <= 1.0, ErrorCode::InvalidState, "frequency must lie in [0,1]");
  double out = 0.0;
  if (const auto* g = std::get_if<GwfCoefficients>(&model)) out += detail::gwf_apply(*g, f.d1(r), f.d2(r), r);
  if (const auto* c2 = std::get_if<Case2Coefficients>(&model))
    out += f.d1(r) * r * (1.0 - r) * (c2->a2 - c2->a1) * case2_selection_constant(c2->alpha);
  for (const auto& fam : jump_families(model)) out += detail::family_term(fam, f, r);
  return out;
}

/// Griffiths' form of the case-(iii) generator: for each atom ξ of λ^i,
/// x^{2-i}(1-x)^{i-1} λ(ξ) ∫_0^{1/σ} [g(x + u(ξ1 - xσ)) - g(x)] (1-σu)^{α-1} u^{-1-α} du,
/// integrating the Euclidean jump length u along ξ rather than the mass fraction.
inline double griffiths_generator_apply(const std::vector<SphereAtom>& lambda1, const std::vector<SphereAtom>& lambda2,
                                        double alpha, const TestFunction& g, double x) {
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidParams, "alpha must lie in (0,1)");
  require(x >= 0.0 && x <= 1.0, ErrorCode::InvalidState, "frequency must lie in [0,1]");
  const auto taylor = g.taylor_at(x);
  auto atom_integral = [&](const SphereAtom& a) {
    const double sigma = a.sum();
    const double shift = a.xi1 - x * sigma;
    if (shift == 0.0) return 0.0;
    auto integrand = [&](double u, double to_end) {
      if (u < 1e-300) return 0.0;
      const double delta = u * shift;
      double s = 0.0;
      for (std::size_t j = taylor.size(); j-- > 1;) s = s * delta + taylor[j];
      return shift * s * std::pow(u, -alpha) * std::pow(sigma * to_end, alpha - 1.0);
    };
    return a.weight * quad::integrate(integrand, 0.0, 1.0 / sigma);
  };
  double out = 0.0;
  for (const auto& a : lambda1) a.validate(), out += x * atom_integral(a);
  for (const auto& a : lambda2) a.validate(), out += (1.0 - x) * atom_integral(a);
  return out;
}

struct MomentMatrix {
  /// Row n holds the coefficients of A(r^n) over degrees 0..n_max+1.
  Eigen::MatrixXd q;
  bool closed = false;

  [[nodiscard]] int n_max() const { return static_cast<int>(q.rows()) - 1; }
};

namespace detail {

inline Polynomial binomial_power(double c, int j) {
  // (c - r)^j
  Polynomial out = Polynomial::constant(1.0);
  const Polynomial factor{c, -1.0};
  for (int k = 0; k < j; ++k) out = out * factor;
  return out;
}

inline double binomial(int n, int k) {
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * static_cast<double>(n - k + i) / static_cast<double>(i);
  return b;
}

inline Polynomial thinning_polynomial(Thinning t) {
  switch (t) {
    case Thinning::ByR: return Polynomial{0.0, 1.0};
    case Thinning::ByOneMinusR: return Polynomial{1.0, -1.0};
    case Thinning::None: return Polynomial::constant(1.0);
  }
  return Polynomial::constant(1.0);
}

/// A(r^n) as a polynomial, the jump parts through their Beta moments.
inline Polynomial apply_to_monomial(const FrequencyModel& model, int n) {
  Polynomial out;
  if (n == 0) return out;
  const double dn = static_cast<double>(n);
  const Polynomial r_pow_n1 = Polynomial::monomial(static_cast<std::size_t>(n - 1));
  const Polynomial r_pow_n2 = n >= 2 ? Polynomial::monomial(static_cast<std::size_t>(n - 2)) : Polynomial{};
  if (const auto* g = std::get_if<GwfCoefficients>(&model)) {
    const Polynomial diffusion = g->c1 * (Polynomial{0.0, 1.0} * binomial_power(1.0, 2)) +
                                 g->c2 * (Polynomial{1.0, -1.0} * Polynomial::monomial(2));
    const Polynomial drift = 2.0 * (g->c2 - g->c1) * Polynomial{0.0, 1.0, -1.0} + g->eta1 * Polynomial{1.0, -1.0} -
                             g->eta2 * Polynomial{0.0, 1.0};
    if (n >= 2) out += dn * (dn - 1.0) * (r_pow_n2 * diffusion);
    out += dn * (r_pow_n1 * drift);
  }
  if (const auto* c2 = std::get_if<Case2Coefficients>(&model))
    out += dn * (c2->a2 - c2->a1) * case2_selection_constant(c2->alpha) * (r_pow_n1 * Polynomial{0.0, 1.0, -1.0});
  for (const auto& fam : jump_families(model)) {
    Polynomial inner;
    for (int j = 2; j <= n; ++j)
      inner += binomial(n, j) * fam.moment(j) *
               (Polynomial::monomial(static_cast<std::size_t>(n - j)) * binomial_power(fam.target, j));
    if (!fam.compensated()) inner += dn * fam.moment(1) * (r_pow_n1 * binomial_power(fam.target, 1));
    out += thinning_polynomial(fam.thinning) * inner;
  }
  return out;
}

}  // namespace detail

/// A f for a polynomial f, exact through the Beta moments of the jump laws.
inline Polynomial generator_polynomial(const FrequencyModel& model, const Polynomial& f) {
  validate(model);
  Polynomial out;
  for (std::size_t n = 1; n < f.size(); ++n)
    if (f.coeff(n) != 0.0) out += f.coeff(n) * detail::apply_to_monomial(model, static_cast<int>(n));
  return out;
}

inline MomentMatrix moment_matrix(const FrequencyModel& model, int n_max, double tol = 1e-12) {
  validate(model);
  require(n_max >= 0 && n_max <= static_cast<int>(TestFunction::kMaxDegree), ErrorCode::DegenerateInput,
          "moment matrix degree must lie in [0, 8]");
  MomentMatrix m;
  m.q = Eigen::MatrixXd::Zero(n_max + 1, n_max + 2);
  for (int n = 0; n <= n_max; ++n) {
    const Polynomial row = detail::apply_to_monomial(model, n);
    for (int k = 0; k <= n_max + 1; ++k) m.q(n, k) = row.coeff(static_cast<std::size_t>(k));
  }
  m.closed = true;
  for (int n = 0; n <= n_max; ++n)
    if (std::abs(m.q(n, n_max + 1)) > tol) m.closed = false;
  return m;
}

/// Moments (m_0, ..., m_{n_max}) at time t from m' = Q m started at r0^n.
inline std::vector<double> moment_ode_solve(const MomentMatrix& mm, double r0, double t) {
  require(mm.closed, ErrorCode::NotClosed, "moment hierarchy is not closed at this degree");
  require(t >= 0.0, ErrorCode::DegenerateInput, "time must be >= 0");
  const int n = mm.n_max() + 1;
  const Eigen::MatrixXd square = mm.q.leftCols(n);
  Eigen::VectorXd init(n);
  for (int k = 0; k < n; ++k) init(k) = std::pow(r0, k);
  const Eigen::MatrixXd flow = (square * t).exp();
  const Eigen::VectorXd out = flow * init;
  return {out.data(), out.data() + n};
}

}  // namespace bfreq

#pragma once

// α-stable Lévy measures on the positive quadrant in polar form
//   m(B) = Σ_k w_k ∫_0^∞ 1_B(r ξ_k) r^{-ρ} dr,
// with ρ = 1+α for branching measures and ρ = α for immigration measures.
// The spherical part is a finite atomic measure, so every radial integral is a
// closed-form power integral.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "bfreq/error.hpp"
#include "bfreq/rng.hpp"

namespace bfreq {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct SphereAtom {
  double xi1 = 1.0;
  double xi2 = 0.0;
  double weight = 0.0;

  /// Normalizes a nonnegative direction onto the unit quarter circle.
  static SphereAtom from_direction(double d1, double d2, double weight) {
    require(d1 >= 0.0 && d2 >= 0.0 && (d1 > 0.0 || d2 > 0.0), ErrorCode::InvalidMeasure,
            "atom direction must be a nonzero vector of the positive quadrant");
    const double n = std::hypot(d1, d2);
    return {d1 / n, d2 / n, weight};
  }
  static SphereAtom e1(double weight) { return {1.0, 0.0, weight}; }
  static SphereAtom e2(double weight) { return {0.0, 1.0, weight}; }

  /// <ξ,1>
  [[nodiscard]] double sum() const noexcept { return xi1 + xi2; }
  /// Type-1 share of a jump along ξ, <ξ,e1>/<ξ,1>.
  [[nodiscard]] double type1_share() const noexcept { return xi1 / (xi1 + xi2); }

  [[nodiscard]] bool is_e1(double tol = 1e-12) const noexcept { return std::abs(xi2) <= tol; }
  [[nodiscard]] bool is_e2(double tol = 1e-12) const noexcept { return std::abs(xi1) <= tol; }

  void validate() const {
    require(std::isfinite(xi1) && std::isfinite(xi2) && xi1 >= 0.0 && xi2 >= 0.0, ErrorCode::InvalidMeasure,
            "atom direction must lie in the closed positive quadrant");
    require(std::abs(std::hypot(xi1, xi2) - 1.0) <= 1e-12, ErrorCode::InvalidMeasure,
            "atom direction must have unit Euclidean norm");
    require(std::isfinite(weight) && weight >= 0.0, ErrorCode::InvalidMeasure, "atom weight must be >= 0");
  }
};

enum class MeasureKind { Branching, Immigration };

class StableLevyMeasure {
 public:
  StableLevyMeasure(double alpha, MeasureKind kind, std::vector<SphereAtom> atoms)
      : alpha_(alpha), kind_(kind), atoms_(std::move(atoms)) {
    require(alpha_ > 0.0 && alpha_ < 2.0, ErrorCode::InvalidMeasure, "stability index must lie in (0,2)");
    require(!atoms_.empty(), ErrorCode::InvalidMeasure, "spherical measure needs at least one atom");
    for (const auto& a : atoms_) a.validate();
    if (kind_ == MeasureKind::Branching && alpha_ > 1.0) {
      for (const auto& a : atoms_)
        require(a.weight == 0.0 || a.is_e1() || a.is_e2(), ErrorCode::InvalidMeasure,
                "a branching measure with alpha in (1,2) must concentrate on the coordinate axes");
    }
  }

  static StableLevyMeasure branching(double alpha, std::vector<SphereAtom> atoms) {
    return {alpha, MeasureKind::Branching, std::move(atoms)};
  }
  static StableLevyMeasure immigration(double alpha, std::vector<SphereAtom> atoms) {
    return {alpha, MeasureKind::Immigration, std::move(atoms)};
  }

  [[nodiscard]] double alpha() const noexcept { return alpha_; }
  [[nodiscard]] MeasureKind kind() const noexcept { return kind_; }
  [[nodiscard]] double radial_exponent() const noexcept {
    return kind_ == MeasureKind::Branching ? 1.0 + alpha_ : alpha_;
  }
  [[nodiscard]] const std::vector<SphereAtom>& atoms() const noexcept { return atoms_; }
  [[nodiscard]] double total_weight() const noexcept {
    return std::accumulate(atoms_.begin(), atoms_.end(), 0.0,
                           [](double acc, const SphereAtom& a) { return acc + a.weight; });
  }
  [[nodiscard]] bool is_zero() const noexcept { return total_weight() == 0.0; }

 private:
  double alpha_;
  MeasureKind kind_;
  std::vector<SphereAtom> atoms_;
};

/// (h_lo, h_hi] × C in polar coordinates; C is given by the atoms it contains.
struct RadialBox {
  double h_lo = 1.0;
  double h_hi = kInf;
  std::vector<std::size_t> atom_subset;

  static RadialBox all_atoms(const StableLevyMeasure& m, double h_lo, double h_hi = kInf) {
    RadialBox box{h_lo, h_hi, {}};
    box.atom_subset.resize(m.atoms().size());
    std::iota(box.atom_subset.begin(), box.atom_subset.end(), std::size_t{0});
    return box;
  }
};

/// Axis-aligned closed rectangle [w1_lo,w1_hi]×[w2_lo,w2_hi], intersected with
/// the open simplex {w ≥ 0, w1 + w2 < 1}.
struct SimplexRect {
  double w1_lo = 0.0;
  double w1_hi = 0.0;
  double w2_lo = 0.0;
  double w2_hi = 0.0;
};

/// ∫_lo^hi r^p dr in closed form; lo may be 0 and hi may be ∞.
inline double power_integral(double p, double lo, double hi) {
  require(lo >= 0.0 && hi >= lo, ErrorCode::DegenerateInput, "power integral needs 0 <= lo <= hi");
  if (hi == lo) return 0.0;
  if (lo == 0.0 && p <= -1.0) fail(ErrorCode::DivergentMass, "power integral diverges at the origin");
  if (std::isinf(hi) && p >= -1.0) fail(ErrorCode::DivergentMass, "power integral diverges at infinity");
  if (p == -1.0) return std::log(hi / lo);
  const double q = p + 1.0;
  const double top = std::isinf(hi) ? 0.0 : std::pow(hi, q);
  const double bottom = lo == 0.0 ? 0.0 : std::pow(lo, q);
  return (top - bottom) / q;
}

/// ν((h_lo, h_hi] × C) = λ(C) ∫ r^{-ρ} dr.
inline double tail_mass(const StableLevyMeasure& m, const RadialBox& box) {
  require(box.h_lo > 0.0 && box.h_hi >= box.h_lo, ErrorCode::DegenerateInput, "radial box needs 0 < h_lo <= h_hi");
  double lambda_c = 0.0;
  for (std::size_t idx : box.atom_subset) {
    require(idx < m.atoms().size(), ErrorCode::DegenerateInput, "atom index out of range");
    lambda_c += m.atoms()[idx].weight;
  }
  if (lambda_c == 0.0 || box.h_lo == box.h_hi) return 0.0;
  if (std::isinf(box.h_lo)) return 0.0;
  return lambda_c * power_integral(-m.radial_exponent(), box.h_lo, box.h_hi);
}

namespace detail {

/// Parameters t with tξ inside the rectangle and inside the open simplex.
/// Returns false when the ray misses the rectangle.
inline bool ray_hits(const SphereAtom& a, const SimplexRect& rect, double& t_lo, double& t_hi) {
  t_lo = 0.0;
  t_hi = kInf;
  const std::array<double, 2> xi{a.xi1, a.xi2};
  const std::array<double, 2> lo{rect.w1_lo, rect.w2_lo};
  const std::array<double, 2> hi{rect.w1_hi, rect.w2_hi};
  for (int j = 0; j < 2; ++j) {
    if (xi[j] == 0.0) {
      if (lo[j] > 0.0 || hi[j] < 0.0) return false;
      continue;
    }
    t_lo = std::max(t_lo, lo[j] / xi[j]);
    t_hi = std::min(t_hi, hi[j] / xi[j]);
  }
  t_hi = std::min(t_hi, 1.0 / a.sum());
  return t_hi > t_lo;
}

}  // namespace detail

/// μ_z(region) for μ_z the image of m under φ_z(u) = u / (z + u1 + u2).
/// Along a ray, r ↦ φ_z(rξ) = tξ with t = r/(z + r<ξ,1>) is increasing, so the
/// preimage of the rectangle is a radial interval integrated in closed form.
inline double pushforward_mass(const StableLevyMeasure& m, double z, const SimplexRect& rect) {
  require(z > 0.0, ErrorCode::DegenerateInput, "pushforward needs z > 0");
  require(rect.w1_lo >= 0.0 && rect.w2_lo >= 0.0 && rect.w1_hi >= rect.w1_lo && rect.w2_hi >= rect.w2_lo,
          ErrorCode::DegenerateInput, "rectangle must lie in the closed positive quadrant");
  const double rho = m.radial_exponent();
  double total = 0.0;
  for (const auto& a : m.atoms()) {
    if (a.weight == 0.0) continue;
    double t_lo = 0.0;
    double t_hi = 0.0;
    if (!detail::ray_hits(a, rect, t_lo, t_hi)) continue;
    const double sigma = a.sum();
    const bool reaches_boundary = t_hi >= 1.0 / sigma;
    const double r_lo = z * t_lo / (1.0 - t_lo * sigma);
    const double r_hi = reaches_boundary ? kInf : z * t_hi / (1.0 - t_hi * sigma);
    if (r_lo == 0.0 && rho >= 1.0)
      fail(ErrorCode::DivergentMass, "region contains the origin where the Lévy measure has infinite mass");
    if (reaches_boundary && rho <= 1.0)
      fail(ErrorCode::BoundaryRegion, "region touches w1 + w2 = 1 where the image measure is infinite");
    total += a.weight * power_integral(-rho, r_lo, r_hi);
  }
  return total;
}

/// ψ_c(m)(box) / m(box) for the dilation ψ_c(u) = c u. For a stable measure
/// this is c^{ρ-1}.
inline double dilation_pushforward_factor(const StableLevyMeasure& m, double c, const RadialBox& box) {
  require(c > 0.0, ErrorCode::DegenerateInput, "dilation factor must be positive");
  const double base = tail_mass(m, box);
  require(base > 0.0 && std::isfinite(base), ErrorCode::DegenerateInput, "box must carry finite positive mass");
  RadialBox pre = box;
  pre.h_lo = box.h_lo / c;
  pre.h_hi = box.h_hi / c;
  return tail_mass(m, pre) / base;
}

/// Per-atom w_k ∫_lo^hi r^k r^{-ρ} dr.
inline std::vector<double> truncated_radial_moment(const StableLevyMeasure& m, int k, double r_lo, double r_hi) {
  require(k >= 0, ErrorCode::DegenerateInput, "moment order must be >= 0");
  std::vector<double> out;
  out.reserve(m.atoms().size());
  const double integral = power_integral(static_cast<double>(k) - m.radial_exponent(), r_lo, r_hi);
  for (const auto& a : m.atoms()) out.push_back(a.weight * integral);
  return out;
}

/// The normalized law r^{-ρ} dr restricted to (lo, hi], sampled by inverting
/// its closed-form CDF.
class TruncatedPowerLaw {
 public:
  TruncatedPowerLaw(double rho, double lo, double hi) : rho_(rho), lo_(lo), hi_(hi) {
    require(lo > 0.0 && std::isfinite(lo), ErrorCode::InvalidTruncation, "truncation radius must be positive");
    require(hi > lo, ErrorCode::InvalidTruncation, "empty truncation interval carries zero mass");
    require(std::isfinite(hi) || rho > 1.0, ErrorCode::InvalidTruncation,
            "unbounded truncation with exponent <= 1 carries infinite mass");
    if (rho_ != 1.0) {
      q_ = 1.0 - rho_;
      lo_q_ = std::pow(lo_, q_);
      hi_q_ = std::isinf(hi_) ? 0.0 : std::pow(hi_, q_);
    }
  }

  [[nodiscard]] double mass() const { return power_integral(-rho_, lo_, hi_); }
  [[nodiscard]] double lo() const noexcept { return lo_; }
  [[nodiscard]] double hi() const noexcept { return hi_; }

  /// Inverse CDF at u in (0,1).
  [[nodiscard]] double quantile(double u) const {
    if (rho_ == 1.0) return lo_ * std::pow(hi_ / lo_, u);
    if (std::isinf(hi_)) return lo_ * std::pow(1.0 - u, 1.0 / q_);
    return std::pow(lo_q_ - u * (lo_q_ - hi_q_), 1.0 / q_);
  }

  /// Same as quantile(1 - u) without the rounding of 1 - u.
  [[nodiscard]] double sample(RngStream& rng) const {
    const double u = rng.uniform();
    if (std::isinf(hi_)) return lo_ * std::pow(u, 1.0 / q_);
    return quantile(u);
  }

  [[nodiscard]] double cdf(double r) const {
    if (r <= lo_) return 0.0;
    if (r >= hi_) return 1.0;
    if (rho_ == 1.0) return std::log(r / lo_) / std::log(hi_ / lo_);
    return (lo_q_ - std::pow(r, q_)) / (lo_q_ - hi_q_);
  }

 private:
  double rho_;
  double lo_;
  double hi_;
  double q_ = 0.0;
  double lo_q_ = 0.0;
  double hi_q_ = 0.0;
};

/// One jump from m restricted to r in (r_min, r_max]: the direction is chosen
/// proportionally to atom weight, the radius from the truncated power law.
inline std::array<double, 2> sample_jump(const StableLevyMeasure& m, double r_min, double r_max, RngStream& rng) {
  const double total = m.total_weight();
  require(total > 0.0, ErrorCode::InvalidTruncation, "measure has zero mass");
  const TruncatedPowerLaw radial(m.radial_exponent(), r_min, r_max);
  double pick = rng.uniform() * total;
  const SphereAtom* chosen = &m.atoms().back();
  for (const auto& a : m.atoms()) {
    if (a.weight == 0.0) continue;
    chosen = &a;
    if (pick < a.weight) break;
    pick -= a.weight;
  }
  const double r = radial.sample(rng);
  return {r * chosen->xi1, r * chosen->xi2};
}

struct ScalingCheckResult {
  bool is_scaling = false;
  double alpha_hat = 0.0;
  double max_rel_dev = 0.0;
};

/// Tests whether eval(z, B) = const_B · z^{-α̂} for a single α̂ shared by all
/// regions. α̂ is the pooled least-squares slope of log μ_z(B) against log z
/// (one intercept per region); the reported deviation is the largest relative
/// residual of μ_z(B) around its fitted power law.
template <class Region, class Eval>
ScalingCheckResult scaling_check(Eval&& eval, std::span<const double> zs, std::span<const Region> regions,
                                 double tol) {
  std::vector<double> distinct(zs.begin(), zs.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  require(distinct.size() >= 2, ErrorCode::DegenerateInput, "scaling check needs at least two distinct z values");
  require(!regions.empty(), ErrorCode::DegenerateInput, "scaling check needs at least one region");
  for (double z : zs) require(z > 0.0, ErrorCode::DegenerateInput, "z values must be positive");

  std::vector<std::vector<double>> mass(regions.size(), std::vector<double>(zs.size()));
  bool any_positive = false;
  bool mixed_support = false;
  std::vector<bool> usable(regions.size(), false);
  for (std::size_t b = 0; b < regions.size(); ++b) {
    std::size_t positive = 0;
    for (std::size_t i = 0; i < zs.size(); ++i) {
      mass[b][i] = eval(zs[i], regions[b]);
      if (mass[b][i] > 0.0) ++positive;
    }
    if (positive == zs.size()) usable[b] = true;
    if (positive > 0) any_positive = true;
    if (positive > 0 && positive < zs.size()) mixed_support = true;
  }
  require(any_positive, ErrorCode::DegenerateInput, "all evaluated masses are zero");

  // Pooled within-region regression of log mass on log z.
  double sxy = 0.0;
  double sxx = 0.0;
  std::vector<double> xbar(regions.size(), 0.0);
  std::vector<double> ybar(regions.size(), 0.0);
  for (std::size_t b = 0; b < regions.size(); ++b) {
    if (!usable[b]) continue;
    for (std::size_t i = 0; i < zs.size(); ++i) {
      xbar[b] += std::log(zs[i]);
      ybar[b] += std::log(mass[b][i]);
    }
    xbar[b] /= static_cast<double>(zs.size());
    ybar[b] /= static_cast<double>(zs.size());
    for (std::size_t i = 0; i < zs.size(); ++i) {
      const double dx = std::log(zs[i]) - xbar[b];
      sxy += dx * (std::log(mass[b][i]) - ybar[b]);
      sxx += dx * dx;
    }
  }
  ScalingCheckResult out;
  if (sxx == 0.0) {
    out.max_rel_dev = 1.0;
    return out;
  }
  const double slope = sxy / sxx;
  out.alpha_hat = -slope;
  double worst = mixed_support ? 1.0 : 0.0;
  for (std::size_t b = 0; b < regions.size(); ++b) {
    if (!usable[b]) continue;
    const double intercept = ybar[b] - slope * xbar[b];
    for (std::size_t i = 0; i < zs.size(); ++i) {
      const double fitted = std::exp(intercept + slope * std::log(zs[i]));
      worst = std::max(worst, std::abs(mass[b][i] / fitted - 1.0));
    }
  }
  out.max_rel_dev = worst;
  out.is_scaling = worst < tol;
  return out;
}

/// Radial density e^{-r} dr along one spherical atom. Not stable; its image
/// under φ_z is not a z-multiple of a fixed measure, which makes it the
/// counterexample for scaling_check.
struct ExponentialRadialMeasure {
  SphereAtom atom = SphereAtom::e1(1.0);

  [[nodiscard]] double pushforward_mass(double z, const SimplexRect& rect) const {
    double t_lo = 0.0;
    double t_hi = 0.0;
    if (!detail::ray_hits(atom, rect, t_lo, t_hi)) return 0.0;
    const double sigma = atom.sum();
    const double r_lo = z * t_lo / (1.0 - t_lo * sigma);
    const double upper = t_hi >= 1.0 / sigma ? 0.0 : std::exp(-z * t_hi / (1.0 - t_hi * sigma));
    return atom.weight * (std::exp(-r_lo) - upper);
  }
};

}  // namespace bfreq

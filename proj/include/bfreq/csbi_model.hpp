#pragma once

// Two-type continuous-state branching process with immigration: generator
// coefficients, the classification into the time-changeable regimes, and the
// drift values those regimes pin.

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bfreq/error.hpp"
#include "bfreq/stable_measures.hpp"

namespace bfreq {

/// Compensation ξ_i(u) = u_i 1{u1 + u2 <= cutoff}.
struct TruncationChoice {
  double cutoff = 1.0;
};

struct CSBIParams {
  double c1 = 0.0;
  double c2 = 0.0;
  double b11 = 0.0;
  double b12 = 0.0;
  double b21 = 0.0;
  double b22 = 0.0;
  double eta1 = 0.0;
  double eta2 = 0.0;
  std::optional<StableLevyMeasure> m1;
  std::optional<StableLevyMeasure> m2;
  std::optional<StableLevyMeasure> nu;

  void validate() const {
    for (double v : {c1, c2, b11, b12, b21, b22, eta1, eta2})
      require(std::isfinite(v), ErrorCode::InvalidParams, "coefficients must be finite");
    require(c1 >= 0.0 && c2 >= 0.0, ErrorCode::InvalidParams, "diffusion coefficients must be >= 0");
    require(b12 >= 0.0 && b21 >= 0.0, ErrorCode::InvalidParams, "off-diagonal drift entries must be >= 0");
    require(eta1 >= 0.0 && eta2 >= 0.0, ErrorCode::InvalidParams, "immigration drifts must be >= 0");
    for (const auto* m : {&m1, &m2})
      if (*m) require((*m)->kind() == MeasureKind::Branching, ErrorCode::InvalidParams, "m1/m2 must be branching kind");
    if (nu) require(nu->kind() == MeasureKind::Immigration, ErrorCode::InvalidParams, "nu must be immigration kind");
  }

  [[nodiscard]] bool has_m1() const { return m1 && !m1->is_zero(); }
  [[nodiscard]] bool has_m2() const { return m2 && !m2->is_zero(); }
  [[nodiscard]] bool has_nu() const { return nu && !nu->is_zero(); }
  [[nodiscard]] const std::optional<StableLevyMeasure>& branching(int i) const { return i == 1 ? m1 : m2; }
};

enum class CaseTag { ContinuousCase, IndepStableWithImmigration, MultiTypeStable, NotTimeChangeable };

inline std::string to_string(CaseTag t) {
  switch (t) {
    case CaseTag::ContinuousCase: return "ContinuousCase";
    case CaseTag::IndepStableWithImmigration: return "IndepStableWithImmigration";
    case CaseTag::MultiTypeStable: return "MultiTypeStable";
    case CaseTag::NotTimeChangeable: return "NotTimeChangeable";
  }
  return "Unknown";
}

struct CaseClass {
  CaseTag tag = CaseTag::NotTimeChangeable;
  std::optional<double> alpha;
  /// e in β(z) = z^e; NaN when no time change exists.
  double beta_exponent = std::nan("");
  /// Why the parameters were rejected; empty for admissible cases.
  std::string reason;

  [[nodiscard]] bool admissible() const noexcept { return tag != CaseTag::NotTimeChangeable; }

  static CaseClass continuous() { return {CaseTag::ContinuousCase, std::nullopt, -1.0, {}}; }
  static CaseClass indep_stable(double alpha) {
    return {CaseTag::IndepStableWithImmigration, alpha, 1.0 - alpha, {}};
  }
  static CaseClass multitype_stable(double alpha) { return {CaseTag::MultiTypeStable, alpha, 1.0 - alpha, {}}; }
  static CaseClass rejected(std::string why) {
    return {CaseTag::NotTimeChangeable, std::nullopt, std::nan(""), std::move(why)};
  }
};

namespace detail {

inline double bii_independent(const StableLevyMeasure& m, int i, double cutoff) {
  // ∫ (ξ_i(u) - u_i) m(du) = -Σ_k w_k ξ_{k,i} ∫_{cutoff/σ_k}^∞ r^{-α} dr
  double total = 0.0;
  for (const auto& a : m.atoms()) {
    const double share = i == 1 ? a.xi1 : a.xi2;
    if (a.weight == 0.0 || share == 0.0) continue;
    total -= a.weight * share * power_integral(1.0 - m.radial_exponent(), cutoff / a.sum(), kInf);
  }
  return total;
}

inline double bii_multitype(const StableLevyMeasure& m, int i, double cutoff) {
  // ∫ ξ_i(u) m(du) = Σ_k w_k ξ_{k,i} ∫_0^{cutoff/σ_k} r^{-α} dr
  double total = 0.0;
  for (const auto& a : m.atoms()) {
    const double share = i == 1 ? a.xi1 : a.xi2;
    if (a.weight == 0.0 || share == 0.0) continue;
    total += a.weight * share * power_integral(1.0 - m.radial_exponent(), 0.0, cutoff / a.sum());
  }
  return total;
}

}  // namespace detail

/// Drift values b11*, b22* pinned by the regime for the given compensation
/// cutoff; zero for an absent branching measure.
inline std::pair<double, double> effective_bii(const CSBIParams& p, const TruncationChoice& trunc,
                                               const CaseClass& regime) {
  require(trunc.cutoff > 0.0, ErrorCode::InvalidParams, "truncation cutoff must be positive");
  require(regime.tag == CaseTag::IndepStableWithImmigration || regime.tag == CaseTag::MultiTypeStable,
          ErrorCode::RegimeMismatch, "pinned drifts exist only for the stable regimes");
  std::pair<double, double> out{0.0, 0.0};
  for (int i = 1; i <= 2; ++i) {
    const auto& m = p.branching(i);
    if (!m || m->is_zero()) continue;
    const double v = regime.tag == CaseTag::IndepStableWithImmigration ? detail::bii_independent(*m, i, trunc.cutoff)
                                                                       : detail::bii_multitype(*m, i, trunc.cutoff);
    (i == 1 ? out.first : out.second) = v;
  }
  return out;
}

inline CaseClass classify_case(const CSBIParams& p, double tol = 1e-9, const TruncationChoice& trunc = {}) {
  p.validate();
  auto zero = [tol](double v) { return std::abs(v) <= tol; };
  const bool jumps = p.has_m1() || p.has_m2() || p.has_nu();

  if (!jumps) {
    if (zero(p.b11) && zero(p.b12) && zero(p.b21) && zero(p.b22)) return CaseClass::continuous();
    return CaseClass::rejected("drift matrix must vanish when there are no jumps");
  }
  if (!zero(p.c1) || !zero(p.c2)) return CaseClass::rejected("diffusion cannot coexist with stable jumps");
  if (!zero(p.eta1) || !zero(p.eta2)) return CaseClass::rejected("drift immigration cannot coexist with stable jumps");
  if (!zero(p.b12) || !zero(p.b21)) return CaseClass::rejected("off-diagonal drift must vanish with stable jumps");

  std::optional<double> alpha;
  for (const auto* m : {&p.m1, &p.m2, &p.nu}) {
    if (!*m || (*m)->is_zero()) continue;
    if (!alpha) {
      alpha = (*m)->alpha();
    } else if (std::abs(*alpha - (*m)->alpha()) > tol) {
      return CaseClass::rejected("jump measures have different stability indices");
    }
  }

  CaseClass candidate;
  if (*alpha > 1.0 && *alpha < 2.0) {
    candidate = CaseClass::indep_stable(*alpha);
    if (p.has_m1())
      for (const auto& a : p.m1->atoms())
        if (a.weight > 0.0 && !a.is_e1()) return CaseClass::rejected("type-1 branching jumps must lie on e1");
    if (p.has_m2())
      for (const auto& a : p.m2->atoms())
        if (a.weight > 0.0 && !a.is_e2()) return CaseClass::rejected("type-2 branching jumps must lie on e2");
  } else if (*alpha > 0.0 && *alpha < 1.0) {
    candidate = CaseClass::multitype_stable(*alpha);
    if (p.has_nu()) return CaseClass::rejected("immigration jumps are not allowed for alpha in (0,1)");
  } else {
    return CaseClass::rejected("stability index 1 admits no time change");
  }

  const auto [b11, b22] = effective_bii(p, trunc, candidate);
  if (!zero(p.b11 - b11)) return CaseClass::rejected("b11 differs from its pinned value " + std::to_string(b11));
  if (!zero(p.b22 - b22)) return CaseClass::rejected("b22 differs from its pinned value " + std::to_string(b22));
  return candidate;
}

/// Copy of p with b11, b22 replaced by the values its stable regime pins.
inline CSBIParams with_pinned_drift(CSBIParams p, const TruncationChoice& trunc = {}) {
  std::optional<double> alpha;
  for (const auto* m : {&p.m1, &p.m2, &p.nu})
    if (*m && !(*m)->is_zero()) alpha = (*m)->alpha();
  if (!alpha) return p;
  const CaseClass regime = *alpha > 1.0 ? CaseClass::indep_stable(*alpha) : CaseClass::multitype_stable(*alpha);
  const auto [b11, b22] = effective_bii(p, trunc, regime);
  p.b11 = b11;
  p.b22 = b22;
  return p;
}

}  // namespace bfreq

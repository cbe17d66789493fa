#pragma once

// Coefficients of the three limiting frequency processes and their jump
// families. A jump family moves r to r(1-y) + c·y, with intensity
// P(r) · scale · (1-y)^p y^{-q} dy, where P(r) ∈ {r, 1-r, 1} is the thinning
// probability and c the type-1 share of the mass that arrives.

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "bfreq/csbi_model.hpp"
#include "bfreq/error.hpp"
#include "bfreq/jump_laws.hpp"
#include "bfreq/stable_measures.hpp"

namespace bfreq {

/// Case (i): Gillespie–Wright–Fisher diffusion.
struct GwfCoefficients {
  double c1 = 0.0;
  double c2 = 0.0;
  double eta1 = 0.0;
  double eta2 = 0.0;
};

/// Case (ii): stable branching along the axes plus multi-type immigration.
struct Case2Coefficients {
  double alpha = 1.5;
  double a1 = 0.0;
  double a2 = 0.0;
  std::vector<SphereAtom> lambda_immigration;
};

/// Case (iii): multi-type stable branching, a two-type β-Fleming–Viot process.
struct Case3Coefficients {
  double alpha = 0.5;
  std::vector<SphereAtom> lambda1;
  std::vector<SphereAtom> lambda2;
};

using FrequencyModel = std::variant<GwfCoefficients, Case2Coefficients, Case3Coefficients>;

enum class Thinning { ByR, ByOneMinusR, None };

inline double thinning_probability(Thinning t, double r) {
  switch (t) {
    case Thinning::ByR: return r;
    case Thinning::ByOneMinusR: return 1.0 - r;
    case Thinning::None: return 1.0;
  }
  return 1.0;
}

/// Same, with u = 1 - r supplied separately so that it keeps full relative
/// precision near r = 1.
inline double thinning_probability(Thinning t, double r, double u) {
  return t == Thinning::ByOneMinusR ? u : thinning_probability(t, r);
}

struct JumpFamily {
  enum class Kind { Case2Branching, Case2Immigration, Case3 };

  Kind kind = Kind::Case3;
  double alpha = 0.5;
  double scale = 0.0;
  double target = 1.0;
  Thinning thinning = Thinning::None;

  [[nodiscard]] bool compensated() const noexcept { return kind == Kind::Case2Branching; }
  [[nodiscard]] double p() const noexcept { return kind == Kind::Case2Immigration ? alpha - 2.0 : alpha - 1.0; }
  [[nodiscard]] double q() const noexcept { return kind == Kind::Case2Immigration ? alpha : 1.0 + alpha; }
  [[nodiscard]] BetaEdgeDensity density() const { return {p(), q()}; }

  /// ∫_0^1 y^j (1-y)^p y^{-q} dy = B(j+1-q, p+1), times scale.
  [[nodiscard]] double moment(int j) const {
    const double a = static_cast<double>(j) + 1.0 - q();
    require(a > 0.0, ErrorCode::DivergentMass, "jump moment of order " + std::to_string(j) + " diverges");
    return scale * std::beta(a, p() + 1.0);
  }

  /// ∫_0^1 y²/(1-y) (1-y)^p y^{-q} dy = B(3-q, p), times scale. This is the
  /// gap between compensating by y/(1-y) and by y.
  [[nodiscard]] double compensator_gap() const {
    require(p() > 0.0, ErrorCode::DivergentMass, "compensator gap diverges at y = 1");
    return scale * std::beta(3.0 - q(), p());
  }
};

namespace detail {

inline void validate_sphere(const std::vector<SphereAtom>& atoms) {
  for (const auto& a : atoms) a.validate();
}

}  // namespace detail

inline void validate(const GwfCoefficients& m) {
  require(m.c1 >= 0.0 && m.c2 >= 0.0 && m.eta1 >= 0.0 && m.eta2 >= 0.0, ErrorCode::InvalidParams,
          "diffusion and immigration coefficients must be >= 0");
}
inline void validate(const Case2Coefficients& m) {
  require(m.alpha > 1.0 && m.alpha < 2.0, ErrorCode::InvalidParams, "case (ii) needs alpha in (1,2)");
  require(m.a1 >= 0.0 && m.a2 >= 0.0, ErrorCode::InvalidParams, "branching weights must be >= 0");
  detail::validate_sphere(m.lambda_immigration);
}
inline void validate(const Case3Coefficients& m) {
  require(m.alpha > 0.0 && m.alpha < 1.0, ErrorCode::InvalidParams, "case (iii) needs alpha in (0,1)");
  detail::validate_sphere(m.lambda1);
  detail::validate_sphere(m.lambda2);
}
inline void validate(const FrequencyModel& m) {
  std::visit([](const auto& v) { validate(v); }, m);
}

inline std::vector<JumpFamily> jump_families(const FrequencyModel& model) {
  std::vector<JumpFamily> out;
  using K = JumpFamily::Kind;
  if (const auto* c2 = std::get_if<Case2Coefficients>(&model)) {
    if (c2->a1 > 0.0) out.push_back({K::Case2Branching, c2->alpha, c2->a1, 1.0, Thinning::ByR});
    if (c2->a2 > 0.0) out.push_back({K::Case2Branching, c2->alpha, c2->a2, 0.0, Thinning::ByOneMinusR});
    for (const auto& a : c2->lambda_immigration)
      if (a.weight > 0.0)
        out.push_back({K::Case2Immigration, c2->alpha, a.weight * std::pow(a.sum(), c2->alpha - 1.0), a.type1_share(),
                       Thinning::None});
  } else if (const auto* c3 = std::get_if<Case3Coefficients>(&model)) {
    for (const auto& a : c3->lambda1)
      if (a.weight > 0.0)
        out.push_back({K::Case3, c3->alpha, a.weight * std::pow(a.sum(), c3->alpha), a.type1_share(), Thinning::ByR});
    for (const auto& a : c3->lambda2)
      if (a.weight > 0.0)
        out.push_back(
            {K::Case3, c3->alpha, a.weight * std::pow(a.sum(), c3->alpha), a.type1_share(), Thinning::ByOneMinusR});
  }
  return out;
}

/// Selection constant ∫_0^1 w^{1-α}(1-w)^{α-2} dw = B(2-α, α-1) of case (ii).
inline double case2_selection_constant(double alpha) { return std::beta(2.0 - alpha, alpha - 1.0); }

/// Frequency-process coefficients implied by admissible CSBI parameters.
inline FrequencyModel frequency_model(const CSBIParams& p, const CaseClass& regime) {
  switch (regime.tag) {
    case CaseTag::ContinuousCase: return GwfCoefficients{p.c1, p.c2, p.eta1, p.eta2};
    case CaseTag::IndepStableWithImmigration: {
      Case2Coefficients c{*regime.alpha, 0.0, 0.0, {}};
      if (p.has_m1())
        for (const auto& a : p.m1->atoms()) c.a1 += a.weight;
      if (p.has_m2())
        for (const auto& a : p.m2->atoms()) c.a2 += a.weight;
      if (p.has_nu()) c.lambda_immigration = p.nu->atoms();
      return c;
    }
    case CaseTag::MultiTypeStable: {
      Case3Coefficients c{*regime.alpha, {}, {}};
      if (p.has_m1()) c.lambda1 = p.m1->atoms();
      if (p.has_m2()) c.lambda2 = p.m2->atoms();
      return c;
    }
    case CaseTag::NotTimeChangeable: break;
  }
  fail(ErrorCode::RegimeMismatch, "parameters admit no time change: " + regime.reason);
}

}  // namespace bfreq

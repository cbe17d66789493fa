#pragma once

// Direct simulation of the three limiting frequency processes on a fixed
// grid. Jump families share one scheme: proposals with y > eps arrive at a
// state-free rate and are accepted with the thinning probability of the
// current frequency; each accepted jump maps r to r(1-y) + c·y, so jumps never
// leave [0,1].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "bfreq/csbi_sim.hpp"
#include "bfreq/error.hpp"
#include "bfreq/freq_model.hpp"
#include "bfreq/jump_laws.hpp"
#include "bfreq/rng.hpp"

namespace bfreq {

struct SdeDiagnostics {
  std::uint64_t steps = 0;
  /// Steps whose Euler update left [0,1] and was clamped back.
  std::uint64_t clamps = 0;
  std::uint64_t jumps = 0;

  [[nodiscard]] double clamp_fraction() const { return steps == 0 ? 0.0 : double(clamps) / double(steps); }
  SdeDiagnostics& operator+=(const SdeDiagnostics& o) {
    steps += o.steps;
    clamps += o.clamps;
    jumps += o.jumps;
    return *this;
  }
};

struct SdePath {
  FrequencyPath path;
  SdeDiagnostics diagnostics;
};

namespace detail {

/// Per-family constants of the scheme, computed once per model.
struct FamilyPlan {
  JumpFamily family;
  /// Jumps in (eps, gauss_hi) may be summed into a Gaussian; gauss_hi == eps
  /// disables that.
  double gauss_hi = 0.0;
  double gauss_count = 0.0;  // ∫_eps^gauss_hi Λ
  double gauss_m2 = 0.0;     // ∫_eps^gauss_hi y² Λ
  double gauss_m1 = 0.0;     // ∫_eps^gauss_hi y Λ
  double exact_from_eps = 0.0;   // ∫_eps^1 Λ
  double exact_from_hi = 0.0;    // ∫_gauss_hi^1 Λ
  double comp_from_eps = 0.0;    // ∫_eps^1 y Λ
  double small_mean = 0.0;       // ∫_0^eps y Λ, finite for uncompensated families
  std::optional<BetaEdgeSampler> from_eps;
  std::optional<BetaEdgeSampler> from_hi;
};

inline FamilyPlan make_plan(const JumpFamily& fam, const SimConfig& cfg) {
  FamilyPlan plan;
  plan.family = fam;
  const auto dens = fam.density();
  const double eps = cfg.eps;
  plan.gauss_hi = cfg.gauss_below > eps ? cfg.gauss_below : eps;
  plan.exact_from_eps = fam.scale * dens.moment(0.0, eps, 1.0);
  plan.comp_from_eps = fam.scale * dens.moment(1.0, eps, 1.0);
  plan.from_eps.emplace(dens, eps);
  if (plan.gauss_hi > eps) {
    plan.gauss_count = fam.scale * dens.moment(0.0, eps, plan.gauss_hi);
    plan.gauss_m1 = fam.scale * dens.moment(1.0, eps, plan.gauss_hi);
    plan.gauss_m2 = fam.scale * dens.moment(2.0, eps, plan.gauss_hi);
    plan.exact_from_hi = fam.scale * dens.moment(0.0, plan.gauss_hi, 1.0);
    plan.from_hi.emplace(dens, plan.gauss_hi);
  }
  if (!fam.compensated() && 2.0 - fam.q() > 0.0) plan.small_mean = fam.scale * dens.moment(1.0, 0.0, eps);
  return plan;
}

}  // namespace detail

/// Simulator for one frequency model; construction does the quadrature, each
/// path then only draws random numbers. The stream of path k is derived from
/// (cfg.master_seed, k) on the SDE lane.
class FrequencySdeSimulator {
 public:
  FrequencySdeSimulator(FrequencyModel model, SimConfig cfg) : model_(std::move(model)), cfg_(cfg) {
    validate(model_);
    cfg_.validate();
    for (const auto& fam : jump_families(model_)) plans_.push_back(detail::make_plan(fam, cfg_));
    if (const auto* c2 = std::get_if<Case2Coefficients>(&model_))
      selection_ = (c2->a2 - c2->a1) * case2_selection_constant(c2->alpha);
  }

  [[nodiscard]] const FrequencyModel& model() const noexcept { return model_; }
  [[nodiscard]] const SimConfig& config() const noexcept { return cfg_; }

  /// Path on the grid k·dt up to t_end (t_end is rounded to the nearest step).
  [[nodiscard]] SdePath simulate(double r0, double t_end, std::uint64_t path_index) const {
    require(r0 >= 0.0 && r0 <= 1.0, ErrorCode::InvalidState, "initial frequency must lie in [0,1]");
    require(t_end >= 0.0, ErrorCode::DegenerateInput, "end time must be nonnegative");
    RngStream rng(cfg_.master_seed, path_index, kSdeLane);
    const double dt = cfg_.dt;
    const auto n = static_cast<std::size_t>(std::llround(t_end / dt));
    SdePath out;
    out.path.grid.reserve(n + 1);
    out.path.values.reserve(n + 1);
    Frac r{r0, 1.0 - r0};
    out.path.grid.push_back(0.0);
    out.path.values.push_back(r0);
    for (std::size_t k = 1; k <= n; ++k) {
      r = step(r, rng, out.diagnostics);
      out.path.grid.push_back(static_cast<double>(k) * dt);
      out.path.values.push_back(r.r);
    }
    return out;
  }

 private:
  /// The state carries u = 1 - r alongside r. Every update is applied to both
  /// in a form free of cancellation, so a frequency that approaches 1 is
  /// resolved as finely as one that approaches 0.
  struct Frac {
    double r;
    double u;

    void shift(double d) {
      r += d;
      u -= d;
    }
    void jump_to(double c, const EdgeJump& j) {
      r = r * j.one_minus_y + c * j.y;
      u = u * j.one_minus_y + (1.0 - c) * j.y;
    }
    bool clamp() {
      if (r < 0.0) {
        *this = {0.0, 1.0};
      } else if (u < 0.0) {
        *this = {1.0, 0.0};
      } else {
        return false;
      }
      return true;
    }
    void resync() {
      if (r < 0.5) {
        u = 1.0 - r;
      } else {
        r = 1.0 - u;
      }
    }
  };

  Frac step(Frac r, RngStream& rng, SdeDiagnostics& diag) const {
    const double dt = cfg_.dt;
    ++diag.steps;
    if (const auto* g = std::get_if<GwfCoefficients>(&model_)) {
      if (cfg_.diffusion_scheme == DiffusionScheme::PoissonGamma) return gwf_poisson_gamma(*g, r, rng, diag);
    }
    // The drift is a polynomial in r whose coefficients depend on which
    // families run in Gaussian mode at the left state. Compensator drifts are
    // large when eps is small, so the drift is integrated by RK4 substeps
    // instead of one Euler step.
    std::array<bool, 16> mode{};
    require(plans_.size() <= mode.size(), ErrorCode::InvalidParams, "too many jump families");
    double var = 0.0;
    for (std::size_t k = 0; k < plans_.size(); ++k) {
      const auto& plan = plans_[k];
      const auto& fam = plan.family;
      const double thin = thinning_probability(fam.thinning, r.r, r.u);
      mode[k] = plan.from_hi && thin * plan.gauss_count * dt >= 30.0;
      const double d = fam.target == 1.0 ? r.u : fam.target - r.r;
      if (mode[k]) var += thin * d * d * plan.gauss_m2;
    }
    if (const auto* g = std::get_if<GwfCoefficients>(&model_))
      var += 2.0 * (g->c1 * r.r * r.u * r.u + g->c2 * r.u * r.r * r.r);
    auto drift = [&](const Frac& x) {
      double out = selection_ * x.r * x.u;
      if (const auto* g = std::get_if<GwfCoefficients>(&model_))
        out += 2.0 * (g->c2 - g->c1) * x.r * x.u + g->eta1 * x.u - g->eta2 * x.r;
      for (std::size_t k = 0; k < plans_.size(); ++k) {
        const auto& plan = plans_[k];
        const auto& fam = plan.family;
        const double thin = thinning_probability(fam.thinning, x.r, x.u);
        const double d = fam.target == 1.0 ? x.u : fam.target - x.r;
        if (mode[k]) out += thin * d * plan.gauss_m1;
        if (fam.compensated()) {
          out -= thin * d * plan.comp_from_eps;
        } else if (cfg_.small_jump_policy == SmallJumpPolicy::MeanDrift) {
          out += thin * d * plan.small_mean;
        }
      }
      return out;
    };
    auto moved = [](Frac x, double d) {
      x.shift(d);
      return x;
    };
    Frac next = r;
    constexpr int kSubsteps = 4;
    const double h = dt / kSubsteps;
    for (int s = 0; s < kSubsteps; ++s) {
      const double k1 = drift(next);
      const double k2 = drift(moved(next, 0.5 * h * k1));
      const double k3 = drift(moved(next, 0.5 * h * k2));
      const double k4 = drift(moved(next, h * k3));
      next.shift(h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0);
    }
    if (var > 0.0) next.shift(std::sqrt(var * dt) * rng.normal());
    if (next.clamp()) ++diag.clamps;
    // Proposals within a step are exchangeable, so they are applied family by
    // family, each accepted with the thinning probability of the current state.
    for (std::size_t k = 0; k < plans_.size(); ++k) {
      const auto& plan = plans_[k];
      const auto& fam = plan.family;
      const auto count = rng.poisson((mode[k] ? plan.exact_from_hi : plan.exact_from_eps) * dt);
      const auto& sampler = mode[k] ? *plan.from_hi : *plan.from_eps;
      for (std::uint64_t j = 0; j < count; ++j) {
        if (fam.thinning != Thinning::None &&
            !(rng.uniform() < thinning_probability(fam.thinning, next.r, next.u)))
          continue;
        next.jump_to(fam.target, sampler.sample(rng));
        ++diag.jumps;
      }
    }
    next.clamp();
    next.resync();
    return next;
  }

  /// The squared diffusion coefficient is 2u·k with u the distance to the
  /// nearer boundary, and the drift of u is affine in u with coefficients
  /// that vary slowly in r. One step is the CIR transition of u with those
  /// coefficients frozen at the left endpoint.
  Frac gwf_poisson_gamma(const GwfCoefficients& g, Frac x, RngStream& rng, SdeDiagnostics& diag) const {
    const double width = g.c1 * x.u + g.c2 * x.r;
    const double sel = 2.0 * (g.c2 - g.c1);
    const bool low = x.r < 0.5;
    const double u = low ? x.r : x.u;
    const double k = (low ? x.u : x.r) * width;
    const double inflow = low ? g.eta1 : g.eta2;
    const double rate = (low ? sel * x.u : -sel * x.r) - g.eta1 - g.eta2;
    const double u_next = detail::cir_step(u, k, inflow, cfg_.dt, rng, rate);
    Frac next = low ? Frac{u_next, 1.0 - u_next} : Frac{1.0 - u_next, u_next};
    if (next.clamp()) ++diag.clamps;
    return next;
  }

  FrequencyModel model_;
  SimConfig cfg_;
  std::vector<detail::FamilyPlan> plans_;
  double selection_ = 0.0;
};

/// GWF diffusion, clamped to [0,1]; the scheme follows cfg.diffusion_scheme.
inline SdePath simulate_gwf(const GwfCoefficients& m, double r0, double t_end, const SimConfig& cfg,
                            std::uint64_t path_index) {
  return FrequencySdeSimulator(m, cfg).simulate(r0, t_end, path_index);
}

inline SdePath simulate_case2(const Case2Coefficients& m, double r0, double t_end, const SimConfig& cfg,
                              std::uint64_t path_index) {
  return FrequencySdeSimulator(m, cfg).simulate(r0, t_end, path_index);
}

inline SdePath simulate_case3(const Case3Coefficients& m, double r0, double t_end, const SimConfig& cfg,
                              std::uint64_t path_index) {
  return FrequencySdeSimulator(m, cfg).simulate(r0, t_end, path_index);
}

}  // namespace bfreq

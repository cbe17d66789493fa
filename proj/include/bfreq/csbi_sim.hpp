#pragma once

// Forward simulation of the two-type CSBI process in the three time-changeable
// regimes, and extraction of the frequency path with its cemetery state.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bfreq/csbi_model.hpp"
#include "bfreq/error.hpp"
#include "bfreq/rng.hpp"
#include "bfreq/stable_measures.hpp"

namespace bfreq {

enum class StopReason { Horizon, Extinction, Cap };

inline std::string to_string(StopReason s) {
  switch (s) {
    case StopReason::Horizon: return "Horizon";
    case StopReason::Extinction: return "Extinction";
    case StopReason::Cap: return "Cap";
  }
  return "Unknown";
}

enum class SmallJumpPolicy { Neglect, MeanDrift };

/// Scheme for square-root diffusions. PoissonGamma draws the CIR transition
/// (exact for the CSBI coordinates, with frozen coefficients for the GWF
/// frequency), which keeps the boundary behaviour that clamped Euler distorts.
enum class DiffusionScheme { Euler, PoissonGamma };

/// How the total mass is read between knots when integrating along the path:
/// Linear for continuous paths, Step (left value, càdlàg) for jump paths.
enum class Interpolation { Linear, Step };

/// RNG lanes keep the two sides of an experiment on disjoint streams.
inline constexpr std::uint64_t kCsbiLane = 1;
inline constexpr std::uint64_t kSdeLane = 2;

struct SimConfig {
  double dt = 1e-3;
  /// Jump truncation. In the jump regimes a jump is kept when the fraction of
  /// the new total mass it carries, y = |u|/(Z + |u|), exceeds eps.
  double eps = 1e-4;
  double mass_cap = 1e6;
  double z_floor = 1e-6;
  double horizon = 1.0;
  std::uint64_t master_seed = 1;
  SmallJumpPolicy small_jump_policy = SmallJumpPolicy::Neglect;
  DiffusionScheme diffusion_scheme = DiffusionScheme::Euler;
  /// Kept jumps with y below this level are summed into one Gaussian per step
  /// when they are numerous (0 disables).
  double gauss_below = 1e-3;
  /// Regime (ii) only: stretch the step to dt·max(1, Z^{α-1}), so each step
  /// spans at least dt of the clock T when the mass is large.
  bool scale_free_steps = false;

  void validate() const {
    require(dt > 0.0 && eps > 0.0 && eps < 1.0 && z_floor > 0.0 && horizon > 0.0, ErrorCode::InvalidConfig,
            "dt, eps, z_floor and horizon must be positive, eps < 1");
    require(dt < horizon, ErrorCode::InvalidConfig, "dt must be smaller than the horizon");
    require(mass_cap > z_floor, ErrorCode::InvalidConfig, "mass cap must exceed the extinction threshold");
    require(gauss_below == 0.0 || (gauss_below > 0.0 && gauss_below < 1.0), ErrorCode::InvalidConfig,
            "gauss_below must be 0 or lie in (0,1)");
  }
};

struct MassPath {
  std::vector<double> grid;
  std::vector<std::array<double, 2>> states;
  StopReason stop_reason = StopReason::Horizon;
  double stop_time = 0.0;
  Interpolation interpolation = Interpolation::Linear;

  [[nodiscard]] std::size_t size() const noexcept { return grid.size(); }
  [[nodiscard]] double z(std::size_t k) const { return states[k][0] + states[k][1]; }
};

struct FrequencyPath {
  std::vector<double> grid;
  /// NaN encodes the cemetery.
  std::vector<double> values;
  std::optional<double> cemetery_from;
};

inline bool is_cemetery(double v) { return std::isnan(v); }

/// Stop the simulation once ∫ Z^e ds exceeds the given changed-time target.
struct ChangedTimeStop {
  double beta_exponent = 0.0;
  double target = 0.0;
};

namespace detail {

class MassRecorder {
 public:
  MassRecorder(const SimConfig& cfg, Interpolation interp, std::optional<ChangedTimeStop> stop)
      : cfg_(cfg), stop_(stop) {
    path_.interpolation = interp;
  }

  /// Records a knot; returns false once the path has stopped.
  bool record(double t, std::array<double, 2> x) {
    if (!path_.grid.empty() && stop_) {
      const double z_prev = path_.z(path_.size() - 1);
      const double z_now = x[0] + x[1];
      const double h = t - path_.grid.back();
      const double e = stop_->beta_exponent;
      if (path_.interpolation == Interpolation::Step || !(z_now > 0.0)) {
        clock_ += std::pow(z_prev, e) * h;
      } else {
        clock_ += 0.5 * (std::pow(z_prev, e) + std::pow(z_now, e)) * h;
      }
    }
    path_.grid.push_back(t);
    path_.states.push_back(x);
    const double z = x[0] + x[1];
    if (z < cfg_.z_floor) return finish(StopReason::Extinction, t);
    if (!(z <= cfg_.mass_cap)) return finish(StopReason::Cap, t);
    if (stop_ && clock_ > stop_->target) return finish(StopReason::Horizon, t);
    if (t >= cfg_.horizon - 1e-12 * cfg_.horizon) return finish(StopReason::Horizon, t);
    return true;
  }

  MassPath take() && { return std::move(path_); }

 private:
  bool finish(StopReason why, double t) {
    path_.stop_reason = why;
    path_.stop_time = t;
    return false;
  }

  const SimConfig& cfg_;
  std::optional<ChangedTimeStop> stop_;
  double clock_ = 0.0;
  MassPath path_;
};

/// Radius along atom a at which a jump carries the fraction y of the new mass.
inline double radius_for_fraction(double y, double z, const SphereAtom& a) { return y * z / ((1.0 - y) * a.sum()); }

inline void clamp_nonnegative(std::array<double, 2>& x) {
  x[0] = std::max(x[0], 0.0);
  x[1] = std::max(x[1], 0.0);
}

/// Exact transition of dX = (η + bX) dt + sqrt(2cX) dW over time h:
/// X_h = s · Gamma(η/c + N), N ~ Poisson(X_0 e^{bh}/s), s = c(e^{bh} - 1)/b
/// (s = c h when b = 0).
inline double cir_step(double x, double c, double eta, double h, RngStream& rng, double b = 0.0) {
  if (c == 0.0) return b == 0.0 ? x + eta * h : x * std::exp(b * h) + eta * std::expm1(b * h) / b;
  const double s = b == 0.0 ? c * h : c * std::expm1(b * h) / b;
  const auto n = rng.poisson(x * std::exp(b * h) / s);
  const double shape = eta / c + static_cast<double>(n);
  if (shape <= 0.0) return 0.0;
  std::gamma_distribution<double> gamma(shape, 1.0);
  return s * gamma(rng.engine());
}

inline MassPath simulate_continuous(const CSBIParams& p, std::array<double, 2> x, const SimConfig& cfg,
                                    RngStream& rng, std::optional<ChangedTimeStop> stop) {
  MassRecorder rec(cfg, Interpolation::Linear, stop);
  const double dt = cfg.dt;
  const double sq = std::sqrt(dt);
  double t = 0.0;
  if (!rec.record(t, x)) return std::move(rec).take();
  for (std::size_t k = 1;; ++k) {
    // The regime has a vanishing drift matrix, so the coordinates are
    // independent square-root diffusions.
    if (cfg.diffusion_scheme == DiffusionScheme::PoissonGamma) {
      x = {cir_step(x[0], p.c1, p.eta1, dt, rng), cir_step(x[1], p.c2, p.eta2, dt, rng)};
    } else {
      const double d1 = p.b11 * x[0] + p.b21 * x[1] + p.eta1;
      const double d2 = p.b22 * x[1] + p.b12 * x[0] + p.eta2;
      const double n1 = rng.normal();
      const double n2 = rng.normal();
      x = {x[0] + d1 * dt + std::sqrt(2.0 * p.c1 * x[0]) * sq * n1,
           x[1] + d2 * dt + std::sqrt(2.0 * p.c2 * x[1]) * sq * n2};
      clamp_nonnegative(x);
    }
    t = static_cast<double>(k) * dt;
    if (!rec.record(t, x)) break;
  }
  return std::move(rec).take();
}

/// (1 - e^{2κh}) / (-2κh): the variance of noise accrued uniformly over a
/// step of length h and decayed at rate κ, relative to undecayed noise.
inline double decayed_variance_factor(double kappa, double h) {
  const double x = 2.0 * kappa * h;
  return std::abs(x) < 1e-8 ? 1.0 + 0.5 * x : std::expm1(x) / x;
}

/// Regime (ii): axis-aligned stable branching with full compensation and
/// uncompensated immigration. Jump rates and truncation radii are frozen at
/// the left state of each step; numerous small jumps enter as a centred
/// Gaussian, the rest exactly at uniform times within the step. The linear
/// drift (pinned b_ii plus the compensator of the exact jumps below the
/// cutoff) is integrated exactly, since κ dt is not small when eps is.
inline MassPath simulate_independent_stable(const CSBIParams& p, double alpha, std::array<double, 2> x,
                                            const SimConfig& cfg, const TruncationChoice& trunc, RngStream& rng,
                                            std::optional<ChangedTimeStop> stop) {
  MassRecorder rec(cfg, Interpolation::Step, stop);
  double t = 0.0;
  if (!rec.record(t, x)) return std::move(rec).take();
  struct Plan {
    int type;
    const SphereAtom* atom;
    double exact_from;
    double gauss_var;
  };
  std::vector<Plan> plans;
  struct JumpSource {
    const SphereAtom* atom;
    int type;  // 0 for immigration, whose intensity does not scale with the state
    double rate;
    TruncatedPowerLaw law;
  };
  std::vector<JumpSource> sources;
  for (std::size_t k = 1;; ++k) {
    const auto left = x;
    const double z = left[0] + left[1];
    double dt = cfg.dt;
    double t_next = static_cast<double>(k) * cfg.dt;
    if (cfg.scale_free_steps) {
      t_next = std::min(t + dt * std::max(1.0, std::pow(z, alpha - 1.0)), cfg.horizon);
      dt = t_next - t;
    }
    std::array<double, 2> kappa{p.b11, p.b22};
    plans.clear();
    for (int i = 1; i <= 2; ++i) {
      const auto& m = p.branching(i);
      const double xi = left[i - 1];
      if (!m || m->is_zero() || xi == 0.0) continue;
      for (const auto& a : m->atoms()) {
        if (a.weight == 0.0) continue;
        const double r_min = radius_for_fraction(cfg.eps, z, a);
        const double r_gauss = cfg.gauss_below > cfg.eps ? radius_for_fraction(cfg.gauss_below, z, a) : r_min;
        Plan plan{i, &a, r_min, 0.0};
        if (xi * a.weight * dt * power_integral(-1.0 - alpha, r_min, r_gauss) >= 30.0) {
          // The jumps in (r_min, r_gauss) net of their compensator: a centred
          // Gaussian with their exact variance.
          plan.gauss_var = xi * a.weight * dt * power_integral(1.0 - alpha, r_min, r_gauss);
          plan.exact_from = r_gauss;
        }
        // Compensator of the exactly simulated jumps below the cutoff radius.
        const double cut = trunc.cutoff / a.sum();
        kappa[i - 1] -= a.weight * (plan.exact_from < cut ? power_integral(-alpha, plan.exact_from, cut)
                                                          : -power_integral(-alpha, cut, plan.exact_from));
        plans.push_back(plan);
      }
    }
    // Between jumps each coordinate decays at its linear rate κ_i. The exact
    // jumps are drawn event by event with intensities that follow the decaying
    // state, by thinning against a bound valid up to the end of the step.
    sources.clear();
    for (const auto& plan : plans) {
      const auto& a = *plan.atom;
      sources.push_back({&a, plan.type, a.weight * power_integral(-1.0 - alpha, plan.exact_from, kInf),
                         TruncatedPowerLaw(1.0 + alpha, plan.exact_from, kInf)});
    }
    if (p.has_nu()) {
      for (const auto& a : p.nu->atoms()) {
        if (a.weight == 0.0) continue;
        const double r_min = radius_for_fraction(cfg.eps, z, a);
        sources.push_back({&a, 0, a.weight * power_integral(-alpha, r_min, kInf), TruncatedPowerLaw(alpha, r_min, kInf)});
      }
    }
    std::array<double, 2> next = left;
    auto intensity = [&](const JumpSource& src) { return src.type == 0 ? src.rate : next[src.type - 1] * src.rate; };
    double s = 0.0;
    for (;;) {
      double bound = 0.0;
      for (const auto& src : sources) {
        const double grow = src.type == 0 || kappa[src.type - 1] <= 0.0 ? 1.0 : std::exp(kappa[src.type - 1] * (dt - s));
        bound += intensity(src) * grow;
      }
      if (!(bound > 0.0)) break;
      const double s_next = s + rng.exponential(bound);
      if (s_next >= dt) break;
      for (int i = 0; i < 2; ++i) next[i] *= std::exp(kappa[i] * (s_next - s));
      s = s_next;
      double pick = rng.uniform() * bound;
      for (const auto& src : sources) {
        pick -= intensity(src);
        if (pick < 0.0) {
          const double r = src.law.sample(rng);
          next[0] += r * src.atom->xi1;
          next[1] += r * src.atom->xi2;
          break;
        }
      }
    }
    for (int i = 0; i < 2; ++i) next[i] *= std::exp(kappa[i] * (dt - s));
    for (const auto& plan : plans) {
      if (plan.gauss_var == 0.0) continue;
      const double g = std::sqrt(plan.gauss_var) * rng.normal();
      next[0] += g * plan.atom->xi1 * std::sqrt(decayed_variance_factor(kappa[0], dt));
      next[1] += g * plan.atom->xi2 * std::sqrt(decayed_variance_factor(kappa[1], dt));
    }
    x = next;
    clamp_nonnegative(x);
    t = t_next;
    if (!rec.record(t, x)) break;
  }
  return std::move(rec).take();
}

/// Regime (iii): positive stable jumps, simulated event by event. Between
/// jumps the state is constant, so every jump time becomes a knot.
inline MassPath simulate_multitype_stable(const CSBIParams& p, double alpha, std::array<double, 2> x,
                                          const SimConfig& cfg, RngStream& rng, std::optional<ChangedTimeStop> stop) {
  MassRecorder rec(cfg, Interpolation::Step, stop);
  const double dt = cfg.dt;
  struct Source {
    int type;
    const SphereAtom* atom;
  };
  std::vector<Source> sources;
  for (int i = 1; i <= 2; ++i) {
    const auto& m = p.branching(i);
    if (!m) continue;
    for (const auto& a : m->atoms())
      if (a.weight > 0.0) sources.push_back({i, &a});
  }
  std::vector<double> rates(sources.size());

  double t = 0.0;
  if (!rec.record(t, x)) return std::move(rec).take();
  for (std::size_t k = 1;; ++k) {
    const double step_end = static_cast<double>(k) * dt;
    bool alive = true;
    for (;;) {
      const double z = x[0] + x[1];
      double total = 0.0;
      for (std::size_t s = 0; s < sources.size(); ++s) {
        const auto& src = sources[s];
        const double r_min = radius_for_fraction(cfg.eps, z, *src.atom);
        rates[s] = x[src.type - 1] * src.atom->weight * std::pow(r_min, -alpha) / alpha;
        total += rates[s];
      }
      if (!(total > 0.0)) break;
      const double t_next = t + rng.exponential(total);
      if (t_next >= step_end) break;
      double pick = rng.uniform() * total;
      std::size_t s = 0;
      while (s + 1 < sources.size() && pick >= rates[s]) pick -= rates[s++];
      const auto& a = *sources[s].atom;
      const double r = radius_for_fraction(cfg.eps, z, a) * std::pow(rng.uniform(), -1.0 / alpha);
      x[0] += r * a.xi1;
      x[1] += r * a.xi2;
      t = t_next;
      if (!rec.record(t, x)) {
        alive = false;
        break;
      }
    }
    if (!alive) break;
    if (cfg.small_jump_policy == SmallJumpPolicy::MeanDrift) {
      // Mean of the jumps below the truncation, added as drift over the step.
      const double z = x[0] + x[1];
      std::array<double, 2> drift{0.0, 0.0};
      for (const auto& src : sources) {
        const auto& a = *src.atom;
        const double r_min = radius_for_fraction(cfg.eps, z, a);
        const double mean = x[src.type - 1] * a.weight * power_integral(-alpha, 0.0, r_min);
        drift[0] += mean * a.xi1;
        drift[1] += mean * a.xi2;
      }
      x[0] += drift[0] * dt;
      x[1] += drift[1] * dt;
    }
    t = step_end;
    if (!rec.record(t, x)) break;
  }
  return std::move(rec).take();
}

}  // namespace detail

/// Simulates one CSBI path. The random stream is derived from
/// (cfg.master_seed, path_index) on the CSBI lane. With a ChangedTimeStop the
/// path ends as soon as ∫ Z^e ds passes the target (stop reason Horizon).
inline MassPath simulate_csbi(const CSBIParams& p, const CaseClass& regime, std::array<double, 2> x0,
                              const SimConfig& cfg, std::uint64_t path_index,
                              std::optional<ChangedTimeStop> stop = std::nullopt, const TruncationChoice& trunc = {}) {
  cfg.validate();
  require(regime.admissible(), ErrorCode::RegimeMismatch, "cannot simulate a non-time-changeable parameter set");
  const auto check = classify_case(p, 1e-9, trunc);
  require(check.tag == regime.tag, ErrorCode::RegimeMismatch,
          "parameters classify as " + to_string(check.tag) + ", not " + to_string(regime.tag));
  require(x0[0] >= 0.0 && x0[1] >= 0.0, ErrorCode::InvalidState, "initial state must be nonnegative");
  require(cfg.mass_cap > x0[0] + x0[1], ErrorCode::InvalidConfig, "mass cap must exceed the initial mass");
  RngStream rng(cfg.master_seed, path_index, kCsbiLane);
  switch (regime.tag) {
    case CaseTag::ContinuousCase: return detail::simulate_continuous(p, x0, cfg, rng, stop);
    case CaseTag::IndepStableWithImmigration:
      return detail::simulate_independent_stable(p, *regime.alpha, x0, cfg, trunc, rng, stop);
    case CaseTag::MultiTypeStable: return detail::simulate_multitype_stable(p, *regime.alpha, x0, cfg, rng, stop);
    case CaseTag::NotTimeChangeable: break;
  }
  fail(ErrorCode::RegimeMismatch, "unreachable regime");
}

inline FrequencyPath frequency_path(const MassPath& mp) {
  FrequencyPath fp;
  fp.grid = mp.grid;
  fp.values.resize(mp.size());
  const bool absorbed = mp.stop_reason != StopReason::Horizon;
  for (std::size_t k = 0; k < mp.size(); ++k) {
    const double z = mp.z(k);
    const bool dead = absorbed && k + 1 == mp.size();
    fp.values[k] = dead || !(z > 0.0) ? std::numeric_limits<double>::quiet_NaN() : mp.states[k][0] / z;
  }
  if (absorbed) fp.cemetery_from = mp.stop_time;
  return fp;
}

}  // namespace bfreq

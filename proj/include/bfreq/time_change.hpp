#pragma once

// The random clock T(t) = ∫_0^t β(Z_s) ds with β(z) = z^e, its inverse, and
// the frequency path read in the new clock.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "bfreq/csbi_sim.hpp"
#include "bfreq/error.hpp"

namespace bfreq {

struct TimeChangePath {
  std::vector<double> grid;
  std::vector<double> T;
  double beta_exponent = 0.0;
  Interpolation interpolation = Interpolation::Linear;

  [[nodiscard]] double horizon() const { return T.empty() ? 0.0 : T.back(); }
};

/// Cumulative clock on the knots of the mass path. Linear paths use the
/// trapezoid rule, Step paths the exact integral of the left values. The
/// interval that ends in extinction uses its left value only.
inline TimeChangePath cumulative_T(const MassPath& mp, double beta_exponent) {
  require(mp.size() >= 1 && mp.grid.size() == mp.states.size(), ErrorCode::InvalidPath,
          "mass path needs matching, nonempty grid and states");
  require(std::isfinite(beta_exponent), ErrorCode::InvalidParams, "time-change exponent must be finite");
  TimeChangePath out;
  out.grid = mp.grid;
  out.beta_exponent = beta_exponent;
  out.interpolation = mp.interpolation;
  out.T.resize(mp.size());
  out.T[0] = 0.0;
  const bool dies = mp.stop_reason == StopReason::Extinction;
  for (std::size_t k = 1; k < mp.size(); ++k) {
    const double h = mp.grid[k] - mp.grid[k - 1];
    require(h >= 0.0, ErrorCode::InvalidPath, "mass path grid must be nondecreasing");
    const double z0 = mp.z(k - 1);
    const double z1 = mp.z(k);
    require(z0 > 0.0, ErrorCode::InvalidPath, "total mass vanishes before the stopping time");
    const bool last_dead = dies && k + 1 == mp.size();
    double inc;
    if (mp.interpolation == Interpolation::Step || last_dead) {
      inc = std::pow(z0, beta_exponent) * h;
    } else {
      require(z1 > 0.0, ErrorCode::InvalidPath, "total mass vanishes before the stopping time");
      inc = 0.5 * (std::pow(z0, beta_exponent) + std::pow(z1, beta_exponent)) * h;
    }
    out.T[k] = out.T[k - 1] + inc;
  }
  return out;
}

/// Smallest s with T(s) = t, linear between knots (exact for Step paths).
inline double inverse_T(const TimeChangePath& tc, double t) {
  require(t >= 0.0, ErrorCode::DegenerateInput, "changed time must be nonnegative");
  if (t > tc.horizon()) fail(ErrorCode::BeyondHorizon, "changed time lies beyond the simulated clock");
  const auto it = std::lower_bound(tc.T.begin(), tc.T.end(), t);
  const auto k = static_cast<std::size_t>(it - tc.T.begin());
  if (k == 0) return tc.grid[0];
  const double t0 = tc.T[k - 1];
  const double t1 = tc.T[k];
  if (t1 == t0) return tc.grid[k];
  return tc.grid[k - 1] + (t - t0) / (t1 - t0) * (tc.grid[k] - tc.grid[k - 1]);
}

/// R̄(t) = R(T^{-1}(t)) on the changed grid; R is read at the last knot at or
/// before T^{-1}(t). Points at or after the cemetery time read NaN.
inline FrequencyPath time_changed_frequency(const FrequencyPath& fp, const TimeChangePath& tc,
                                            std::span<const double> changed_grid) {
  require(fp.grid.size() == tc.grid.size(), ErrorCode::InvalidPath, "frequency and clock paths must share knots");
  FrequencyPath out;
  out.grid.assign(changed_grid.begin(), changed_grid.end());
  out.values.reserve(changed_grid.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (double t : changed_grid) {
    const double s = inverse_T(tc, t);
    if (fp.cemetery_from && s >= *fp.cemetery_from) {
      if (!out.cemetery_from) out.cemetery_from = t;
      out.values.push_back(nan);
      continue;
    }
    auto it = std::upper_bound(fp.grid.begin(), fp.grid.end(), s);
    const auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - fp.grid.begin() - 1, 0));
    out.values.push_back(fp.values[k]);
  }
  return out;
}

/// Mass path re-indexed by the clock T: knot k moves to T(grid[k]).
inline MassPath changed_mass_path(const MassPath& mp, const TimeChangePath& tc) {
  MassPath out = mp;
  out.grid = tc.T;
  out.stop_time = tc.T.back();
  return out;
}

}  // namespace bfreq

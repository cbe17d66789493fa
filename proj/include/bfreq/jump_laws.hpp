#pragma once

// Jump-size laws of the frequency SDEs. Every Lévy density there has the
// form c · (1-y)^p · y^{-q} on (0,1) with p > -1: a power singularity at 0
// (infinite activity) and an integrable edge at 1.

#include <algorithm>
#include <cmath>
#include <optional>

#include "bfreq/error.hpp"
#include "bfreq/quadrature.hpp"
#include "bfreq/rng.hpp"
#include "bfreq/stable_measures.hpp"

namespace bfreq {

struct EdgeJump {
  double y;
  double one_minus_y;
};

class BetaEdgeDensity {
 public:
  BetaEdgeDensity(double p, double q) : p_(p), q_(q) {
    require(p > -1.0, ErrorCode::DivergentMass, "edge exponent must exceed -1");
  }

  [[nodiscard]] double p() const noexcept { return p_; }
  [[nodiscard]] double q() const noexcept { return q_; }

  [[nodiscard]] double operator()(double y, double one_minus_y) const {
    return std::pow(one_minus_y, p_) * std::pow(y, -q_);
  }

  /// ∫_lo^hi y^j (1-y)^p y^{-q} dy by quadrature.
  [[nodiscard]] double moment(double j, double lo, double hi) const {
    require(lo >= 0.0 && hi <= 1.0 && lo <= hi, ErrorCode::DegenerateInput, "moment interval must lie in [0,1]");
    if (lo == 0.0 && j - q_ <= -1.0) fail(ErrorCode::DivergentMass, "jump moment diverges at 0");
    auto f = [&](double y, double to_b) {
      const double one_minus_y = hi == 1.0 ? to_b : 1.0 - y;
      return std::pow(one_minus_y, p_) * std::pow(y, j - q_);
    };
    return quad::integrate(f, lo, hi);
  }

 private:
  double p_;
  double q_;
};

/// Exact sampler for (1-y)^p y^{-q} restricted to (lo, 1): rejection from a
/// two-piece envelope, a truncated power law y^{-q} on (lo, 1/2] and the edge
/// law (1-y)^p on (1/2, 1).
class BetaEdgeSampler {
 public:
  BetaEdgeSampler(const BetaEdgeDensity& density, double lo) : density_(density), lo_(lo) {
    require(lo > 0.0 && lo < 1.0, ErrorCode::InvalidTruncation, "jump truncation must lie in (0,1)");
    mid_ = std::max(lo_, 0.5);
    const double p = density_.p();
    const double q = density_.q();
    if (lo_ < mid_) {
      bound_a_ = p >= 0.0 ? std::pow(1.0 - lo_, p) : std::pow(1.0 - mid_, p);
      weight_a_ = bound_a_ * power_integral(-q, lo_, mid_);
    }
    bound_b_ = std::pow(mid_, -q);
    weight_b_ = bound_b_ * std::pow(1.0 - mid_, p + 1.0) / (p + 1.0);
    if (lo_ < mid_) head_.emplace(q, lo_, mid_);
  }

  [[nodiscard]] double lo() const noexcept { return lo_; }

  EdgeJump sample(RngStream& rng) const {
    const double p = density_.p();
    const double q = density_.q();
    const double total = weight_a_ + weight_b_;
    for (;;) {
      if (rng.uniform() * total < weight_a_) {
        const double y = head_->quantile(rng.uniform());
        const double accept = std::pow(1.0 - y, p) / bound_a_;
        if (rng.uniform() < accept) return {y, 1.0 - y};
      } else {
        const double v = (1.0 - mid_) * std::pow(rng.uniform(), 1.0 / (p + 1.0));
        const double y = 1.0 - v;
        const double accept = std::pow(y, -q) / bound_b_;
        if (rng.uniform() < accept) return {y, v};
      }
    }
  }

 private:
  BetaEdgeDensity density_;
  double lo_;
  double mid_ = 0.5;
  double bound_a_ = 0.0;
  double weight_a_ = 0.0;
  double bound_b_ = 0.0;
  double weight_b_ = 0.0;
  std::optional<TruncatedPowerLaw> head_;
};

}  // namespace bfreq

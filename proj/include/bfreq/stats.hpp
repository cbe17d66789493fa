#pragma once

// Two-sample and one-sample comparison statistics for Monte-Carlo output.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "bfreq/csbi_sim.hpp"
#include "bfreq/error.hpp"
#include "bfreq/polynomial.hpp"

namespace bfreq {

inline constexpr double kKsCoefficient1pct = 1.628;

struct KsResult {
  double D = 0.0;
  double critical_1pct = 0.0;
  [[nodiscard]] bool pass() const { return D < critical_1pct; }
};

/// Two-sample Kolmogorov–Smirnov statistic with the asymptotic 1% critical
/// value. Ties are handled by advancing both samples past equal values.
inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  require(!a.empty() && !b.empty(), ErrorCode::EmptyInput, "KS test needs two nonempty samples");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double m = static_cast<double>(x.size());
  const double n = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / m - static_cast<double>(j) / n));
  }
  return {d, kKsCoefficient1pct * std::sqrt((m + n) / (m * n))};
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

/// Sample mean and its standard error (sample variance with n-1).
inline MeanSe mean_se(std::span<const double> v) {
  require(!v.empty(), ErrorCode::EmptyInput, "empty sample");
  const double n = static_cast<double>(v.size());
  // Accumulated as offsets from the first value, so a constant sample has
  // exactly its value as mean and zero variance.
  double offset = 0.0;
  for (double x : v) offset += x - v[0];
  const double mean = v[0] + offset / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double var = v.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

struct MomentZ {
  int order = 0;
  double value = 0.0;
  double target = 0.0;
  double se = 0.0;
  double z = 0.0;
  /// The SE vanished; z is 0 when value equals target and ±∞ otherwise.
  bool degenerate = false;
};

namespace detail {

inline std::vector<double> powers_of(std::span<const double> v, int n) {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [n](double x) { return std::pow(x, n); });
  return out;
}

inline MomentZ make_z(int order, double value, double target, double se) {
  MomentZ m{order, value, target, se, 0.0, se == 0.0};
  const double diff = value - target;
  if (se > 0.0) {
    m.z = diff / se;
  } else if (diff != 0.0) {
    m.z = std::copysign(std::numeric_limits<double>::infinity(), diff);
  }
  return m;
}

}  // namespace detail

/// z_n = (sample n-th raw moment - targets[n-1]) / SE_n, n = 1..targets.size().
inline std::vector<MomentZ> moment_compare(std::span<const double> samples, std::span<const double> targets) {
  require(targets.size() <= 4, ErrorCode::DegenerateInput, "moment orders are limited to 4");
  std::vector<MomentZ> out;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const int n = static_cast<int>(k) + 1;
    const auto pw = detail::powers_of(samples, n);
    const auto ms = mean_se(pw);
    out.push_back(detail::make_z(n, ms.mean, targets[k], ms.se));
  }
  return out;
}

/// Two-sample version: z_n = (m_n(a) - m_n(b)) / sqrt(SE_a² + SE_b²).
inline std::vector<MomentZ> moment_compare_two_sample(std::span<const double> a, std::span<const double> b,
                                                      int orders) {
  require(orders >= 1 && orders <= 4, ErrorCode::DegenerateInput, "moment orders must lie in 1..4");
  std::vector<MomentZ> out;
  for (int n = 1; n <= orders; ++n) {
    const auto ma = mean_se(detail::powers_of(a, n));
    const auto mb = mean_se(detail::powers_of(b, n));
    out.push_back(detail::make_z(n, ma.mean, mb.mean, std::hypot(ma.se, mb.se)));
  }
  return out;
}

/// A f(r) for a fixed generator.
using GeneratorFn = std::function<double(const TestFunction&, double)>;

struct ResidualZ {
  std::size_t f_index = 0;
  double t = 0.0;
  double mean = 0.0;
  double se = 0.0;
  double z = 0.0;
};

namespace detail {

inline std::size_t knot_index(const FrequencyPath& p, double t) {
  const auto it = std::lower_bound(p.grid.begin(), p.grid.end(), t - 1e-9 * (1.0 + std::abs(t)));
  require(it != p.grid.end() && std::abs(*it - t) <= 1e-9 * (1.0 + std::abs(t)), ErrorCode::DegenerateInput,
          "residual time does not lie on the path grid");
  return static_cast<std::size_t>(it - p.grid.begin());
}

}  // namespace detail

/// z-scores of mean[f(R_{t+h}) - f(R_t) - h·Af(R_t)] over the paths, for each
/// f and each t. Paths in the cemetery at t+h are skipped. t and t+h must be
/// knots of every path.
inline std::vector<ResidualZ> martingale_residual(std::span<const FrequencyPath> paths, const GeneratorFn& A,
                                                  std::span<const TestFunction> fs, double h,
                                                  std::span<const double> times) {
  require(h > 0.0, ErrorCode::DegenerateInput, "residual step must be positive");
  std::vector<ResidualZ> out;
  for (double t : times) {
    std::vector<std::array<double, 2>> pairs;
    pairs.reserve(paths.size());
    for (const auto& p : paths) {
      const double a = p.values[detail::knot_index(p, t)];
      const double b = p.values[detail::knot_index(p, t + h)];
      if (is_cemetery(a) || is_cemetery(b)) continue;
      pairs.push_back({a, b});
    }
    require(!pairs.empty(), ErrorCode::EmptyInput, "no live paths at the residual time");
    for (std::size_t fi = 0; fi < fs.size(); ++fi) {
      const auto& f = fs[fi];
      std::vector<double> res(pairs.size());
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto [a, b] = pairs[k];
        res[k] = f(b) - f(a) - h * A(f, a);
      }
      const auto ms = mean_se(res);
      out.push_back({fi, t, ms.mean, ms.se, ms.se > 0.0 ? ms.mean / ms.se : 0.0});
    }
  }
  return out;
}

}  // namespace bfreq

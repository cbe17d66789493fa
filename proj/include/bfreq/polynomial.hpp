#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "bfreq/error.hpp"

namespace bfreq {

/// Dense polynomial in the monomial basis, coefficients in ascending degree.
class Polynomial {
 public:
  Polynomial() : coeffs_{0.0} {}
  explicit Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) coeffs_.push_back(0.0);
  }
  Polynomial(std::initializer_list<double> coeffs) : Polynomial(std::vector<double>(coeffs)) {}

  static Polynomial monomial(std::size_t n, double scale = 1.0) {
    std::vector<double> c(n + 1, 0.0);
    c[n] = scale;
    return Polynomial(std::move(c));
  }
  static Polynomial constant(double v) { return Polynomial({v}); }

  [[nodiscard]] std::size_t size() const noexcept { return coeffs_.size(); }
  [[nodiscard]] std::size_t degree() const noexcept {
    std::size_t d = coeffs_.size() - 1;
    while (d > 0 && coeffs_[d] == 0.0) --d;
    return d;
  }
  [[nodiscard]] const std::vector<double>& coeffs() const noexcept { return coeffs_; }
  [[nodiscard]] double coeff(std::size_t k) const noexcept { return k < coeffs_.size() ? coeffs_[k] : 0.0; }

  [[nodiscard]] double operator()(double x) const noexcept {
    double acc = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
    return acc;
  }

  [[nodiscard]] Polynomial derivative() const {
    if (coeffs_.size() == 1) return Polynomial{0.0};
    std::vector<double> d(coeffs_.size() - 1);
    for (std::size_t k = 1; k < coeffs_.size(); ++k) d[k - 1] = static_cast<double>(k) * coeffs_[k];
    return Polynomial(std::move(d));
  }

  /// Coefficients t_j of f(x + h) = sum_j t_j h^j, i.e. t_j = f^{(j)}(x) / j!.
  [[nodiscard]] std::vector<double> taylor_at(double x) const {
    std::vector<double> t = coeffs_;
    const std::size_t n = t.size();
    // Repeated synthetic division (Horner shift).
    for (std::size_t i = 0; i + 1 < n; ++i)
      for (std::size_t k = n - 1; k > i; --k) t[k - 1] += x * t[k];
    return t;
  }

  Polynomial& operator+=(const Polynomial& o) {
    if (o.coeffs_.size() > coeffs_.size()) coeffs_.resize(o.coeffs_.size(), 0.0);
    for (std::size_t k = 0; k < o.coeffs_.size(); ++k) coeffs_[k] += o.coeffs_[k];
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    if (o.coeffs_.size() > coeffs_.size()) coeffs_.resize(o.coeffs_.size(), 0.0);
    for (std::size_t k = 0; k < o.coeffs_.size(); ++k) coeffs_[k] -= o.coeffs_[k];
    return *this;
  }
  Polynomial& operator*=(double s) {
    for (double& c : coeffs_) c *= s;
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    std::vector<double> c(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
      for (std::size_t j = 0; j < b.coeffs_.size(); ++j) c[i + j] += a.coeffs_[i] * b.coeffs_[j];
    return Polynomial(std::move(c));
  }

 private:
  std::vector<double> coeffs_;
};

/// sum_{j >= first} t[j] h^j; the exact remainder of a Taylor expansion, free
/// of the cancellation in f(x+h) - f(x) - f'(x) h for small h.
inline double taylor_tail(const std::vector<double>& t, std::size_t first, double h) {
  double acc = 0.0;
  for (std::size_t j = t.size(); j-- > first;) acc = acc * h + t[j];
  return acc * std::pow(h, static_cast<double>(first));
}

/// A C² test function on [0,1], restricted to polynomials of degree <= 8.
class TestFunction {
 public:
  static constexpr std::size_t kMaxDegree = 8;

  explicit TestFunction(Polynomial p) : poly_(std::move(p)) {
    require(poly_.degree() <= kMaxDegree, ErrorCode::DegenerateInput,
            "test function degree exceeds " + std::to_string(kMaxDegree));
    for (double c : poly_.coeffs())
      require(std::isfinite(c), ErrorCode::DegenerateInput, "non-finite test function coefficient");
    d1_ = poly_.derivative();
    d2_ = d1_.derivative();
  }

  static TestFunction monomial(std::size_t n) { return TestFunction(Polynomial::monomial(n)); }
  static TestFunction constant(double v) { return TestFunction(Polynomial::constant(v)); }

  [[nodiscard]] double operator()(double r) const { return poly_(r); }
  [[nodiscard]] double d1(double r) const { return d1_(r); }
  [[nodiscard]] double d2(double r) const { return d2_(r); }
  [[nodiscard]] const Polynomial& poly() const noexcept { return poly_; }
  [[nodiscard]] std::vector<double> taylor_at(double r) const { return poly_.taylor_at(r); }

 private:
  Polynomial poly_;
  Polynomial d1_;
  Polynomial d2_;
};

}  // namespace bfreq

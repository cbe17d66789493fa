#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "bfreq/quadrature.hpp"
#include "bfreq/rng.hpp"
#include "bfreq/stable_measures.hpp"

using namespace bfreq;

namespace {

StableLevyMeasure e1_branching(double alpha, double w) { return StableLevyMeasure::branching(alpha, {SphereAtom::e1(w)}); }

// φ_z-image of the radial interval (r_lo, r_hi] along e1, as a rectangle.
SimplexRect e1_image(double z, double r_lo, double r_hi) {
  const double t_lo = r_lo / (z + r_lo);
  const double t_hi = std::isinf(r_hi) ? 1.0 : r_hi / (z + r_hi);
  return {t_lo, t_hi, 0.0, 0.0};
}

}  // namespace

TEST(SphereAtom, RejectsNonUnitDirection) {
  EXPECT_THROW((SphereAtom{0.5, 0.5, 1.0}.validate()), Error);
  EXPECT_NO_THROW(SphereAtom::from_direction(1.0, 1.0, 2.0).validate());
}

TEST(StableLevyMeasure, BranchingAboveOneMustLieOnAxes) {
  EXPECT_THROW(StableLevyMeasure::branching(1.5, {SphereAtom::from_direction(1, 1, 1)}), Error);
  EXPECT_NO_THROW(StableLevyMeasure::immigration(1.5, {SphereAtom::from_direction(1, 1, 1)}));
  EXPECT_NO_THROW(StableLevyMeasure::branching(0.5, {SphereAtom::from_direction(1, 1, 1)}));
  EXPECT_THROW(StableLevyMeasure::branching(2.0, {SphereAtom::e1(1)}), Error);
  EXPECT_THROW(StableLevyMeasure::branching(0.5, {}), Error);
}

TEST(TailMass, ClosedFormMatchesQuadrature) {
  const auto m = e1_branching(0.5, 2.0);
  const double closed = tail_mass(m, RadialBox::all_atoms(m, 4.0));
  const double quad = 2.0 * quad::power_tail_integral([](double) { return 1.0; }, 4.0, 1.5);
  EXPECT_NEAR(quad, 2.0, 1e-10);
  EXPECT_DOUBLE_EQ(closed, 2.0);
}

TEST(TailMass, EmptySubsetAndInfiniteLowerBoundGiveZero) {
  const auto m = e1_branching(0.5, 2.0);
  EXPECT_EQ(tail_mass(m, RadialBox{1.0, kInf, {}}), 0.0);
  EXPECT_EQ(tail_mass(m, RadialBox::all_atoms(m, kInf, kInf)), 0.0);
}

TEST(TailMass, DivergesForImmigrationTailBelowOne) {
  const auto nu = StableLevyMeasure::immigration(0.5, {SphereAtom::e1(1)});
  EXPECT_THROW(tail_mass(nu, RadialBox::all_atoms(nu, 1.0)), Error);
}

TEST(TailMass, AdditiveOverDisjointBoxes) {
  RngStream rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const double alpha = 0.05 + 1.9 * rng.uniform();
    const auto m = StableLevyMeasure::immigration(alpha, {SphereAtom::e1(rng.uniform()), SphereAtom::e2(1.0)});
    const double a = 0.1 + rng.uniform();
    const double b = a + 3.0 * rng.uniform();
    const double c = b + 5.0 * rng.uniform();
    const double whole = tail_mass(m, RadialBox::all_atoms(m, a, c));
    const double parts = tail_mass(m, RadialBox::all_atoms(m, a, b)) + tail_mass(m, RadialBox::all_atoms(m, b, c));
    EXPECT_NEAR(whole, parts, 1e-12 * std::max(1.0, whole));
  }
}

TEST(Pushforward, ImageOfUnitTailIsTwo) {
  const auto m = e1_branching(0.5, 1.0);
  EXPECT_NEAR(pushforward_mass(m, 1.0, e1_image(1.0, 1.0, kInf)), 2.0, 1e-14);
}

TEST(Pushforward, MatchesQuadratureOfPreimage) {
  // Oracle: integrate r^{-ρ} over {r : φ_z(rξ) ∈ B} by brute force on a
  // generous radial range with an indicator.
  const auto atom = SphereAtom::from_direction(1.0, 2.0, 1.3);
  const auto m = StableLevyMeasure::branching(0.7, {atom});
  const SimplexRect rect{0.05, 0.2, 0.1, 0.5};
  const double z = 1.7;
  auto inside = [&](double r) {
    const double w1 = r * atom.xi1 / (z + r * atom.sum());
    const double w2 = r * atom.xi2 / (z + r * atom.sum());
    return w1 >= rect.w1_lo && w1 <= rect.w1_hi && w2 >= rect.w2_lo && w2 <= rect.w2_hi;
  };
  // The preimage is an interval; locate it by bisection, then integrate.
  double lo = 1e-6;
  double hi = 1e6;
  for (double r = 1e-6; r < 1e6; r *= 1.001)
    if (inside(r)) {
      lo = r;
      break;
    }
  for (double r = lo; r < 1e6; r *= 1.0001)
    if (!inside(r)) {
      hi = r;
      break;
    }
  const double oracle = atom.weight * quad::integrate_gk([](double r) { return std::pow(r, -1.7); }, lo, hi);
  EXPECT_NEAR(pushforward_mass(m, z, rect), oracle, 2e-3 * oracle);
}

TEST(Pushforward, RatioIsPowerOfZ) {
  for (double alpha : {0.5, 1.5}) {
    const auto m = e1_branching(alpha, 1.0);
    for (const auto& rect : {SimplexRect{0.1, 0.3, 0.0, 0.0}, SimplexRect{0.01, 0.9, 0.0, 0.0}}) {
      const double ratio = pushforward_mass(m, 2.0, rect) / pushforward_mass(m, 1.0, rect);
      EXPECT_NEAR(ratio, std::pow(2.0, -alpha), 1e-13);
    }
  }
}

TEST(Pushforward, WholeSimplexDivergesAtOrigin) {
  const auto m = e1_branching(0.5, 1.0);
  try {
    pushforward_mass(m, 1.0, SimplexRect{0.0, 1.0, 0.0, 1.0});
    FAIL() << "expected DivergentMass";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DivergentMass);
  }
}

TEST(Pushforward, BoundaryRegionWithInfiniteImmigrationMass) {
  const auto nu = StableLevyMeasure::immigration(0.5, {SphereAtom::e1(1)});
  try {
    pushforward_mass(nu, 1.0, SimplexRect{0.5, 1.0, 0.0, 0.0});
    FAIL() << "expected BoundaryRegion";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BoundaryRegion);
  }
}

TEST(Pushforward, ScalingPropertyOverRandomRegions) {
  RngStream rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const double alpha = 0.05 + 1.9 * rng.uniform();
    const bool branching = rng.uniform() < 0.5;
    std::vector<SphereAtom> atoms{SphereAtom::e1(0.2 + rng.uniform()), SphereAtom::e2(0.2 + rng.uniform())};
    if (!(branching && alpha > 1.0)) atoms.push_back(SphereAtom::from_direction(rng.uniform(), rng.uniform(), 1.0));
    const StableLevyMeasure m(alpha, branching ? MeasureKind::Branching : MeasureKind::Immigration, atoms);
    const double a = 0.01 + 0.2 * rng.uniform();
    const double b = 0.01 + 0.2 * rng.uniform();
    const SimplexRect rect{a, a + 0.25 * rng.uniform(), b, b + 0.25 * rng.uniform()};
    const SimplexRect axis{a, a + 0.3, 0.0, 0.0};
    for (const auto& r : {rect, axis}) {
      const double base = pushforward_mass(m, 1.0, r);
      if (base == 0.0) continue;
      for (double z : {0.5, 2.0, 4.0}) {
        const double scaled = pushforward_mass(m, z, r) * std::pow(z, m.radial_exponent() - 1.0);
        EXPECT_NEAR(scaled / base, 1.0, 1e-12);
      }
    }
  }
}

TEST(Dilation, FactorIsPowerOfC) {
  const auto m = e1_branching(0.5, 1.0);
  EXPECT_NEAR(dilation_pushforward_factor(m, 2.0, RadialBox::all_atoms(m, 1.0)), std::sqrt(2.0), 1e-14);
  EXPECT_DOUBLE_EQ(dilation_pushforward_factor(m, 1.0, RadialBox::all_atoms(m, 1.0)), 1.0);
  const auto nu = StableLevyMeasure::immigration(1.5, {SphereAtom::e1(1)});
  EXPECT_NEAR(dilation_pushforward_factor(nu, 4.0, RadialBox::all_atoms(nu, 1.0)), 2.0, 1e-14);
  for (double c : {0.5, 2.0, 10.0})
    EXPECT_NEAR(dilation_pushforward_factor(m, c, RadialBox::all_atoms(m, 0.3, 7.0)), std::pow(c, 0.5), 1e-10);
  EXPECT_THROW(dilation_pushforward_factor(m, 2.0, RadialBox{1.0, kInf, {}}), Error);
}

TEST(TruncatedRadialMoment, ClosedForms) {
  const auto m = e1_branching(0.5, 1.0);
  const auto v = truncated_radial_moment(m, 1, 0.0, 1.0);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_DOUBLE_EQ(v[0], 2.0);
  EXPECT_EQ(truncated_radial_moment(m, 0, 2.0, 2.0)[0], 0.0);
  EXPECT_THROW(truncated_radial_moment(m, 1, 1.0, kInf), Error);
  const double oracle = quad::integrate_gk([](double r) { return r * std::pow(r, -1.5); }, 0.25, 3.0);
  EXPECT_NEAR(truncated_radial_moment(m, 1, 0.25, 3.0)[0], oracle, 1e-12);
}

TEST(SampleJump, StaysOnSingleAtomRay) {
  const auto m = e1_branching(0.5, 1.0);
  RngStream rng(3);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_jump(m, 1.0, kInf, rng)[1], 0.0);
}

TEST(SampleJump, RadiusMedianAndKolmogorovDistance) {
  const auto m = e1_branching(0.5, 1.0);
  RngStream rng(5);
  const int n = 10000;
  std::vector<double> radii(n);
  for (auto& r : radii) r = sample_jump(m, 1.0, kInf, rng)[0];
  std::sort(radii.begin(), radii.end());
  const double median = 0.5 * (radii[n / 2 - 1] + radii[n / 2]);
  EXPECT_NEAR(median, 4.0, 0.25);
  const TruncatedPowerLaw law(1.5, 1.0, kInf);
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    const double f = law.cdf(radii[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
  }
  EXPECT_LT(d, 0.02);
}

TEST(SampleJump, EmptyIntervalIsInvalid) {
  const auto m = e1_branching(0.5, 1.0);
  RngStream rng(1);
  try {
    sample_jump(m, 1.0, 1.0, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidTruncation);
  }
}

TEST(ScalingCheck, StableMeasureRecoversAlpha) {
  const auto m = e1_branching(1.5, 1.0);
  const std::vector<double> zs{0.5, 2.0, 4.0};
  const std::vector<SimplexRect> regions{{0.1, 0.2, 0, 0}, {0.3, 0.6, 0, 0}, {0.05, 0.95, 0, 0}};
  const auto res = scaling_check<SimplexRect>(
      [&](double z, const SimplexRect& r) { return pushforward_mass(m, z, r); }, zs, regions, 1e-6);
  EXPECT_TRUE(res.is_scaling);
  EXPECT_NEAR(res.alpha_hat, 1.5, 1e-6);
  EXPECT_LT(res.max_rel_dev, 1e-10);
}

TEST(ScalingCheck, ExponentialRadialMeasureFails) {
  const ExponentialRadialMeasure m;
  const std::vector<double> zs{0.5, 2.0};
  const std::vector<double> zs3{0.5, 2.0, 4.0};
  const std::vector<SimplexRect> regions{{0.1, 0.2, 0, 0}, {0.3, 0.6, 0, 0}, {0.05, 0.95, 0, 0}};
  auto eval = [&](double z, const SimplexRect& r) { return m.pushforward_mass(z, r); };
  const auto res = scaling_check<SimplexRect>(eval, zs, regions, 1e-3);
  EXPECT_FALSE(res.is_scaling);
  EXPECT_GT(res.max_rel_dev, 0.1);
  EXPECT_FALSE(scaling_check<SimplexRect>(eval, zs3, regions, 1e-3).is_scaling);
}

TEST(ScalingCheck, SingleZIsDegenerate) {
  const auto m = e1_branching(1.5, 1.0);
  const std::vector<double> zs{2.0, 2.0};
  const std::vector<SimplexRect> regions{{0.1, 0.2, 0, 0}};
  EXPECT_THROW(scaling_check<SimplexRect>([&](double z, const SimplexRect& r) { return pushforward_mass(m, z, r); },
                                          zs, regions, 1e-6),
               Error);
}

TEST(ScalingCheck, AllZeroMassesAreDegenerate) {
  const std::vector<double> zs{1.0, 2.0};
  const std::vector<SimplexRect> regions{{0.1, 0.2, 0, 0}};
  EXPECT_THROW(scaling_check<SimplexRect>([](double, const SimplexRect&) { return 0.0; }, zs, regions, 1e-6), Error);
}

TEST(TruncatedPowerLaw, QuantileInvertsCdf) {
  RngStream rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    const double rho = 0.1 + 2.8 * rng.uniform();
    const double lo = 0.01 + rng.uniform();
    const double hi = lo * (1.0 + 100.0 * rng.uniform());
    const TruncatedPowerLaw law(rho, lo, hi);
    const double u = rng.uniform();
    EXPECT_NEAR(law.cdf(law.quantile(u)), u, 1e-9);
  }
}

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "adablur/errors.hpp"
#include "adablur/gauss_kernel.hpp"
#include "oracles.hpp"

using namespace adablur;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

KernelGrid rotate90(const KernelGrid& k) {
  KernelGrid out{k.size, k.values};
  for (int r = 0; r < k.size; ++r)
    for (int c = 0; c < k.size; ++c) out.at(c, k.size - 1 - r) = k.at(r, c);
  return out;
}

double max_diff(const KernelGrid& a, const KernelGrid& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

}  // namespace

TEST(Covariance, ZeroAngleIsDiagonal) {
  const auto c = covariance(1.0, 0.0, 0.3);
  EXPECT_DOUBLE_EQ(c.xx, 1.0);
  EXPECT_DOUBLE_EQ(c.xy, 0.0);
  EXPECT_DOUBLE_EQ(c.yy, 0.3);
}

TEST(Covariance, QuarterTurnSwapsAxes) {
  const auto c = covariance(1.0, 90.0 * kDeg, 0.3);
  EXPECT_NEAR(c.xx, 0.3, 1e-15);
  EXPECT_EQ(c.xy, 0.0);
  EXPECT_NEAR(c.yy, 1.0, 1e-15);
}

TEST(Covariance, FortyFiveDegreesMatchesSymbolicExpansion) {
  const auto c = covariance(2.0, 45.0 * kDeg, 0.3);
  EXPECT_NEAR(c.xx, 1.3, 1e-14);
  EXPECT_NEAR(c.xy, 0.7, 1e-14);
  EXPECT_NEAR(c.yy, 1.3, 1e-14);
  // Generic angle against the closed form f(cos^2 + a sin^2), f cos sin (1 - a).
  const double t = 0.37, f = 1.7, a = 0.3;
  const auto g = covariance(f, t, a);
  EXPECT_NEAR(g.xx, f * (std::cos(t) * std::cos(t) + a * std::sin(t) * std::sin(t)), 1e-14);
  EXPECT_NEAR(g.xy, f * std::cos(t) * std::sin(t) * (1 - a), 1e-14);
  EXPECT_NEAR(g.yy, f * (std::sin(t) * std::sin(t) + a * std::cos(t) * std::cos(t)), 1e-14);
}

TEST(Covariance, RejectsNonPositiveInputs) {
  EXPECT_THROW(covariance(0.0, 0.0), InvalidArgument);
  EXPECT_THROW(covariance(-1.0, 0.0), InvalidArgument);
  EXPECT_THROW(covariance(1.0, 0.0, 0.0), InvalidArgument);
  EXPECT_THROW((Covariance2{1.0, 2.0, 1.0}.validate()), InvalidArgument);
}

TEST(CellMass, DiagonalMatchesCdfProduct) {
  const Covariance2 c{1.0, 0.0, 0.3};
  const double expect = (oracle::normal_cdf(0.5) - oracle::normal_cdf(0.0)) *
                        (oracle::normal_cdf(0.5 / std::sqrt(0.3)) - oracle::normal_cdf(0.0));
  EXPECT_NEAR(cell_mass(c, 0.0, 0.0, 0.5, 0.5), expect, 1e-15);
}

TEST(CellMass, TotalProbabilityOverWideRoi) {
  const Covariance2 c{1.0, 0.0, 1.0};
  double total = 0.0;
  for (int r = 0; r < 16; ++r)
    for (int q = 0; q < 16; ++q) total += cell_mass(c, -8.0 + q, -8.0 + r, -7.0 + q, -7.0 + r);
  EXPECT_NEAR(total, 1.0, 1e-6);
}

TEST(CellMass, CorrelatedMatchesMidpointOracle) {
  const Covariance2 c{1.0, 0.5, 1.0};
  for (const auto& [x0, y0] : std::vector<std::pair<double, double>>{{0.0, 0.0}, {-0.5, 0.0}, {1.0, -1.5}, {-3.0, 2.5}}) {
    const double ref = oracle::extrapolated_midpoint_mass(c, x0, y0, x0 + 0.5, y0 + 0.5);
    EXPECT_NEAR(cell_mass(c, x0, y0, x0 + 0.5, y0 + 0.5), ref, 1e-9) << "cell at " << x0 << "," << y0;
  }
}

TEST(CellMass, MidpointOracleConvergesTowardQuadrature) {
  // The raw midpoint rule's error must fall by 4x per halving of its step,
  // with cell_mass as the limit.
  const Covariance2 c{1.0, 0.5, 1.0};
  const double q = cell_mass(c, 0.0, 0.0, 0.5, 0.5);
  const double e256 = oracle::midpoint_mass(c, 0.0, 0.0, 0.5, 0.5, 256) - q;
  const double e512 = oracle::midpoint_mass(c, 0.0, 0.0, 0.5, 0.5, 512) - q;
  const double e1024 = oracle::midpoint_mass(c, 0.0, 0.0, 0.5, 0.5, 1024) - q;
  EXPECT_NEAR(e256 / e512, 4.0, 1e-3);
  EXPECT_NEAR(e512 / e1024, 4.0, 1e-3);
}

TEST(CellMass, StronglyCorrelatedNarrowKernel) {
  const auto c = covariance(0.25, 45.0 * kDeg, 0.3);
  for (double x0 : {-0.5, 0.0, 0.5}) {
    const double ref = oracle::extrapolated_midpoint_mass(c, x0, x0, x0 + 0.5, x0 + 0.5);
    EXPECT_NEAR(cell_mass(c, x0, x0, x0 + 0.5, x0 + 0.5), ref, 1e-9);
  }
}

TEST(CellMass, RejectsDegenerateRectangle) {
  const Covariance2 c{1.0, 0.0, 1.0};
  EXPECT_THROW(cell_mass(c, 0.0, 0.0, 0.0, 1.0), InvalidArgument);
  EXPECT_THROW(cell_mass(c, 0.0, 1.0, 1.0, 0.5), InvalidArgument);
}

TEST(Discretize, AxisAlignedMatchesClosedFormBeforeNormalization) {
  const Covariance2 c{1.0, 0.0, 0.3};
  const KernelGrid raw = discretize_unnormalized(c, 4.0, 16);
  ASSERT_EQ(raw.size, 16);
  for (int r = 0; r < 16; ++r)
    for (int q = 0; q < 16; ++q) {
      const double x0 = -4.0 + 0.5 * q, y0 = -4.0 + 0.5 * r;
      EXPECT_NEAR(raw.at(r, q), oracle::cdf_product_mass(1.0, 0.3, x0, y0, x0 + 0.5, y0 + 0.5), 1e-12);
    }
}

TEST(Discretize, RowIndexFollowsY) {
  // Wide along x, narrow along y: the central row spreads more than the column.
  const KernelGrid k = discretize(Covariance2{1.0, 0.0, 0.1}, 4.0, 16);
  EXPECT_GT(k.at(7, 4), k.at(4, 7));
}

TEST(Discretize, NormalizedToUnitSum) {
  const KernelGrid k = discretize(covariance(3.0, 30.0 * kDeg), 4.0, 16);
  EXPECT_NEAR(k.sum(), 1.0, 1e-12);
  for (double v : k.values) EXPECT_GE(v, 0.0);
}

TEST(Discretize, IsotropicIsQuarterTurnSymmetric) {
  const KernelGrid k = discretize(Covariance2{0.8, 0.0, 0.8}, 4.0, 16);
  EXPECT_LE(max_diff(k, rotate90(k)), 1e-12);
}

TEST(Discretize, CentrallySymmetricForAnyCovariance) {
  for (double angle : {0.0, 20.0, 45.0, -45.0, 77.0}) {
    const KernelGrid k = discretize(covariance(1.3, angle * kDeg), 4.0, 16);
    EXPECT_LE(max_diff(k, rotate90(rotate90(k))), 1e-12) << angle;
  }
}

TEST(BuildBank, GroupOneHasFourKernels) {
  const KernelBank bank = build_bank(BankSpec::with_factors({1.0}));
  EXPECT_EQ(bank.size(), 4u);
  for (const auto& k : bank.kernels) {
    EXPECT_EQ(k.size, 16);
    EXPECT_NEAR(k.sum(), 1.0, 1e-12);
  }
}

TEST(BuildBank, GroupTwoOrderIsFactorMajor) {
  const auto spec = BankSpec::with_factors({2.0, 2.4});
  const KernelBank bank = build_bank(spec);
  ASSERT_EQ(bank.size(), 8u);
  for (std::size_t f = 0; f < 2; ++f)
    for (std::size_t a = 0; a < 4; ++a)
      EXPECT_EQ(bank.kernel(f, a), discretize(covariance(spec.factors[f], spec.angles[a], 0.3), 4.0, 16));
}

TEST(BuildBank, PlusAndMinusFortyFiveAreMirrorImages) {
  // Reflecting x -> -x maps the +45 degree Gaussian to the -45 degree one.
  // On the half-open grid cell c maps to 15 - c.
  const KernelBank bank = build_bank(BankSpec::with_factors({1.0}));
  const KernelGrid& plus = bank.kernel(0, 1);
  const KernelGrid& minus = bank.kernel(0, 2);
  double m = 0.0;
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) m = std::max(m, std::abs(plus.at(r, c) - minus.at(r, 15 - c)));
  EXPECT_LE(m, 1e-12);
}

TEST(BuildBank, SecondMomentIncreasesWithFactor) {
  const std::vector<double> factors{0.25, 0.5, 1.0, 2.0, 3.0};
  for (std::size_t a = 0; a < 4; ++a) {
    double prev = 0.0;
    for (double f : factors) {
      const KernelBank bank = build_bank(BankSpec::with_factors({f}));
      const double m = bank.kernel(0, a).second_moment(4.0);
      EXPECT_GT(m, prev) << "factor " << f << " angle index " << a;
      prev = m;
    }
  }
}

TEST(RescaleBank, SameFactorsIsBitwiseIdentity) {
  const KernelBank bank = build_bank(BankSpec::with_factors({1.0, 1.2}));
  const std::vector<double> same{1.0, 1.2};
  EXPECT_EQ(rescale_bank(bank, same), bank);
}

TEST(RescaleBank, WiderFactorGivesLargerSecondMoments) {
  const KernelBank narrow = build_bank(BankSpec::with_factors({0.5}));
  const std::vector<double> wide{2.0};
  const KernelBank rescaled = rescale_bank(narrow, wide);
  ASSERT_EQ(rescaled.size(), narrow.size());
  for (std::size_t k = 0; k < narrow.size(); ++k)
    EXPECT_GT(rescaled.kernels[k].second_moment(4.0), narrow.kernels[k].second_moment(4.0));
}

TEST(RescaleBank, GroupTwoKeepsRatio) {
  const std::vector<double> own{1.0, 1.2};
  const auto f = ratio_preserving_factors(own, 2.0);
  ASSERT_EQ(f.size(), 2u);
  EXPECT_DOUBLE_EQ(f[0], 2.0);
  EXPECT_NEAR(f[1] / f[0], 1.2, 1e-15);
  const KernelBank bank = rescale_bank(build_bank(BankSpec::with_factors(own)), f);
  EXPECT_EQ(bank, build_bank(BankSpec::with_factors(f)));
}

TEST(RescaleBank, CountMismatchThrows) {
  const KernelBank bank = build_bank(BankSpec::with_factors({1.0}));
  const std::vector<double> two{1.0, 2.0};
  EXPECT_THROW(rescale_bank(bank, two), TopologyError);
}

TEST(BankSpec, TopologyComparisonIgnoresFactors) {
  EXPECT_TRUE(same_topology(BankSpec::with_factors({0.5}), BankSpec::with_factors({3.0})));
  EXPECT_FALSE(same_topology(BankSpec::with_factors({0.5}), BankSpec::with_factors({0.5, 0.6})));
  BankSpec other = BankSpec::with_factors({0.5});
  other.aspect = 0.5;
  EXPECT_FALSE(same_topology(BankSpec::with_factors({0.5}), other));
}

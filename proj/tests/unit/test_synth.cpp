#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "adablur/errors.hpp"
#include "adablur/synth.hpp"
#include "oracles.hpp"

using namespace adablur;

TEST(BlurSubsample, MatchesDirectSummation) {
  const GrayImage hr = oracle::random_image(24, 20, 1);
  const KernelGrid k = discretize(covariance(1.0, 0.5), 4.25, 17);
  const GrayImage lr = blur_subsample(hr, k, 4);
  ASSERT_EQ(lr.height(), 6);
  ASSERT_EQ(lr.width(), 5);
  for (int m = 0; m < 6; ++m)
    for (int n = 0; n < 5; ++n) {
      double acc = 0.0;
      for (int i = -8; i <= 8; ++i)
        for (int j = -8; j <= 8; ++j)
          acc += k.at(i + 8, j + 8) * hr.at(oracle::mirror(4 * m + i, 24), oracle::mirror(4 * n + j, 20));
      EXPECT_NEAR(lr.at(m, n), acc, 1e-14);
    }
}

TEST(BlurSubsample, NearDeltaKernelIsStridedSubsampling) {
  // At factor 0.01 the centre cell holds ~99% of the mass; the remainder
  // spreads to neighbours, so on a smooth HR image the per-pixel deviation
  // from plain subsampling is bounded by the local variation.
  SyntheticSpec spec;
  spec.truth_cov = covariance(0.01, 0.0);
  spec.scale = 2;
  const KernelGrid k = discretize(spec.truth_cov, spec.roi_half_width, spec.kernel_size);
  EXPECT_GT(k.at(8, 8), 0.98);
  GrayImage hr(32, 32);
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 32; ++c) hr.at(r, c) = 0.5 + 0.4 * std::sin(0.05 * r) * std::cos(0.04 * c);
  const GrayImage lr = blur_subsample(hr, k, 2);
  for (int m = 0; m < 16; ++m)
    for (int n = 0; n < 16; ++n) EXPECT_NEAR(lr.at(m, n), hr.at(2 * m, 2 * n), 1e-3);
}

TEST(SynthPairs, ConstantHrGivesConstantLr) {
  const KernelGrid k = discretize(covariance(2.0, 0.3), 4.25, 17);
  const GrayImage lr = blur_subsample(GrayImage(32, 32, 0.5), k, 4);
  for (double v : lr.data()) EXPECT_NEAR(v, 0.5, 1e-14);
}

TEST(SynthPairs, DeterministicForSeed) {
  SyntheticSpec spec;
  const auto a = synth_pairs(spec, 4, 7);
  const auto b = synth_pairs(spec, 4, 7);
  const auto c = synth_pairs(spec, 4, 8);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].hr, b[i].hr);
    EXPECT_EQ(a[i].lr, b[i].lr);
    EXPECT_EQ(a[i].scale, 4);
    EXPECT_EQ(a[i].hr.height(), 64);
    EXPECT_EQ(a[i].lr.height(), 16);
    a[i].validate();
  }
  EXPECT_NE(a[0].hr, c[0].hr);
}

TEST(SynthPairs, LrIsTheTruthDegradationOfHr) {
  SyntheticSpec spec;
  spec.truth_cov = covariance(1.0, 30.0 * std::acos(-1.0) / 180.0);
  const auto pairs = synth_pairs(spec, 3, 9);
  const KernelGrid k = discretize(spec.truth_cov, spec.roi_half_width, spec.kernel_size);
  for (const auto& p : pairs) EXPECT_EQ(p.lr, blur_subsample(p.hr, k, 4).clamped());
}

TEST(SynthPairs, NoiseIsAddedAndClamped) {
  SyntheticSpec spec;
  spec.noise_sigma = 0.05;
  const auto noisy = synth_pairs(spec, 2, 10);
  spec.noise_sigma = 0.0;
  const auto clean = synth_pairs(spec, 2, 10);
  EXPECT_EQ(noisy[0].hr, clean[0].hr);
  EXPECT_NE(noisy[0].lr, clean[0].lr);
  for (const auto& p : noisy) p.lr.validate();
}

TEST(SynthPairs, TexturesSpanUnitRange) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 9; ++i) {
    const GrayImage t = procedural_texture(64, rng);
    const auto [lo, hi] = std::minmax_element(t.data().begin(), t.data().end());
    EXPECT_EQ(*lo, 0.0);
    EXPECT_NEAR(*hi, 1.0, 1e-15);
  }
}

TEST(SynthPairs, HrDirectorySourceAndErrors) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "adablur_synth_src";
  fs::remove_all(dir);
  fs::create_directories(dir);
  save_image(oracle::random_image(80, 72, 12), dir / "a.pgm");
  SyntheticSpec spec;
  spec.hr_directory = dir;
  const auto pairs = synth_pairs(spec, 2, 13);
  EXPECT_EQ(pairs[0].hr.height(), 64);
  spec.hr_size = 128;
  EXPECT_THROW(synth_pairs(spec, 1, 13), ShapeError);
  spec.hr_directory = dir / "missing";
  EXPECT_THROW(synth_pairs(spec, 1, 13), IoError);
  fs::remove_all(dir);
  SyntheticSpec bad;
  bad.hr_size = 62;
  EXPECT_THROW(synth_pairs(bad, 1, 0), InvalidArgument);
}

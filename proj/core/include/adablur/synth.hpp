#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "adablur/gauss_kernel.hpp"
#include "adablur/image_io.hpp"

namespace adablur {

// Ground-truth degradation used to fabricate HR/LR pairs:
//   LR[m] = sum_p HR[p] k[scale*m - p]
// with k the discretized truth Gaussian. The grid is odd-sized so the
// kernel has a center tap; its cell width matches the default bank
// (2 * 4.25 / 17 == 2 * 4 / 16).
struct SyntheticSpec {
  Covariance2 truth_cov = covariance(1.0, 0.0);
  int scale = 4;
  int hr_size = 64;
  double noise_sigma = 0.0;
  int kernel_size = 17;
  double roi_half_width = 4.25;
  // Empty: procedural textures. Otherwise HR crops are taken from the
  // images in this directory (color inputs converted to luma).
  std::filesystem::path hr_directory;

  void validate() const;
};

// Blurs with `kernel` (reflect padding, kernel center at (size-1)/2) and
// keeps every `scale`-th sample starting at 0.
GrayImage blur_subsample(const GrayImage& hr, const KernelGrid& kernel, int scale);

// Random 64x64-style texture: a sum of oriented sinusoids, a stack of
// random convex polygons, or Gaussian-filtered white noise, rescaled to
// fill [0, 1].
GrayImage procedural_texture(int size, std::mt19937_64& rng);

std::vector<ImagePair> synth_pairs(const SyntheticSpec& spec, int count, std::uint64_t seed);

}  // namespace adablur

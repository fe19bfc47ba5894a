#include "adablur/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "adablur/errors.hpp"

namespace adablur {

namespace fs = std::filesystem;

void SyntheticSpec::validate() const {
  truth_cov.validate();
  if (scale < 1) detail::throw_invalid("synthetic scale must be >= 1");
  if (hr_size <= 0 || hr_size % scale != 0) detail::throw_invalid("synthetic hr_size must be a multiple of scale");
  if (!(noise_sigma >= 0.0)) detail::throw_invalid("noise sigma must be non-negative");
  if (kernel_size < 1 || !(roi_half_width > 0.0)) detail::throw_invalid("invalid truth kernel grid");
}

GrayImage blur_subsample(const GrayImage& hr, const KernelGrid& kernel, int scale) {
  if (scale < 1) detail::throw_invalid("scale must be >= 1");
  if (hr.height() % scale != 0 || hr.width() % scale != 0)
    detail::throw_shape("HR size must be divisible by the scale");
  const int center = (kernel.size - 1) / 2;
  GrayImage lr(hr.height() / scale, hr.width() / scale);
  for (int m = 0; m < lr.height(); ++m)
    for (int n = 0; n < lr.width(); ++n) {
      double acc = 0.0;
      for (int i = 0; i < kernel.size; ++i) {
        const int r = reflect_index(m * scale + i - center, hr.height());
        for (int j = 0; j < kernel.size; ++j)
          acc += kernel.at(i, j) * hr.at(r, reflect_index(n * scale + j - center, hr.width()));
      }
      lr.at(m, n) = acc;
    }
  return lr;
}

namespace {

void normalize_range(GrayImage& img) {
  const auto [lo, hi] = std::minmax_element(img.data().begin(), img.data().end());
  const double a = *lo;
  const double span = *hi - *lo;
  for (double& v : img.data()) v = span > 0.0 ? (v - a) / span : 0.5;
}

GrayImage sinusoid_texture(int size, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GrayImage img(size, size);
  const int waves = 3 + static_cast<int>(u(rng) * 3);
  for (int k = 0; k < waves; ++k) {
    const double theta = u(rng) * std::numbers::pi;
    const double freq = 2.0 + 10.0 * u(rng);
    const double phase = 2.0 * std::numbers::pi * u(rng);
    const double amp = 0.2 + 0.8 * u(rng);
    const double cx = std::cos(theta) / size;
    const double cy = std::sin(theta) / size;
    for (int r = 0; r < size; ++r)
      for (int c = 0; c < size; ++c)
        img.at(r, c) += amp * std::sin(2.0 * std::numbers::pi * freq * (c * cx + r * cy) + phase);
  }
  return img;
}

GrayImage polygon_texture(int size, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GrayImage img(size, size, u(rng));
  const int shapes = 4 + static_cast<int>(u(rng) * 5);
  for (int s = 0; s < shapes; ++s) {
    const double cx = u(rng) * size;
    const double cy = u(rng) * size;
    const double radius = (0.05 + 0.3 * u(rng)) * size;
    const int sides = 3 + static_cast<int>(u(rng) * 4);
    const double rot = 2.0 * std::numbers::pi * u(rng);
    const double value = u(rng);
    for (int r = 0; r < size; ++r)
      for (int c = 0; c < size; ++c) {
        bool inside = true;
        for (int k = 0; k < sides && inside; ++k) {
          const double a = rot + 2.0 * std::numbers::pi * k / sides;
          inside = (c - cx) * std::cos(a) + (r - cy) * std::sin(a) < radius;
        }
        if (inside) img.at(r, c) = value;
      }
  }
  return img;
}

GrayImage noise_texture(int size, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  GrayImage img(size, size);
  for (double& v : img.data()) v = normal(rng);
  const double sigma = 1.5 + 3.5 * u(rng);
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) total += taps[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& t : taps) t /= total;
  GrayImage tmp(size, size);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += taps[i + radius] * img.at(r, reflect_index(c + i, size));
      tmp.at(r, c) = acc;
    }
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += taps[i + radius] * tmp.at(reflect_index(r + i, size), c);
      img.at(r, c) = acc;
    }
  return img;
}

std::vector<GrayImage> load_hr_sources(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("HR source is not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".pgm" || ext == ".png" || ext == ".ppm")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) detail::throw_invalid("HR source directory has no images: " + dir.string());
  std::vector<GrayImage> images;
  for (const auto& f : files) images.push_back(load_image_as_gray(f));
  return images;
}

}  // namespace

GrayImage procedural_texture(int size, std::mt19937_64& rng) {
  if (size <= 0) detail::throw_invalid("texture size must be positive");
  GrayImage img;
  switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
    case 0:
      img = sinusoid_texture(size, rng);
      break;
    case 1:
      img = polygon_texture(size, rng);
      break;
    default:
      img = noise_texture(size, rng);
      break;
  }
  normalize_range(img);
  return img;
}

std::vector<ImagePair> synth_pairs(const SyntheticSpec& spec, int count, std::uint64_t seed) {
  spec.validate();
  if (count < 0) detail::throw_invalid("pair count must be non-negative");
  std::vector<GrayImage> sources;
  if (!spec.hr_directory.empty()) sources = load_hr_sources(spec.hr_directory);

  const KernelGrid kernel = discretize(spec.truth_cov, spec.roi_half_width, spec.kernel_size);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<ImagePair> pairs;
  pairs.reserve(count);
  for (int i = 0; i < count; ++i) {
    GrayImage hr;
    if (sources.empty()) {
      hr = procedural_texture(spec.hr_size, rng);
    } else {
      const GrayImage& src = sources[static_cast<std::size_t>(i) % sources.size()];
      if (src.height() < spec.hr_size || src.width() < spec.hr_size)
        throw ShapeError("HR source image smaller than hr_size");
      const int top = std::uniform_int_distribution<int>(0, src.height() - spec.hr_size)(rng);
      const int left = std::uniform_int_distribution<int>(0, src.width() - spec.hr_size)(rng);
      hr = src.crop(top, left, spec.hr_size, spec.hr_size);
    }
    GrayImage lr = blur_subsample(hr, kernel, spec.scale);
    if (spec.noise_sigma > 0.0)
      for (double& v : lr.data()) v += spec.noise_sigma * noise(rng);
    pairs.push_back({std::move(hr), lr.clamped(), spec.scale});
  }
  return pairs;
}

}  // namespace adablur

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace adablur {

// Row-major grayscale image with intensities in [0, 1].
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int height, int width, double fill = 0.0);
  GrayImage(int height, int width, std::vector<double> data);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int row, int col) { return data_[static_cast<std::size_t>(row) * width_ + col]; }
  double at(int row, int col) const { return data_[static_cast<std::size_t>(row) * width_ + col]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  // Throws InvalidArgument if any intensity lies outside [0, 1] or is NaN.
  void validate() const;

  GrayImage crop(int top, int left, int height, int width) const;
  GrayImage flipped_horizontal() const;
  GrayImage flipped_vertical() const;
  // Copy with every value clamped into [0, 1].
  GrayImage clamped() const;

  bool operator==(const GrayImage&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

struct PatchSpec {
  int hr_size = 64;
  int scale = 4;
  bool flip_horizontal = false;
  bool flip_vertical = false;

  void validate() const;
};

// HR and LR views of the same field of view; hr dims == lr dims * scale.
struct ImagePair {
  GrayImage hr;
  GrayImage lr;
  int scale = 1;

  void validate() const;
};

// Top-left HR offset of an extracted patch. The LR offset is offset / scale.
struct PatchOrigin {
  int row = 0;
  int col = 0;
};

// Reads binary PGM (P5, 8 or 16 bit) or grayscale PNG. Color PNGs are
// rejected with FormatError.
GrayImage load_image(const std::filesystem::path& path);

// Like load_image, but color PNG and P6 PPM inputs are converted to luma
// with BT.601 weights (0.299 R + 0.587 G + 0.114 B).
GrayImage load_image_as_gray(const std::filesystem::path& path);

// Writes a binary PGM with the given maxval (255 or 65535). Values are
// rounded to the nearest code, so a reload is within 1/(2*maxval).
void save_image(const GrayImage& img, const std::filesystem::path& path, int maxval = 255);

// Random aligned patch pairs. Offsets are multiples of spec.scale drawn
// uniformly over all valid placements; requested flips are applied to both
// members. Deterministic for a given seed.
std::vector<ImagePair> extract_pairs(const GrayImage& hr, const GrayImage& lr, const PatchSpec& spec,
                                     int count, std::uint64_t rng_seed,
                                     std::vector<PatchOrigin>* origins = nullptr);

// Antialiased cubic convolution downsampling (Keys kernel, a = -0.5) with
// reflect boundary handling. The kernel support is stretched by `scale`.
GrayImage bicubic_downsample(const GrayImage& img, int scale);

// Keys cubic convolution kernel with a = -0.5.
double cubic_kernel(double x);

// Maps an out-of-range index into [0, n) by mirror reflection about the
// first and last samples (the edge sample is not repeated).
int reflect_index(int i, int n);

struct NamedPair {
  std::string name;
  ImagePair pair;
};

// Loads every `<name>_HR.<ext>` / `<name>_LR.<ext>` pair in a directory,
// sorted by name. The scale is inferred from the image sizes.
std::vector<NamedPair> load_pair_directory(const std::filesystem::path& dir);

void save_pair_directory(const std::vector<NamedPair>& pairs, const std::filesystem::path& dir,
                         int maxval = 65535);

}  // namespace adablur

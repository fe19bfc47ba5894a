#include "adablur/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "adablur/errors.hpp"

namespace adablur {

namespace fs = std::filesystem;

GrayImage::GrayImage(int height, int width, double fill) : height_(height), width_(width) {
  if (height < 0 || width < 0) detail::throw_invalid("image dimensions must be non-negative");
  data_.assign(static_cast<std::size_t>(height) * width, fill);
}

GrayImage::GrayImage(int height, int width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (height < 0 || width < 0) detail::throw_invalid("image dimensions must be non-negative");
  if (data_.size() != static_cast<std::size_t>(height) * width)
    detail::throw_shape("image data length does not match height x width");
}

void GrayImage::validate() const {
  for (double v : data_) {
    if (!(v >= 0.0 && v <= 1.0)) detail::throw_invalid("image intensity outside [0,1]");
  }
}

GrayImage GrayImage::crop(int top, int left, int h, int w) const {
  if (top < 0 || left < 0 || h < 0 || w < 0 || top + h > height_ || left + w > width_)
    detail::throw_shape("crop window outside image");
  GrayImage out(h, w);
  for (int r = 0; r < h; ++r)
    std::copy_n(&data_[static_cast<std::size_t>(top + r) * width_ + left], w, &out.at(r, 0));
  return out;
}

GrayImage GrayImage::flipped_horizontal() const {
  GrayImage out(height_, width_);
  for (int r = 0; r < height_; ++r)
    for (int c = 0; c < width_; ++c) out.at(r, c) = at(r, width_ - 1 - c);
  return out;
}

GrayImage GrayImage::flipped_vertical() const {
  GrayImage out(height_, width_);
  for (int r = 0; r < height_; ++r)
    std::copy_n(&data_[static_cast<std::size_t>(height_ - 1 - r) * width_], width_, &out.at(r, 0));
  return out;
}

GrayImage GrayImage::clamped() const {
  GrayImage out = *this;
  for (double& v : out.data_) v = std::clamp(v, 0.0, 1.0);
  return out;
}

void PatchSpec::validate() const {
  if (scale < 2) detail::throw_invalid("patch scale must be >= 2");
  if (hr_size <= 0 || hr_size % scale != 0)
    detail::throw_invalid("patch hr_size must be a positive multiple of scale");
}

void ImagePair::validate() const {
  if (scale < 1) detail::throw_invalid("pair scale must be >= 1");
  if (hr.height() != lr.height() * scale || hr.width() != lr.width() * scale)
    detail::throw_shape("HR dimensions must equal LR dimensions times scale");
}

// ---------------------------------------------------------------------------
// PGM / PPM

namespace {

std::vector<unsigned char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for " + path.string());
  return bytes;
}

// Parses the ASCII header shared by P5/P6 and returns the offset of the
// first raster byte.
struct PnmHeader {
  char kind = 0;
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t data_offset = 0;
};

PnmHeader parse_pnm_header(const std::vector<unsigned char>& bytes, const std::string& name) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw FormatError(name + ": not a binary PGM/PPM file");
  PnmHeader h;
  h.kind = static_cast<char>(bytes[1]);
  std::size_t pos = 2;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&] {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw FormatError(name + ": malformed header");
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > (1L << 30)) throw FormatError(name + ": header value too large");
      ++pos;
    }
    return static_cast<int>(v);
  };
  h.width = read_int();
  h.height = read_int();
  h.maxval = read_int();
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw FormatError(name + ": malformed header");
  ++pos;  // exactly one whitespace byte before the raster
  if (h.width <= 0 || h.height <= 0) throw FormatError(name + ": empty image");
  if (h.maxval <= 0 || h.maxval > 65535) throw FormatError(name + ": maxval out of range");
  h.data_offset = pos;
  return h;
}

std::vector<double> read_pnm_samples(const std::vector<unsigned char>& bytes, const PnmHeader& h,
                                     int channels, const std::string& name) {
  const std::size_t count = static_cast<std::size_t>(h.width) * h.height * channels;
  const std::size_t bps = h.maxval > 255 ? 2 : 1;
  if (bytes.size() - h.data_offset < count * bps) throw FormatError(name + ": truncated raster");
  std::vector<double> out(count);
  const unsigned char* p = bytes.data() + h.data_offset;
  const double inv = 1.0 / h.maxval;
  for (std::size_t i = 0; i < count; ++i) {
    unsigned v = bps == 2 ? (unsigned(p[2 * i]) << 8) | p[2 * i + 1] : p[i];
    if (v > static_cast<unsigned>(h.maxval)) throw FormatError(name + ": sample exceeds maxval");
    out[i] = v * inv;
  }
  return out;
}

double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

GrayImage load_pnm(const fs::path& path, bool allow_color) {
  const auto bytes = read_file(path);
  const std::string name = path.string();
  const PnmHeader h = parse_pnm_header(bytes, name);
  if (h.kind == '5') return GrayImage(h.height, h.width, read_pnm_samples(bytes, h, 1, name));
  if (!allow_color) throw FormatError(name + ": color PPM is not a grayscale image");
  const auto rgb = read_pnm_samples(bytes, h, 3, name);
  GrayImage img(h.height, h.width);
  for (std::size_t i = 0; i < img.size(); ++i)
    img.data()[i] = std::clamp(luma(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]), 0.0, 1.0);
  return img;
}

// ---------------------------------------------------------------------------
// PNG

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

GrayImage load_png(const fs::path& path, bool allow_color) {
  const std::string name = path.string();
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(name.c_str(), "rb"));
  if (!file) throw IoError("cannot open " + name);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw FormatError(name + ": libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw FormatError(name + ": libpng initialization failed");
  }

  std::vector<unsigned char> raster;
  std::vector<png_bytep> rows;
  volatile png_uint_32 width = 0, height = 0;
  volatile int bit_depth = 0, color_type = 0, channels = 0;
  volatile bool failed = false;

  if (setjmp(png_jmpbuf(png))) {
    failed = true;
  } else {
    png_init_io(png, file.get());
    png_read_info(png, info);
    width = png_get_image_width(png, info);
    height = png_get_image_height(png, info);
    bit_depth = png_get_bit_depth(png, info);
    color_type = png_get_color_type(png, info);
    if (color_type & PNG_COLOR_MASK_COLOR) {
      if (!allow_color) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError(name + ": PNG is not grayscale");
      }
      if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    } else if (bit_depth < 8) {
      png_set_expand_gray_1_2_4_to_8(png);
    }
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    bit_depth = png_get_bit_depth(png, info);
    channels = png_get_channels(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    raster.resize(rowbytes * height);
    rows.resize(height);
    for (png_uint_32 r = 0; r < height; ++r) rows[r] = raster.data() + r * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (failed) throw FormatError(name + ": corrupt PNG");

  const double maxval = bit_depth == 16 ? 65535.0 : 255.0;
  const std::size_t n = static_cast<std::size_t>(width) * height * channels;
  std::vector<double> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    unsigned v = bit_depth == 16 ? (unsigned(raster[2 * i]) << 8) | raster[2 * i + 1] : raster[i];
    samples[i] = v / maxval;
  }
  GrayImage img(static_cast<int>(height), static_cast<int>(width));
  if (channels == 1) {
    img.data() = std::move(samples);
  } else {
    for (std::size_t i = 0; i < img.size(); ++i)
      img.data()[i] = std::clamp(
          luma(samples[channels * i], samples[channels * i + 1], samples[channels * i + 2]), 0.0, 1.0);
  }
  return img;
}

bool has_png_signature(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::array<unsigned char, 8> sig{};
  in.read(reinterpret_cast<char*>(sig.data()), sig.size());
  return in.gcount() == 8 && png_sig_cmp(sig.data(), 0, 8) == 0;
}

GrayImage load_any(const fs::path& path, bool allow_color) {
  if (!fs::exists(path)) throw IoError("no such file: " + path.string());
  return has_png_signature(path) ? load_png(path, allow_color) : load_pnm(path, allow_color);
}

}  // namespace

GrayImage load_image(const fs::path& path) { return load_any(path, false); }

GrayImage load_image_as_gray(const fs::path& path) { return load_any(path, true); }

void save_image(const GrayImage& img, const fs::path& path, int maxval) {
  if (maxval != 255 && maxval != 65535) detail::throw_invalid("PGM maxval must be 255 or 65535");
  if (img.empty()) detail::throw_invalid("cannot save an empty image");
  img.validate();
  std::string out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n" +
                    std::to_string(maxval) + "\n";
  const std::size_t header = out.size();
  const std::size_t bps = maxval > 255 ? 2 : 1;
  out.resize(header + img.size() * bps);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const auto code = static_cast<unsigned>(std::lround(img.data()[i] * maxval));
    if (bps == 2) {
      out[header + 2 * i] = static_cast<char>(code >> 8);
      out[header + 2 * i + 1] = static_cast<char>(code & 0xff);
    } else {
      out[header + i] = static_cast<char>(code);
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Patches

std::vector<ImagePair> extract_pairs(const GrayImage& hr, const GrayImage& lr, const PatchSpec& spec,
                                     int count, std::uint64_t rng_seed, std::vector<PatchOrigin>* origins) {
  spec.validate();
  ImagePair{hr, lr, spec.scale}.validate();
  if (count < 0) detail::throw_invalid("patch count must be non-negative");
  if (hr.height() < spec.hr_size || hr.width() < spec.hr_size)
    detail::throw_shape("image smaller than patch size");

  const int s = spec.scale;
  const int lr_size = spec.hr_size / s;
  const int max_row = (hr.height() - spec.hr_size) / s;
  const int max_col = (hr.width() - spec.hr_size) / s;
  std::mt19937_64 rng(rng_seed);
  std::uniform_int_distribution<int> pick_row(0, max_row);
  std::uniform_int_distribution<int> pick_col(0, max_col);

  std::vector<ImagePair> out;
  out.reserve(count);
  if (origins) origins->clear();
  for (int i = 0; i < count; ++i) {
    const int lr_row = pick_row(rng);
    const int lr_col = pick_col(rng);
    ImagePair p{hr.crop(lr_row * s, lr_col * s, spec.hr_size, spec.hr_size),
                lr.crop(lr_row, lr_col, lr_size, lr_size), s};
    if (spec.flip_horizontal) {
      p.hr = p.hr.flipped_horizontal();
      p.lr = p.lr.flipped_horizontal();
    }
    if (spec.flip_vertical) {
      p.hr = p.hr.flipped_vertical();
      p.lr = p.lr.flipped_vertical();
    }
    if (origins) origins->push_back({lr_row * s, lr_col * s});
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bicubic baseline

double cubic_kernel(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x < 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return (((x - 5.0) * x + 8.0) * x - 4.0) * a;
  return 0.0;
}

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

namespace {

struct Tap {
  int index;
  double weight;
};

// Normalized taps for every output sample along one axis.
std::vector<std::vector<Tap>> resample_taps(int in_size, int scale) {
  const int out_size = in_size / scale;
  const double support = 2.0 * scale;
  std::vector<std::vector<Tap>> taps(out_size);
  for (int o = 0; o < out_size; ++o) {
    const double center = (o + 0.5) * scale - 0.5;
    const int lo = static_cast<int>(std::floor(center - support));
    const int hi = static_cast<int>(std::ceil(center + support));
    double total = 0.0;
    std::map<int, double> merged;
    for (int i = lo; i <= hi; ++i) {
      const double w = cubic_kernel((i - center) / scale);
      if (w == 0.0) continue;
      merged[reflect_index(i, in_size)] += w;
      total += w;
    }
    for (auto [idx, w] : merged) taps[o].push_back({idx, w / total});
  }
  return taps;
}

}  // namespace

GrayImage bicubic_downsample(const GrayImage& img, int scale) {
  if (scale < 1) detail::throw_invalid("scale must be >= 1");
  if (img.height() % scale != 0 || img.width() % scale != 0)
    detail::throw_shape("image dimensions are not divisible by the scale");
  const auto row_taps = resample_taps(img.height(), scale);
  const auto col_taps = resample_taps(img.width(), scale);
  const int oh = img.height() / scale;
  const int ow = img.width() / scale;

  GrayImage horiz(img.height(), ow);
  for (int r = 0; r < img.height(); ++r)
    for (int c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (const Tap& t : col_taps[c]) acc += t.weight * img.at(r, t.index);
      horiz.at(r, c) = acc;
    }
  GrayImage out(oh, ow);
  for (int r = 0; r < oh; ++r)
    for (int c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (const Tap& t : row_taps[r]) acc += t.weight * horiz.at(t.index, c);
      out.at(r, c) = std::clamp(acc, 0.0, 1.0);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Pair directories

namespace {

bool split_pair_name(const std::string& stem, std::string& base, bool& is_hr) {
  if (stem.size() > 3 && stem.compare(stem.size() - 3, 3, "_HR") == 0) {
    base = stem.substr(0, stem.size() - 3);
    is_hr = true;
    return true;
  }
  if (stem.size() > 3 && stem.compare(stem.size() - 3, 3, "_LR") == 0) {
    base = stem.substr(0, stem.size() - 3);
    is_hr = false;
    return true;
  }
  return false;
}

}  // namespace

std::vector<NamedPair> load_pair_directory(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::map<std::string, std::pair<fs::path, fs::path>> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext != ".pgm" && ext != ".png") continue;
    std::string base;
    bool is_hr = false;
    if (!split_pair_name(entry.path().stem().string(), base, is_hr)) continue;
    (is_hr ? found[base].first : found[base].second) = entry.path();
  }
  std::vector<NamedPair> out;
  for (const auto& [name, paths] : found) {
    if (paths.first.empty() || paths.second.empty())
      throw FormatError("unmatched HR/LR pair for '" + name + "' in " + dir.string());
    GrayImage hr = load_image(paths.first);
    GrayImage lr = load_image(paths.second);
    if (lr.height() == 0 || hr.height() % lr.height() != 0)
      throw ShapeError("pair '" + name + "' has a non-integer scale ratio");
    const int scale = hr.height() / lr.height();
    ImagePair p{std::move(hr), std::move(lr), scale};
    try {
      p.validate();
    } catch (const ShapeError&) {
      throw ShapeError("pair '" + name + "' has inconsistent HR/LR dimensions");
    }
    out.push_back({name, std::move(p)});
  }
  return out;
}

void save_pair_directory(const std::vector<NamedPair>& pairs, const fs::path& dir, int maxval) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  for (const auto& p : pairs) {
    save_image(p.pair.hr, dir / (p.name + "_HR.pgm"), maxval);
    save_image(p.pair.lr, dir / (p.name + "_LR.pgm"), maxval);
  }
}

}  // namespace adablur

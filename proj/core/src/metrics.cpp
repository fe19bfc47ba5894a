#include "adablur/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "adablur/errors.hpp"

namespace adablur {

namespace {

void require_same_dims(const GrayImage& a, const GrayImage& b) {
  if (a.height() != b.height() || a.width() != b.width()) detail::throw_shape("image dimensions differ");
  if (a.empty()) detail::throw_shape("empty images");
}

std::vector<double> gaussian_window() {
  std::vector<double> w(kSsimWindow);
  const int half = kSsimWindow / 2;
  double total = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - half;
    total += w[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
  }
  for (double& v : w) v /= total;
  return w;
}

}  // namespace

double mean_absolute_error(const GrayImage& a, const GrayImage& b) {
  require_same_dims(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a.data()[i] - b.data()[i]);
  return acc / static_cast<double>(a.size());
}

double psnr(const GrayImage& a, const GrayImage& b) {
  require_same_dims(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    acc += d * d;
  }
  if (acc == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(static_cast<double>(a.size()) / acc);
}

double ssim(const GrayImage& a, const GrayImage& b) {
  require_same_dims(a, b);
  if (a.height() < kSsimWindow || a.width() < kSsimWindow)
    detail::throw_shape("SSIM needs images of at least 11x11");
  const auto w = gaussian_window();
  const double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
  const double c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);
  const int oh = a.height() - kSsimWindow + 1;
  const int ow = a.width() - kSsimWindow + 1;

  double total = 0.0;
  for (int r = 0; r < oh; ++r)
    for (int c = 0; c < ow; ++c) {
      // Two passes: centered second moments stay exactly zero on flat
      // windows, where E[x^2] - E[x]^2 would leave rounding residue.
      double ma = 0.0, mb = 0.0;
      for (int i = 0; i < kSsimWindow; ++i)
        for (int j = 0; j < kSsimWindow; ++j) {
          const double wt = w[i] * w[j];
          ma += wt * a.at(r + i, c + j);
          mb += wt * b.at(r + i, c + j);
        }
      double var_a = 0.0, var_b = 0.0, cov = 0.0;
      for (int i = 0; i < kSsimWindow; ++i)
        for (int j = 0; j < kSsimWindow; ++j) {
          const double wt = w[i] * w[j];
          const double x = a.at(r + i, c + j) - ma;
          const double y = b.at(r + i, c + j) - mb;
          var_a += wt * x * x;
          var_b += wt * y * y;
          cov += wt * x * y;
        }
      total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
    }
  return total / (static_cast<double>(oh) * ow);
}

}  // namespace adablur

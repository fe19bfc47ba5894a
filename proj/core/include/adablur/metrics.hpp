#pragma once

#include "adablur/image_io.hpp"

namespace adablur {

// 10 log10(1 / MSE) with peak 1.0; +infinity for identical images.
double psnr(const GrayImage& a, const GrayImage& b);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

// Mean SSIM over every fully-contained 11x11 Gaussian window (sigma 1.5),
// K1 = 0.01, K2 = 0.03, dynamic range 1. Both dimensions must be >= 11.
double ssim(const GrayImage& a, const GrayImage& b);

double mean_absolute_error(const GrayImage& a, const GrayImage& b);

}  // namespace adablur

#pragma once

#include <span>
#include <vector>

namespace adablur {

// Symmetric 2x2 covariance in ROI units squared. x is the horizontal
// (column) axis, y the vertical (row) axis.
struct Covariance2 {
  double xx = 1.0;
  double xy = 0.0;
  double yy = 1.0;

  double determinant() const { return xx * yy - xy * xy; }
  bool is_positive_definite() const { return xx > 0.0 && yy > 0.0 && determinant() > 0.0; }
  void validate() const;

  bool operator==(const Covariance2&) const = default;
};

// factor * R(angle) * diag(1, aspect) * R(angle)^T.
Covariance2 covariance(double factor, double angle, double aspect = 0.3);

// Number of Gauss-Legendre nodes per axis used inside each quadrature panel
// when the covariance is correlated.
inline constexpr int kCellQuadratureOrder = 12;

// Probability mass of the zero-mean bivariate normal N(0, cov) over the
// rectangle [x0, x1] x [y0, y1]. Diagonal covariances use the exact product
// of 1D CDF differences. Correlated ones use composite tensor-product
// Gauss-Legendre quadrature (kCellQuadratureOrder nodes per axis, panels no
// wider than 1.5 standard deviations of the narrowest principal axis).
double cell_mass(const Covariance2& cov, double x0, double y0, double x1, double y1);

// Square grid of kernel taps, row-major. Row index follows y, column index
// follows x; cell (r, c) covers [-h + c*w, -h + (c+1)*w) x [-h + r*w, ...)
// with w = 2h/size.
struct KernelGrid {
  int size = 0;
  std::vector<double> values;

  double at(int row, int col) const { return values[static_cast<std::size_t>(row) * size + col]; }
  double& at(int row, int col) { return values[static_cast<std::size_t>(row) * size + col]; }
  double sum() const;
  // Second moment about the origin, sum w * (x^2 + y^2), with (x, y) the
  // cell centers in ROI units.
  double second_moment(double roi_half_width) const;

  bool operator==(const KernelGrid&) const = default;
};

// Per-cell masses over the ROI without renormalization.
KernelGrid discretize_unnormalized(const Covariance2& cov, double roi_half_width, int size);

// discretize_unnormalized followed by renormalization to unit sum.
KernelGrid discretize(const Covariance2& cov, double roi_half_width, int size);

struct BankSpec {
  std::vector<double> angles;   // radians
  double aspect = 0.3;
  std::vector<double> factors;
  double roi_half_width = 4.0;
  int kernel_size = 16;

  // Four orientations {0, 45, -45, 90} degrees with the given factors.
  static BankSpec with_factors(std::vector<double> factors);

  std::size_t kernel_count() const { return angles.size() * factors.size(); }
  void validate() const;

  bool operator==(const BankSpec&) const = default;
};

struct KernelBank {
  BankSpec spec;
  std::vector<KernelGrid> kernels;  // factor-major, then angle

  std::size_t size() const { return kernels.size(); }
  const KernelGrid& kernel(std::size_t factor_index, std::size_t angle_index) const {
    return kernels[factor_index * spec.angles.size() + angle_index];
  }

  bool operator==(const KernelBank&) const = default;
};

KernelBank build_bank(const BankSpec& spec);

// Rebuilds the bank with new factors; kernel count and order are unchanged.
KernelBank rescale_bank(const KernelBank& bank, std::span<const double> new_factors);

// Factors for evaluating a bank at a new base factor while keeping the
// ratios between its factors: new[i] = base * factors[i] / factors[0].
// Returns the original factors unchanged when base == factors[0].
std::vector<double> ratio_preserving_factors(std::span<const double> factors, double base);

// True when both banks have the same kernel count, angles, aspect, ROI and
// kernel size (factors may differ).
bool same_topology(const BankSpec& a, const BankSpec& b);

double degrees_to_radians(double deg);
double radians_to_degrees(double rad);

}  // namespace adablur

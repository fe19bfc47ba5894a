#include "adablur/gauss_kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "adablur/errors.hpp"

namespace adablur {

namespace {

// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1], found by
// Newton iteration on P_n.
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussLegendreRule make_gauss_legendre(int n) {
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

const GaussLegendreRule& cell_rule() {
  static const GaussLegendreRule rule = make_gauss_legendre(kCellQuadratureOrder);
  return rule;
}

// P(a < X < b) for X ~ N(0, sigma^2), evaluated on the tail side that keeps
// relative precision.
double normal_interval(double a, double b, double sigma) {
  const double s = sigma * std::numbers::sqrt2;
  const double za = a / s;
  const double zb = b / s;
  if (za >= 0.0) return 0.5 * (std::erfc(za) - std::erfc(zb));
  if (zb <= 0.0) return 0.5 * (std::erfc(-zb) - std::erfc(-za));
  return 0.5 * (std::erf(zb) - std::erf(za));
}

}  // namespace

void Covariance2::validate() const {
  if (!std::isfinite(xx) || !std::isfinite(xy) || !std::isfinite(yy) || !is_positive_definite())
    detail::throw_invalid("covariance is not symmetric positive definite");
}

Covariance2 covariance(double factor, double angle, double aspect) {
  if (!(factor > 0.0)) detail::throw_invalid("covariance factor must be positive");
  if (!(aspect > 0.0)) detail::throw_invalid("covariance aspect must be positive");
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  double xy = factor * c * s * (1.0 - aspect);
  // cos(pi/2) is not exactly zero; keep axis-aligned kernels on the exact path.
  if (std::abs(xy) <= 8.0 * std::numeric_limits<double>::epsilon() * factor) xy = 0.0;
  return Covariance2{factor * (c * c + aspect * s * s), xy, factor * (s * s + aspect * c * c)};
}

double cell_mass(const Covariance2& cov, double x0, double y0, double x1, double y1) {
  cov.validate();
  if (!(x0 < x1) || !(y0 < y1)) detail::throw_invalid("degenerate integration rectangle");

  if (cov.xy == 0.0)
    return normal_interval(x0, x1, std::sqrt(cov.xx)) * normal_interval(y0, y1, std::sqrt(cov.yy));

  const double det = cov.determinant();
  const double half_trace = 0.5 * (cov.xx + cov.yy);
  const double min_eig = half_trace - std::hypot(0.5 * (cov.xx - cov.yy), cov.xy);
  const double panel = 1.5 * std::sqrt(std::max(min_eig, det / (2.0 * half_trace)));
  const int nx = std::max(1, static_cast<int>(std::ceil((x1 - x0) / panel)));
  const int ny = std::max(1, static_cast<int>(std::ceil((y1 - y0) / panel)));
  const double hx = (x1 - x0) / nx;
  const double hy = (y1 - y0) / ny;

  const auto& rule = cell_rule();
  const double ixx = cov.yy / det;
  const double ixy = -cov.xy / det;
  const double iyy = cov.xx / det;
  const double norm = 1.0 / (2.0 * std::numbers::pi * std::sqrt(det));

  double total = 0.0;
  for (int px = 0; px < nx; ++px) {
    const double cx = x0 + (px + 0.5) * hx;
    for (int py = 0; py < ny; ++py) {
      const double cy = y0 + (py + 0.5) * hy;
      double acc = 0.0;
      for (int i = 0; i < kCellQuadratureOrder; ++i) {
        const double x = cx + 0.5 * hx * rule.nodes[i];
        double row = 0.0;
        for (int j = 0; j < kCellQuadratureOrder; ++j) {
          const double y = cy + 0.5 * hy * rule.nodes[j];
          const double q = ixx * x * x + 2.0 * ixy * x * y + iyy * y * y;
          row += rule.weights[j] * std::exp(-0.5 * q);
        }
        acc += rule.weights[i] * row;
      }
      total += acc * 0.25 * hx * hy;
    }
  }
  return total * norm;
}

double KernelGrid::sum() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

double KernelGrid::second_moment(double roi_half_width) const {
  const double w = 2.0 * roi_half_width / size;
  double m = 0.0;
  for (int r = 0; r < size; ++r) {
    const double y = -roi_half_width + (r + 0.5) * w;
    for (int c = 0; c < size; ++c) {
      const double x = -roi_half_width + (c + 0.5) * w;
      m += at(r, c) * (x * x + y * y);
    }
  }
  return m;
}

KernelGrid discretize_unnormalized(const Covariance2& cov, double roi_half_width, int size) {
  cov.validate();
  if (!(roi_half_width > 0.0)) detail::throw_invalid("ROI half-width must be positive");
  if (size < 1) detail::throw_invalid("kernel size must be positive");
  const double w = 2.0 * roi_half_width / size;
  KernelGrid grid{size, std::vector<double>(static_cast<std::size_t>(size) * size)};
  for (int r = 0; r < size; ++r) {
    const double y0 = -roi_half_width + r * w;
    for (int c = 0; c < size; ++c) {
      const double x0 = -roi_half_width + c * w;
      grid.at(r, c) = cell_mass(cov, x0, y0, x0 + w, y0 + w);
    }
  }
  return grid;
}

KernelGrid discretize(const Covariance2& cov, double roi_half_width, int size) {
  KernelGrid grid = discretize_unnormalized(cov, roi_half_width, size);
  const double total = grid.sum();
  if (!(total > 0.0)) detail::throw_invalid("kernel has no mass inside the ROI");
  for (double& v : grid.values) v /= total;
  return grid;
}

BankSpec BankSpec::with_factors(std::vector<double> factors) {
  const double q = std::numbers::pi / 4.0;
  BankSpec spec;
  spec.angles = {0.0, q, -q, 2.0 * q};
  spec.factors = std::move(factors);
  return spec;
}

void BankSpec::validate() const {
  if (angles.empty()) detail::throw_invalid("bank needs at least one angle");
  if (factors.empty()) detail::throw_invalid("bank needs at least one factor");
  for (double f : factors)
    if (!(f > 0.0) || !std::isfinite(f)) detail::throw_invalid("bank factors must be positive");
  for (double a : angles)
    if (!std::isfinite(a)) detail::throw_invalid("bank angles must be finite");
  if (!(aspect > 0.0 && aspect <= 1.0)) detail::throw_invalid("bank aspect must lie in (0, 1]");
  if (!(roi_half_width > 0.0)) detail::throw_invalid("bank ROI half-width must be positive");
  if (kernel_size < 3) detail::throw_invalid("bank kernel size must be >= 3");
}

KernelBank build_bank(const BankSpec& spec) {
  spec.validate();
  KernelBank bank{spec, {}};
  bank.kernels.reserve(spec.kernel_count());
  for (double f : spec.factors)
    for (double a : spec.angles)
      bank.kernels.push_back(discretize(covariance(f, a, spec.aspect), spec.roi_half_width, spec.kernel_size));
  return bank;
}

KernelBank rescale_bank(const KernelBank& bank, std::span<const double> new_factors) {
  if (new_factors.size() != bank.spec.factors.size())
    throw TopologyError("rescale needs " + std::to_string(bank.spec.factors.size()) + " factors, got " +
                        std::to_string(new_factors.size()));
  BankSpec spec = bank.spec;
  spec.factors.assign(new_factors.begin(), new_factors.end());
  if (spec == bank.spec) return bank;
  return build_bank(spec);
}

std::vector<double> ratio_preserving_factors(std::span<const double> factors, double base) {
  if (factors.empty()) detail::throw_invalid("no factors to rescale");
  if (!(base > 0.0)) detail::throw_invalid("adjusted factor must be positive");
  if (base == factors[0]) return {factors.begin(), factors.end()};
  std::vector<double> out(factors.size());
  for (std::size_t i = 0; i < factors.size(); ++i) out[i] = i == 0 ? base : base * (factors[i] / factors[0]);
  return out;
}

bool same_topology(const BankSpec& a, const BankSpec& b) {
  return a.angles == b.angles && a.aspect == b.aspect && a.factors.size() == b.factors.size() &&
         a.roi_half_width == b.roi_half_width && a.kernel_size == b.kernel_size;
}

double degrees_to_radians(double deg) { return deg * std::numbers::pi / 180.0; }

double radians_to_degrees(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace adablur

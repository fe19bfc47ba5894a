#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "adablur/degnet.hpp"
#include "adablur/image_io.hpp"

namespace adablur {

// Loss grid over (trained model, adjusted factor).
struct SweepReport {
  std::vector<double> model_factors;     // first bank factor of each model
  std::vector<double> adjusted_factors;
  std::vector<std::vector<double>> losses;  // [model][adjusted]
  double baseline_bicubic = 0.0;

  void validate() const;
  // (row, col) of the smallest loss; ties resolve to the first in row-major order.
  std::pair<std::size_t, std::size_t> argmin() const;
};

// Evaluates every model with its bank rescaled to each adjusted factor
// (ratios between a model's own factors are preserved). The bicubic
// baseline is computed once on the same pairs. Throws TopologyError when the
// models' banks differ in angles, aspect, factor count, ROI or size.
SweepReport factor_sweep(std::span<const DegradationModel* const> models, std::span<const double> factors,
                         std::span<const ImagePair> pairs);
SweepReport factor_sweep(std::span<const std::filesystem::path> model_paths, std::span<const double> factors,
                         std::span<const ImagePair> pairs);

// Writes the CSV grid (header "model_factor,adjusted_factor,l1", trailing
// "# bicubic,<value>") and a PGM heatmap next to it (same stem, .pgm).
void write_report(const SweepReport& sweep, const std::filesystem::path& csv_path);

SweepReport read_report(const std::filesystem::path& csv_path);

// Heatmap geometry: every grid cell is a kHeatmapCell-pixel square. Lower
// loss is darker. The minimizing cell carries a one-pixel white frame.
inline constexpr int kHeatmapCell = 16;
GrayImage render_heatmap(const SweepReport& sweep);
std::filesystem::path heatmap_path_for(const std::filesystem::path& csv_path);

}  // namespace adablur

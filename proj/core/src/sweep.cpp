#include "adablur/sweep.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "adablur/errors.hpp"
#include "adablur/train.hpp"

namespace adablur {

namespace fs = std::filesystem;

void SweepReport::validate() const {
  if (losses.size() != model_factors.size()) detail::throw_shape("sweep grid row count mismatch");
  for (const auto& row : losses)
    if (row.size() != adjusted_factors.size()) detail::throw_shape("sweep grid column count mismatch");
}

std::pair<std::size_t, std::size_t> SweepReport::argmin() const {
  validate();
  if (losses.empty() || adjusted_factors.empty()) detail::throw_shape("empty sweep grid");
  std::pair<std::size_t, std::size_t> best{0, 0};
  for (std::size_t r = 0; r < losses.size(); ++r)
    for (std::size_t c = 0; c < losses[r].size(); ++c)
      if (losses[r][c] < losses[best.first][best.second]) best = {r, c};
  return best;
}

SweepReport factor_sweep(std::span<const DegradationModel* const> models, std::span<const double> factors,
                         std::span<const ImagePair> pairs) {
  if (models.empty()) detail::throw_invalid("sweep needs at least one model");
  if (factors.empty()) detail::throw_invalid("sweep needs at least one adjusted factor");
  const BankSpec& reference = models.front()->bank().spec;
  for (const DegradationModel* m : models)
    if (!same_topology(reference, m->bank().spec))
      throw TopologyError("models in a sweep must share bank topology");

  SweepReport report;
  report.adjusted_factors.assign(factors.begin(), factors.end());
  report.baseline_bicubic = bicubic_l1(pairs);
  for (const DegradationModel* m : models) {
    const auto& own = m->bank().spec.factors;
    report.model_factors.push_back(own.front());
    std::vector<double> row;
    DegradationModel probe = m->clone();
    for (double f : factors) {
      probe.set_bank(rescale_bank(m->bank(), ratio_preserving_factors(own, f)));
      row.push_back(evaluate_l1(probe, pairs));
    }
    report.losses.push_back(std::move(row));
  }
  return report;
}

SweepReport factor_sweep(std::span<const fs::path> model_paths, std::span<const double> factors,
                         std::span<const ImagePair> pairs) {
  std::vector<DegradationModel> models;
  for (const auto& p : model_paths) models.push_back(load_model(p));
  std::vector<const DegradationModel*> ptrs;
  for (const auto& m : models) ptrs.push_back(&m);
  return factor_sweep(std::span<const DegradationModel* const>(ptrs), factors, pairs);
}

fs::path heatmap_path_for(const fs::path& csv_path) {
  fs::path p = csv_path;
  p.replace_extension(".pgm");
  return p;
}

GrayImage render_heatmap(const SweepReport& sweep) {
  const auto [br, bc] = sweep.argmin();
  double lo = sweep.losses[br][bc];
  double hi = lo;
  for (const auto& row : sweep.losses)
    for (double v : row) hi = std::max(hi, v);
  const int rows = static_cast<int>(sweep.losses.size());
  const int cols = static_cast<int>(sweep.adjusted_factors.size());
  GrayImage img(rows * kHeatmapCell, cols * kHeatmapCell);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double t = hi > lo ? (sweep.losses[r][c] - lo) / (hi - lo) : 0.0;
      const double shade = 0.1 + 0.8 * t;
      const bool best = static_cast<std::size_t>(r) == br && static_cast<std::size_t>(c) == bc;
      for (int y = 0; y < kHeatmapCell; ++y)
        for (int x = 0; x < kHeatmapCell; ++x) {
          const bool frame = y == 0 || x == 0 || y == kHeatmapCell - 1 || x == kHeatmapCell - 1;
          img.at(r * kHeatmapCell + y, c * kHeatmapCell + x) = best && frame ? 1.0 : shade;
        }
    }
  return img;
}

void write_report(const SweepReport& sweep, const fs::path& csv_path) {
  sweep.validate();
  std::ofstream f(csv_path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + csv_path.string());
  f << std::setprecision(17) << "model_factor,adjusted_factor,l1\n";
  for (std::size_t r = 0; r < sweep.losses.size(); ++r)
    for (std::size_t c = 0; c < sweep.adjusted_factors.size(); ++c)
      f << sweep.model_factors[r] << ',' << sweep.adjusted_factors[c] << ',' << sweep.losses[r][c] << '\n';
  f << "# bicubic," << sweep.baseline_bicubic << '\n';
  if (!f) throw IoError("write failed for " + csv_path.string());
  save_image(render_heatmap(sweep), heatmap_path_for(csv_path), 65535);
}

namespace {

double parse_number(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw FormatError(where + ": bad number '" + s + "'");
  return v;
}

}  // namespace

SweepReport read_report(const fs::path& csv_path) {
  std::ifstream f(csv_path);
  if (!f) throw IoError("cannot open " + csv_path.string());
  std::string line;
  if (!std::getline(f, line) || line != "model_factor,adjusted_factor,l1")
    throw FormatError(csv_path.string() + ": missing sweep CSV header");
  SweepReport report;
  std::map<double, std::size_t> row_of, col_of;
  std::vector<std::tuple<double, double, double>> cells;
  bool have_baseline = false;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (line.rfind("# bicubic,", 0) == 0) {
      report.baseline_bicubic = parse_number(line.substr(10), csv_path.string());
      have_baseline = true;
      continue;
    }
    std::stringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c))
      throw FormatError(csv_path.string() + ": malformed row '" + line + "'");
    const double mf = parse_number(a, csv_path.string());
    const double af = parse_number(b, csv_path.string());
    cells.emplace_back(mf, af, parse_number(c, csv_path.string()));
    if (!row_of.contains(mf)) {
      row_of[mf] = report.model_factors.size();
      report.model_factors.push_back(mf);
    }
    if (!col_of.contains(af)) {
      col_of[af] = report.adjusted_factors.size();
      report.adjusted_factors.push_back(af);
    }
  }
  if (!have_baseline) throw FormatError(csv_path.string() + ": missing bicubic baseline line");
  report.losses.assign(report.model_factors.size(), std::vector<double>(report.adjusted_factors.size(), 0.0));
  if (cells.size() != report.model_factors.size() * report.adjusted_factors.size())
    throw FormatError(csv_path.string() + ": incomplete sweep grid");
  for (const auto& [mf, af, l] : cells) report.losses[row_of[mf]][col_of[af]] = l;
  return report;
}

}  // namespace adablur

#include "adablur/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "adablur/degnet.hpp"
#include "adablur/errors.hpp"
#include "adablur/gauss_kernel.hpp"
#include "adablur/image_io.hpp"
#include "adablur/metrics.hpp"
#include "adablur/sweep.hpp"
#include "adablur/synth.hpp"
#include "adablur/train.hpp"

namespace adablur {

namespace fs = std::filesystem;

namespace {

// Accumulates "key=value" fields for the trailing summary line.
class Summary {
 public:
  explicit Summary(const std::string& command) { add("command", command); }

  Summary& add(const std::string& key, const std::string& value) {
    fields_ << ' ' << key << '=' << value;
    return *this;
  }
  Summary& add(const std::string& key, double value) {
    std::ostringstream s;
    s << std::setprecision(10) << value;
    return add(key, s.str());
  }
  Summary& add(const std::string& key, long long value) { return add(key, std::to_string(value)); }
  Summary& add(const std::string& key, int value) { return add(key, std::to_string(value)); }
  Summary& add(const std::string& key, std::size_t value) { return add(key, std::to_string(value)); }

  void print(std::ostream& out) const { out << "RESULT" << fields_.str() << '\n'; }

 private:
  std::ostringstream fields_;
};

std::vector<ImagePair> pairs_only(const std::vector<NamedPair>& named) {
  std::vector<ImagePair> out;
  out.reserve(named.size());
  for (const NamedPair& n : named) out.push_back(n.pair);
  return out;
}

// A single requested factor applied to a multi-factor model keeps the
// model's factor ratios; a full list must match the factor count.
std::vector<double> resolve_factors(const DegradationModel& model, const std::vector<double>& requested) {
  const auto& own = model.bank().spec.factors;
  if (requested.size() == 1 && own.size() > 1) return ratio_preserving_factors(own, requested.front());
  if (requested.size() != own.size())
    throw TopologyError("model has " + std::to_string(own.size()) + " factors but " +
                        std::to_string(requested.size()) + " were given");
  return requested;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  int count = 40;
  double truth_factor = 1.0;
  double truth_angle = 0.0;
  double truth_aspect = 0.3;
  int scale = 4;
  int hr_size = 64;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::string hr_dir;
};

int run_synth(const SynthArgs& a, std::ostream& out) {
  SyntheticSpec spec;
  spec.truth_cov = covariance(a.truth_factor, degrees_to_radians(a.truth_angle), a.truth_aspect);
  spec.scale = a.scale;
  spec.hr_size = a.hr_size;
  spec.noise_sigma = a.noise;
  spec.hr_directory = a.hr_dir;
  spec.validate();

  auto pairs = synth_pairs(spec, a.count, a.seed);
  std::vector<NamedPair> named;
  named.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    std::ostringstream name;
    name << "pair_" << std::setw(4) << std::setfill('0') << i;
    named.push_back({name.str(), std::move(pairs[i])});
  }
  save_pair_directory(named, a.out);

  out << std::setprecision(10) << "truth covariance: [[" << spec.truth_cov.xx << ", " << spec.truth_cov.xy << "], ["
      << spec.truth_cov.xy << ", " << spec.truth_cov.yy << "]]\n";
  Summary("synth")
      .add("count", a.count)
      .add("scale", a.scale)
      .add("cov_xx", spec.truth_cov.xx)
      .add("cov_xy", spec.truth_cov.xy)
      .add("cov_yy", spec.truth_cov.yy)
      .add("out", a.out)
      .print(out);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string config;
  std::string out;
  std::string log;
  int max_steps = -1;
  long long seed = -1;
  bool verbose = false;
};

int run_train(const TrainArgs& a, std::ostream& out) {
  ExperimentConfig cfg = a.config.empty() ? ExperimentConfig{} : parse_experiment_config(a.config);
  if (a.max_steps >= 0) cfg.train.max_steps = a.max_steps;
  if (a.seed >= 0) cfg.train.seed = static_cast<std::uint64_t>(a.seed);
  cfg.train.validate();

  const auto named = load_pair_directory(a.data);
  if (named.empty()) throw IoError("no HR/LR pairs found in " + a.data);
  if (!cfg.scale_given) cfg.net.scale = named.front().pair.scale;

  auto model = DegradationModel::create(cfg.net, cfg.model_seed);
  const auto pairs = pairs_only(named);
  const auto dataset =
      build_patch_dataset(pairs, cfg.train.patch_size, cfg.train.patches_per_image, cfg.train.seed ^ 0x5eedULL);

  TrainConfig tc = cfg.train;
  tc.checkpoint_path = a.out;
  const TrainLog log = train(model, dataset, tc, [&](const StepRecord& r) {
    if (a.verbose) out << "step " << r.step << " epoch " << r.epoch << " loss " << r.loss << '\n';
  });
  save_model(model, a.out);
  if (!a.log.empty()) log.write_csv(a.log);

  Summary s("train");
  s.add("pairs", pairs.size()).add("samples", dataset.size()).add("steps", log.steps.size());
  s.add("final_loss", log.steps.empty() ? std::numeric_limits<double>::quiet_NaN() : log.steps.back().loss);
  s.add("checkpoint", a.out).print(out);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct DegradeArgs {
  std::string model;
  std::string in;
  std::string out;
  std::vector<double> factors;
  int bits = 16;
};

int run_degrade(const DegradeArgs& a, std::ostream& out) {
  auto model = load_model(a.model);
  const GrayImage hr = load_image_as_gray(a.in);
  const int s = model.config().scale;
  if (hr.height() % s != 0 || hr.width() % s != 0)
    throw ShapeError("input " + std::to_string(hr.height()) + "x" + std::to_string(hr.width()) +
                     " is not divisible by the model scale " + std::to_string(s));
  if (!a.factors.empty()) model.rescale(resolve_factors(model, a.factors));
  const GrayImage lr = degrade_images(model, std::span(&hr, 1)).front();
  save_image(lr, a.out, a.bits == 8 ? 255 : 65535);
  Summary("degrade")
      .add("height", lr.height())
      .add("width", lr.width())
      .add("factor", model.bank().spec.factors.front())
      .add("out", a.out)
      .print(out);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string model;
  std::string data;
  std::vector<double> factors;
};

int run_eval(const EvalArgs& a, std::ostream& out) {
  auto model = load_model(a.model);
  if (!a.factors.empty()) model.rescale(resolve_factors(model, a.factors));
  const auto named = load_pair_directory(a.data);
  if (named.empty()) throw IoError("no HR/LR pairs found in " + a.data);
  const auto pairs = pairs_only(named);

  std::vector<GrayImage> hr;
  for (const ImagePair& p : pairs) hr.push_back(p.hr);
  for (const ImagePair& p : pairs)
    if (p.scale != model.config().scale) throw ShapeError("pair scale differs from model scale");
  const auto outputs = degrade_images(model, hr);

  double l1 = 0.0, psnr_total = 0.0, ssim_total = 0.0;
  std::size_t pixels = 0;
  int ssim_count = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const GrayImage& target = pairs[i].lr;
    l1 += mean_absolute_error(outputs[i], target) * static_cast<double>(target.size());
    pixels += target.size();
    psnr_total += psnr(outputs[i], target);
    if (target.height() >= kSsimWindow && target.width() >= kSsimWindow) {
      ssim_total += ssim(outputs[i], target);
      ++ssim_count;
    }
  }
  l1 /= static_cast<double>(pixels);
  const double bicubic = bicubic_l1(pairs);

  Summary s("eval");
  s.add("pairs", pairs.size()).add("l1", l1).add("bicubic_l1", bicubic);
  s.add("ratio", bicubic > 0.0 ? l1 / bicubic : std::numeric_limits<double>::infinity());
  s.add("psnr", psnr_total / static_cast<double>(pairs.size()));
  if (ssim_count > 0) s.add("ssim", ssim_total / ssim_count);
  s.print(out);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  std::vector<std::string> models;
  std::vector<double> factors;
  std::string data;
  std::string out;
};

int run_sweep(const SweepArgs& a, std::ostream& out) {
  const auto named = load_pair_directory(a.data);
  if (named.empty()) throw IoError("no HR/LR pairs found in " + a.data);
  std::vector<fs::path> paths(a.models.begin(), a.models.end());
  const SweepReport report = factor_sweep(paths, a.factors, pairs_only(named));
  write_report(report, a.out);

  out << std::setprecision(6) << std::fixed << "model\\adjusted";
  for (double f : report.adjusted_factors) out << '\t' << f;
  out << '\n';
  for (std::size_t m = 0; m < report.losses.size(); ++m) {
    out << report.model_factors[m];
    for (double v : report.losses[m]) out << '\t' << v;
    out << '\n';
  }
  out << "bicubic\t" << report.baseline_bicubic << '\n' << std::defaultfloat;

  const auto [row, col] = report.argmin();
  Summary("sweep")
      .add("best_model_factor", report.model_factors[row])
      .add("best_adjusted_factor", report.adjusted_factors[col])
      .add("best_l1", report.losses[row][col])
      .add("bicubic_l1", report.baseline_bicubic)
      .add("csv", a.out)
      .add("heatmap", heatmap_path_for(a.out).string())
      .print(out);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct KernelDumpArgs {
  std::string model;
  std::string out;
};

void write_grid_text(const KernelGrid& k, const std::string& header, const fs::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << header << std::setprecision(17);
  for (int r = 0; r < k.size; ++r) {
    for (int c = 0; c < k.size; ++c) f << (c ? " " : "") << k.at(r, c);
    f << '\n';
  }
  if (!f) throw IoError("write failed for " + path.string());
}

// Peak-normalized 16-bit rendering of a kernel.
void write_grid_image(const KernelGrid& k, const fs::path& path) {
  double peak = 0.0;
  for (double v : k.values) peak = std::max(peak, v);
  GrayImage img(k.size, k.size);
  for (int r = 0; r < k.size; ++r)
    for (int c = 0; c < k.size; ++c) img.at(r, c) = peak > 0.0 ? k.at(r, c) / peak : 0.0;
  save_image(img, path, 65535);
}

int run_kernel_dump(const KernelDumpArgs& a, std::ostream& out) {
  const auto model = load_model(a.model);
  const KernelBank& bank = model.bank();
  const BankSpec& spec = bank.spec;
  fs::create_directories(a.out);

  std::vector<double> weights;
  {
    NoGradGuard guard;
    const Tensor w = model.mixture_weights();
    weights.assign(w.data().begin(), w.data().end());
  }
  const std::size_t kcount = bank.size();
  const std::size_t channels = weights.size() / kcount;

  {
    const fs::path path = fs::path(a.out) / "weights.csv";
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write " + path.string());
    f << "channel";
    for (std::size_t k = 0; k < kcount; ++k) f << ",k" << k;
    f << '\n' << std::setprecision(17);
    for (std::size_t c = 0; c < channels; ++c) {
      f << c;
      for (std::size_t k = 0; k < kcount; ++k) f << ',' << weights[c * kcount + k];
      f << '\n';
    }
    if (!f) throw IoError("write failed for " + path.string());
  }

  for (std::size_t fi = 0; fi < spec.factors.size(); ++fi)
    for (std::size_t ai = 0; ai < spec.angles.size(); ++ai) {
      const std::size_t k = fi * spec.angles.size() + ai;
      const KernelGrid& grid = bank.kernels[k];
      const Covariance2 cov = covariance(spec.factors[fi], spec.angles[ai], spec.aspect);
      std::ostringstream header;
      header << std::setprecision(10) << "# kernel " << k << '\n'
             << "# factor " << spec.factors[fi] << '\n'
             << "# angle_deg " << radians_to_degrees(spec.angles[ai]) << '\n'
             << "# aspect " << spec.aspect << '\n'
             << "# covariance " << cov.xx << ' ' << cov.xy << ' ' << cov.yy << '\n'
             << "# roi_half_width " << spec.roi_half_width << '\n'
             << "# size " << grid.size << '\n'
             << "# sum " << grid.sum() << '\n';
      std::ostringstream stem;
      stem << "kernel_" << std::setw(2) << std::setfill('0') << k;
      write_grid_text(grid, header.str(), fs::path(a.out) / (stem.str() + ".txt"));
      write_grid_image(grid, fs::path(a.out) / (stem.str() + ".pgm"));
    }

  // The blur each channel actually applies: its weighted kernel mixture.
  for (std::size_t c = 0; c < channels; ++c) {
    KernelGrid mix{spec.kernel_size, std::vector<double>(bank.kernels.front().values.size(), 0.0)};
    for (std::size_t k = 0; k < kcount; ++k)
      for (std::size_t i = 0; i < mix.values.size(); ++i) mix.values[i] += weights[c * kcount + k] * bank.kernels[k].values[i];
    std::ostringstream header;
    header << std::setprecision(10) << "# channel " << c << '\n' << "# size " << mix.size << '\n'
           << "# sum " << mix.sum() << '\n';
    std::ostringstream stem;
    stem << "channel_" << std::setw(2) << std::setfill('0') << c;
    write_grid_text(mix, header.str(), fs::path(a.out) / (stem.str() + ".txt"));
    write_grid_image(mix, fs::path(a.out) / (stem.str() + ".pgm"));
  }

  Summary("kernel-dump").add("kernels", kcount).add("channels", channels).add("out", a.out).print(out);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learned HR-to-LR degradation with an adaptive Gaussian blurring layer", "adablur"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Fabricate HR/LR pairs with a known Gaussian degradation");
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--count", synth.count, "Number of pairs")->check(CLI::NonNegativeNumber);
  c_synth->add_option("--truth-factor", synth.truth_factor, "Covariance factor of the truth kernel")
      ->check(CLI::PositiveNumber);
  c_synth->add_option("--truth-angle", synth.truth_angle, "Truth kernel orientation in degrees");
  c_synth->add_option("--truth-aspect", synth.truth_aspect, "Minor/major variance ratio")->check(CLI::PositiveNumber);
  c_synth->add_option("--scale", synth.scale, "Downsampling factor")->check(CLI::Range(1, 64));
  c_synth->add_option("--hr-size", synth.hr_size, "HR edge length")->check(CLI::PositiveNumber);
  c_synth->add_option("--noise", synth.noise, "Gaussian noise sigma added to LR")->check(CLI::NonNegativeNumber);
  c_synth->add_option("--seed", synth.seed, "RNG seed");
  c_synth->add_option("--hr-dir", synth.hr_dir, "Crop HR images from this directory instead of textures");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train a degradation model on a pair directory");
  c_train->add_option("--data", tr.data, "Pair directory")->required();
  c_train->add_option("--config", tr.config, "Key-value experiment file");
  c_train->add_option("--out", tr.out, "Checkpoint path")->required();
  c_train->add_option("--log", tr.log, "Write the per-step loss log as CSV");
  c_train->add_option("--max-steps", tr.max_steps, "Override max_steps")->check(CLI::NonNegativeNumber);
  c_train->add_option("--seed", tr.seed, "Override the training seed")->check(CLI::NonNegativeNumber);
  c_train->add_flag("--verbose", tr.verbose, "Print every step");

  DegradeArgs dg;
  auto* c_degrade = app.add_subcommand("degrade", "Degrade one HR image with a trained model");
  c_degrade->add_option("--model", dg.model, "Checkpoint")->required();
  c_degrade->add_option("--in", dg.in, "HR image (PGM or PNG)")->required();
  c_degrade->add_option("--out", dg.out, "LR output PGM")->required();
  c_degrade->add_option("--factor", dg.factors, "Rescale the kernel bank before inference")
      ->check(CLI::PositiveNumber);
  c_degrade->add_option("--bits", dg.bits, "Output bit depth")->check(CLI::IsMember({8, 16}));

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Score a model against a pair directory");
  c_eval->add_option("--model", ev.model, "Checkpoint")->required();
  c_eval->add_option("--data", ev.data, "Pair directory")->required();
  c_eval->add_option("--factor", ev.factors, "Rescale the kernel bank before scoring")->check(CLI::PositiveNumber);

  SweepArgs sw;
  auto* c_sweep = app.add_subcommand("sweep", "Loss grid over models and adjusted bank factors");
  c_sweep->add_option("--models", sw.models, "Checkpoints")->required();
  c_sweep->add_option("--factors", sw.factors, "Adjusted factors")->required()->check(CLI::PositiveNumber);
  c_sweep->add_option("--data", sw.data, "Pair directory")->required();
  c_sweep->add_option("--out", sw.out, "CSV report (a heatmap PGM is written beside it)")->required();

  KernelDumpArgs kd;
  auto* c_dump = app.add_subcommand("kernel-dump", "Export the bank, mixture weights and effective kernels");
  c_dump->add_option("--model", kd.model, "Checkpoint")->required();
  c_dump->add_option("--out", kd.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*c_synth) return run_synth(synth, out);
    if (*c_train) return run_train(tr, out);
    if (*c_degrade) return run_degrade(dg, out);
    if (*c_eval) return run_eval(ev, out);
    if (*c_sweep) return run_sweep(sw, out);
    if (*c_dump) return run_kernel_dump(kd, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return kExitFormat;
  } catch (const ShapeError& e) {
    err << "shape error: " << e.what() << '\n';
    return kExitShape;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace adablur

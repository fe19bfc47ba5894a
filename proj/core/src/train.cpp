#include "adablur/train.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "adablur/adam.hpp"
#include "adablur/errors.hpp"

namespace adablur {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
  if (batch_size < 1) detail::throw_invalid("batch_size must be positive");
  if (!(lr > 0.0)) detail::throw_invalid("lr must be positive");
  if (epochs < 0) detail::throw_invalid("epochs must be non-negative");
  if (patches_per_image < 1) detail::throw_invalid("patches_per_image must be positive");
  if (patch_size < 0) detail::throw_invalid("patch_size must be non-negative");
  if (checkpoint_every < 0) detail::throw_invalid("checkpoint_every must be non-negative");
  if (max_steps < 0) detail::throw_invalid("max_steps must be non-negative");
}

void TrainLog::write_csv(const fs::path& path) const {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << "step,epoch,loss,wall_time\n" << std::setprecision(17);
  for (const StepRecord& r : steps) f << r.step << ',' << r.epoch << ',' << r.loss << ',' << r.wall_seconds << '\n';
  if (!f) throw IoError("write failed for " + path.string());
}

std::vector<ImagePair> build_patch_dataset(std::span<const ImagePair> pairs, int patch_size, int patches_per_image,
                                           std::uint64_t seed) {
  std::vector<ImagePair> out;
  std::mt19937_64 rng(seed);
  for (const ImagePair& p : pairs) {
    p.validate();
    if (patch_size == 0 || (patch_size == p.hr.height() && patch_size == p.hr.width())) {
      out.push_back(p);
      continue;
    }
    PatchSpec spec{patch_size, p.scale, false, false};
    auto patches = extract_pairs(p.hr, p.lr, spec, patches_per_image, rng());
    std::move(patches.begin(), patches.end(), std::back_inserter(out));
  }
  return out;
}

TrainLog train(DegradationModel& model, std::span<const ImagePair> pairs, const TrainConfig& cfg,
               const std::function<void(const StepRecord&)>& on_step) {
  cfg.validate();
  TrainLog log;
  if (cfg.epochs == 0) return log;
  if (pairs.empty()) detail::throw_invalid("no training pairs");
  for (const ImagePair& p : pairs) {
    p.validate();
    if (p.scale != model.config().scale)
      throw ShapeError("training pair scale " + std::to_string(p.scale) + " differs from model scale " +
                       std::to_string(model.config().scale));
  }

  Adam optimizer(model.parameters(), AdamOptions{cfg.lr});
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(pairs.size());
  const auto start = std::chrono::steady_clock::now();
  double best = std::numeric_limits<double>::infinity();
  int step = 0;
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  long long planned = static_cast<long long>(cfg.epochs) * static_cast<long long>((pairs.size() + batch - 1) / batch);
  if (cfg.max_steps > 0) planned = std::min<long long>(planned, cfg.max_steps);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_total = 0.0;
    int epoch_steps = 0;
    bool capped = false;
    for (std::size_t first = 0; first < order.size(); first += batch) {
      if (cfg.max_steps > 0 && step >= cfg.max_steps) {
        capped = true;
        break;
      }
      const std::size_t last = std::min(order.size(), first + batch);
      std::vector<GrayImage> hr, lr;
      for (std::size_t k = first; k < last; ++k) {
        const ImagePair& p = pairs[order[k]];
        const bool flip_h = cfg.flip_augment && std::bernoulli_distribution(0.5)(rng);
        const bool flip_v = cfg.flip_augment && std::bernoulli_distribution(0.5)(rng);
        GrayImage h = flip_h ? p.hr.flipped_horizontal() : p.hr;
        GrayImage l = flip_h ? p.lr.flipped_horizontal() : p.lr;
        if (flip_v) {
          h = h.flipped_vertical();
          l = l.flipped_vertical();
        }
        hr.push_back(std::move(h));
        lr.push_back(std::move(l));
      }
      if (cfg.cosine_decay) {
        // Offset by one step so the final update is small but nonzero.
        const double t = static_cast<double>(step) / static_cast<double>(planned);
        optimizer.set_lr(cfg.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * t)));
      }
      optimizer.zero_grad();
      Tensor loss = l1_loss(model.forward(images_to_tensor(hr)), images_to_tensor(lr));
      backward(loss);
      optimizer.step();
      ++step;

      StepRecord rec{step, epoch, loss.item(),
                     std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
      log.steps.push_back(rec);
      epoch_total += rec.loss;
      ++epoch_steps;
      if (on_step) on_step(rec);
      if (!cfg.checkpoint_path.empty() && cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0)
        save_model(model, cfg.checkpoint_path);
    }
    if (epoch_steps > 0) {
      const double mean = epoch_total / epoch_steps;
      log.epoch_losses.push_back(mean);
      if (!cfg.checkpoint_path.empty()) {
        save_model(model, cfg.checkpoint_path);
        if (mean < best) {
          best = mean;
          fs::path best_path = cfg.checkpoint_path;
          best_path += ".best";
          save_model(model, best_path);
        }
      }
    }
    if (capped) break;
  }
  return log;
}

double evaluate_l1(const DegradationModel& model, std::span<const ImagePair> pairs) {
  if (pairs.empty()) detail::throw_invalid("evaluation set is empty");
  NoGradGuard guard;
  double total = 0.0;
  std::size_t count = 0;
  for (const ImagePair& p : pairs) {
    p.validate();
    if (p.scale != model.config().scale) throw ShapeError("evaluation pair scale differs from model scale");
    const GrayImage out = tensor_to_image(model.forward(image_to_tensor(p.hr)));
    for (std::size_t i = 0; i < out.size(); ++i) total += std::abs(out.data()[i] - p.lr.data()[i]);
    count += out.size();
  }
  return total / static_cast<double>(count);
}

double bicubic_l1(std::span<const ImagePair> pairs) {
  if (pairs.empty()) detail::throw_invalid("evaluation set is empty");
  double total = 0.0;
  std::size_t count = 0;
  for (const ImagePair& p : pairs) {
    p.validate();
    const GrayImage out = bicubic_downsample(p.hr, p.scale);
    for (std::size_t i = 0; i < out.size(); ++i) total += std::abs(out.data()[i] - p.lr.data()[i]);
    count += out.size();
  }
  return total / static_cast<double>(count);
}

std::pair<std::vector<ImagePair>, std::vector<ImagePair>> split_pairs(std::vector<ImagePair> pairs, int train_count) {
  if (train_count < 0 || static_cast<std::size_t>(train_count) > pairs.size())
    detail::throw_invalid("train_count out of range");
  std::vector<ImagePair> test(std::make_move_iterator(pairs.begin() + train_count),
                              std::make_move_iterator(pairs.end()));
  pairs.resize(static_cast<std::size_t>(train_count));
  return {std::move(pairs), std::move(test)};
}

// ---------------------------------------------------------------------------
// Experiment files

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) detail::throw_invalid("config key '" + key + "': not a number");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) detail::throw_invalid("config key '" + key + "': not an integer");
  return out;
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.empty()) detail::throw_invalid("config key '" + key + "': empty list");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  detail::throw_invalid("config key '" + key + "': not a boolean");
}

}  // namespace

ExperimentConfig parse_experiment_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) detail::throw_invalid("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto& t = cfg.train;
    auto& n = cfg.net;
    if (key == "batch_size") t.batch_size = static_cast<int>(to_int(key, value));
    else if (key == "lr") t.lr = to_double(key, value);
    else if (key == "epochs") t.epochs = static_cast<int>(to_int(key, value));
    else if (key == "patches_per_image") t.patches_per_image = static_cast<int>(to_int(key, value));
    else if (key == "patch_size") t.patch_size = static_cast<int>(to_int(key, value));
    else if (key == "seed") t.seed = static_cast<std::uint64_t>(to_int(key, value));
    else if (key == "model_seed") cfg.model_seed = static_cast<std::uint64_t>(to_int(key, value));
    else if (key == "checkpoint_every") t.checkpoint_every = static_cast<int>(to_int(key, value));
    else if (key == "flip_augment") t.flip_augment = to_bool(key, value);
    else if (key == "cosine_decay") t.cosine_decay = to_bool(key, value);
    else if (key == "max_steps") t.max_steps = static_cast<int>(to_int(key, value));
    else if (key == "channels") n.channels = static_cast<int>(to_int(key, value));
    else if (key == "num_resblocks") n.num_resblocks = static_cast<int>(to_int(key, value));
    else if (key == "scale") {
      n.scale = static_cast<int>(to_int(key, value));
      cfg.scale_given = true;
    } else if (key == "factors") n.bank.factors = to_list(key, value);
    else if (key == "angles_deg") {
      n.bank.angles.clear();
      for (double d : to_list(key, value)) n.bank.angles.push_back(degrees_to_radians(d));
    } else if (key == "aspect") n.bank.aspect = to_double(key, value);
    else if (key == "roi_half_width") n.bank.roi_half_width = to_double(key, value);
    else if (key == "kernel_size") n.bank.kernel_size = static_cast<int>(to_int(key, value));
    else detail::throw_invalid("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  cfg.train.validate();
  cfg.net.validate();
  return cfg;
}

ExperimentConfig parse_experiment_config(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_experiment_config_text(ss.str());
}

}  // namespace adablur

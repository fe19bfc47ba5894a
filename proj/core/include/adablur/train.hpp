#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "adablur/degnet.hpp"
#include "adablur/image_io.hpp"

namespace adablur {

struct TrainConfig {
  int batch_size = 8;
  double lr = 1e-4;
  int epochs = 50;
  int patches_per_image = 50;
  // HR patch edge; 0 trains on whole images.
  int patch_size = 0;
  std::uint64_t seed = 0;
  // Checkpoint cadence in steps (0: only at epoch ends). Needs checkpoint_path.
  int checkpoint_every = 0;
  // Random horizontal/vertical flips applied identically to HR and LR.
  bool flip_augment = true;
  // Hard cap on optimizer steps (0: no cap).
  int max_steps = 0;
  // Cosine schedule from lr down to zero over the planned step count.
  bool cosine_decay = false;
  // Latest weights go here; the lowest epoch-loss weights to "<path>.best".
  std::filesystem::path checkpoint_path;

  void validate() const;
};

struct StepRecord {
  int step = 0;
  int epoch = 0;
  double loss = 0.0;
  double wall_seconds = 0.0;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<double> epoch_losses;  // mean training loss per epoch

  // CSV with header "step,epoch,loss,wall_time".
  void write_csv(const std::filesystem::path& path) const;
};

// Patches of `patch_size` drawn from every pair (patches_per_image each).
// patch_size 0, or equal to the image size, keeps each pair whole once.
std::vector<ImagePair> build_patch_dataset(std::span<const ImagePair> pairs, int patch_size, int patches_per_image,
                                           std::uint64_t seed);

// Supervised L1/Adam training. Each epoch visits the pairs in a freshly
// shuffled order in ceil(pairs / batch) steps. Deterministic for a fixed
// seed. Throws ShapeError if a pair's scale differs from the model's.
TrainLog train(DegradationModel& model, std::span<const ImagePair> pairs, const TrainConfig& cfg,
               const std::function<void(const StepRecord&)>& on_step = {});

// Mean absolute error between clamped model outputs and the LR targets,
// averaged over every LR pixel of every pair.
double evaluate_l1(const DegradationModel& model, std::span<const ImagePair> pairs);

// The same metric for the bicubic baseline.
double bicubic_l1(std::span<const ImagePair> pairs);

// Splits whole pairs (never patches) into train and test sets: the first
// `train_count` go to training.
std::pair<std::vector<ImagePair>, std::vector<ImagePair>> split_pairs(std::vector<ImagePair> pairs, int train_count);

// Key-value experiment file: `key = value` lines, `#` comments. Training
// keys fill TrainConfig; model keys (channels, num_resblocks, scale,
// factors, angles_deg, aspect, roi_half_width, kernel_size) fill NetConfig.
struct ExperimentConfig {
  TrainConfig train;
  NetConfig net;
  bool scale_given = false;
  std::uint64_t model_seed = 0;
};

ExperimentConfig parse_experiment_config(const std::filesystem::path& path);
ExperimentConfig parse_experiment_config_text(const std::string& text);

}  // namespace adablur

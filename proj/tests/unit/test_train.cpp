#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "adablur/errors.hpp"
#include "adablur/synth.hpp"
#include "adablur/train.hpp"
#include "oracles.hpp"

using namespace adablur;
namespace fs = std::filesystem;

namespace {

NetConfig tiny_config() {
  NetConfig c;
  c.channels = 4;
  c.num_resblocks = 1;
  return c;
}

std::vector<ImagePair> small_pairs(int count, int hr_size, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.hr_size = hr_size;
  return synth_pairs(spec, count, seed);
}

std::vector<double> flat_params(const DegradationModel& m) {
  std::vector<double> out;
  for (const Tensor& p : m.parameters()) out.insert(out.end(), p.data().begin(), p.data().end());
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string read_all(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Train, ZeroEpochsLeavesModelUnchanged) {
  auto m = DegradationModel::create(tiny_config(), 1);
  const auto before = flat_params(m);
  TrainConfig cfg;
  cfg.epochs = 0;
  const auto pairs = small_pairs(2, 16, 2);
  const TrainLog log = train(m, pairs, cfg);
  EXPECT_TRUE(log.steps.empty());
  EXPECT_TRUE(log.epoch_losses.empty());
  EXPECT_EQ(flat_params(m), before);
}

TEST(Train, StepsPerEpochIsCeilOfPairsOverBatch) {
  auto m = DegradationModel::create(tiny_config(), 3);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 3;
  const auto pairs = small_pairs(7, 16, 4);
  const TrainLog log = train(m, pairs, cfg);
  EXPECT_EQ(log.steps.size(), 6u);
  EXPECT_EQ(log.epoch_losses.size(), 2u);
  EXPECT_EQ(log.steps.back().epoch, 1);
  EXPECT_EQ(log.steps.back().step, 6);
}

TEST(Train, MaxStepsCapsTraining) {
  auto m = DegradationModel::create(tiny_config(), 5);
  TrainConfig cfg;
  cfg.epochs = 100;
  cfg.max_steps = 5;
  const auto pairs = small_pairs(4, 16, 6);
  EXPECT_EQ(train(m, pairs, cfg).steps.size(), 5u);
}

TEST(Train, ScaleMismatchThrows) {
  auto m = DegradationModel::create(tiny_config(), 7);
  SyntheticSpec spec;
  spec.scale = 2;
  spec.hr_size = 16;
  const auto pairs = synth_pairs(spec, 1, 8);
  EXPECT_THROW(train(m, pairs, TrainConfig{}), ShapeError);
}

TEST(Train, OverfitsASinglePair) {
  auto m = DegradationModel::create(NetConfig{}, 9);
  const auto pairs = small_pairs(1, 32, 10);
  TrainConfig cfg;
  cfg.batch_size = 1;
  cfg.lr = 1e-3;
  cfg.epochs = 500;
  cfg.flip_augment = false;
  cfg.cosine_decay = true;
  const TrainLog log = train(m, pairs, cfg);
  ASSERT_EQ(log.steps.size(), 500u);
  EXPECT_LT(evaluate_l1(m, pairs), 0.005);
}

TEST(Train, LossTrendsDownward) {
  auto m = DegradationModel::create(tiny_config(), 11);
  const auto pairs = small_pairs(8, 32, 12);
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.lr = 2e-3;
  cfg.epochs = 50;
  cfg.flip_augment = false;
  const TrainLog log = train(m, pairs, cfg);
  const std::size_t tenth = log.epoch_losses.size() / 10;
  const std::vector<double> first(log.epoch_losses.begin(), log.epoch_losses.begin() + tenth);
  const std::vector<double> last(log.epoch_losses.end() - tenth, log.epoch_losses.end());
  EXPECT_LT(median(last), median(first));
}

TEST(Train, DeterministicLogsAndCheckpoints) {
  const fs::path dir = fs::temp_directory_path() / "adablur_train_det";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto pairs = small_pairs(6, 16, 13);
  std::vector<TrainLog> logs;
  for (int run = 0; run < 2; ++run) {
    auto m = DegradationModel::create(tiny_config(), 14);
    TrainConfig cfg;
    cfg.batch_size = 2;
    cfg.epochs = 3;
    cfg.seed = 15;
    cfg.checkpoint_path = dir / ("run" + std::to_string(run) + ".ckpt");
    logs.push_back(train(m, pairs, cfg));
  }
  ASSERT_EQ(logs[0].steps.size(), logs[1].steps.size());
  for (std::size_t i = 0; i < logs[0].steps.size(); ++i) EXPECT_EQ(logs[0].steps[i].loss, logs[1].steps[i].loss);
  EXPECT_EQ(read_all(dir / "run0.ckpt"), read_all(dir / "run1.ckpt"));
  EXPECT_TRUE(fs::exists(dir / "run0.ckpt.best"));
  if (!HasFailure()) fs::remove_all(dir);
}

TEST(Train, PeriodicCheckpoints) {
  const fs::path dir = fs::temp_directory_path() / "adablur_train_ckpt";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto m = DegradationModel::create(tiny_config(), 16);
  TrainConfig cfg;
  cfg.batch_size = 1;
  cfg.epochs = 1;
  cfg.checkpoint_every = 2;
  cfg.checkpoint_path = dir / "m.ckpt";
  std::vector<int> seen;
  const auto pairs = small_pairs(3, 16, 17);
  train(m, pairs, cfg, [&](const StepRecord& r) {
    if (r.step == 2) seen.push_back(fs::exists(cfg.checkpoint_path) ? 1 : 0);
  });
  EXPECT_EQ(seen, std::vector<int>{0});  // callback fires before the step-2 save
  EXPECT_TRUE(fs::exists(cfg.checkpoint_path));
  fs::remove_all(dir);
}

TEST(TrainLog, CsvLayout) {
  TrainLog log;
  log.steps.push_back({1, 0, 0.25, 0.5});
  log.steps.push_back({2, 0, 0.125, 1.0});
  const fs::path p = fs::temp_directory_path() / "adablur_log.csv";
  log.write_csv(p);
  const std::string text = read_all(p);
  EXPECT_EQ(text, "step,epoch,loss,wall_time\n1,0,0.25,0.5\n2,0,0.125,1\n");
  fs::remove(p);
}

TEST(Evaluate, ModelOnItsOwnOutputsIsZero) {
  auto m = DegradationModel::create(tiny_config(), 18);
  auto pairs = small_pairs(3, 16, 19);
  std::vector<GrayImage> hr;
  for (const auto& p : pairs) hr.push_back(p.hr);
  const auto lr = degrade_images(m, hr);
  for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i].lr = lr[i];
  EXPECT_EQ(evaluate_l1(m, pairs), 0.0);
  EXPECT_GT(bicubic_l1(pairs), 0.0);
  EXPECT_THROW(evaluate_l1(m, {}), InvalidArgument);
}

TEST(Evaluate, BicubicMatchesDirectMean) {
  const auto pairs = small_pairs(2, 32, 20);
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& p : pairs) {
    const GrayImage b = bicubic_downsample(p.hr, 4);
    for (std::size_t i = 0; i < b.size(); ++i) total += std::abs(b.data()[i] - p.lr.data()[i]);
    n += b.size();
  }
  EXPECT_NEAR(bicubic_l1(pairs), total / n, 1e-15);
}

TEST(Dataset, PatchesPerImageAndWholeImages) {
  const auto pairs = small_pairs(3, 64, 21);
  EXPECT_EQ(build_patch_dataset(pairs, 32, 5, 1).size(), 15u);
  EXPECT_EQ(build_patch_dataset(pairs, 0, 5, 1).size(), 3u);
  const auto patches = build_patch_dataset(pairs, 32, 5, 1);
  EXPECT_EQ(patches[0].hr.height(), 32);
  EXPECT_EQ(patches[0].lr.height(), 8);
}

TEST(Dataset, SplitIsBySourceImage) {
  const auto pairs = small_pairs(5, 16, 22);
  const auto [tr, te] = split_pairs(pairs, 3);
  ASSERT_EQ(tr.size(), 3u);
  ASSERT_EQ(te.size(), 2u);
  EXPECT_EQ(te[0].hr, pairs[3].hr);
  // Patches drawn from the training images never come from a test image.
  const auto patches = build_patch_dataset(tr, 8, 4, 2);
  for (const auto& p : patches)
    for (const auto& t : te) {
      bool inside = false;
      for (int r = 0; r + 8 <= 16 && !inside; r += 4)
        for (int c = 0; c + 8 <= 16 && !inside; c += 4) inside = t.hr.crop(r, c, 8, 8) == p.hr;
      EXPECT_FALSE(inside);
    }
  EXPECT_THROW(split_pairs(pairs, 6), InvalidArgument);
}

TEST(ExperimentConfig, ParsesKeysAndComments) {
  const auto cfg = parse_experiment_config_text(
      "# desk run\n"
      "batch_size = 4\n"
      "lr = 0.002   # tuned\n"
      "epochs=7\n"
      "patch_size = 32\n"
      "flip_augment = false\n"
      "factors = 1.0, 1.2\n"
      "angles_deg = 0, 90\n"
      "scale = 2\n"
      "model_seed = 9\n");
  EXPECT_EQ(cfg.train.batch_size, 4);
  EXPECT_DOUBLE_EQ(cfg.train.lr, 0.002);
  EXPECT_EQ(cfg.train.epochs, 7);
  EXPECT_EQ(cfg.train.patch_size, 32);
  EXPECT_FALSE(cfg.train.flip_augment);
  EXPECT_EQ(cfg.net.bank.factors, (std::vector<double>{1.0, 1.2}));
  ASSERT_EQ(cfg.net.bank.angles.size(), 2u);
  EXPECT_NEAR(cfg.net.bank.angles[1], std::acos(-1.0) / 2, 1e-15);
  EXPECT_EQ(cfg.net.scale, 2);
  EXPECT_TRUE(cfg.scale_given);
  EXPECT_EQ(cfg.model_seed, 9u);
}

TEST(ExperimentConfig, RejectsBadInput) {
  EXPECT_THROW(parse_experiment_config_text("bogus = 1\n"), InvalidArgument);
  EXPECT_THROW(parse_experiment_config_text("lr = fast\n"), InvalidArgument);
  EXPECT_THROW(parse_experiment_config_text("lr 0.1\n"), InvalidArgument);
  EXPECT_THROW(parse_experiment_config_text("batch_size = 0\n"), InvalidArgument);
  EXPECT_THROW(parse_experiment_config_text("scale = 3\n"), InvalidArgument);
  EXPECT_THROW(parse_experiment_config("/nonexistent/cfg.txt"), IoError);
}

TEST(Train, CosineDecayIsParsedAndChangesTheRun) {
  EXPECT_TRUE(parse_experiment_config_text("cosine_decay = true\n").train.cosine_decay);
  const auto pairs = small_pairs(2, 16, 40);
  std::vector<std::vector<double>> finals;
  for (bool decay : {false, true}) {
    auto m = DegradationModel::create(tiny_config(), 41);
    TrainConfig cfg;
    cfg.batch_size = 1;
    cfg.lr = 1e-3;
    cfg.epochs = 3;
    cfg.cosine_decay = decay;
    const TrainLog log = train(m, pairs, cfg);
    EXPECT_EQ(log.steps.size(), 6u);
    finals.push_back(flat_params(m));
  }
  EXPECT_NE(finals[0], finals[1]);
}

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "adablur/degnet.hpp"
#include "adablur/errors.hpp"
#include "oracles.hpp"

using namespace adablur;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  return fs::temp_directory_path() / ("adablur_ckpt_" + std::string(info->name()) + "_" + name);
}

std::string read_all(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_all(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f << s;
}

DegradationModel perturbed_model(std::uint64_t seed) {
  NetConfig cfg;
  cfg.channels = 4;
  cfg.num_resblocks = 1;
  cfg.bank = BankSpec::with_factors({0.5, 0.6});
  auto m = DegradationModel::create(cfg, seed);
  // Non-zero biases and logits so every tensor carries information.
  for (const Tensor& p : m.parameters()) {
    Tensor t = p;
    const auto noise = oracle::uniform_values(t.numel(), seed++, -0.1, 0.1);
    for (std::size_t i = 0; i < t.numel(); ++i) t.data()[i] += noise[i];
  }
  return m;
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto path = temp_file("m.ckpt");
  const auto m = perturbed_model(1);
  save_model(m, path);
  const auto back = load_model(path);
  EXPECT_EQ(back.config(), m.config());
  EXPECT_EQ(back.bank(), m.bank());
  const auto a = m.named_parameters();
  const auto b = back.named_parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].first, b[i].first);
    EXPECT_EQ(a[i].second.shape(), b[i].second.shape());
    EXPECT_TRUE(std::equal(a[i].second.data().begin(), a[i].second.data().end(), b[i].second.data().begin()))
        << a[i].first;
  }
  const Tensor x = Tensor::from_data({1, 1, 16, 16}, oracle::uniform_values(256, 2, 0.0, 1.0));
  const Tensor ya = m.forward(x);
  const Tensor yb = back.forward(x);
  for (std::size_t i = 0; i < ya.numel(); ++i) EXPECT_EQ(ya.data()[i], yb.data()[i]);
  fs::remove(path);
}

TEST(Checkpoint, SavingTwiceGivesIdenticalBytes) {
  const auto p1 = temp_file("a.ckpt");
  const auto p2 = temp_file("b.ckpt");
  save_model(perturbed_model(3), p1);
  save_model(load_model(p1), p2);
  EXPECT_EQ(read_all(p1), read_all(p2));
  fs::remove(p1);
  fs::remove(p2);
}

TEST(Checkpoint, RescaledFactorsRoundTrip) {
  const auto path = temp_file("r.ckpt");
  save_model(perturbed_model(4), path);
  auto m = load_model(path);
  const std::vector<double> f{2.0, 2.4};
  m.rescale(f);
  save_model(m, path);
  const auto back = load_model(path);
  EXPECT_EQ(back.config().bank.factors, f);
  EXPECT_EQ(back.bank(), build_bank(BankSpec::with_factors(f)));
  fs::remove(path);
}

TEST(Checkpoint, WrongMagicIsAVersionError) {
  const auto path = temp_file("bad.ckpt");
  save_model(perturbed_model(5), path);
  std::string bytes = read_all(path);
  bytes[0] = 'X';
  write_all(path, bytes);
  EXPECT_THROW(load_model(path), VersionError);
  write_all(path, "not a checkpoint at all");
  EXPECT_THROW(load_model(path), VersionError);
  fs::remove(path);
}

TEST(Checkpoint, NewerVersionIsRejected) {
  const auto path = temp_file("v.ckpt");
  save_model(perturbed_model(6), path);
  std::string bytes = read_all(path);
  const auto pos = bytes.find("\"version\":1");
  ASSERT_NE(pos, std::string::npos);
  bytes[pos + 10] = '2';
  write_all(path, bytes);
  EXPECT_THROW(load_model(path), VersionError);
  fs::remove(path);
}

TEST(Checkpoint, TruncationIsAFormatError) {
  const auto path = temp_file("t.ckpt");
  save_model(perturbed_model(7), path);
  const std::string bytes = read_all(path);
  for (std::size_t keep : {std::size_t{12}, std::size_t{40}, bytes.size() - 8}) {
    write_all(path, bytes.substr(0, keep));
    EXPECT_THROW(load_model(path), FormatError) << keep;
  }
  fs::remove(path);
}

TEST(Checkpoint, MissingFileIsAnIoError) { EXPECT_THROW(load_model(temp_file("absent.ckpt")), IoError); }

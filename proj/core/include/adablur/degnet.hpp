#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adablur/gauss_kernel.hpp"
#include "adablur/image_io.hpp"
#include "adablur/ops.hpp"
#include "adablur/tensor.hpp"

namespace adablur {

struct NetConfig {
  int channels = 16;
  int num_resblocks = 4;
  int scale = 4;  // 2, 4 or 8
  BankSpec bank = BankSpec::with_factors({1.0});

  void validate() const;
  // Number of stride-2 decoder stages, log2(scale).
  int decoder_stages() const;

  bool operator==(const NetConfig&) const = default;
};

// conv3x3 -> ReLU -> conv3x3 plus identity skip, no normalization.
struct ResBlock {
  Conv2dParams first;
  Conv2dParams second;
};

// HR -> LR degradation network: residual encoder, adaptive blurring layer
// (per-channel softmax mixture of a fixed Gaussian kernel bank), and a
// strided convolutional decoder.
//
// Parameters are Tensor handles. The class is move-only; use clone() for an
// independent copy.
class DegradationModel {
 public:
  // He-normal conv weights, zero biases, zero mixture logits (uniform mix).
  static DegradationModel create(const NetConfig& config, std::uint64_t seed);

  DegradationModel(DegradationModel&&) = default;
  DegradationModel& operator=(DegradationModel&&) = default;
  DegradationModel(const DegradationModel&) = delete;
  DegradationModel& operator=(const DegradationModel&) = delete;

  DegradationModel clone() const;

  const NetConfig& config() const { return config_; }
  const KernelBank& bank() const { return bank_; }
  // Swaps in a bank with the same topology (angles, aspect, kernel count,
  // ROI, size). Throws TopologyError otherwise.
  void set_bank(KernelBank bank);
  // Rebuilds the bank at new factors; mixture weights are kept.
  void rescale(std::span<const double> factors);

  // [N,1,H,W] -> [N,C,H,W]
  Tensor encode(const Tensor& hr) const;
  // softmax_rows(abl_logits), [C, K]
  Tensor mixture_weights() const;
  // [N,C,H,W] -> [N,C,H,W]; channel c is blurred by sum_k w[c,k] kernel_k.
  Tensor abl_forward(const Tensor& features) const;
  // [N,C,H,W] -> [N,1,H/scale,W/scale]; the last layer is linear.
  Tensor decode(const Tensor& features) const;
  Tensor forward(const Tensor& hr) const;

  // Learnable tensors in a fixed order. The kernel bank is not included.
  std::vector<Tensor> parameters() const;
  std::vector<std::pair<std::string, Tensor>> named_parameters() const;

  Conv2dParams& conv_in() { return conv_in_; }
  std::vector<ResBlock>& resblocks() { return blocks_; }
  std::vector<Conv2dParams>& decoder() { return decoder_; }
  Conv2dParams& output_layer() { return output_; }
  Tensor& abl_logits() { return abl_logits_; }
  const Tensor& abl_logits() const { return abl_logits_; }

 private:
  DegradationModel() = default;
  void refresh_bank_matrix();

  NetConfig config_;
  Conv2dParams conv_in_;
  std::vector<ResBlock> blocks_;
  Tensor abl_logits_;
  std::vector<Conv2dParams> decoder_;
  Conv2dParams output_;
  KernelBank bank_;
  Tensor bank_matrix_;  // [K, size*size], constant

  friend DegradationModel load_model(const std::filesystem::path& path);
};

inline constexpr int kCheckpointVersion = 1;

// Checkpoint layout: 8-byte magic "ABLCKPT\n", little-endian uint64 header
// length, UTF-8 JSON header (magic, version, config, tensor manifest with
// shapes and byte offsets), then the payload of little-endian float64.
void save_model(const DegradationModel& model, const std::filesystem::path& path);
DegradationModel load_model(const std::filesystem::path& path);

// Converts a batch of equal-size images to a [N,1,H,W] tensor.
Tensor images_to_tensor(std::span<const GrayImage> images);
Tensor image_to_tensor(const GrayImage& image);
// Channel 0 of sample `index` as an image, clamped to [0,1].
GrayImage tensor_to_image(const Tensor& t, int index = 0);

// Runs forward() without recording the graph and returns clamped images.
std::vector<GrayImage> degrade_images(const DegradationModel& model, std::span<const GrayImage> hr);

}  // namespace adablur

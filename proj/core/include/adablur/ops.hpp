#pragma once

#include "adablur/tensor.hpp"

namespace adablur {

enum class PadMode { kZero, kReflect };

// Per-side padding of the two spatial axes.
struct Padding {
  PadMode mode = PadMode::kZero;
  int top = 0;
  int bottom = 0;
  int left = 0;
  int right = 0;

  static Padding symmetric(int width, PadMode mode) { return {mode, width, width, width, width}; }
  // Output size equals input size at stride 1. Even kernels put the extra
  // row/column after the image: before = (k - 1) / 2, after = k / 2.
  static Padding same(int kh, int kw, PadMode mode) { return {mode, (kh - 1) / 2, kh / 2, (kw - 1) / 2, kw / 2}; }
};

struct Conv2dParams {
  Tensor weight;  // [out_ch, in_ch, kh, kw]
  Tensor bias;    // [out_ch]
  int stride = 1;
  Padding padding;

  void validate() const;
};

// Cross-correlation of input [N, C, H, W]; output [N, C', H', W'] with
// H' = (H + top + bottom - kh) / stride + 1.
Tensor conv2d(const Tensor& input, const Conv2dParams& params);

// Per-channel cross-correlation of input [N, C, H, W] with kernels
// [C, kh, kw], stride 1, no bias.
Tensor depthwise_conv2d(const Tensor& input, const Tensor& kernels, const Padding& padding);

Tensor relu(const Tensor& t);
Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& t, double factor);
Tensor sum(const Tensor& t);
// Row-wise softmax of a [rows, cols] tensor; rows are shifted by their max.
Tensor softmax_rows(const Tensor& t);
// [M, K] x [K, N] -> [M, N].
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor reshape(const Tensor& t, Shape shape);
// Mean absolute error; d/dpred = sign(pred - target) / count with sign(0) = 0.
Tensor l1_loss(const Tensor& pred, const Tensor& target);

// Padded-index map along one axis: entry i is the source index for padded
// position i, or -1 for a zero pad.
std::vector<int> pad_index_map(int size, int before, int after, PadMode mode);

}  // namespace adablur

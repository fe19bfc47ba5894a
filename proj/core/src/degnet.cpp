#include "adablur/degnet.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "adablur/errors.hpp"

namespace adablur {

namespace {

Conv2dParams make_conv(int in_ch, int out_ch, int k, int stride, PadMode mode, std::mt19937_64& rng) {
  const double std_dev = std::sqrt(2.0 / (static_cast<double>(in_ch) * k * k));
  std::normal_distribution<double> normal(0.0, std_dev);
  std::vector<double> w(static_cast<std::size_t>(out_ch) * in_ch * k * k);
  for (double& v : w) v = normal(rng);
  Conv2dParams p;
  p.weight = Tensor::from_data({out_ch, in_ch, k, k}, std::move(w), true);
  p.bias = Tensor::zeros({out_ch}, true);
  p.stride = stride;
  p.padding = Padding::symmetric(k / 2, mode);
  return p;
}

Conv2dParams clone_conv(const Conv2dParams& p) {
  Conv2dParams c = p;
  c.weight = p.weight.clone();
  c.weight.set_requires_grad(true);
  c.bias = p.bias.clone();
  c.bias.set_requires_grad(true);
  return c;
}

}  // namespace

void NetConfig::validate() const {
  if (channels < 1) detail::throw_invalid("channels must be >= 1");
  if (num_resblocks < 0) detail::throw_invalid("num_resblocks must be >= 0");
  if (scale != 2 && scale != 4 && scale != 8) detail::throw_invalid("scale must be 2, 4 or 8");
  bank.validate();
}

int NetConfig::decoder_stages() const {
  int stages = 0;
  for (int s = scale; s > 1; s /= 2) ++stages;
  return stages;
}

DegradationModel DegradationModel::create(const NetConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  DegradationModel m;
  m.config_ = config;
  const int c = config.channels;
  m.conv_in_ = make_conv(1, c, 3, 1, PadMode::kReflect, rng);
  for (int i = 0; i < config.num_resblocks; ++i) {
    ResBlock block;
    block.first = make_conv(c, c, 3, 1, PadMode::kReflect, rng);
    block.second = make_conv(c, c, 3, 1, PadMode::kReflect, rng);
    m.blocks_.push_back(std::move(block));
  }
  for (int i = 0; i < config.decoder_stages(); ++i) m.decoder_.push_back(make_conv(c, c, 3, 2, PadMode::kReflect, rng));
  m.output_ = make_conv(c, 1, 3, 1, PadMode::kReflect, rng);
  m.abl_logits_ = Tensor::zeros({c, static_cast<int>(config.bank.kernel_count())}, true);
  m.bank_ = build_bank(config.bank);
  m.refresh_bank_matrix();
  return m;
}

DegradationModel DegradationModel::clone() const {
  DegradationModel m;
  m.config_ = config_;
  m.conv_in_ = clone_conv(conv_in_);
  for (const ResBlock& b : blocks_) m.blocks_.push_back({clone_conv(b.first), clone_conv(b.second)});
  for (const Conv2dParams& d : decoder_) m.decoder_.push_back(clone_conv(d));
  m.output_ = clone_conv(output_);
  m.abl_logits_ = abl_logits_.clone();
  m.abl_logits_.set_requires_grad(true);
  m.bank_ = bank_;
  m.refresh_bank_matrix();
  return m;
}

void DegradationModel::refresh_bank_matrix() {
  const int k = static_cast<int>(bank_.size());
  const int s = bank_.spec.kernel_size;
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(k) * s * s);
  for (const KernelGrid& g : bank_.kernels) values.insert(values.end(), g.values.begin(), g.values.end());
  bank_matrix_ = Tensor::from_data({k, s * s}, std::move(values), false);
}

void DegradationModel::set_bank(KernelBank bank) {
  if (!same_topology(bank.spec, bank_.spec) || bank.size() != bank_.size())
    throw TopologyError("kernel bank topology differs from the model's bank");
  bank_ = std::move(bank);
  config_.bank = bank_.spec;
  refresh_bank_matrix();
}

void DegradationModel::rescale(std::span<const double> factors) { set_bank(rescale_bank(bank_, factors)); }

Tensor DegradationModel::encode(const Tensor& hr) const {
  if (hr.rank() != 4 || hr.dim(1) != 1) detail::throw_shape("encode expects a [N,1,H,W] tensor");
  Tensor x = conv2d(hr, conv_in_);
  for (const ResBlock& b : blocks_) x = add(x, conv2d(relu(conv2d(x, b.first)), b.second));
  return x;
}

Tensor DegradationModel::mixture_weights() const { return softmax_rows(abl_logits_); }

Tensor DegradationModel::abl_forward(const Tensor& features) const {
  if (features.rank() != 4 || features.dim(1) != config_.channels)
    detail::throw_shape("abl_forward expects [N," + std::to_string(config_.channels) + ",H,W] features");
  if (abl_logits_.dim(1) != static_cast<int>(bank_.size()))
    throw TopologyError("mixture logits do not match the kernel bank size");
  const int s = bank_.spec.kernel_size;
  Tensor kernels = reshape(matmul(mixture_weights(), bank_matrix_), {config_.channels, s, s});
  return depthwise_conv2d(features, kernels, Padding::same(s, s, PadMode::kReflect));
}

Tensor DegradationModel::decode(const Tensor& features) const {
  if (features.rank() != 4 || features.dim(1) != config_.channels)
    detail::throw_shape("decode expects [N," + std::to_string(config_.channels) + ",H,W] features");
  if (features.dim(2) % config_.scale != 0 || features.dim(3) % config_.scale != 0)
    detail::throw_shape("decode input size must be divisible by the scale");
  Tensor x = features;
  for (const Conv2dParams& d : decoder_) x = relu(conv2d(x, d));
  return conv2d(x, output_);
}

Tensor DegradationModel::forward(const Tensor& hr) const {
  if (hr.rank() != 4 || hr.dim(2) % config_.scale != 0 || hr.dim(3) % config_.scale != 0)
    detail::throw_shape("forward input size " + shape_string(hr.shape()) + " is not divisible by scale " +
                        std::to_string(config_.scale));
  return decode(abl_forward(encode(hr)));
}

std::vector<std::pair<std::string, Tensor>> DegradationModel::named_parameters() const {
  std::vector<std::pair<std::string, Tensor>> out;
  auto conv = [&](const std::string& name, const Conv2dParams& p) {
    out.emplace_back(name + ".weight", p.weight);
    out.emplace_back(name + ".bias", p.bias);
  };
  conv("conv_in", conv_in_);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    conv("resblock." + std::to_string(i) + ".first", blocks_[i].first);
    conv("resblock." + std::to_string(i) + ".second", blocks_[i].second);
  }
  out.emplace_back("abl.logits", abl_logits_);
  for (std::size_t i = 0; i < decoder_.size(); ++i) conv("decoder." + std::to_string(i), decoder_[i]);
  conv("output", output_);
  return out;
}

std::vector<Tensor> DegradationModel::parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

Tensor images_to_tensor(std::span<const GrayImage> images) {
  if (images.empty()) detail::throw_shape("empty image batch");
  const int h = images[0].height();
  const int w = images[0].width();
  std::vector<double> data;
  data.reserve(images.size() * images[0].size());
  for (const GrayImage& img : images) {
    if (img.height() != h || img.width() != w) detail::throw_shape("images in a batch must share dimensions");
    data.insert(data.end(), img.data().begin(), img.data().end());
  }
  return Tensor::from_data({static_cast<int>(images.size()), 1, h, w}, std::move(data));
}

Tensor image_to_tensor(const GrayImage& image) { return images_to_tensor(std::span<const GrayImage>(&image, 1)); }

GrayImage tensor_to_image(const Tensor& t, int index) {
  if (t.rank() != 4 || index < 0 || index >= t.dim(0)) detail::throw_shape("tensor_to_image: bad tensor or index");
  const int h = t.dim(2);
  const int w = t.dim(3);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const auto begin = t.data().begin() + static_cast<std::ptrdiff_t>(index * t.dim(1) * plane);
  std::vector<double> data(begin, begin + static_cast<std::ptrdiff_t>(plane));
  for (double& v : data) v = std::clamp(v, 0.0, 1.0);
  return GrayImage(h, w, std::move(data));
}

std::vector<GrayImage> degrade_images(const DegradationModel& model, std::span<const GrayImage> hr) {
  NoGradGuard guard;
  std::vector<GrayImage> out;
  out.reserve(hr.size());
  for (const GrayImage& img : hr) out.push_back(tensor_to_image(model.forward(image_to_tensor(img))));
  return out;
}

}  // namespace adablur

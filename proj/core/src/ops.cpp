#include "adablur/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

#include "adablur/errors.hpp"
#include "adablur/image_io.hpp"

namespace adablur {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    detail::throw_shape(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                        shape_string(b.shape()));
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (!t.defined() || t.rank() != rank)
    detail::throw_shape(std::string(op) + ": expected a rank-" + std::to_string(rank) + " tensor");
}

// Geometry shared by the forward and backward passes of a convolution.
struct ConvGeometry {
  int n, c, h, w;
  int kh, kw;
  int stride;
  int out_h, out_w;
  std::vector<int> row_map, col_map;  // padded index -> source index or -1

  ConvGeometry(const Shape& in, int kh_, int kw_, int stride_, const Padding& pad)
      : n(in[0]), c(in[1]), h(in[2]), w(in[3]), kh(kh_), kw(kw_), stride(stride_) {
    const int ph = h + pad.top + pad.bottom;
    const int pw = w + pad.left + pad.right;
    if (ph < kh || pw < kw) detail::throw_shape("conv: padded input smaller than kernel");
    out_h = (ph - kh) / stride + 1;
    out_w = (pw - kw) / stride + 1;
    row_map = pad_index_map(h, pad.top, pad.bottom, pad.mode);
    col_map = pad_index_map(w, pad.left, pad.right, pad.mode);
  }

  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  std::size_t out_plane() const { return static_cast<std::size_t>(out_h) * out_w; }
};

// Unfolds one image [C, H, W] into columns [C*kh*kw, out_h*out_w].
void im2col(const double* src, const ConvGeometry& g, double* col) {
  const std::size_t cols = g.out_plane();
  for (int ch = 0; ch < g.c; ++ch) {
    const double* plane = src + ch * g.plane();
    for (int i = 0; i < g.kh; ++i)
      for (int j = 0; j < g.kw; ++j) {
        double* dst = col + ((static_cast<std::size_t>(ch) * g.kh + i) * g.kw + j) * cols;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int sr = g.row_map[oy * g.stride + i];
          double* out = dst + static_cast<std::size_t>(oy) * g.out_w;
          if (sr < 0) {
            std::fill_n(out, g.out_w, 0.0);
            continue;
          }
          const double* row = plane + static_cast<std::size_t>(sr) * g.w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int sc = g.col_map[ox * g.stride + j];
            out[ox] = sc < 0 ? 0.0 : row[sc];
          }
        }
      }
  }
}

// Adjoint of im2col: scatters column gradients back onto the source image.
void col2im(const double* col, const ConvGeometry& g, double* dst) {
  const std::size_t cols = g.out_plane();
  for (int ch = 0; ch < g.c; ++ch) {
    double* plane = dst + ch * g.plane();
    for (int i = 0; i < g.kh; ++i)
      for (int j = 0; j < g.kw; ++j) {
        const double* src = col + ((static_cast<std::size_t>(ch) * g.kh + i) * g.kw + j) * cols;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int sr = g.row_map[oy * g.stride + i];
          if (sr < 0) continue;
          double* row = plane + static_cast<std::size_t>(sr) * g.w;
          const double* in = src + static_cast<std::size_t>(oy) * g.out_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int sc = g.col_map[ox * g.stride + j];
            if (sc >= 0) row[sc] += in[ox];
          }
        }
      }
  }
}

// Builds the padded plane of one channel.
void pad_plane(const double* src, const ConvGeometry& g, double* dst) {
  const std::size_t pw = g.col_map.size();
  for (std::size_t r = 0; r < g.row_map.size(); ++r) {
    const int sr = g.row_map[r];
    double* out = dst + r * pw;
    if (sr < 0) {
      std::fill_n(out, pw, 0.0);
      continue;
    }
    const double* row = src + static_cast<std::size_t>(sr) * g.w;
    for (std::size_t c = 0; c < pw; ++c) {
      const int sc = g.col_map[c];
      out[c] = sc < 0 ? 0.0 : row[sc];
    }
  }
}

// Adjoint of pad_plane.
void unpad_plane_add(const double* padded, const ConvGeometry& g, double* dst) {
  const std::size_t pw = g.col_map.size();
  for (std::size_t r = 0; r < g.row_map.size(); ++r) {
    const int sr = g.row_map[r];
    if (sr < 0) continue;
    const double* in = padded + r * pw;
    double* row = dst + static_cast<std::size_t>(sr) * g.w;
    for (std::size_t c = 0; c < pw; ++c) {
      const int sc = g.col_map[c];
      if (sc >= 0) row[sc] += in[c];
    }
  }
}

}  // namespace

std::vector<int> pad_index_map(int size, int before, int after, PadMode mode) {
  if (size <= 0 || before < 0 || after < 0) detail::throw_shape("invalid padding geometry");
  std::vector<int> map(static_cast<std::size_t>(size) + before + after);
  for (std::size_t i = 0; i < map.size(); ++i) {
    const int src = static_cast<int>(i) - before;
    if (src >= 0 && src < size)
      map[i] = src;
    else
      map[i] = mode == PadMode::kZero ? -1 : reflect_index(src, size);
  }
  return map;
}

void Conv2dParams::validate() const {
  require_rank(weight, 4, "conv2d weight");
  if (!bias.defined() || bias.shape() != Shape{weight.dim(0)})
    detail::throw_shape("conv2d: bias must have shape [out_ch]");
  if (stride < 1) detail::throw_invalid("conv2d: stride must be >= 1");
  if (stride == 1 && (weight.dim(2) % 2 == 0 || weight.dim(3) % 2 == 0))
    detail::throw_invalid("conv2d: even kernel extents require stride > 1");
  if (padding.top < 0 || padding.bottom < 0 || padding.left < 0 || padding.right < 0)
    detail::throw_invalid("conv2d: negative padding");
}

Tensor conv2d(const Tensor& input, const Conv2dParams& params) {
  params.validate();
  require_rank(input, 4, "conv2d input");
  const Tensor& weight = params.weight;
  const int out_ch = weight.dim(0);
  if (weight.dim(1) != input.dim(1))
    detail::throw_shape("conv2d: input has " + std::to_string(input.dim(1)) + " channels, weight expects " +
                        std::to_string(weight.dim(1)));

  auto geom = std::make_shared<ConvGeometry>(input.shape(), weight.dim(2), weight.dim(3), params.stride,
                                             params.padding);
  const ConvGeometry& g = *geom;
  const Eigen::Index patch = static_cast<Eigen::Index>(g.c) * g.kh * g.kw;
  const Eigen::Index cols = static_cast<Eigen::Index>(g.out_plane());

  std::vector<double> out(static_cast<std::size_t>(g.n) * out_ch * cols);
  std::vector<double> col(static_cast<std::size_t>(patch) * cols);
  ConstMatMap wmat(weight.data().data(), out_ch, patch);
  Eigen::Map<const Eigen::VectorXd> bvec(params.bias.data().data(), out_ch);
  for (int b = 0; b < g.n; ++b) {
    im2col(input.data().data() + b * g.c * g.plane(), g, col.data());
    MatMap omat(out.data() + b * out_ch * cols, out_ch, cols);
    omat.noalias() = wmat * ConstMatMap(col.data(), patch, cols);
    omat.colwise() += bvec;
  }

  auto in_impl = input.impl();
  auto w_impl = weight.impl();
  auto b_impl = params.bias.impl();
  return detail::make_result(
      {g.n, out_ch, g.out_h, g.out_w}, std::move(out), {input, weight, params.bias},
      [geom, in_impl, w_impl, b_impl, out_ch, patch, cols](const TensorImpl& self) {
        const ConvGeometry& g = *geom;
        ConstMatMap wmat(w_impl->data.data(), out_ch, patch);
        std::vector<double> col(static_cast<std::size_t>(patch) * cols);
        for (int b = 0; b < g.n; ++b) {
          ConstMatMap gout(self.grad.data() + b * out_ch * cols, out_ch, cols);
          if (b_impl->requires_grad) {
            // Plain loop: Eigen's vectorized reduction picks its summation
            // order from the pointer alignment, which breaks run-to-run
            // reproducibility.
            double* gb = b_impl->grad_buffer().data();
            for (int o = 0; o < out_ch; ++o) {
              const double* row = self.grad.data() + (b * out_ch + o) * cols;
              double acc = 0.0;
              for (int k = 0; k < cols; ++k) acc += row[k];
              gb[o] += acc;
            }
          }
          if (w_impl->requires_grad) {
            im2col(in_impl->data.data() + b * g.c * g.plane(), g, col.data());
            MatMap gw(w_impl->grad_buffer().data(), out_ch, patch);
            gw.noalias() += gout * ConstMatMap(col.data(), patch, cols).transpose();
          }
          if (in_impl->requires_grad) {
            MatMap gcol(col.data(), patch, cols);
            gcol.noalias() = wmat.transpose() * gout;
            col2im(col.data(), g, in_impl->grad_buffer().data() + b * g.c * g.plane());
          }
        }
      });
}

Tensor depthwise_conv2d(const Tensor& input, const Tensor& kernels, const Padding& padding) {
  require_rank(input, 4, "depthwise_conv2d input");
  require_rank(kernels, 3, "depthwise_conv2d kernels");
  if (kernels.dim(0) != input.dim(1))
    detail::throw_shape("depthwise_conv2d: kernel count " + std::to_string(kernels.dim(0)) +
                        " does not match channel count " + std::to_string(input.dim(1)));
  auto geom = std::make_shared<ConvGeometry>(input.shape(), kernels.dim(1), kernels.dim(2), 1, padding);
  const ConvGeometry& g = *geom;
  const std::size_t pw = g.col_map.size();
  const std::size_t ph = g.row_map.size();
  const std::size_t ksize = static_cast<std::size_t>(g.kh) * g.kw;

  std::vector<double> out(static_cast<std::size_t>(g.n) * g.c * g.out_plane(), 0.0);
  std::vector<double> padded(ph * pw);
  for (int b = 0; b < g.n; ++b)
    for (int ch = 0; ch < g.c; ++ch) {
      const std::size_t idx = static_cast<std::size_t>(b) * g.c + ch;
      pad_plane(input.data().data() + idx * g.plane(), g, padded.data());
      const double* k = kernels.data().data() + ch * ksize;
      double* o = out.data() + idx * g.out_plane();
      for (int i = 0; i < g.kh; ++i)
        for (int j = 0; j < g.kw; ++j) {
          const double kv = k[i * g.kw + j];
          for (int y = 0; y < g.out_h; ++y) {
            const double* src = padded.data() + (y + i) * pw + j;
            double* dst = o + static_cast<std::size_t>(y) * g.out_w;
            for (int x = 0; x < g.out_w; ++x) dst[x] += kv * src[x];
          }
        }
    }

  auto in_impl = input.impl();
  auto k_impl = kernels.impl();
  return detail::make_result(
      {g.n, g.c, g.out_h, g.out_w}, std::move(out), {input, kernels},
      [geom, in_impl, k_impl, ph, pw, ksize](const TensorImpl& self) {
        const ConvGeometry& g = *geom;
        std::vector<double> padded(ph * pw);
        std::vector<double> gpad(ph * pw);
        for (int b = 0; b < g.n; ++b)
          for (int ch = 0; ch < g.c; ++ch) {
            const std::size_t idx = static_cast<std::size_t>(b) * g.c + ch;
            const double* gout = self.grad.data() + idx * g.out_plane();
            if (k_impl->requires_grad) {
              pad_plane(in_impl->data.data() + idx * g.plane(), g, padded.data());
              double* gk = k_impl->grad_buffer().data() + ch * ksize;
              for (int i = 0; i < g.kh; ++i)
                for (int j = 0; j < g.kw; ++j) {
                  double acc = 0.0;
                  for (int y = 0; y < g.out_h; ++y) {
                    const double* src = padded.data() + (y + i) * pw + j;
                    const double* go = gout + static_cast<std::size_t>(y) * g.out_w;
                    for (int x = 0; x < g.out_w; ++x) acc += go[x] * src[x];
                  }
                  gk[i * g.kw + j] += acc;
                }
            }
            if (in_impl->requires_grad) {
              std::fill(gpad.begin(), gpad.end(), 0.0);
              const double* k = k_impl->data.data() + ch * ksize;
              for (int i = 0; i < g.kh; ++i)
                for (int j = 0; j < g.kw; ++j) {
                  const double kv = k[i * g.kw + j];
                  for (int y = 0; y < g.out_h; ++y) {
                    double* dst = gpad.data() + (y + i) * pw + j;
                    const double* go = gout + static_cast<std::size_t>(y) * g.out_w;
                    for (int x = 0; x < g.out_w; ++x) dst[x] += kv * go[x];
                  }
                }
              unpad_plane_add(gpad.data(), g, in_impl->grad_buffer().data() + idx * g.plane());
            }
          }
      });
}

Tensor relu(const Tensor& t) {
  std::vector<double> out(t.numel());
  const auto in = t.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
  auto impl = t.impl();
  return detail::make_result(t.shape(), std::move(out), {t}, [impl](const TensorImpl& self) {
    auto g = impl->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (impl->data[i] > 0.0) g[i] += self.grad[i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  auto ai = a.impl();
  auto bi = b.impl();
  return detail::make_result(a.shape(), std::move(out), {a, b}, [ai, bi](const TensorImpl& self) {
    for (auto* t : {ai.get(), bi.get()}) {
      if (!t->requires_grad) continue;
      auto g = t->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor scale(const Tensor& t, double factor) {
  std::vector<double> out(t.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = factor * t.data()[i];
  auto impl = t.impl();
  return detail::make_result(t.shape(), std::move(out), {t}, [impl, factor](const TensorImpl& self) {
    auto g = impl->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
  });
}

Tensor sum(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v;
  auto impl = t.impl();
  return detail::make_result({}, {s}, {t}, [impl](const TensorImpl& self) {
    auto g = impl->grad_buffer();
    for (double& v : g) v += self.grad[0];
  });
}

Tensor softmax_rows(const Tensor& t) {
  require_rank(t, 2, "softmax_rows");
  const int rows = t.dim(0);
  const int cols = t.dim(1);
  std::vector<double> out(t.numel());
  for (int r = 0; r < rows; ++r) {
    const double* in = t.data().data() + static_cast<std::size_t>(r) * cols;
    double* o = out.data() + static_cast<std::size_t>(r) * cols;
    const double mx = *std::max_element(in, in + cols);
    double total = 0.0;
    for (int c = 0; c < cols; ++c) total += (o[c] = std::exp(in[c] - mx));
    for (int c = 0; c < cols; ++c) o[c] /= total;
  }
  auto impl = t.impl();
  return detail::make_result(t.shape(), std::move(out), {t}, [impl, rows, cols](const TensorImpl& self) {
    auto g = impl->grad_buffer();
    for (int r = 0; r < rows; ++r) {
      const std::size_t base = static_cast<std::size_t>(r) * cols;
      double dot = 0.0;
      for (int c = 0; c < cols; ++c) dot += self.grad[base + c] * self.data[base + c];
      for (int c = 0; c < cols; ++c) g[base + c] += self.data[base + c] * (self.grad[base + c] - dot);
    }
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  if (a.dim(1) != b.dim(0)) detail::throw_shape("matmul: inner dimensions differ");
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(static_cast<std::size_t>(m) * n);
  MatMap(out.data(), m, n).noalias() = ConstMatMap(a.data().data(), m, k) * ConstMatMap(b.data().data(), k, n);
  auto ai = a.impl();
  auto bi = b.impl();
  return detail::make_result({m, n}, std::move(out), {a, b}, [ai, bi, m, k, n](const TensorImpl& self) {
    ConstMatMap gout(self.grad.data(), m, n);
    if (ai->requires_grad)
      MatMap(ai->grad_buffer().data(), m, k).noalias() += gout * ConstMatMap(bi->data.data(), k, n).transpose();
    if (bi->requires_grad)
      MatMap(bi->grad_buffer().data(), k, n).noalias() += ConstMatMap(ai->data.data(), m, k).transpose() * gout;
  });
}

Tensor reshape(const Tensor& t, Shape shape) {
  if (shape_numel(shape) != t.numel())
    detail::throw_shape("reshape: cannot view " + shape_string(t.shape()) + " as " + shape_string(shape));
  std::vector<double> out(t.data().begin(), t.data().end());
  auto impl = t.impl();
  return detail::make_result(std::move(shape), std::move(out), {t}, [impl](const TensorImpl& self) {
    auto g = impl->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor l1_loss(const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "l1_loss");
  if (pred.numel() == 0) detail::throw_shape("l1_loss: empty tensors");
  const std::size_t count = pred.numel();
  double acc = 0.0;
  for (std::size_t i = 0; i < count; ++i) acc += std::abs(pred.data()[i] - target.data()[i]);
  auto pi = pred.impl();
  auto ti = target.impl();
  return detail::make_result({}, {acc / static_cast<double>(count)}, {pred, target},
                             [pi, ti, count](const TensorImpl& self) {
                               const double step = self.grad[0] / static_cast<double>(count);
                               for (std::size_t i = 0; i < count; ++i) {
                                 const double d = pi->data[i] - ti->data[i];
                                 const double s = d > 0.0 ? step : (d < 0.0 ? -step : 0.0);
                                 if (pi->requires_grad) pi->grad_buffer()[i] += s;
                                 if (ti->requires_grad) ti->grad_buffer()[i] -= s;
                               }
                             });
}

}  // namespace adablur

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace adablur {

using Shape = std::vector<int>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

struct TensorImpl;

// Record of the op that produced a tensor. `backward` reads the output's
// gradient and accumulates into the inputs that require one.
struct GraphNode {
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  std::function<void(const TensorImpl& output)> backward;
};

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::shared_ptr<GraphNode> node;  // null for leaves

  // Returns the gradient buffer, allocating zeros on first use.
  std::span<double> grad_buffer();
};

// Dense row-major float64 tensor with reverse-mode differentiation.
//
// Tensor is a shared handle: copies alias the same storage, the way
// parameters are shared between a model and its optimizer. Use clone() for
// a deep copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int dim(std::size_t axis) const { return impl_->shape.at(axis); }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t numel() const { return impl_->data.size(); }

  std::span<double> data() { return impl_->data; }
  std::span<const double> data() const { return impl_->data; }
  double item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on) { impl_->requires_grad = on; }
  bool has_grad() const { return !impl_->grad.empty(); }
  // Empty span when no gradient has been accumulated yet.
  std::span<double> grad() { return impl_->grad; }
  std::span<const double> grad() const { return impl_->grad; }
  void zero_grad();

  bool is_leaf() const { return impl_->node == nullptr; }

  // Deep copy of the values as a new leaf (no gradient, no graph).
  Tensor clone() const;
  // Same storage semantics as clone(); kept for readability at call sites
  // that cut the graph.
  Tensor detach() const { return clone(); }

  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<TensorImpl> impl_;
};

// Back-propagates from a scalar. Gradients of leaves that require grad are
// accumulated (call zero_grad between steps); gradients of intermediate
// tensors are recomputed from scratch on every call. Throws ShapeError if
// `loss` is not a single element.
void backward(const Tensor& loss);

// While alive, ops on this thread do not record the graph.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

namespace detail {
// Builds an op output. When grad mode is on and any input requires grad,
// the result is connected to the graph with the given backward function.
Tensor make_result(Shape shape, std::vector<double> data, std::initializer_list<Tensor> inputs,
                   std::function<void(const TensorImpl&)> backward_fn);
}  // namespace detail

}  // namespace adablur

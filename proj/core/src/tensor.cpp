#include "adablur/tensor.hpp"

#include <algorithm>
#include <unordered_set>

#include "adablur/errors.hpp"

namespace adablur {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (int e : shape) {
    if (e < 0) detail::throw_shape("negative extent in shape " + shape_string(shape));
    n *= static_cast<std::size_t>(e);
  }
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::span<double> TensorImpl::grad_buffer() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
  return grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return from_data(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
  if (data.size() != shape_numel(shape))
    detail::throw_shape("data length " + std::to_string(data.size()) + " does not match shape " +
                        shape_string(shape));
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from_data({}, {value}, requires_grad); }

double Tensor::item() const {
  if (numel() != 1) detail::throw_shape("item() needs a single-element tensor, got " + shape_string(shape()));
  return impl_->data[0];
}

void Tensor::zero_grad() {
  if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::clone() const { return from_data(impl_->shape, impl_->data, false); }

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1)
    detail::throw_shape("backward() needs a scalar loss");

  // Iterative post-order DFS gives a topological order (inputs before outputs).
  std::vector<TensorImpl*> order;
  std::unordered_set<TensorImpl*> visited;
  std::vector<std::pair<TensorImpl*, std::size_t>> stack;
  stack.emplace_back(loss.impl().get(), 0);
  visited.insert(loss.impl().get());
  while (!stack.empty()) {
    auto& [t, next] = stack.back();
    if (t->node && next < t->node->inputs.size()) {
      TensorImpl* child = t->node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
      continue;
    }
    order.push_back(t);
    stack.pop_back();
  }

  for (TensorImpl* t : order)
    if (t->node) t->grad.assign(t->data.size(), 0.0);
  loss.impl()->grad_buffer()[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl* t = *it;
    if (t->node && t->node->backward) t->node->backward(*t);
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_mode_enabled() { return g_grad_enabled; }

namespace detail {

Tensor make_result(Shape shape, std::vector<double> data, std::initializer_list<Tensor> inputs,
                   std::function<void(const TensorImpl&)> backward_fn) {
  Tensor out = Tensor::from_data(std::move(shape), std::move(data), false);
  if (!g_grad_enabled) return out;
  bool needs = false;
  for (const Tensor& in : inputs) needs = needs || in.requires_grad();
  if (!needs) return out;
  auto node = std::make_shared<GraphNode>();
  for (const Tensor& in : inputs) node->inputs.push_back(in.impl());
  node->backward = std::move(backward_fn);
  out.impl()->node = std::move(node);
  out.impl()->requires_grad = true;
  return out;
}

}  // namespace detail

}  // namespace adablur

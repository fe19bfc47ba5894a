#include "adablur/adam.hpp"

#include <cmath>

#include "adablur/errors.hpp"

namespace adablur {

void AdamOptions::validate() const {
  if (!(lr > 0.0)) detail::throw_invalid("Adam learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    detail::throw_invalid("Adam betas must lie in [0, 1)");
  if (!(eps > 0.0)) detail::throw_invalid("Adam epsilon must be positive");
}

void Adam::set_lr(double lr) {
  AdamOptions next = options_;
  next.lr = lr;
  next.validate();
  options_ = next;
}

Adam::Adam(std::vector<Tensor> params, AdamOptions options) : params_(std::move(params)), options_(options) {
  options_.validate();
  for (const Tensor& p : params_) {
    if (!p.defined()) detail::throw_invalid("Adam: undefined parameter");
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void Adam::step() {
  for (const Tensor& p : params_)
    if (!p.has_grad()) detail::throw_invalid("Adam: parameter " + shape_string(p.shape()) + " has no gradient");

  ++step_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto data = params_[k].data();
    auto grad = params_[k].grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double g = grad[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      data[i] -= options_.lr * m_hat / (std::sqrt(v_hat) + options_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

}  // namespace adablur

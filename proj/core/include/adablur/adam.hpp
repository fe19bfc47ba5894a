#pragma once

#include <cstdint>
#include <vector>

#include "adablur/tensor.hpp"

namespace adablur {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

// Bias-corrected Adam over a fixed parameter list. Moment buffers are
// shaped like their parameters.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamOptions options = {});

  // Applies one update in place. Throws InvalidArgument if a parameter has
  // never received a gradient.
  void step();
  void zero_grad();
  // Learning rate for subsequent steps (schedules). Must be positive.
  void set_lr(double lr);

  std::int64_t step_count() const { return step_; }
  const AdamOptions& options() const { return options_; }
  const std::vector<Tensor>& params() const { return params_; }
  const std::vector<double>& first_moment(std::size_t i) const { return m_[i]; }
  const std::vector<double>& second_moment(std::size_t i) const { return v_[i]; }

 private:
  std::vector<Tensor> params_;
  AdamOptions options_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::int64_t step_ = 0;
};

}  // namespace adablur

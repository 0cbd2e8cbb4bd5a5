// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "datn/tensor.hpp"

namespace datn {

enum class OptimizerKind { kSgd, kRmsProp, kAdam };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(const std::string& text);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;    // Adam first moment
  double beta2 = 0.999;  // Adam second moment
  double rho = 0.9;      // RMSProp decay
  double epsilon = 1e-8;
};

/// Gradient-descent optimizer over a fixed parameter list.
///
/// SGD:     p -= lr * g
/// RMSProp: s = rho*s + (1-rho)*g^2;  p -= lr * g / (sqrt(s) + eps)
/// Adam:    m = b1*m + (1-b1)*g;  v = b2*v + (1-b2)*g^2;
///          p -= lr * m_hat / (sqrt(v_hat) + eps), with bias-corrected
///          m_hat = m/(1-b1^t), v_hat = v/(1-b2^t).
class Optimizer {
 public:
  Optimizer(OptimizerConfig config, const ParamList& params);

  /// Applies one update. Every parameter must carry a gradient.
  void step(ParamList& params);

  const OptimizerConfig& config() const { return config_; }
  std::uint64_t step_count() const { return step_count_; }

  // Accumulators, one per parameter in list order. Adam uses both; RMSProp
  // only `second`; SGD neither.
  const std::vector<std::vector<double>>& first_moments() const { return first_; }
  const std::vector<std::vector<double>>& second_moments() const { return second_; }

  /// Restores accumulator contents and the step counter (checkpoint resume).
  void restore(std::uint64_t step_count, std::vector<std::vector<double>> first,
               std::vector<std::vector<double>> second);

 private:
  OptimizerConfig config_;
  std::uint64_t step_count_ = 0;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
};

}  // namespace datn

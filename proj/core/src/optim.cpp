// SPDX-License-Identifier: Apache-2.0
#include "datn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace datn {

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kRmsProp: return "rmsprop";
    case OptimizerKind::kAdam: return "adam";
  }
  return "?";
}

OptimizerKind parse_optimizer_kind(const std::string& text) {
  if (text == "sgd") return OptimizerKind::kSgd;
  if (text == "rmsprop") return OptimizerKind::kRmsProp;
  if (text == "adam") return OptimizerKind::kAdam;
  throw std::invalid_argument("unknown optimizer '" + text + "' (expected sgd, rmsprop, adam)");
}

Optimizer::Optimizer(OptimizerConfig config, const ParamList& params) : config_(config) {
  for (const auto& p : params) {
    const auto n = p.tensor.numel();
    first_.emplace_back(config_.kind == OptimizerKind::kAdam ? n : 0, 0.0);
    second_.emplace_back(config_.kind == OptimizerKind::kSgd ? 0 : n, 0.0);
  }
}

void Optimizer::restore(std::uint64_t step_count, std::vector<std::vector<double>> first,
                        std::vector<std::vector<double>> second) {
  if (first.size() != first_.size() || second.size() != second_.size()) {
    throw std::invalid_argument("optimizer restore: parameter count mismatch");
  }
  for (std::size_t i = 0; i < first.size(); ++i) {
    if (first[i].size() != first_[i].size() || second[i].size() != second_[i].size()) {
      throw std::invalid_argument("optimizer restore: accumulator shape mismatch at index " +
                                  std::to_string(i));
    }
  }
  step_count_ = step_count;
  first_ = std::move(first);
  second_ = std::move(second);
}

void Optimizer::step(ParamList& params) {
  if (params.size() != first_.size()) {
    throw std::invalid_argument("optimizer: parameter list changed size");
  }
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) {
      throw std::invalid_argument("optimizer: missing gradient for parameter '" + p.name + "'");
    }
  }
  ++step_count_;
  const double lr = config_.learning_rate;
  const double eps = config_.epsilon;
  const double t = static_cast<double>(step_count_);
  const double bias1 = 1.0 - std::pow(config_.beta1, t);
  const double bias2 = 1.0 - std::pow(config_.beta2, t);

  for (std::size_t k = 0; k < params.size(); ++k) {
    auto value = params[k].tensor.mutable_data();
    const auto grad = params[k].tensor.grad();
    switch (config_.kind) {
      case OptimizerKind::kSgd:
        for (std::size_t i = 0; i < value.size(); ++i) value[i] -= lr * grad[i];
        break;
      case OptimizerKind::kRmsProp: {
        auto& s = second_[k];
        for (std::size_t i = 0; i < value.size(); ++i) {
          s[i] = config_.rho * s[i] + (1.0 - config_.rho) * grad[i] * grad[i];
          value[i] -= lr * grad[i] / (std::sqrt(s[i]) + eps);
        }
        break;
      }
      case OptimizerKind::kAdam: {
        auto& m = first_[k];
        auto& v = second_[k];
        for (std::size_t i = 0; i < value.size(); ++i) {
          m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * grad[i];
          v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * grad[i] * grad[i];
          const double mhat = m[i] / bias1;
          const double vhat = v[i] / bias2;
          value[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
        break;
      }
    }
  }
}

}  // namespace datn

// SPDX-License-Identifier: Apache-2.0
#include "datn/tensor.hpp"

#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace datn {

namespace {
thread_local bool t_grad_enabled = true;
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  for (auto d : shape) {
    if (d == 0) throw std::invalid_argument("tensor: zero-sized dimension in " + shape_str(shape));
  }
  if (shape_numel(shape) != values.size()) {
    throw std::invalid_argument("tensor: shape " + shape_str(shape) + " needs " +
                                std::to_string(shape_numel(shape)) + " values, got " +
                                std::to_string(values.size()));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const auto n = shape_numel(shape);
  return from(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  Shape s{values.size()};
  return from(std::move(s), std::move(values), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from(Shape{1}, std::vector<double>{value}, requires_grad);
}

const Shape& Tensor::shape() const {
  if (!node_) throw std::logic_error("tensor: use of undefined tensor");
  return node_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) throw std::out_of_range("tensor: axis out of range");
  return s[axis];
}

std::size_t Tensor::numel() const { return node_ ? node_->value.size() : 0; }

std::span<const double> Tensor::data() const {
  shape();
  return node_->value;
}

std::span<double> Tensor::mutable_data() {
  shape();
  return node_->value;
}

double Tensor::item() const {
  if (numel() != 1) {
    throw std::invalid_argument("tensor: item() on non-scalar " + shape_str(shape()));
  }
  return node_->value[0];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  const auto& s = shape();
  if (s.size() != 2) throw std::invalid_argument("tensor: at(r,c) needs a matrix");
  return node_->value[row * s[1] + col];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
void Tensor::set_requires_grad(bool flag) {
  shape();
  node_->requires_grad = flag;
}

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  shape();
  return node_->grad;
}

std::span<double> Tensor::mutable_grad() {
  shape();
  return node_->ensure_grad();
}

void Tensor::zero_grad() {
  if (node_) node_->grad.clear();
}

Tensor Tensor::detach() const { return from(shape(), node_->value, false); }

Tensor Tensor::clone() const { return from(shape(), node_->value, node_->requires_grad); }

Tensor Tensor::make_result(Shape shape, std::vector<double> values,
                           std::vector<Tensor> inputs,
                           std::function<void(detail::Node&)> backward_fn) {
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  if (t_grad_enabled) {
    bool any = false;
    for (const auto& in : inputs) any = any || in.requires_grad();
    if (any) {
      node->requires_grad = true;
      node->parents.reserve(inputs.size());
      for (auto& in : inputs) node->parents.push_back(in.node_);
      node->backward_fn = std::move(backward_fn);
    }
  }
  return Tensor(std::move(node));
}

void Tensor::backward() const {
  if (numel() != 1) {
    throw std::invalid_argument("backward: root must be scalar, got " + shape_str(shape()));
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS yields a topological order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      detail::Node* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

void zero_grads(ParamList& params) {
  for (auto& p : params) p.tensor.zero_grad();
}

}  // namespace datn

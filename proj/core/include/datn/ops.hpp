// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "datn/tensor.hpp"

// Differentiable tensor operations. Matrices are rank-2 row-major, vectors
// rank-1. Shape violations throw std::invalid_argument naming the shapes.
namespace datn::ops {

// Linear algebra
Tensor matmul(const Tensor& a, const Tensor& b);  // [m,k]x[k,n] or [m,k]x[k]
Tensor linear(const Tensor& w, const Tensor& x, const Tensor& b);  // w x + b
Tensor transpose(const Tensor& m);

// Elementwise
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor affine(const Tensor& x, double scale, double shift);  // scale*x + shift
Tensor scale_by(const Tensor& x, const Tensor& s);  // s has one element
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);

// The column broadcast: adds vector v[d] to every column of m[d,n].
Tensor add_columns(const Tensor& m, const Tensor& v);

// Shape manipulation
Tensor reshape(const Tensor& x, Shape shape);
Tensor concat(const std::vector<Tensor>& parts);  // rank-1 parts
Tensor slice(const Tensor& v, std::size_t begin, std::size_t length);
Tensor row(const Tensor& m, std::size_t index);
Tensor column(const Tensor& m, std::size_t index);
Tensor stack_columns(const std::vector<Tensor>& columns);

// Reductions over a matrix axis (0 = down the rows, 1 = along each row).
Tensor max_axis(const Tensor& m, std::size_t axis);
Tensor sum_axis(const Tensor& m, std::size_t axis);
Tensor mean_axis(const Tensor& m, std::size_t axis);
Tensor sum(const Tensor& x);

// Softmax of a vector, or of each row (axis 1) / column (axis 0) of a matrix.
Tensor softmax(const Tensor& x);
Tensor softmax_axis(const Tensor& m, std::size_t axis);

// Losses. Both sum over elements; callers normalise.
// -log softmax(logits)[target], computed with log-sum-exp.
Tensor cross_entropy(const Tensor& logits, std::size_t target);
// -log p[target] for a probability vector.
Tensor nll(const Tensor& probs, std::size_t target);
// -sum y log p + (1-y) log(1-p); p must lie strictly inside (0,1).
Tensor binary_cross_entropy(const Tensor& probs, const Tensor& targets);
// Same quantity evaluated from logits p = sigmoid(z), numerically stable.
Tensor binary_cross_entropy_logits(const Tensor& logits, const Tensor& targets);

// Convolution over [channels, height, width] inputs with weights
// [out, in, k, k], bias [out], stride 1, zero padding `pad`.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t pad);
// Non-overlapping 2x2 average pooling of [channels, height, width].
Tensor avg_pool2(const Tensor& x);

}  // namespace datn::ops

// SPDX-License-Identifier: Apache-2.0
#include "datn/gru.hpp"

#include <stdexcept>

#include "datn/ops.hpp"

namespace datn {

GruParams GruParams::init(std::size_t input, std::size_t hidden, Rng& rng) {
  GruParams p;
  p.input = input;
  p.hidden = hidden;
  p.w_z = glorot(hidden, input, rng);
  p.u_z = glorot(hidden, hidden, rng);
  p.b_z = zero_param({hidden});
  p.w_r = glorot(hidden, input, rng);
  p.u_r = glorot(hidden, hidden, rng);
  p.b_r = zero_param({hidden});
  p.w_h = glorot(hidden, input, rng);
  p.u_h = glorot(hidden, hidden, rng);
  p.b_h = zero_param({hidden});
  return p;
}

GruParams GruParams::zeros(std::size_t input, std::size_t hidden) {
  GruParams p;
  p.input = input;
  p.hidden = hidden;
  for (Tensor* w : {&p.w_z, &p.w_r, &p.w_h}) *w = zero_param({hidden, input});
  for (Tensor* u : {&p.u_z, &p.u_r, &p.u_h}) *u = zero_param({hidden, hidden});
  for (Tensor* b : {&p.b_z, &p.b_r, &p.b_h}) *b = zero_param({hidden});
  return p;
}

ParamList GruParams::params(const std::string& prefix) const {
  return {{prefix + "w_z", w_z}, {prefix + "u_z", u_z}, {prefix + "b_z", b_z},
          {prefix + "w_r", w_r}, {prefix + "u_r", u_r}, {prefix + "b_r", b_r},
          {prefix + "w_h", w_h}, {prefix + "u_h", u_h}, {prefix + "b_h", b_h}};
}

Tensor gru_cell(const Tensor& x, const Tensor& h_prev, const GruParams& p) {
  if (x.rank() != 1 || x.dim(0) != p.input) {
    throw std::invalid_argument("gru_cell: input " + shape_str(x.shape()) + " vs expected [" +
                                std::to_string(p.input) + "]");
  }
  if (h_prev.rank() != 1 || h_prev.dim(0) != p.hidden) {
    throw std::invalid_argument("gru_cell: hidden " + shape_str(h_prev.shape()) +
                                " vs expected [" + std::to_string(p.hidden) + "]");
  }
  using namespace ops;
  auto z = sigmoid(add(linear(p.w_z, x, p.b_z), matmul(p.u_z, h_prev)));
  auto r = sigmoid(add(linear(p.w_r, x, p.b_r), matmul(p.u_r, h_prev)));
  auto cand = tanh(add(linear(p.w_h, x, p.b_h), matmul(p.u_h, mul(r, h_prev))));
  // (1-z)*h + z*h~  ==  h + z*(h~ - h)
  return add(h_prev, mul(z, sub(cand, h_prev)));
}

}  // namespace datn

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>

#include "datn/rng.hpp"
#include "datn/tensor.hpp"

namespace datn {

/// Gated recurrent unit weights (update z, reset r, candidate h~).
struct GruParams {
  std::size_t input = 0;
  std::size_t hidden = 0;
  Tensor w_z, u_z, b_z;
  Tensor w_r, u_r, b_r;
  Tensor w_h, u_h, b_h;

  static GruParams init(std::size_t input, std::size_t hidden, Rng& rng);
  static GruParams zeros(std::size_t input, std::size_t hidden);
  ParamList params(const std::string& prefix) const;
};

/// z = s(W_z x + U_z h + b_z), r = s(W_r x + U_r h + b_r),
/// h~ = tanh(W_h x + U_h (r*h) + b_h), h' = (1-z)*h + z*h~.
Tensor gru_cell(const Tensor& x, const Tensor& h_prev, const GruParams& p);

}  // namespace datn

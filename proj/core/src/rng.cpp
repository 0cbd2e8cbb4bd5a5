// SPDX-License-Identifier: Apache-2.0
#include "datn/rng.hpp"

#include <cmath>

namespace datn {

std::uint64_t Rng::below(std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  // splitmix64 finaliser over the combined words
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

Tensor glorot(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(-a, a);
  return Tensor::from(std::move(shape), std::move(v), true);
}

Tensor glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  return glorot(Shape{rows, cols}, cols, rows, rng);
}

Tensor zero_param(Shape shape) { return Tensor::zeros(std::move(shape), true); }

}  // namespace datn

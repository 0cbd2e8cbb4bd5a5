// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "datn/tensor.hpp"

namespace datn {

/// Seeded generator with platform-independent output.
///
/// std::mt19937_64 itself is fully specified by the standard; the
/// distribution adaptors are not, so conversions are done by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n), unbiased.
  std::uint64_t below(std::uint64_t n);

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Mixes a base seed with a stream tag into an independent seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);

/// Glorot-uniform matrix or filter bank: U[-a, a], a = sqrt(6/(fan_in+fan_out)).
Tensor glorot(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);
Tensor glorot(std::size_t rows, std::size_t cols, Rng& rng);
Tensor zero_param(Shape shape);

}  // namespace datn

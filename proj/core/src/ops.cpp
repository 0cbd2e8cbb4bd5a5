// SPDX-License-Identifier: Apache-2.0
#include "datn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace datn::ops {

namespace {

using detail::Node;

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " + shape_str(a) +
                              " and " + shape_str(b));
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const std::string& why) {
  throw std::invalid_argument(std::string(op) + ": " + why + ", got " + shape_str(a));
}

void require_rank(const char* op, const Tensor& t, std::size_t rank) {
  if (t.rank() != rank) {
    shape_error(op, t.shape(), "expected rank " + std::to_string(rank));
  }
}

// Gradient buffer of parent `i` if it wants one, else nullptr.
double* parent_grad(Node& self, std::size_t i) {
  Node* p = self.parents[i].get();
  return p->requires_grad ? p->ensure_grad().data() : nullptr;
}

const double* parent_value(Node& self, std::size_t i) { return self.parents[i]->value.data(); }

template <class F, class D>
Tensor unary(const Tensor& x, F forward, D derivative) {
  const auto in = x.data();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = forward(in[i]);
  return Tensor::make_result(x.shape(), std::move(out), {x}, [derivative](Node& self) {
    double* gx = parent_grad(self, 0);
    if (!gx) return;
    const double* xv = parent_value(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      gx[i] += self.grad[i] * derivative(xv[i], self.value[i]);
    }
  });
}

double stable_sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void softmax_inplace(double* v, std::size_t n, std::size_t stride) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, v[i * stride]);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    v[i * stride] = std::exp(v[i * stride] - m);
    s += v[i * stride];
  }
  for (std::size_t i = 0; i < n; ++i) v[i * stride] /= s;
}

void softmax_backward(const double* y, const double* dy, double* dx, std::size_t n,
                      std::size_t stride) {
  double dot = 0.0;
  for (std::size_t i = 0; i < n; ++i) dot += y[i * stride] * dy[i * stride];
  for (std::size_t i = 0; i < n; ++i) dx[i * stride] += y[i * stride] * (dy[i * stride] - dot);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank("matmul", a, 2);
  const std::size_t m = a.dim(0), k = a.dim(1);
  if (b.rank() == 1) {
    if (b.dim(0) != k) shape_error("matmul", a.shape(), b.shape());
    const auto av = a.data();
    const auto bv = b.data();
    std::vector<double> out(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double* arow = av.data() + i * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * bv[p];
      out[i] = s;
    }
    return Tensor::make_result({m}, std::move(out), {a, b}, [m, k](Node& self) {
      const double* dy = self.grad.data();
      if (double* ga = parent_grad(self, 0)) {
        const double* x = parent_value(self, 1);
        for (std::size_t i = 0; i < m; ++i) {
          double* grow = ga + i * k;
          const double g = dy[i];
          for (std::size_t p = 0; p < k; ++p) grow[p] += g * x[p];
        }
      }
      if (double* gb = parent_grad(self, 1)) {
        const double* av = parent_value(self, 0);
        for (std::size_t i = 0; i < m; ++i) {
          const double* arow = av + i * k;
          const double g = dy[i];
          for (std::size_t p = 0; p < k; ++p) gb[p] += arow[p] * g;
        }
      }
    });
  }
  require_rank("matmul", b, 2);
  if (b.dim(0) != k) shape_error("matmul", a.shape(), b.shape());
  const std::size_t n = b.dim(1);
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      const double* brow = bv.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return Tensor::make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    const double* dc = self.grad.data();
    if (double* ga = parent_grad(self, 0)) {
      const double* bv = parent_value(self, 1);
      for (std::size_t i = 0; i < m; ++i) {
        const double* dcrow = dc + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = bv + p * n;
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += dcrow[j] * brow[j];
          ga[i * k + p] += s;
        }
      }
    }
    if (double* gb = parent_grad(self, 1)) {
      const double* av = parent_value(self, 0);
      for (std::size_t i = 0; i < m; ++i) {
        const double* dcrow = dc + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = av[i * k + p];
          double* gbrow = gb + p * n;
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += aip * dcrow[j];
        }
      }
    }
  });
}

Tensor linear(const Tensor& w, const Tensor& x, const Tensor& b) {
  require_rank("linear", w, 2);
  require_rank("linear", x, 1);
  require_rank("linear", b, 1);
  const std::size_t m = w.dim(0), k = w.dim(1);
  if (x.dim(0) != k) shape_error("linear", w.shape(), x.shape());
  if (b.dim(0) != m) shape_error("linear", w.shape(), b.shape());
  const auto wv = w.data();
  const auto xv = x.data();
  const auto bv = b.data();
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double* wrow = wv.data() + i * k;
    double s = bv[i];
    for (std::size_t p = 0; p < k; ++p) s += wrow[p] * xv[p];
    out[i] = s;
  }
  return Tensor::make_result({m}, std::move(out), {w, x, b}, [m, k](Node& self) {
    const double* dy = self.grad.data();
    if (double* gw = parent_grad(self, 0)) {
      const double* xv = parent_value(self, 1);
      for (std::size_t i = 0; i < m; ++i) {
        double* grow = gw + i * k;
        const double g = dy[i];
        for (std::size_t p = 0; p < k; ++p) grow[p] += g * xv[p];
      }
    }
    if (double* gx = parent_grad(self, 1)) {
      const double* wv = parent_value(self, 0);
      for (std::size_t i = 0; i < m; ++i) {
        const double* wrow = wv + i * k;
        const double g = dy[i];
        for (std::size_t p = 0; p < k; ++p) gx[p] += wrow[p] * g;
      }
    }
    if (double* gb = parent_grad(self, 2)) {
      for (std::size_t i = 0; i < m; ++i) gb[i] += dy[i];
    }
  });
}

Tensor transpose(const Tensor& m) {
  require_rank("transpose", m, 2);
  const std::size_t r = m.dim(0), c = m.dim(1);
  const auto v = m.data();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = v[i * c + j];
  return Tensor::make_result({c, r}, std::move(out), {m}, [r, c](Node& self) {
    double* g = parent_grad(self, 0);
    if (!g) return;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[j * r + i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("add", a.shape(), b.shape());
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (double* g = parent_grad(self, p))
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("sub", a.shape(), b.shape());
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    if (double* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    if (double* g = parent_grad(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape());
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    const double* av = parent_value(self, 0);
    const double* bv = parent_value(self, 1);
    if (double* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * bv[i];
    if (double* g = parent_grad(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * av[i];
  });
}

Tensor affine(const Tensor& x, double scale, double shift) {
  return unary(
      x, [scale, shift](double v) { return scale * v + shift; },
      [scale](double, double) { return scale; });
}

Tensor scale_by(const Tensor& x, const Tensor& s) {
  if (s.numel() != 1) shape_error("scale_by", s.shape(), "scale must have one element");
  const double sv = s.item();
  const auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sv * xv[i];
  return Tensor::make_result(x.shape(), std::move(out), {x, s}, [](Node& self) {
    const double* xv = parent_value(self, 0);
    const double sv = *parent_value(self, 1);
    if (double* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += sv * self.grad[i];
    if (double* g = parent_grad(self, 1)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < self.grad.size(); ++i) acc += xv[i] * self.grad[i];
      g[0] += acc;
    }
  });
}

Tensor tanh(const Tensor& x) {
  return unary(
      x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(x, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& x) {
  return unary(
      x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  for (double v : x.data()) {
    if (!(v > 0.0)) throw std::invalid_argument("log: argument must be positive");
  }
  return unary(
      x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor add_columns(const Tensor& m, const Tensor& v) {
  require_rank("add_columns", m, 2);
  require_rank("add_columns", v, 1);
  const std::size_t r = m.dim(0), c = m.dim(1);
  if (v.dim(0) != r) shape_error("add_columns", m.shape(), v.shape());
  const auto mv = m.data();
  const auto vv = v.data();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = mv[i * c + j] + vv[i];
  return Tensor::make_result({r, c}, std::move(out), {m, v}, [r, c](Node& self) {
    if (double* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < r * c; ++i) g[i] += self.grad[i];
    if (double* g = parent_grad(self, 1)) {
      for (std::size_t i = 0; i < r; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += self.grad[i * c + j];
        g[i] += s;
      }
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) shape_error("reshape", x.shape(), shape);
  const auto xv = x.data();
  return Tensor::make_result(std::move(shape), std::vector<double>(xv.begin(), xv.end()), {x},
                             [](Node& self) {
                               if (double* g = parent_grad(self, 0))
                                 for (std::size_t i = 0; i < self.grad.size(); ++i)
                                   g[i] += self.grad[i];
                             });
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no parts");
  std::vector<double> out;
  std::vector<std::size_t> sizes;
  for (const auto& p : parts) {
    require_rank("concat", p, 1);
    const auto v = p.data();
    out.insert(out.end(), v.begin(), v.end());
    sizes.push_back(v.size());
  }
  const std::size_t n = out.size();
  return Tensor::make_result({n}, std::move(out), parts, [sizes](Node& self) {
    std::size_t off = 0;
    for (std::size_t p = 0; p < sizes.size(); ++p) {
      if (double* g = parent_grad(self, p))
        for (std::size_t i = 0; i < sizes[p]; ++i) g[i] += self.grad[off + i];
      off += sizes[p];
    }
  });
}

Tensor slice(const Tensor& v, std::size_t begin, std::size_t length) {
  require_rank("slice", v, 1);
  if (length == 0 || begin + length > v.dim(0)) {
    shape_error("slice", v.shape(), "range [" + std::to_string(begin) + "," +
                                        std::to_string(begin + length) + ") out of bounds");
  }
  const auto d = v.data();
  return Tensor::make_result({length},
                             std::vector<double>(d.begin() + begin, d.begin() + begin + length),
                             {v}, [begin, length](Node& self) {
                               if (double* g = parent_grad(self, 0))
                                 for (std::size_t i = 0; i < length; ++i)
                                   g[begin + i] += self.grad[i];
                             });
}

Tensor row(const Tensor& m, std::size_t index) {
  require_rank("row", m, 2);
  const std::size_t r = m.dim(0), c = m.dim(1);
  if (index >= r) {
    throw std::invalid_argument("row: index " + std::to_string(index) + " out of range for " +
                                shape_str(m.shape()));
  }
  const auto d = m.data();
  return Tensor::make_result({c}, std::vector<double>(d.begin() + index * c, d.begin() + (index + 1) * c),
                             {m}, [index, c](Node& self) {
                               if (double* g = parent_grad(self, 0))
                                 for (std::size_t j = 0; j < c; ++j)
                                   g[index * c + j] += self.grad[j];
                             });
}

Tensor column(const Tensor& m, std::size_t index) {
  require_rank("column", m, 2);
  const std::size_t r = m.dim(0), c = m.dim(1);
  if (index >= c) {
    throw std::invalid_argument("column: index " + std::to_string(index) + " out of range for " +
                                shape_str(m.shape()));
  }
  const auto d = m.data();
  std::vector<double> out(r);
  for (std::size_t i = 0; i < r; ++i) out[i] = d[i * c + index];
  return Tensor::make_result({r}, std::move(out), {m}, [index, r, c](Node& self) {
    if (double* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < r; ++i) g[i * c + index] += self.grad[i];
  });
}

Tensor stack_columns(const std::vector<Tensor>& columns) {
  if (columns.empty()) throw std::invalid_argument("stack_columns: no columns");
  require_rank("stack_columns", columns[0], 1);
  const std::size_t r = columns[0].dim(0), c = columns.size();
  std::vector<double> out(r * c);
  for (std::size_t j = 0; j < c; ++j) {
    if (columns[j].shape() != columns[0].shape())
      shape_error("stack_columns", columns[0].shape(), columns[j].shape());
    const auto v = columns[j].data();
    for (std::size_t i = 0; i < r; ++i) out[i * c + j] = v[i];
  }
  return Tensor::make_result({r, c}, std::move(out), columns, [r, c](Node& self) {
    for (std::size_t j = 0; j < c; ++j) {
      if (double* g = parent_grad(self, j))
        for (std::size_t i = 0; i < r; ++i) g[i] += self.grad[i * c + j];
    }
  });
}

Tensor max_axis(const Tensor& m, std::size_t axis) {
  require_rank("max_axis", m, 2);
  if (axis > 1) throw std::invalid_argument("max_axis: axis must be 0 or 1");
  const std::size_t r = m.dim(0), c = m.dim(1);
  const auto d = m.data();
  const std::size_t outer = axis == 1 ? r : c;
  const std::size_t inner = axis == 1 ? c : r;
  std::vector<double> out(outer);
  std::vector<std::size_t> arg(outer);
  for (std::size_t o = 0; o < outer; ++o) {
    std::size_t best = axis == 1 ? o * c : o;
    for (std::size_t t = 1; t < inner; ++t) {
      const std::size_t idx = axis == 1 ? o * c + t : t * c + o;
      if (d[idx] > d[best]) best = idx;
    }
    arg[o] = best;
    out[o] = d[best];
  }
  return Tensor::make_result({outer}, std::move(out), {m}, [arg](Node& self) {
    if (double* g = parent_grad(self, 0))
      for (std::size_t o = 0; o < arg.size(); ++o) g[arg[o]] += self.grad[o];
  });
}

Tensor sum_axis(const Tensor& m, std::size_t axis) {
  require_rank("sum_axis", m, 2);
  if (axis > 1) throw std::invalid_argument("sum_axis: axis must be 0 or 1");
  const std::size_t r = m.dim(0), c = m.dim(1);
  const auto d = m.data();
  std::vector<double> out(axis == 1 ? r : c, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[axis == 1 ? i : j] += d[i * c + j];
  const std::size_t n = out.size();
  return Tensor::make_result({n}, std::move(out), {m}, [r, c, axis](Node& self) {
    if (double* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[axis == 1 ? i : j];
  });
}

Tensor mean_axis(const Tensor& m, std::size_t axis) {
  require_rank("mean_axis", m, 2);
  if (axis > 1) throw std::invalid_argument("mean_axis: axis must be 0 or 1");
  const double count = static_cast<double>(m.dim(axis));
  return affine(sum_axis(m, axis), 1.0 / count, 0.0);
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return Tensor::make_result({1}, {s}, {x}, [](Node& self) {
    if (double* g = parent_grad(self, 0)) {
      const double dy = self.grad[0];
      const std::size_t n = self.parents[0]->value.size();
      for (std::size_t i = 0; i < n; ++i) g[i] += dy;
    }
  });
}

Tensor softmax(const Tensor& x) {
  require_rank("softmax", x, 1);
  const auto xv = x.data();
  std::vector<double> out(xv.begin(), xv.end());
  softmax_inplace(out.data(), out.size(), 1);
  return Tensor::make_result(x.shape(), std::move(out), {x}, [](Node& self) {
    if (double* g = parent_grad(self, 0))
      softmax_backward(self.value.data(), self.grad.data(), g, self.value.size(), 1);
  });
}

Tensor softmax_axis(const Tensor& m, std::size_t axis) {
  require_rank("softmax_axis", m, 2);
  if (axis > 1) throw std::invalid_argument("softmax_axis: axis must be 0 or 1");
  const std::size_t r = m.dim(0), c = m.dim(1);
  const auto mv = m.data();
  std::vector<double> out(mv.begin(), mv.end());
  if (axis == 1) {
    for (std::size_t i = 0; i < r; ++i) softmax_inplace(out.data() + i * c, c, 1);
  } else {
    for (std::size_t j = 0; j < c; ++j) softmax_inplace(out.data() + j, r, c);
  }
  return Tensor::make_result(m.shape(), std::move(out), {m}, [r, c, axis](Node& self) {
    double* g = parent_grad(self, 0);
    if (!g) return;
    if (axis == 1) {
      for (std::size_t i = 0; i < r; ++i)
        softmax_backward(self.value.data() + i * c, self.grad.data() + i * c, g + i * c, c, 1);
    } else {
      for (std::size_t j = 0; j < c; ++j)
        softmax_backward(self.value.data() + j, self.grad.data() + j, g + j, r, c);
    }
  });
}

Tensor cross_entropy(const Tensor& logits, std::size_t target) {
  require_rank("cross_entropy", logits, 1);
  const auto z = logits.data();
  if (target >= z.size()) {
    throw std::invalid_argument("cross_entropy: target " + std::to_string(target) +
                                " out of range for " + shape_str(logits.shape()));
  }
  std::vector<double> p(z.begin(), z.end());
  const double m = *std::max_element(p.begin(), p.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  const double loss = m + std::log(s) - z[target];
  softmax_inplace(p.data(), p.size(), 1);
  return Tensor::make_result({1}, {loss}, {logits}, [p = std::move(p), target](Node& self) {
    if (double* g = parent_grad(self, 0)) {
      const double dy = self.grad[0];
      for (std::size_t i = 0; i < p.size(); ++i) g[i] += dy * (p[i] - (i == target ? 1.0 : 0.0));
    }
  });
}

Tensor nll(const Tensor& probs, std::size_t target) {
  require_rank("nll", probs, 1);
  if (target >= probs.dim(0)) {
    throw std::invalid_argument("nll: target " + std::to_string(target) + " out of range for " +
                                shape_str(probs.shape()));
  }
  const double pt = probs.data()[target];
  if (!(pt > 0.0)) throw std::invalid_argument("nll: probability of target is not positive");
  return Tensor::make_result({1}, {-std::log(pt)}, {probs}, [target](Node& self) {
    if (double* g = parent_grad(self, 0)) g[target] -= self.grad[0] / parent_value(self, 0)[target];
  });
}

Tensor binary_cross_entropy(const Tensor& probs, const Tensor& targets) {
  if (probs.shape() != targets.shape())
    shape_error("binary_cross_entropy", probs.shape(), targets.shape());
  const auto p = probs.data();
  const auto y = targets.data();
  double loss = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0 && p[i] < 1.0)) {
      throw std::invalid_argument("binary_cross_entropy: probability " + std::to_string(p[i]) +
                                  " at index " + std::to_string(i) + " outside (0,1)");
    }
    loss -= y[i] * std::log(p[i]) + (1.0 - y[i]) * std::log(1.0 - p[i]);
  }
  return Tensor::make_result({1}, {loss}, {probs, targets}, [](Node& self) {
    const double* p = parent_value(self, 0);
    const double* y = parent_value(self, 1);
    const double dy = self.grad[0];
    const std::size_t n = self.parents[0]->value.size();
    if (double* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < n; ++i) g[i] += dy * (-y[i] / p[i] + (1.0 - y[i]) / (1.0 - p[i]));
    if (double* g = parent_grad(self, 1))
      for (std::size_t i = 0; i < n; ++i) g[i] += dy * (std::log(1.0 - p[i]) - std::log(p[i]));
  });
}

Tensor binary_cross_entropy_logits(const Tensor& logits, const Tensor& targets) {
  if (logits.shape() != targets.shape())
    shape_error("binary_cross_entropy_logits", logits.shape(), targets.shape());
  const auto z = logits.data();
  const auto y = targets.data();
  double loss = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    loss += std::max(z[i], 0.0) - z[i] * y[i] + std::log1p(std::exp(-std::abs(z[i])));
  }
  return Tensor::make_result({1}, {loss}, {logits, targets}, [](Node& self) {
    const double* z = parent_value(self, 0);
    const double* y = parent_value(self, 1);
    const double dy = self.grad[0];
    const std::size_t n = self.parents[0]->value.size();
    if (double* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < n; ++i) g[i] += dy * (stable_sigmoid(z[i]) - y[i]);
    if (double* g = parent_grad(self, 1))
      for (std::size_t i = 0; i < n; ++i) g[i] -= dy * z[i];
  });
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t pad) {
  require_rank("conv2d", x, 3);
  require_rank("conv2d", w, 4);
  require_rank("conv2d", b, 1);
  const std::size_t cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const std::size_t cout = w.dim(0), k = w.dim(2);
  if (w.dim(1) != cin || w.dim(3) != k) shape_error("conv2d", x.shape(), w.shape());
  if (b.dim(0) != cout) shape_error("conv2d", w.shape(), b.shape());
  if (h + 2 * pad < k || wd + 2 * pad < k) shape_error("conv2d", x.shape(), w.shape());
  const std::size_t oh = h + 2 * pad - k + 1, ow = wd + 2 * pad - k + 1;
  const auto xv = x.data();
  const auto wv = w.data();
  const auto bv = b.data();

  // Visits every (output, input, weight) index triple that lands inside the
  // unpadded input.
  auto for_each_tap = [=](auto&& fn) {
    for (std::size_t co = 0; co < cout; ++co)
      for (std::size_t ci = 0; ci < cin; ++ci)
        for (std::size_t ky = 0; ky < k; ++ky)
          for (std::size_t kx = 0; kx < k; ++kx) {
            const std::size_t widx = ((co * cin + ci) * k + ky) * k + kx;
            for (std::size_t oy = 0; oy < oh; ++oy) {
              const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + ky) -
                                        static_cast<std::ptrdiff_t>(pad);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
              const std::size_t obase = (co * oh + oy) * ow;
              const std::size_t ibase = (ci * h + static_cast<std::size_t>(iy)) * wd;
              const std::size_t ox_lo = kx < pad ? pad - kx : 0;
              const std::size_t ox_hi = std::min(ow, wd + pad - kx);
              fn(widx, obase, ibase + kx - pad, ox_lo, ox_hi);
            }
          }
  };

  std::vector<double> out(cout * oh * ow);
  for (std::size_t co = 0; co < cout; ++co)
    std::fill(out.begin() + co * oh * ow, out.begin() + (co + 1) * oh * ow, bv[co]);
  for_each_tap([&](std::size_t widx, std::size_t obase, std::size_t ioff, std::size_t lo,
                   std::size_t hi) {
    const double wval = wv[widx];
    for (std::size_t ox = lo; ox < hi; ++ox) out[obase + ox] += wval * xv[ioff + ox];
  });

  return Tensor::make_result(
      {cout, oh, ow}, std::move(out), {x, w, b}, [for_each_tap, cout, oh, ow](Node& self) {
        const double* dy = self.grad.data();
        const double* xv = parent_value(self, 0);
        const double* wv = parent_value(self, 1);
        double* gx = parent_grad(self, 0);
        double* gw = parent_grad(self, 1);
        if (gx || gw) {
          for_each_tap([&](std::size_t widx, std::size_t obase, std::size_t ioff, std::size_t lo,
                           std::size_t hi) {
            if (gw) {
              double s = 0.0;
              for (std::size_t ox = lo; ox < hi; ++ox) s += dy[obase + ox] * xv[ioff + ox];
              gw[widx] += s;
            }
            if (gx) {
              const double wval = wv[widx];
              for (std::size_t ox = lo; ox < hi; ++ox) gx[ioff + ox] += wval * dy[obase + ox];
            }
          });
        }
        if (double* gb = parent_grad(self, 2)) {
          for (std::size_t co = 0; co < cout; ++co) {
            double s = 0.0;
            for (std::size_t i = 0; i < oh * ow; ++i) s += dy[co * oh * ow + i];
            gb[co] += s;
          }
        }
      });
}

Tensor avg_pool2(const Tensor& x) {
  require_rank("avg_pool2", x, 3);
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h % 2 || w % 2) shape_error("avg_pool2", x.shape(), "spatial dims must be even");
  const std::size_t oh = h / 2, ow = w / 2;
  const auto xv = x.data();
  std::vector<double> out(c * oh * ow);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xx = 0; xx < ow; ++xx) {
        const std::size_t i0 = (ch * h + 2 * y) * w + 2 * xx;
        out[(ch * oh + y) * ow + xx] = 0.25 * (xv[i0] + xv[i0 + 1] + xv[i0 + w] + xv[i0 + w + 1]);
      }
  return Tensor::make_result({c, oh, ow}, std::move(out), {x}, [c, h, w, oh, ow](Node& self) {
    double* g = parent_grad(self, 0);
    if (!g) return;
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t xx = 0; xx < ow; ++xx) {
          const double d = 0.25 * self.grad[(ch * oh + y) * ow + xx];
          const std::size_t i0 = (ch * h + 2 * y) * w + 2 * xx;
          g[i0] += d;
          g[i0 + 1] += d;
          g[i0 + w] += d;
          g[i0 + w + 1] += d;
        }
  });
}

}  // namespace datn::ops

// Copyright 2026 The segcast Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "segcast/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "segcast/errors.hpp"

namespace segcast::ad {

const Tensor& Var::value() const { return graph->value(id); }

// ---------------------------------------------------------------------------
// Graph

Var Graph::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.op = "constant";
  if (!n.value.all_finite()) throw NumericError(scope_, "non-finite constant of shape " + shape_string(n.value.shape()));
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Var Graph::variable(Tensor value) {
  Var v = constant(std::move(value));
  nodes_[v.id].requires_grad = true;
  nodes_[v.id].op = "variable";
  return v;
}

Var Graph::param(Parameter& p) {
  if (auto it = bound_.find(&p); it != bound_.end()) return Var{this, it->second};
  if (!p.value.all_finite()) throw NumericError(scope_, "parameter '" + p.name + "' holds non-finite values");
  Node n;
  n.value = p.value;
  n.param = &p;
  n.requires_grad = true;
  n.op = "param";
  nodes_.push_back(std::move(n));
  bound_.emplace(&p, nodes_.size() - 1);
  return Var{this, nodes_.size() - 1};
}

Var Graph::record(const char* op, Tensor value, std::vector<std::size_t> parents, Backward backward) {
  if (!value.all_finite()) {
    throw NumericError(scope_, std::string("non-finite value produced by ") + op + " (node " +
                                   std::to_string(nodes_.size()) + ", shape " + shape_string(value.shape()) + ")");
  }
  Node n;
  n.value = std::move(value);
  n.op = op;
  for (auto p : parents) n.requires_grad = n.requires_grad || nodes_[p].requires_grad;
  n.parents = std::move(parents);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Tensor& Graph::grad_acc(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

Tensor Graph::grad(Var v) const {
  const Node& n = nodes_[v.id];
  return n.grad.empty() ? Tensor(n.value.shape(), 0.0) : n.grad;
}

void Graph::backward(Var loss) {
  if (loss.graph != this) throw UsageError("tensor-autodiff", "loss belongs to another graph");
  if (value(loss.id).size() != 1) {
    throw UsageError("tensor-autodiff", "backward needs a scalar output, got shape " +
                                            shape_string(value(loss.id).shape()));
  }
  if (backward_done_) throw UsageError("tensor-autodiff", "backward already ran on this graph");
  backward_done_ = true;
  grad_acc(loss.id)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param != nullptr) {
      auto dst = n.param->grad.data();
      const auto src = n.grad.data();
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  }
}

// ---------------------------------------------------------------------------
// Helpers

namespace {

void same_graph(Var a, Var b) {
  if (a.graph != b.graph) throw UsageError("tensor-autodiff", "operands belong to different graphs");
}

[[noreturn]] void dim_error(Graph& g, const std::string& what) { throw DimensionError(g.scope(), what); }

// For every flat index of `out`, the flat index of `in` under broadcasting.
std::vector<std::size_t> broadcast_map(const Shape& in, const Shape& out) {
  const std::size_t rank = out.size();
  const std::size_t lead = rank - in.size();
  std::vector<std::size_t> stride(rank, 0);
  std::size_t s = 1;
  for (std::size_t ax = in.size(); ax-- > 0;) {
    stride[ax + lead] = (in[ax] == 1 && out[ax + lead] != 1) ? 0 : s;
    s *= in[ax];
  }
  const std::size_t n = shape_size(out);
  std::vector<std::size_t> map(n);
  std::vector<std::size_t> idx(rank, 0);
  std::size_t cur = 0;
  for (std::size_t i = 0; i < n; ++i) {
    map[i] = cur;
    for (std::size_t ax = rank; ax-- > 0;) {
      ++idx[ax];
      cur += stride[ax];
      if (idx[ax] < out[ax]) break;
      cur -= stride[ax] * out[ax];
      idx[ax] = 0;
    }
  }
  return map;
}

// Elementwise binary op. df returns (dy/da, dy/db) given (a, b, y).
template <class F, class DF>
Var binary(const char* op, Var a, Var b, F f, DF df) {
  same_graph(a, b);
  Graph& g = *a.graph;
  const Shape out_shape = broadcast_shape(a.shape(), b.shape());
  const bool a_full = a.shape() == out_shape;
  const bool b_full = b.shape() == out_shape;
  std::vector<std::size_t> ma = a_full ? std::vector<std::size_t>{} : broadcast_map(a.shape(), out_shape);
  std::vector<std::size_t> mb = b_full ? std::vector<std::size_t>{} : broadcast_map(b.shape(), out_shape);
  const auto& av = a.value();
  const auto& bv = b.value();
  Tensor out(out_shape);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = f(av[a_full ? i : ma[i]], bv[b_full ? i : mb[i]]);
  }
  const std::size_t ia = a.id, ib = b.id;
  return g.record(op, std::move(out), {ia, ib},
                  [ia, ib, a_full, b_full, ma = std::move(ma), mb = std::move(mb), df](Graph& g, std::size_t self) {
                    const auto& up = g.upstream(self);
                    const auto& av = g.value(ia);
                    const auto& bv = g.value(ib);
                    const auto& yv = g.value(self);
                    const bool need_a = g.requires_grad(ia);
                    const bool need_b = g.requires_grad(ib);
                    Tensor* ga = need_a ? &g.grad_acc(ia) : nullptr;
                    Tensor* gb = need_b ? &g.grad_acc(ib) : nullptr;
                    for (std::size_t i = 0; i < up.size(); ++i) {
                      const std::size_t xa = a_full ? i : ma[i];
                      const std::size_t xb = b_full ? i : mb[i];
                      const auto [da, db] = df(av[xa], bv[xb], yv[i]);
                      if (ga) (*ga)[xa] += up[i] * da;
                      if (gb) (*gb)[xb] += up[i] * db;
                    }
                  });
}

// Elementwise unary op. df returns dy/dx given (x, y).
template <class F, class DF>
Var unary(const char* op, Var a, F f, DF df) {
  Graph& g = *a.graph;
  const auto& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i]);
  const std::size_t ia = a.id;
  return g.record(op, std::move(out), {ia}, [ia, df](Graph& g, std::size_t self) {
    const auto& up = g.upstream(self);
    const auto& xv = g.value(ia);
    const auto& yv = g.value(self);
    auto& ga = g.grad_acc(ia);
    for (std::size_t i = 0; i < up.size(); ++i) ga[i] += up[i] * df(xv[i], yv[i]);
  });
}

struct AxisSplit {
  std::size_t outer = 1, len = 1, inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.len = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw DimensionError("tensor-autodiff", "cannot broadcast " + shape_string(a) + " with " + shape_string(b));
    }
    out[i] = std::max(da, db);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Elementwise

Var add(Var a, Var b) {
  return binary("add", a, b, [](double x, double y) { return x + y; },
                [](double, double, double) { return std::pair{1.0, 1.0}; });
}

Var sub(Var a, Var b) {
  return binary("sub", a, b, [](double x, double y) { return x - y; },
                [](double, double, double) { return std::pair{1.0, -1.0}; });
}

Var mul(Var a, Var b) {
  return binary("mul", a, b, [](double x, double y) { return x * y; },
                [](double x, double y, double) { return std::pair{y, x}; });
}

Var div(Var a, Var b) {
  return binary("div", a, b, [](double x, double y) { return x / y; },
                [](double, double y, double q) { return std::pair{1.0 / y, -q / y}; });
}

Var scale(Var a, double c) {
  return unary("scale", a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var add_scalar(Var a, double c) {
  return unary("add_scalar", a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var square(Var a) {
  return unary("square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var abs(Var a) {
  // Subgradient 0 at the kink.
  return unary("abs", a, [](double x) { return std::fabs(x); },
               [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var sigmoid(Var a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary("tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var gelu(Var a) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  constexpr double inv_sqrt_2pi = 0.39894228040143267794;
  return unary(
      "gelu", a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); },
      [](double x, double) { return 0.5 * (1.0 + std::erf(x * inv_sqrt2)) + x * inv_sqrt_2pi * std::exp(-0.5 * x * x); });
}

// ---------------------------------------------------------------------------
// Products

Var matmul(Var a, Var b) {
  same_graph(a, b);
  Graph& g = *a.graph;
  if (a.value().rank() != 2 || b.value().rank() != 2 || a.dim(1) != b.dim(0)) {
    dim_error(g, "matmul of " + shape_string(a.shape()) + " and " + shape_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  const auto& A = a.value();
  const auto& B = b.value();
  Tensor C({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double* c = &C[i * n];
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      const double* brow = &B[p * n];
      for (std::size_t j = 0; j < n; ++j) c[j] += aip * brow[j];
    }
  }
  const std::size_t ia = a.id, ib = b.id;
  return g.record("matmul", std::move(C), {ia, ib}, [ia, ib, m, k, n](Graph& g, std::size_t self) {
    const auto& dC = g.upstream(self);
    const auto& A = g.value(ia);
    const auto& B = g.value(ib);
    if (g.requires_grad(ia)) {
      auto& dA = g.grad_acc(ia);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += dC[i * n + j] * B[p * n + j];
          dA[i * k + p] += acc;
        }
    }
    if (g.requires_grad(ib)) {
      auto& dB = g.grad_acc(ib);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = A[i * k + p];
          for (std::size_t j = 0; j < n; ++j) dB[p * n + j] += aip * dC[i * n + j];
        }
    }
  });
}

Var linear(Var x, Var w, std::optional<Var> b) {
  same_graph(x, w);
  Graph& g = *x.graph;
  if (x.value().rank() != 2 || w.value().rank() != 2 || x.dim(1) != w.dim(1)) {
    dim_error(g, "linear of " + shape_string(x.shape()) + " with weight " + shape_string(w.shape()));
  }
  const std::size_t rows = x.dim(0), in = x.dim(1), out = w.dim(0);
  if (b && (b->value().rank() != 1 || b->dim(0) != out)) {
    dim_error(g, "linear bias " + shape_string(b->shape()) + " for " + std::to_string(out) + " outputs");
  }
  const auto& X = x.value();
  const auto& W = w.value();
  Tensor Y({rows, out});
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = &X[r * in];
    for (std::size_t o = 0; o < out; ++o) {
      const double* wo = &W[o * in];
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i) acc += xr[i] * wo[i];
      Y[r * out + o] = b ? acc + b->value()[o] : acc;
    }
  }
  std::vector<std::size_t> parents{x.id, w.id};
  if (b) parents.push_back(b->id);
  const std::size_t ix = x.id, iw = w.id;
  const std::optional<std::size_t> ib = b ? std::optional<std::size_t>(b->id) : std::nullopt;
  return g.record("linear", std::move(Y), std::move(parents),
                  [ix, iw, ib, rows, in, out](Graph& g, std::size_t self) {
                    const auto& dY = g.upstream(self);
                    const auto& X = g.value(ix);
                    const auto& W = g.value(iw);
                    if (g.requires_grad(ix)) {
                      auto& dX = g.grad_acc(ix);
                      for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t o = 0; o < out; ++o) {
                          const double d = dY[r * out + o];
                          if (d == 0.0) continue;
                          const double* wo = &W[o * in];
                          double* dx = &dX[r * in];
                          for (std::size_t i = 0; i < in; ++i) dx[i] += d * wo[i];
                        }
                    }
                    if (g.requires_grad(iw)) {
                      auto& dW = g.grad_acc(iw);
                      for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t o = 0; o < out; ++o) {
                          const double d = dY[r * out + o];
                          if (d == 0.0) continue;
                          const double* xr = &X[r * in];
                          double* dw = &dW[o * in];
                          for (std::size_t i = 0; i < in; ++i) dw[i] += d * xr[i];
                        }
                    }
                    if (ib && g.requires_grad(*ib)) {
                      auto& dB = g.grad_acc(*ib);
                      for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t o = 0; o < out; ++o) dB[o] += dY[r * out + o];
                    }
                  });
}

Var bmm(Var a, Var b, bool transpose_b) {
  same_graph(a, b);
  Graph& g = *a.graph;
  if (a.value().rank() != 3 || b.value().rank() != 3 || a.dim(0) != b.dim(0) ||
      a.dim(2) != (transpose_b ? b.dim(2) : b.dim(1))) {
    dim_error(g, "bmm of " + shape_string(a.shape()) + " and " + shape_string(b.shape()) +
                     (transpose_b ? " (transposed)" : ""));
  }
  const std::size_t batch = a.dim(0), m = a.dim(1), k = a.dim(2);
  const std::size_t n = transpose_b ? b.dim(1) : b.dim(2);
  const auto& A = a.value();
  const auto& B = b.value();
  // Element (p, j) of the right operand within batch t.
  auto bidx = [=](std::size_t t, std::size_t p, std::size_t j) {
    return transpose_b ? t * n * k + j * k + p : t * k * n + p * n + j;
  };
  Tensor C({batch, m, n});
  for (std::size_t t = 0; t < batch; ++t)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += A[t * m * k + i * k + p] * B[bidx(t, p, j)];
        C[t * m * n + i * n + j] = acc;
      }
  const std::size_t ia = a.id, ib = b.id;
  return g.record("bmm", std::move(C), {ia, ib}, [ia, ib, batch, m, k, n, bidx](Graph& g, std::size_t self) {
    const auto& dC = g.upstream(self);
    const auto& A = g.value(ia);
    const auto& B = g.value(ib);
    const bool need_a = g.requires_grad(ia), need_b = g.requires_grad(ib);
    Tensor* dA = need_a ? &g.grad_acc(ia) : nullptr;
    Tensor* dB = need_b ? &g.grad_acc(ib) : nullptr;
    for (std::size_t t = 0; t < batch; ++t)
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double d = dC[t * m * n + i * n + j];
          if (d == 0.0) continue;
          for (std::size_t p = 0; p < k; ++p) {
            if (dA) (*dA)[t * m * k + i * k + p] += d * B[bidx(t, p, j)];
            if (dB) (*dB)[bidx(t, p, j)] += d * A[t * m * k + i * k + p];
          }
        }
  });
}

// ---------------------------------------------------------------------------
// Reductions

Var sum(Var a) {
  Graph& g = *a.graph;
  double acc = 0.0;
  for (double v : a.value().data()) acc += v;
  const std::size_t ia = a.id;
  return g.record("sum", Tensor::scalar(acc), {ia}, [ia](Graph& g, std::size_t self) {
    const double d = g.upstream(self)[0];
    for (auto& v : g.grad_acc(ia).data()) v += d;
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var sum_axis(Var a, std::size_t axis) {
  Graph& g = *a.graph;
  if (axis >= a.value().rank()) dim_error(g, "sum_axis axis out of range");
  const AxisSplit s = split_at(a.shape(), axis);
  Shape out_shape = a.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  if (out_shape.empty()) out_shape = {1};
  const auto& X = a.value();
  Tensor Y(out_shape);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t l = 0; l < s.len; ++l)
      for (std::size_t i = 0; i < s.inner; ++i) Y[o * s.inner + i] += X[(o * s.len + l) * s.inner + i];
  const std::size_t ia = a.id;
  return g.record("sum_axis", std::move(Y), {ia}, [ia, s](Graph& g, std::size_t self) {
    const auto& dY = g.upstream(self);
    auto& dX = g.grad_acc(ia);
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t l = 0; l < s.len; ++l)
        for (std::size_t i = 0; i < s.inner; ++i) dX[(o * s.len + l) * s.inner + i] += dY[o * s.inner + i];
  });
}

Var mean_axis(Var a, std::size_t axis) {
  const double n = static_cast<double>(a.dim(axis));
  return scale(sum_axis(a, axis), 1.0 / n);
}

Var softmax(Var a, std::size_t axis) {
  Graph& g = *a.graph;
  if (axis >= a.value().rank()) dim_error(g, "softmax axis out of range");
  const AxisSplit s = split_at(a.shape(), axis);
  const auto& X = a.value();
  Tensor Y(X.shape());
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t i = 0; i < s.inner; ++i) {
      auto at = [&](std::size_t l) { return (o * s.len + l) * s.inner + i; };
      double mx = X[at(0)];
      for (std::size_t l = 1; l < s.len; ++l) mx = std::max(mx, X[at(l)]);
      double z = 0.0;
      for (std::size_t l = 0; l < s.len; ++l) {
        const double e = std::exp(X[at(l)] - mx);
        Y[at(l)] = e;
        z += e;
      }
      for (std::size_t l = 0; l < s.len; ++l) Y[at(l)] /= z;
    }
  const std::size_t ia = a.id;
  return g.record("softmax", std::move(Y), {ia}, [ia, s](Graph& g, std::size_t self) {
    const auto& dY = g.upstream(self);
    const auto& Y = g.value(self);
    auto& dX = g.grad_acc(ia);
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t i = 0; i < s.inner; ++i) {
        auto at = [&](std::size_t l) { return (o * s.len + l) * s.inner + i; };
        double dot = 0.0;
        for (std::size_t l = 0; l < s.len; ++l) dot += dY[at(l)] * Y[at(l)];
        for (std::size_t l = 0; l < s.len; ++l) dX[at(l)] += Y[at(l)] * (dY[at(l)] - dot);
      }
  });
}

TopK topk_mask(Var scores, std::size_t k) {
  Graph& g = *scores.graph;
  if (scores.value().rank() != 2) dim_error(g, "topk_mask expects [N x E], got " + shape_string(scores.shape()));
  const std::size_t rows = scores.dim(0), cols = scores.dim(1);
  if (k < 1 || k > cols) {
    throw ParameterError(g.scope(), "top-k of " + std::to_string(k) + " out of range [1, " + std::to_string(cols) + "]");
  }
  const auto& S = scores.value();
  Tensor G({rows, cols}, 0.0);
  std::vector<std::size_t> indices(rows * k);
  std::vector<std::size_t> order(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    std::iota(order.begin(), order.end(), 0);
    const double* row = &S[r * cols];
    std::stable_sort(order.begin(), order.end(), [row](std::size_t x, std::size_t y) { return row[x] > row[y]; });
    std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    for (std::size_t j = 0; j < k; ++j) {
      indices[r * k + j] = order[j];
      G[r * cols + order[j]] = row[order[j]];
    }
  }
  const std::size_t is = scores.id;
  Var gate = g.record("topk_mask", std::move(G), {is}, [is, rows, cols, k, indices](Graph& g, std::size_t self) {
    const auto& dG = g.upstream(self);
    auto& dS = g.grad_acc(is);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < k; ++j) {
        const std::size_t e = indices[r * k + j];
        dS[r * cols + e] += dG[r * cols + e];
      }
  });
  return TopK{gate, k, std::move(indices)};
}

// ---------------------------------------------------------------------------
// Shape manipulation

Var reshape(Var a, Shape shape) {
  Graph& g = *a.graph;
  if (shape_size(shape) != a.value().size()) {
    dim_error(g, "cannot reshape " + shape_string(a.shape()) + " to " + shape_string(shape));
  }
  const std::size_t ia = a.id;
  return g.record("reshape", a.value().reshaped(std::move(shape)), {ia}, [ia](Graph& g, std::size_t self) {
    const auto& dY = g.upstream(self);
    auto& dX = g.grad_acc(ia);
    for (std::size_t i = 0; i < dY.size(); ++i) dX[i] += dY[i];
  });
}

Var permute(Var a, const std::vector<std::size_t>& axes) {
  Graph& g = *a.graph;
  const Shape& in = a.shape();
  const std::size_t rank = in.size();
  if (axes.size() != rank) dim_error(g, "permute rank mismatch");
  std::vector<bool> seen(rank, false);
  for (auto ax : axes) {
    if (ax >= rank || seen[ax]) dim_error(g, "permute axes are not a permutation");
    seen[ax] = true;
  }
  std::vector<std::size_t> in_stride(rank, 1);
  for (std::size_t ax = rank - 1; ax-- > 0;) in_stride[ax] = in_stride[ax + 1] * in[ax + 1];
  Shape out(rank);
  std::vector<std::size_t> stride(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    out[i] = in[axes[i]];
    stride[i] = in_stride[axes[i]];
  }
  // map[i] = source offset of output element i
  const std::size_t n = a.value().size();
  std::vector<std::size_t> map(n);
  std::vector<std::size_t> idx(rank, 0);
  std::size_t cur = 0;
  for (std::size_t i = 0; i < n; ++i) {
    map[i] = cur;
    for (std::size_t ax = rank; ax-- > 0;) {
      ++idx[ax];
      cur += stride[ax];
      if (idx[ax] < out[ax]) break;
      cur -= stride[ax] * out[ax];
      idx[ax] = 0;
    }
  }
  const auto& X = a.value();
  Tensor Y(out);
  for (std::size_t i = 0; i < n; ++i) Y[i] = X[map[i]];
  const std::size_t ia = a.id;
  return g.record("permute", std::move(Y), {ia}, [ia, map = std::move(map)](Graph& g, std::size_t self) {
    const auto& dY = g.upstream(self);
    auto& dX = g.grad_acc(ia);
    for (std::size_t i = 0; i < dY.size(); ++i) dX[map[i]] += dY[i];
  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("tensor-autodiff", "concat of nothing");
  Graph& g = *parts[0].graph;
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) dim_error(g, "concat axis out of range");
  Shape out = first;
  out[axis] = 0;
  for (const auto& p : parts) {
    if (p.graph != &g) throw UsageError("tensor-autodiff", "operands belong to different graphs");
    const Shape& s = p.shape();
    if (s.size() != first.size()) dim_error(g, "concat rank mismatch");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i != axis && s[i] != first[i]) {
        dim_error(g, "concat of " + shape_string(s) + " with " + shape_string(first) + " along axis " +
                         std::to_string(axis));
      }
    }
    out[axis] += s[axis];
  }
  const AxisSplit o = split_at(out, axis);
  Tensor Y(out);
  std::vector<std::size_t> ids, lens;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t len = p.dim(axis);
    const auto& X = p.value();
    for (std::size_t a = 0; a < o.outer; ++a)
      for (std::size_t l = 0; l < len; ++l)
        for (std::size_t i = 0; i < o.inner; ++i) Y[(a * o.len + offset + l) * o.inner + i] = X[(a * len + l) * o.inner + i];
    offset += len;
    ids.push_back(p.id);
    lens.push_back(len);
  }
  return g.record("concat", std::move(Y), ids, [ids, lens, o](Graph& g, std::size_t self) {
    const auto& dY = g.upstream(self);
    std::size_t offset = 0;
    for (std::size_t q = 0; q < ids.size(); ++q) {
      const std::size_t len = lens[q];
      if (g.requires_grad(ids[q])) {
        auto& dX = g.grad_acc(ids[q]);
        for (std::size_t a = 0; a < o.outer; ++a)
          for (std::size_t l = 0; l < len; ++l)
            for (std::size_t i = 0; i < o.inner; ++i)
              dX[(a * len + l) * o.inner + i] += dY[(a * o.len + offset + l) * o.inner + i];
      }
      offset += len;
    }
  });
}

Var slice(Var a, std::size_t axis, std::size_t start, std::size_t length) {
  Graph& g = *a.graph;
  if (axis >= a.value().rank() || length == 0 || start + length > a.dim(axis)) {
    dim_error(g, "slice [" + std::to_string(start) + ", " + std::to_string(start + length) + ") of axis " +
                     std::to_string(axis) + " in " + shape_string(a.shape()));
  }
  const AxisSplit s = split_at(a.shape(), axis);
  Shape out = a.shape();
  out[axis] = length;
  const auto& X = a.value();
  Tensor Y(out);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t l = 0; l < length; ++l)
      for (std::size_t i = 0; i < s.inner; ++i) Y[(o * length + l) * s.inner + i] = X[(o * s.len + start + l) * s.inner + i];
  const std::size_t ia = a.id;
  return g.record("slice", std::move(Y), {ia}, [ia, s, start, length](Graph& g, std::size_t self) {
    const auto& dY = g.upstream(self);
    auto& dX = g.grad_acc(ia);
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t l = 0; l < length; ++l)
        for (std::size_t i = 0; i < s.inner; ++i) dX[(o * s.len + start + l) * s.inner + i] += dY[(o * length + l) * s.inner + i];
  });
}

Var broadcast_to(Var a, const Shape& shape) {
  Graph& g = *a.graph;
  if (broadcast_shape(a.shape(), shape) != shape) {
    dim_error(g, "cannot broadcast " + shape_string(a.shape()) + " to " + shape_string(shape));
  }
  auto map = broadcast_map(a.shape(), shape);
  const auto& X = a.value();
  Tensor Y(shape);
  for (std::size_t i = 0; i < Y.size(); ++i) Y[i] = X[map[i]];
  const std::size_t ia = a.id;
  return g.record("broadcast_to", std::move(Y), {ia}, [ia, map = std::move(map)](Graph& g, std::size_t self) {
    const auto& dY = g.upstream(self);
    auto& dX = g.grad_acc(ia);
    for (std::size_t i = 0; i < dY.size(); ++i) dX[map[i]] += dY[i];
  });
}

// ---------------------------------------------------------------------------
// Normalization and losses

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  Graph& g = *x.graph;
  const std::size_t width = x.shape().back();
  if (gamma.value().size() != width || beta.value().size() != width) {
    dim_error(g, "layer_norm affine size does not match width " + std::to_string(width));
  }
  const std::size_t rows = x.value().size() / width;
  const auto& X = x.value();
  const auto& G = gamma.value();
  const auto& B = beta.value();
  Tensor Y(X.shape());
  std::vector<double> xhat(X.size());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = &X[r * width];
    double mu = 0.0;
    for (std::size_t i = 0; i < width; ++i) mu += xr[i];
    mu /= static_cast<double>(width);
    double var = 0.0;
    for (std::size_t i = 0; i < width; ++i) var += (xr[i] - mu) * (xr[i] - mu);
    var /= static_cast<double>(width);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t i = 0; i < width; ++i) {
      xhat[r * width + i] = (xr[i] - mu) * inv_std[r];
      Y[r * width + i] = xhat[r * width + i] * G[i] + B[i];
    }
  }
  const std::size_t ix = x.id, ig = gamma.id, ib = beta.id;
  return g.record("layer_norm", std::move(Y), {ix, ig, ib},
                  [ix, ig, ib, rows, width, xhat = std::move(xhat), inv_std = std::move(inv_std)](Graph& g,
                                                                                                   std::size_t self) {
                    const auto& dY = g.upstream(self);
                    const auto& G = g.value(ig);
                    if (g.requires_grad(ig) || g.requires_grad(ib)) {
                      Tensor* dG = g.requires_grad(ig) ? &g.grad_acc(ig) : nullptr;
                      Tensor* dB = g.requires_grad(ib) ? &g.grad_acc(ib) : nullptr;
                      for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t i = 0; i < width; ++i) {
                          if (dG) (*dG)[i] += dY[r * width + i] * xhat[r * width + i];
                          if (dB) (*dB)[i] += dY[r * width + i];
                        }
                    }
                    if (g.requires_grad(ix)) {
                      auto& dX = g.grad_acc(ix);
                      const double n = static_cast<double>(width);
                      for (std::size_t r = 0; r < rows; ++r) {
                        double mean_d = 0.0, mean_dx = 0.0;
                        for (std::size_t i = 0; i < width; ++i) {
                          const double dxh = dY[r * width + i] * G[i];
                          mean_d += dxh;
                          mean_dx += dxh * xhat[r * width + i];
                        }
                        mean_d /= n;
                        mean_dx /= n;
                        for (std::size_t i = 0; i < width; ++i) {
                          const double dxh = dY[r * width + i] * G[i];
                          dX[r * width + i] += inv_std[r] * (dxh - mean_d - xhat[r * width + i] * mean_dx);
                        }
                      }
                    }
                  });
}

Var mse_loss(Var pred, Var target) {
  if (pred.shape() != target.shape()) {
    dim_error(*pred.graph, "loss of " + shape_string(pred.shape()) + " against " + shape_string(target.shape()));
  }
  return mean(square(sub(pred, target)));
}

Var mae_loss(Var pred, Var target) {
  if (pred.shape() != target.shape()) {
    dim_error(*pred.graph, "loss of " + shape_string(pred.shape()) + " against " + shape_string(target.shape()));
  }
  return mean(abs(sub(pred, target)));
}

}  // namespace segcast::ad

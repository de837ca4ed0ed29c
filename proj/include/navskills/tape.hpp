#pragma once

#include <functional>
#include <string>
#include <vector>

#include "navskills/tensor.hpp"

namespace navskills {

struct GraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Reverse-mode tape. Build a graph with the op methods, call backward() on a
// scalar root, then read gradients of any node (parameters are just leaves).
// One tape per forward/backward pass; nodes are append-only.
template <typename T>
class Tape {
 public:
  struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
  };

  Var input(Tensor<T> value) {
    nodes_.push_back({std::move(value), {}, nullptr});
    return {static_cast<int>(nodes_.size()) - 1};
  }

  const Tensor<T>& val(Var x) const { return nodes_[x.id].val; }
  const Tensor<T>& grad(Var x) const { return nodes_[x.id].grad; }

  // y = x * w^T + b ; x: (B,I), w: (O,I), b: (1,O)
  Var linear(Var xv, Var wv, Var bv) {
    const auto& x = val(xv);
    const auto& w = val(wv);
    const auto& b = val(bv);
    if (x.cols != w.cols || b.rows != 1 || b.cols != w.rows)
      throw GraphError("linear: shape mismatch");
    Tensor<T> y(x.rows, w.rows);
    for (int r = 0; r < x.rows; ++r)
      for (int o = 0; o < w.rows; ++o) {
        T acc = b.at(0, o);
        const T* xr = &x.v[static_cast<std::size_t>(r) * x.cols];
        const T* wr = &w.v[static_cast<std::size_t>(o) * w.cols];
        for (int i = 0; i < x.cols; ++i) acc += xr[i] * wr[i];
        y.at(r, o) = acc;
      }
    return push(std::move(y), [xv, wv, bv](Tape& t, int self) {
      const Tensor<T>& g = t.nodes_[self].grad;
      const Tensor<T>& x = t.val(xv);
      const Tensor<T>& w = t.val(wv);
      Tensor<T>& gx = t.nodes_[xv.id].grad;
      Tensor<T>& gw = t.nodes_[wv.id].grad;
      Tensor<T>& gb = t.nodes_[bv.id].grad;
      for (int r = 0; r < x.rows; ++r)
        for (int o = 0; o < w.rows; ++o) {
          T go = g.at(r, o);
          if (go == T(0)) continue;
          gb.at(0, o) += go;
          T* gxr = &gx.v[static_cast<std::size_t>(r) * x.cols];
          T* gwr = &gw.v[static_cast<std::size_t>(o) * w.cols];
          const T* xr = &x.v[static_cast<std::size_t>(r) * x.cols];
          const T* wr = &w.v[static_cast<std::size_t>(o) * w.cols];
          for (int i = 0; i < x.cols; ++i) {
            gxr[i] += go * wr[i];
            gwr[i] += go * xr[i];
          }
        }
    });
  }

  // Valid cross-correlation. x rows are channel-major signals
  // [c0 t0..tL-1, c1 t0..tL-1, ...]; w: (out_ch, in_ch*k); b: (1, out_ch).
  // Output rows: [o0 s0..sLo-1, o1 ...], Lo = (L-k)/stride + 1.
  Var conv1d(Var xv, Var wv, Var bv, int in_ch, int len, int k, int stride) {
    const auto& x = val(xv);
    const auto& w = val(wv);
    const auto& b = val(bv);
    if (len < k || stride < 1) throw GraphError("conv1d: bad geometry");
    if (x.cols != in_ch * len) throw GraphError("conv1d: input shape mismatch");
    if (w.cols != in_ch * k || b.rows != 1 || b.cols != w.rows)
      throw GraphError("conv1d: weight shape mismatch");
    const int out_ch = w.rows;
    const int lo = (len - k) / stride + 1;
    Tensor<T> y(x.rows, out_ch * lo);
    for (int r = 0; r < x.rows; ++r)
      for (int o = 0; o < out_ch; ++o)
        for (int s = 0; s < lo; ++s) {
          T acc = b.at(0, o);
          for (int c = 0; c < in_ch; ++c) {
            const T* xr = &x.v[static_cast<std::size_t>(r) * x.cols + c * len + s * stride];
            const T* wr = &w.v[static_cast<std::size_t>(o) * w.cols + c * k];
            for (int j = 0; j < k; ++j) acc += xr[j] * wr[j];
          }
          y.at(r, o * lo + s) = acc;
        }
    return push(std::move(y), [=](Tape& t, int self) {
      const Tensor<T>& g = t.nodes_[self].grad;
      const Tensor<T>& x = t.val(xv);
      const Tensor<T>& w = t.val(wv);
      Tensor<T>& gx = t.nodes_[xv.id].grad;
      Tensor<T>& gw = t.nodes_[wv.id].grad;
      Tensor<T>& gb = t.nodes_[bv.id].grad;
      const int out_ch = w.rows;
      const int lo = (len - k) / stride + 1;
      for (int r = 0; r < x.rows; ++r)
        for (int o = 0; o < out_ch; ++o)
          for (int s = 0; s < lo; ++s) {
            T go = g.at(r, o * lo + s);
            if (go == T(0)) continue;
            gb.at(0, o) += go;
            for (int c = 0; c < in_ch; ++c) {
              std::size_t xoff = static_cast<std::size_t>(r) * x.cols + c * len + s * stride;
              std::size_t woff = static_cast<std::size_t>(o) * w.cols + c * k;
              for (int j = 0; j < k; ++j) {
                gx.v[xoff + j] += go * w.v[woff + j];
                gw.v[woff + j] += go * x.v[xoff + j];
              }
            }
          }
    });
  }

  Var relu(Var xv) {
    return unary(xv, [](T x) { return x > T(0) ? x : T(0); },
                 [](T x, T) { return x > T(0) ? T(1) : T(0); });
  }
  Var tanh_(Var xv) {
    return unary(xv, [](T x) { return std::tanh(x); },
                 [](T, T y) { return T(1) - y * y; });
  }
  Var exp_(Var xv) {
    return unary(xv, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
  }
  // log(1 + e^x), overflow-safe
  Var softplus(Var xv) {
    return unary(xv,
                 [](T x) { return x > T(30) ? x : std::log1p(std::exp(x)); },
                 [](T x, T) { return T(1) / (T(1) + std::exp(-x)); });
  }
  Var square(Var xv) {
    return unary(xv, [](T x) { return x * x; }, [](T x, T) { return T(2) * x; });
  }
  Var clamp_(Var xv, T lo, T hi) {
    return unary(xv, [lo, hi](T x) { return std::min(std::max(x, lo), hi); },
                 [lo, hi](T x, T) { return (x > lo && x < hi) ? T(1) : T(0); });
  }
  Var scale(Var xv, T s) {
    return unary(xv, [s](T x) { return s * x; }, [s](T, T) { return s; });
  }
  Var add_const(Var xv, T c) {
    return unary(xv, [c](T x) { return x + c; }, [](T, T) { return T(1); });
  }
  Var neg(Var xv) { return scale(xv, T(-1)); }

  Var add(Var av, Var bv) {
    return binary(av, bv, [](T a, T b) { return a + b; },
                  [](T, T) { return std::pair<T, T>{T(1), T(1)}; });
  }
  Var sub(Var av, Var bv) {
    return binary(av, bv, [](T a, T b) { return a - b; },
                  [](T, T) { return std::pair<T, T>{T(1), T(-1)}; });
  }
  Var mul(Var av, Var bv) {
    return binary(av, bv, [](T a, T b) { return a * b; },
                  [](T a, T b) { return std::pair<T, T>{b, a}; });
  }
  // Elementwise minimum; subgradient follows the smaller side (ties: first).
  Var minimum(Var av, Var bv) {
    return binary(av, bv, [](T a, T b) { return a <= b ? a : b; },
                  [](T a, T b) {
                    return a <= b ? std::pair<T, T>{T(1), T(0)}
                                  : std::pair<T, T>{T(0), T(1)};
                  });
  }

  Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw GraphError("concat_cols: empty");
    int rows = val(parts[0]).rows;
    int cols = 0;
    for (Var p : parts) {
      if (val(p).rows != rows) throw GraphError("concat_cols: row mismatch");
      cols += val(p).cols;
    }
    Tensor<T> y(rows, cols);
    int off = 0;
    for (Var p : parts) {
      const auto& x = val(p);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < x.cols; ++c) y.at(r, off + c) = x.at(r, c);
      off += x.cols;
    }
    std::vector<Var> captured = parts;
    return push(std::move(y), [captured](Tape& t, int self) {
      const Tensor<T>& g = t.nodes_[self].grad;
      int off = 0;
      for (Var p : captured) {
        Tensor<T>& gx = t.nodes_[p.id].grad;
        for (int r = 0; r < gx.rows; ++r)
          for (int c = 0; c < gx.cols; ++c) gx.at(r, c) += g.at(r, off + c);
        off += gx.cols;
      }
    });
  }

  Var slice_cols(Var xv, int c0, int c1) {
    const auto& x = val(xv);
    if (c0 < 0 || c1 > x.cols || c0 >= c1) throw GraphError("slice_cols: bad range");
    Tensor<T> y(x.rows, c1 - c0);
    for (int r = 0; r < x.rows; ++r)
      for (int c = c0; c < c1; ++c) y.at(r, c - c0) = x.at(r, c);
    return push(std::move(y), [xv, c0, c1](Tape& t, int self) {
      const Tensor<T>& g = t.nodes_[self].grad;
      Tensor<T>& gx = t.nodes_[xv.id].grad;
      for (int r = 0; r < g.rows; ++r)
        for (int c = c0; c < c1; ++c) gx.at(r, c) += g.at(r, c - c0);
    });
  }

  // (B,C) -> (B,1)
  Var sum_cols(Var xv) {
    const auto& x = val(xv);
    Tensor<T> y(x.rows, 1);
    for (int r = 0; r < x.rows; ++r) {
      T acc = 0;
      for (int c = 0; c < x.cols; ++c) acc += x.at(r, c);
      y.at(r, 0) = acc;
    }
    return push(std::move(y), [xv](Tape& t, int self) {
      const Tensor<T>& g = t.nodes_[self].grad;
      Tensor<T>& gx = t.nodes_[xv.id].grad;
      for (int r = 0; r < gx.rows; ++r)
        for (int c = 0; c < gx.cols; ++c) gx.at(r, c) += g.at(r, 0);
    });
  }

  Var sum_all(Var xv) {
    const auto& x = val(xv);
    Tensor<T> y(1, 1);
    T acc = 0;
    for (T e : x.v) acc += e;
    y.at(0, 0) = acc;
    return push(std::move(y), [xv](Tape& t, int self) {
      T g = t.nodes_[self].grad.at(0, 0);
      for (T& e : t.nodes_[xv.id].grad.v) e += g;
    });
  }

  Var mean_all(Var xv) {
    const auto& x = val(xv);
    T inv = T(1) / static_cast<T>(x.size());
    return scale(sum_all(xv), inv);
  }

  // Seeds d(root)/d(root) = 1 and propagates in reverse topological (= id)
  // order. root must be scalar.
  void backward(Var root) {
    if (!root.valid() || root.id >= static_cast<int>(nodes_.size()))
      throw GraphError("backward: detached root");
    Node& r = nodes_[root.id];
    if (r.val.rows != 1 || r.val.cols != 1) throw GraphError("backward: root must be scalar");
    if (!r.val.all_finite()) throw GraphError("backward: non-finite loss");
    for (auto& n : nodes_) n.grad = Tensor<T>(n.val.rows, n.val.cols, T(0));
    r.grad.at(0, 0) = T(1);
    for (int i = root.id; i >= 0; --i)
      if (nodes_[i].back) nodes_[i].back(*this, i);
  }

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> val;
    Tensor<T> grad;
    std::function<void(Tape&, int)> back;
  };

  Var push(Tensor<T> val, std::function<void(Tape&, int)> back) {
    nodes_.push_back({std::move(val), {}, std::move(back)});
    return {static_cast<int>(nodes_.size()) - 1};
  }

  template <typename F, typename DF>
  Var unary(Var xv, F f, DF df) {
    const auto& x = val(xv);
    Tensor<T> y(x.rows, x.cols);
    for (std::size_t i = 0; i < x.v.size(); ++i) y.v[i] = f(x.v[i]);
    return push(std::move(y), [xv, df](Tape& t, int self) {
      const Tensor<T>& g = t.nodes_[self].grad;
      const Tensor<T>& y = t.nodes_[self].val;
      const Tensor<T>& x = t.val(xv);
      Tensor<T>& gx = t.nodes_[xv.id].grad;
      for (std::size_t i = 0; i < x.v.size(); ++i) gx.v[i] += g.v[i] * df(x.v[i], y.v[i]);
    });
  }

  template <typename F, typename DF>
  Var binary(Var av, Var bv, F f, DF df) {
    const auto& a = val(av);
    const auto& b = val(bv);
    if (!a.same_shape(b)) throw GraphError("binary op: shape mismatch");
    Tensor<T> y(a.rows, a.cols);
    for (std::size_t i = 0; i < a.v.size(); ++i) y.v[i] = f(a.v[i], b.v[i]);
    return push(std::move(y), [av, bv, df](Tape& t, int self) {
      const Tensor<T>& g = t.nodes_[self].grad;
      const Tensor<T>& a = t.val(av);
      const Tensor<T>& b = t.val(bv);
      Tensor<T>& ga = t.nodes_[av.id].grad;
      Tensor<T>& gb = t.nodes_[bv.id].grad;
      for (std::size_t i = 0; i < a.v.size(); ++i) {
        auto [da, db] = df(a.v[i], b.v[i]);
        ga.v[i] += g.v[i] * da;
        gb.v[i] += g.v[i] * db;
      }
    });
  }

  std::vector<Node> nodes_;
};

}  // namespace navskills

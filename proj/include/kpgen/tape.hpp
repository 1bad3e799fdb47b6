// Copyright 2026 The kpgen Authors
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

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "kpgen/tensor.hpp"

namespace kpgen {

using Var = std::int32_t;

// Reverse-mode computation tape. Every primitive records a pull-back closure
// at build time; backward() replays the records once, newest first, and
// accumulates gradients additively into each node. A tape is built for one
// forward pass and then discarded; values are immutable once recorded.
template <typename T>
class Tape {
 public:
  Tape() { nodes_.reserve(256); }

  Var leaf(Tensor<T> value) { return push(std::move(value), true, {}); }

  Var constant(Tensor<T> value) { return push(std::move(value), false, {}); }

  const Tensor<T>& value(Var v) const { return nodes_[v].value; }

  // Valid after backward(); zero tensor for nodes the loss does not reach.
  const Tensor<T>& grad(Var v) const { return nodes_[v].grad; }

  std::size_t size() const { return nodes_.size(); }

  // ---- primitive operations -------------------------------------------

  // [m x k] * [k x n] -> [m x n]
  Var matmul(Var a, Var b) {
    const Tensor<T>& ta = value(a);
    const Tensor<T>& tb = value(b);
    require(ta.shape.size() == 2 && tb.shape.size() == 2, "matmul rank");
    require(ta.cols() == tb.rows(),
            "matmul inner dims " + ta.shape_str() + " vs " + tb.shape_str());
    std::size_t m = ta.rows(), k = ta.cols(), n = tb.cols();
    Tensor<T> out({m, n});
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p) {
        T aip = ta.at(i, p);
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) += aip * tb.at(p, j);
      }
    return push(std::move(out), needs(a, b), [a, b, m, k, n](Tape& t, Var o) {
      const Tensor<T>& g = t.nodes_[o].grad;
      const Tensor<T>& ta = t.value(a);
      const Tensor<T>& tb = t.value(b);
      if (t.wants(a)) {
        Tensor<T>& da = t.nodes_[a].grad;  // da += g * b^T
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            T gij = g.at(i, j);
            for (std::size_t p = 0; p < k; ++p)
              da.at(i, p) += gij * tb.at(p, j);
          }
      }
      if (t.wants(b)) {
        Tensor<T>& db = t.nodes_[b].grad;  // db += a^T * g
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            T aip = ta.at(i, p);
            for (std::size_t j = 0; j < n; ++j)
              db.at(p, j) += aip * g.at(i, j);
          }
      }
    });
  }

  // [m x k] * [n x k]^T -> [m x n]
  Var matmul_nt(Var a, Var b) {
    const Tensor<T>& ta = value(a);
    const Tensor<T>& tb = value(b);
    require(ta.shape.size() == 2 && tb.shape.size() == 2, "matmul_nt rank");
    require(ta.cols() == tb.cols(),
            "matmul_nt inner dims " + ta.shape_str() + " vs " + tb.shape_str());
    std::size_t m = ta.rows(), k = ta.cols(), n = tb.rows();
    Tensor<T> out({m, n});
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        T s = 0;
        for (std::size_t p = 0; p < k; ++p) s += ta.at(i, p) * tb.at(j, p);
        out.at(i, j) = s;
      }
    return push(std::move(out), needs(a, b), [a, b, m, k, n](Tape& t, Var o) {
      const Tensor<T>& g = t.nodes_[o].grad;
      const Tensor<T>& ta = t.value(a);
      const Tensor<T>& tb = t.value(b);
      if (t.wants(a)) {
        Tensor<T>& da = t.nodes_[a].grad;  // da += g * b
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            T gij = g.at(i, j);
            for (std::size_t p = 0; p < k; ++p)
              da.at(i, p) += gij * tb.at(j, p);
          }
      }
      if (t.wants(b)) {
        Tensor<T>& db = t.nodes_[b].grad;  // db += g^T * a
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            T gij = g.at(i, j);
            for (std::size_t p = 0; p < k; ++p)
              db.at(j, p) += gij * ta.at(i, p);
          }
      }
    });
  }

  Var add(Var a, Var b) {
    const Tensor<T>& ta = value(a);
    const Tensor<T>& tb = value(b);
    require(ta.same_shape(tb),
            "add shapes " + ta.shape_str() + " vs " + tb.shape_str());
    Tensor<T> out = ta;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += tb[i];
    return push(std::move(out), needs(a, b), [a, b](Tape& t, Var o) {
      const Tensor<T>& g = t.nodes_[o].grad;
      if (t.wants(a)) t.axpy(a, g, T(1));
      if (t.wants(b)) t.axpy(b, g, T(1));
    });
  }

  // Elementwise product.
  Var mul(Var a, Var b) {
    const Tensor<T>& ta = value(a);
    const Tensor<T>& tb = value(b);
    require(ta.same_shape(tb),
            "mul shapes " + ta.shape_str() + " vs " + tb.shape_str());
    Tensor<T> out = ta;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= tb[i];
    return push(std::move(out), needs(a, b), [a, b](Tape& t, Var o) {
      const Tensor<T>& g = t.nodes_[o].grad;
      const Tensor<T>& ta = t.value(a);
      const Tensor<T>& tb = t.value(b);
      if (t.wants(a)) {
        Tensor<T>& da = t.nodes_[a].grad;
        for (std::size_t i = 0; i < g.numel(); ++i) da[i] += g[i] * tb[i];
      }
      if (t.wants(b)) {
        Tensor<T>& db = t.nodes_[b].grad;
        for (std::size_t i = 0; i < g.numel(); ++i) db[i] += g[i] * ta[i];
      }
    });
  }

  // Scalar variable times tensor: s is [1x1].
  Var smul(Var s, Var v) {
    const Tensor<T>& ts = value(s);
    require(ts.numel() == 1, "smul scalar operand");
    const Tensor<T>& tv = value(v);
    Tensor<T> out = tv;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= ts[0];
    return push(std::move(out), needs(s, v), [s, v](Tape& t, Var o) {
      const Tensor<T>& g = t.nodes_[o].grad;
      const Tensor<T>& ts = t.value(s);
      const Tensor<T>& tv = t.value(v);
      if (t.wants(s)) {
        T acc = 0;
        for (std::size_t i = 0; i < g.numel(); ++i) acc += g[i] * tv[i];
        t.nodes_[s].grad[0] += acc;
      }
      if (t.wants(v)) {
        Tensor<T>& dv = t.nodes_[v].grad;
        for (std::size_t i = 0; i < g.numel(); ++i) dv[i] += g[i] * ts[0];
      }
    });
  }

  // a * v + b with compile-time constants a, b.
  Var affine(Var v, T a, T b) {
    Tensor<T> out = value(v);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a * out[i] + b;
    return push(std::move(out), needs(v), [v, a](Tape& t, Var o) {
      if (!t.wants(v)) return;
      t.axpy(v, t.nodes_[o].grad, a);
    });
  }

  Var sigmoid(Var v) {
    Tensor<T> out = value(v);
    for (std::size_t i = 0; i < out.numel(); ++i)
      out[i] = T(1) / (T(1) + std::exp(-out[i]));
    return push(std::move(out), needs(v), [v](Tape& t, Var o) {
      if (!t.wants(v)) return;
      const Tensor<T>& g = t.nodes_[o].grad;
      const Tensor<T>& y = t.nodes_[o].value;
      Tensor<T>& dv = t.nodes_[v].grad;
      for (std::size_t i = 0; i < g.numel(); ++i)
        dv[i] += g[i] * y[i] * (T(1) - y[i]);
    });
  }

  Var tanh(Var v) {
    Tensor<T> out = value(v);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(out[i]);
    return push(std::move(out), needs(v), [v](Tape& t, Var o) {
      if (!t.wants(v)) return;
      const Tensor<T>& g = t.nodes_[o].grad;
      const Tensor<T>& y = t.nodes_[o].value;
      Tensor<T>& dv = t.nodes_[v].grad;
      for (std::size_t i = 0; i < g.numel(); ++i)
        dv[i] += g[i] * (T(1) - y[i] * y[i]);
    });
  }

  // Numerically stable softmax over all elements of v (a vector).
  Var softmax(Var v) {
    const Tensor<T>& tv = value(v);
    require(tv.numel() >= 1, "softmax needs at least one element");
    Tensor<T> out = tv;
    T mx = out[0];
    for (std::size_t i = 1; i < out.numel(); ++i) mx = std::max(mx, out[i]);
    T denom = 0;
    for (std::size_t i = 0; i < out.numel(); ++i) {
      out[i] = std::exp(out[i] - mx);
      denom += out[i];
    }
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] /= denom;
    return push(std::move(out), needs(v), [v](Tape& t, Var o) {
      if (!t.wants(v)) return;
      const Tensor<T>& g = t.nodes_[o].grad;
      const Tensor<T>& y = t.nodes_[o].value;
      Tensor<T>& dv = t.nodes_[v].grad;
      T dot = 0;
      for (std::size_t i = 0; i < g.numel(); ++i) dot += g[i] * y[i];
      for (std::size_t i = 0; i < g.numel(); ++i)
        dv[i] += y[i] * (g[i] - dot);
    });
  }

  Var log(Var v) {
    Tensor<T> out = value(v);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::log(out[i]);
    return push(std::move(out), needs(v), [v](Tape& t, Var o) {
      if (!t.wants(v)) return;
      const Tensor<T>& g = t.nodes_[o].grad;
      const Tensor<T>& x = t.value(v);
      Tensor<T>& dv = t.nodes_[v].grad;
      for (std::size_t i = 0; i < g.numel(); ++i) dv[i] += g[i] / x[i];
    });
  }

  // Clamp to [lo, hi]; gradient passes only strictly inside the interval.
  // NaN inputs pass through unchanged so a poisoned value stays visible
  // instead of turning into a valid boundary value.
  Var clamp(Var v, T lo, T hi) {
    Tensor<T> out = value(v);
    for (std::size_t i = 0; i < out.numel(); ++i) {
      if (out[i] < lo) {
        out[i] = lo;
      } else if (out[i] > hi) {
        out[i] = hi;
      }
    }
    return push(std::move(out), needs(v), [v, lo, hi](Tape& t, Var o) {
      if (!t.wants(v)) return;
      const Tensor<T>& g = t.nodes_[o].grad;
      const Tensor<T>& x = t.value(v);
      Tensor<T>& dv = t.nodes_[v].grad;
      for (std::size_t i = 0; i < g.numel(); ++i)
        if (x[i] > lo && x[i] < hi) dv[i] += g[i];
    });
  }

  // Concatenate row vectors [1 x n_i] into [1 x sum(n_i)].
  Var concat(std::span<const Var> parts) {
    require(!parts.empty(), "concat needs inputs");
    std::size_t total = 0;
    bool ng = false;
    for (Var p : parts) {
      require(value(p).rows() == 1, "concat expects row vectors");
      total += value(p).cols();
      ng = ng || nodes_[p].requires_grad;
    }
    Tensor<T> out({1, total});
    std::size_t off = 0;
    for (Var p : parts) {
      const Tensor<T>& tp = value(p);
      for (std::size_t i = 0; i < tp.numel(); ++i) out[off + i] = tp[i];
      off += tp.numel();
    }
    std::vector<Var> ps(parts.begin(), parts.end());
    return push(std::move(out), ng, [ps](Tape& t, Var o) {
      const Tensor<T>& g = t.nodes_[o].grad;
      std::size_t off = 0;
      for (Var p : ps) {
        std::size_t n = t.value(p).numel();
        if (t.wants(p)) {
          Tensor<T>& dp = t.nodes_[p].grad;
          for (std::size_t i = 0; i < n; ++i) dp[i] += g[off + i];
        }
        off += n;
      }
    });
  }

  Var concat(std::initializer_list<Var> parts) {
    std::vector<Var> v(parts);
    return concat(std::span<const Var>(v));
  }

  // Contiguous slice [start, start+len) of a row vector.
  Var slice(Var v, std::size_t start, std::size_t len) {
    const Tensor<T>& tv = value(v);
    require(tv.rows() == 1, "slice expects a row vector");
    require(start + len <= tv.numel(), "slice out of range");
    Tensor<T> out({1, len});
    for (std::size_t i = 0; i < len; ++i) out[i] = tv[start + i];
    return push(std::move(out), needs(v), [v, start, len](Tape& t, Var o) {
      if (!t.wants(v)) return;
      const Tensor<T>& g = t.nodes_[o].grad;
      Tensor<T>& dv = t.nodes_[v].grad;
      for (std::size_t i = 0; i < len; ++i) dv[start + i] += g[i];
    });
  }

  // Row i of a matrix as [1 x cols]; used for embedding lookups.
  Var row(Var m, std::size_t i) {
    const Tensor<T>& tm = value(m);
    require(tm.shape.size() == 2 && i < tm.rows(), "row index");
    std::size_t c = tm.cols();
    Tensor<T> out({1, c});
    for (std::size_t j = 0; j < c; ++j) out[j] = tm.at(i, j);
    return push(std::move(out), needs(m), [m, i, c](Tape& t, Var o) {
      if (!t.wants(m)) return;
      const Tensor<T>& g = t.nodes_[o].grad;
      Tensor<T>& dm = t.nodes_[m].grad;
      for (std::size_t j = 0; j < c; ++j) dm.at(i, j) += g[j];
    });
  }

  // Stack row vectors [1 x d] into [n x d].
  Var stack_rows(std::span<const Var> rows) {
    require(!rows.empty(), "stack_rows needs inputs");
    std::size_t d = value(rows[0]).cols();
    bool ng = false;
    for (Var r : rows) {
      require(value(r).rows() == 1 && value(r).cols() == d,
              "stack_rows row shape");
      ng = ng || nodes_[r].requires_grad;
    }
    Tensor<T> out({rows.size(), d});
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Tensor<T>& tr = value(rows[i]);
      for (std::size_t j = 0; j < d; ++j) out.at(i, j) = tr[j];
    }
    std::vector<Var> rs(rows.begin(), rows.end());
    return push(std::move(out), ng, [rs, d](Tape& t, Var o) {
      const Tensor<T>& g = t.nodes_[o].grad;
      for (std::size_t i = 0; i < rs.size(); ++i) {
        if (!t.wants(rs[i])) continue;
        Tensor<T>& dr = t.nodes_[rs[i]].grad;
        for (std::size_t j = 0; j < d; ++j) dr[j] += g.at(i, j);
      }
    });
  }

  Var stack_rows(std::initializer_list<Var> rows) {
    std::vector<Var> v(rows);
    return stack_rows(std::span<const Var>(v));
  }

  // Single element as a [1x1] scalar.
  Var pick(Var v, std::size_t i) {
    require(i < value(v).numel(), "pick index");
    Tensor<T> out = Tensor<T>::scalar(value(v)[i]);
    return push(std::move(out), needs(v), [v, i](Tape& t, Var o) {
      if (!t.wants(v)) return;
      t.nodes_[v].grad[i] += t.nodes_[o].grad[0];
    });
  }

  // Elements at the given indices as a row vector (indices may repeat).
  Var gather(Var v, std::vector<std::size_t> idx) {
    require(!idx.empty(), "gather needs indices");
    const Tensor<T>& tv = value(v);
    Tensor<T> out({1, idx.size()});
    for (std::size_t i = 0; i < idx.size(); ++i) {
      require(idx[i] < tv.numel(), "gather index");
      out[i] = tv[idx[i]];
    }
    return push(std::move(out), needs(v),
                [v, idx = std::move(idx)](Tape& t, Var o) {
                  if (!t.wants(v)) return;
                  const Tensor<T>& g = t.nodes_[o].grad;
                  Tensor<T>& dv = t.nodes_[v].grad;
                  for (std::size_t i = 0; i < idx.size(); ++i)
                    dv[idx[i]] += g[i];
                });
  }

  // out[index_map[i]] += v[i]; builds a width-wide row vector. Realizes a
  // copy distribution from attention weights and a position-to-id map.
  Var scatter_sum(Var v, std::vector<std::size_t> index_map,
                  std::size_t width) {
    const Tensor<T>& tv = value(v);
    require(index_map.size() == tv.numel(), "scatter_sum map length");
    Tensor<T> out({1, width});
    for (std::size_t i = 0; i < index_map.size(); ++i) {
      require(index_map[i] < width, "scatter_sum index");
      out[index_map[i]] += tv[i];
    }
    return push(std::move(out), needs(v),
                [v, map = std::move(index_map)](Tape& t, Var o) {
                  if (!t.wants(v)) return;
                  const Tensor<T>& g = t.nodes_[o].grad;
                  Tensor<T>& dv = t.nodes_[v].grad;
                  for (std::size_t i = 0; i < map.size(); ++i)
                    dv[i] += g[map[i]];
                });
  }

  // Zero-extend a row vector to the given width.
  Var pad(Var v, std::size_t width) {
    const Tensor<T>& tv = value(v);
    require(tv.rows() == 1 && width >= tv.numel(), "pad width");
    Tensor<T> out({1, width});
    for (std::size_t i = 0; i < tv.numel(); ++i) out[i] = tv[i];
    std::size_t n = tv.numel();
    return push(std::move(out), needs(v), [v, n](Tape& t, Var o) {
      if (!t.wants(v)) return;
      const Tensor<T>& g = t.nodes_[o].grad;
      Tensor<T>& dv = t.nodes_[v].grad;
      for (std::size_t i = 0; i < n; ++i) dv[i] += g[i];
    });
  }

  // Sum of all elements as [1x1].
  Var sum(Var v) {
    const Tensor<T>& tv = value(v);
    T s = 0;
    for (std::size_t i = 0; i < tv.numel(); ++i) s += tv[i];
    return push(Tensor<T>::scalar(s), needs(v), [v](Tape& t, Var o) {
      if (!t.wants(v)) return;
      T g = t.nodes_[o].grad[0];
      Tensor<T>& dv = t.nodes_[v].grad;
      for (std::size_t i = 0; i < dv.numel(); ++i) dv[i] += g;
    });
  }

  // Sum of [1x1] scalars, in the given order.
  Var sum_vars(std::span<const Var> scalars) {
    require(!scalars.empty(), "sum_vars needs inputs");
    T s = 0;
    bool ng = false;
    for (Var v : scalars) {
      require(value(v).numel() == 1, "sum_vars scalar operand");
      s += value(v)[0];
      ng = ng || nodes_[v].requires_grad;
    }
    std::vector<Var> vs(scalars.begin(), scalars.end());
    return push(Tensor<T>::scalar(s), ng, [vs](Tape& t, Var o) {
      T g = t.nodes_[o].grad[0];
      for (Var v : vs)
        if (t.wants(v)) t.nodes_[v].grad[0] += g;
    });
  }

  Var sum_vars(std::initializer_list<Var> scalars) {
    std::vector<Var> v(scalars);
    return sum_vars(std::span<const Var>(v));
  }

  // ---- reverse pass ----------------------------------------------------

  // Seeds d(loss)/d(loss) = 1 and replays every recorded operation exactly
  // once, newest first. loss must be a [1x1] scalar.
  void backward(Var loss) {
    require(value(loss).numel() == 1, "backward expects scalar loss");
    for (Node& n : nodes_) {
      if (n.requires_grad)
        n.grad = Tensor<T>(n.value.shape);
      else
        n.grad = Tensor<T>();
    }
    if (!nodes_[loss].requires_grad) return;
    nodes_[loss].grad[0] = T(1);
    for (std::int64_t i = static_cast<std::int64_t>(nodes_.size()) - 1;
         i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.requires_grad && n.pull) n.pull(*this, static_cast<Var>(i));
    }
  }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;  // allocated by backward()
    bool requires_grad;
    std::function<void(Tape&, Var)> pull;
  };

  Var push(Tensor<T> value, bool requires_grad,
           std::function<void(Tape&, Var)> pull) {
    value.check_finite();
    nodes_.push_back(
        Node{std::move(value), Tensor<T>(), requires_grad, std::move(pull)});
    return static_cast<Var>(nodes_.size() - 1);
  }

  bool needs(Var a) const { return nodes_[a].requires_grad; }
  bool needs(Var a, Var b) const {
    return nodes_[a].requires_grad || nodes_[b].requires_grad;
  }
  bool wants(Var v) const { return nodes_[v].requires_grad; }

  void axpy(Var v, const Tensor<T>& g, T scale) {
    Tensor<T>& dv = nodes_[v].grad;
    for (std::size_t i = 0; i < g.numel(); ++i) dv[i] += scale * g[i];
  }

  static void require(bool ok, const std::string& what) {
    if (!ok) throw DimError(what);
  }

  std::vector<Node> nodes_;
};

}  // namespace kpgen

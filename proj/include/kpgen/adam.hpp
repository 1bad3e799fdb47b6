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
#include <vector>

#include "kpgen/tensor.hpp"

namespace kpgen {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a fixed list of parameter tensors. Moment shapes
// mirror parameter shapes; the step counter advances by one per step().
template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  AdamConfig& config() { return cfg_; }
  const AdamConfig& config() const { return cfg_; }

  void init(const std::vector<Tensor<T>*>& params) {
    m_.clear();
    v_.clear();
    t_ = 0;
    for (const Tensor<T>* p : params) {
      m_.emplace_back(p->shape);
      v_.emplace_back(p->shape);
    }
  }

  bool initialized() const { return !m_.empty(); }

  void step(const std::vector<Tensor<T>*>& params,
            const std::vector<const Tensor<T>*>& grads) {
    if (m_.empty()) init(params);
    if (params.size() != grads.size() || params.size() != m_.size())
      throw DimError("optimizer state does not match parameter list");
    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      Tensor<T>& p = *params[k];
      const Tensor<T>& g = *grads[k];
      if (!p.same_shape(g) || !p.same_shape(m_[k]))
        throw DimError("gradient shape does not match parameter " +
                       p.shape_str() + " vs " + g.shape_str());
      for (std::size_t i = 0; i < p.numel(); ++i) {
        double gi = static_cast<double>(g[i]);
        double m = cfg_.beta1 * static_cast<double>(m_[k][i]) +
                   (1.0 - cfg_.beta1) * gi;
        double v = cfg_.beta2 * static_cast<double>(v_[k][i]) +
                   (1.0 - cfg_.beta2) * gi * gi;
        m_[k][i] = static_cast<T>(m);
        v_[k][i] = static_cast<T>(v);
        double mhat = m / bc1;
        double vhat = v / bc2;
        p[i] = static_cast<T>(static_cast<double>(p[i]) -
                              cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
      }
    }
  }

  std::uint64_t steps() const { return t_; }
  std::vector<Tensor<T>>& first_moments() { return m_; }
  std::vector<Tensor<T>>& second_moments() { return v_; }
  const std::vector<Tensor<T>>& first_moments() const { return m_; }
  const std::vector<Tensor<T>>& second_moments() const { return v_; }
  void restore(std::vector<Tensor<T>> m, std::vector<Tensor<T>> v,
               std::uint64_t t) {
    m_ = std::move(m);
    v_ = std::move(v);
    t_ = t;
  }

 private:
  AdamConfig cfg_;
  std::vector<Tensor<T>> m_;
  std::vector<Tensor<T>> v_;
  std::uint64_t t_ = 0;
};

// Scales gradients in place so the global L2 norm does not exceed max_norm.
// Returns the pre-clip norm.
template <typename T>
double clip_global_norm(const std::vector<Tensor<T>*>& grads,
                        double max_norm) {
  double sq = 0.0;
  for (const Tensor<T>* g : grads)
    for (std::size_t i = 0; i < g->numel(); ++i) {
      double x = static_cast<double>((*g)[i]);
      sq += x * x;
    }
  double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    double scale = max_norm / norm;
    for (Tensor<T>* g : grads)
      for (std::size_t i = 0; i < g->numel(); ++i)
        (*g)[i] = static_cast<T>(static_cast<double>((*g)[i]) * scale);
  }
  return norm;
}

}  // namespace kpgen

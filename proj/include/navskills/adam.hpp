#pragma once

#include <vector>

#include "navskills/tensor.hpp"

namespace navskills {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment accumulators matching a parameter list one-to-one.
template <typename T>
struct AdamState {
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
  long step = 0;

  static AdamState init(const std::vector<Tensor<T>>& params) {
    AdamState s;
    for (const auto& p : params) {
      s.m.emplace_back(p.rows, p.cols, T(0));
      s.v.emplace_back(p.rows, p.cols, T(0));
    }
    return s;
  }
};

// Standard bias-corrected adaptive-moment update, in place.
template <typename T>
void adam_step(std::vector<Tensor<T>>& params, const std::vector<Tensor<T>>& grads,
               AdamState<T>& st, const AdamConfig& cfg = {}) {
  if (params.size() != grads.size() || params.size() != st.m.size())
    throw std::invalid_argument("adam_step: shape list mismatch");
  ++st.step;
  const double b1t = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
  const double b2t = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].same_shape(grads[i]))
      throw std::invalid_argument("adam_step: tensor shape mismatch");
    for (std::size_t j = 0; j < params[i].v.size(); ++j) {
      double g = static_cast<double>(grads[i].v[j]);
      double m = cfg.beta1 * static_cast<double>(st.m[i].v[j]) + (1.0 - cfg.beta1) * g;
      double v = cfg.beta2 * static_cast<double>(st.v[i].v[j]) + (1.0 - cfg.beta2) * g * g;
      st.m[i].v[j] = static_cast<T>(m);
      st.v[i].v[j] = static_cast<T>(v);
      double update = cfg.lr * (m / b1t) / (std::sqrt(v / b2t) + cfg.eps);
      params[i].v[j] = static_cast<T>(static_cast<double>(params[i].v[j]) - update);
    }
  }
}

}  // namespace navskills

#pragma once

#include <cmath>
#include <vector>

#include "p2c/tensor.hpp"

namespace p2c {

// Adaptive-moment gradient descent with bias correction; one instance per
// network. t/m/v are exposed so checkpoints can round-trip the state exactly.
class Adam {
public:
  Adam() = default;
  Adam(std::vector<Tensor4> params, double lr, double beta1 = 0.5, double beta2 = 0.999,
       double eps = 1e-8)
      : params_(std::move(params)),
        m_(params_.size()),
        v_(params_.size()),
        lr_(lr),
        b1_(beta1),
        b2_(beta2),
        eps_(eps) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      m_[i].assign(params_[i].numel(), 0.0);
      v_[i].assign(params_[i].numel(), 0.0);
    }
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(b1_, double(t_));
    const double bc2 = 1.0 - std::pow(b2_, double(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      TensorImpl* p = params_[i].get();
      check(p->grad.size() == p->data.size(), "usage",
            "optimizer step before any gradient reached a parameter");
      double* m = m_[i].data();
      double* v = v_[i].data();
      for (std::size_t j = 0; j < p->data.size(); ++j) {
        const double g = p->grad[j];
        m[j] = b1_ * m[j] + (1.0 - b1_) * g;
        v[j] = b2_ * v[j] + (1.0 - b2_) * g * g;
        p->data[j] -= lr_ * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + eps_);
      }
    }
  }

  const std::vector<Tensor4>& params() const { return params_; }
  long t() const { return t_; }
  const std::vector<std::vector<double>>& m() const { return m_; }
  const std::vector<std::vector<double>>& v() const { return v_; }

  void restore(long t, std::vector<std::vector<double>> m, std::vector<std::vector<double>> v) {
    check(m.size() == params_.size() && v.size() == params_.size(), "checkpoint",
          "optimizer state does not match parameter list");
    for (std::size_t i = 0; i < params_.size(); ++i)
      check(m[i].size() == params_[i].numel() && v[i].size() == params_[i].numel(), "checkpoint",
            "optimizer moment size mismatch");
    t_ = t;
    m_ = std::move(m);
    v_ = std::move(v);
  }

private:
  std::vector<Tensor4> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_ = 1e-3, b1_ = 0.5, b2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
};

}  // namespace p2c

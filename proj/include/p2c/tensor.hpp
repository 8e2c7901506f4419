#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "p2c/common.hpp"

namespace p2c {

struct Shape4 {
  int n = 0, c = 0, h = 0, w = 0;

  std::size_t numel() const {
    return std::size_t(n) * std::size_t(c) * std::size_t(h) * std::size_t(w);
  }
  bool operator==(const Shape4&) const = default;
  std::string str() const;
};

struct TensorImpl;
using TensorImplPtr = std::shared_ptr<TensorImpl>;

// Node in the reverse-mode tape. grad is empty until a backward pass reaches
// the node; parents/backward_fn are set only when the node was produced by an
// op with gradients enabled.
struct TensorImpl {
  Shape4 shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<TensorImplPtr> parents;
  std::function<void(TensorImpl&)> backward_fn;
};

// Rank-4 tensor handle, layout (batch, channel, height, width), 64-bit
// floats. Copying the handle shares storage. Op results are treated as
// immutable; only leaf tensors (parameters, test fixtures) are written in
// place, and only between graph constructions.
class Tensor4 {
public:
  Tensor4() = default;
  explicit Tensor4(TensorImplPtr impl) : impl_(std::move(impl)) {}

  static Tensor4 zeros(Shape4 shape, bool requires_grad = false);
  static Tensor4 full(Shape4 shape, double value, bool requires_grad = false);
  static Tensor4 from_data(Shape4 shape, std::vector<double> data, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape4& shape() const { return impl_->shape; }
  std::size_t numel() const { return impl_->shape.numel(); }

  std::size_t offset(int n, int c, int h, int w) const {
    const Shape4& s = impl_->shape;
    return ((std::size_t(n) * s.c + c) * s.h + h) * s.w + w;
  }
  double at(int n, int c, int h, int w) const { return impl_->data[offset(n, c, h, w)]; }
  double& at(int n, int c, int h, int w) { return impl_->data[offset(n, c, h, w)]; }

  std::vector<double>& data() { return impl_->data; }
  const std::vector<double>& data() const { return impl_->data; }
  const std::vector<double>& grad() const;

  // Value of a scalar (1,1,1,1) tensor.
  double item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool v) { impl_->requires_grad = v; }

  // Value copy as a fresh leaf, cut off from the tape. Gradients never flow
  // from a detached tensor back to its source.
  Tensor4 detach() const;
  // Deep copy as a fresh leaf.
  Tensor4 clone() const;

  TensorImpl* get() const { return impl_.get(); }
  const TensorImplPtr& ptr() const { return impl_; }

private:
  TensorImplPtr impl_;
};

// Tape construction switch, thread-local. Inference paths (translation,
// sampling, evaluation) run inside a NoGradGuard.
bool grad_enabled();

class NoGradGuard {
public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
  bool prev_;
};

}  // namespace p2c

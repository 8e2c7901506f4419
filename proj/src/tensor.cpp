#include "p2c/tensor.hpp"

#include <sstream>

namespace p2c {

std::string Shape4::str() const {
  std::ostringstream os;
  os << "(" << n << "," << c << "," << h << "," << w << ")";
  return os.str();
}

static TensorImplPtr make_impl(Shape4 shape, std::vector<double> data, bool requires_grad) {
  check(shape.n > 0 && shape.c > 0 && shape.h > 0 && shape.w > 0, "shape",
        "non-positive dimension in " + shape.str());
  check(data.size() == shape.numel(), "shape",
        "data size " + std::to_string(data.size()) + " does not match " + shape.str());
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = shape;
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  return impl;
}

Tensor4 Tensor4::zeros(Shape4 shape, bool requires_grad) {
  return Tensor4(make_impl(shape, std::vector<double>(shape.numel(), 0.0), requires_grad));
}

Tensor4 Tensor4::full(Shape4 shape, double value, bool requires_grad) {
  return Tensor4(make_impl(shape, std::vector<double>(shape.numel(), value), requires_grad));
}

Tensor4 Tensor4::from_data(Shape4 shape, std::vector<double> data, bool requires_grad) {
  return Tensor4(make_impl(shape, std::move(data), requires_grad));
}

const std::vector<double>& Tensor4::grad() const {
  check(impl_->requires_grad, "usage", "grad() on a tensor that does not require gradients");
  check(!impl_->grad.empty(), "usage", "grad() before any backward pass reached this tensor");
  return impl_->grad;
}

double Tensor4::item() const {
  check(numel() == 1, "shape", "item() on non-scalar tensor " + shape().str());
  return impl_->data[0];
}

Tensor4 Tensor4::detach() const {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;  // value copy; the detached node is a leaf
  return Tensor4(impl);
}

Tensor4 Tensor4::clone() const {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;
  impl->requires_grad = impl_->requires_grad;
  return Tensor4(impl);
}

static thread_local bool g_grad_enabled = true;

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

}  // namespace p2c

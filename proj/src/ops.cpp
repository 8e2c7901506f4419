#include "p2c/ops.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace p2c {

namespace {

// Shared index helpers for the three convolution kernels. For output index o
// and input index i = o*stride - pad + k, the valid o range for i in [0, n)
// is [lo_index(pad - k, s), hi_index(n - 1 + pad - k, s, cap)].
inline int lo_index(int c, int s) { return c <= 0 ? 0 : (c + s - 1) / s; }
inline int hi_index(int c, int s, int cap) { return c < 0 ? -1 : std::min(cap - 1, c / s); }

// y[n,a,oh,ow] += sum_{b,kh,kw} w[a,b,kh,kw] * x[n,b,oh*s-p+kh,ow*s-p+kw]
void gather_acc(double* y, const Shape4& ys, const double* x, const Shape4& xs,
                const double* w, const Shape4& ws, int stride, int pad) {
  const int B = xs.c, IH = xs.h, IW = xs.w;
  const int A = ws.n, K = ws.h;
  const int OH = ys.h, OW = ys.w;
  for (int n = 0; n < xs.n; ++n) {
    const double* xn = x + std::size_t(n) * B * IH * IW;
    double* yn = y + std::size_t(n) * A * OH * OW;
    for (int a = 0; a < A; ++a) {
      double* ya = yn + std::size_t(a) * OH * OW;
      for (int b = 0; b < B; ++b) {
        const double* xb = xn + std::size_t(b) * IH * IW;
        const double* wab = w + (std::size_t(a) * B + b) * K * K;
        for (int kh = 0; kh < K; ++kh) {
          const int oh_lo = lo_index(pad - kh, stride);
          const int oh_hi = hi_index(IH - 1 + pad - kh, stride, OH);
          for (int kw = 0; kw < K; ++kw) {
            const double wv = wab[kh * K + kw];
            const int ow_lo = lo_index(pad - kw, stride);
            const int ow_hi = hi_index(IW - 1 + pad - kw, stride, OW);
            const int xoff = kw - pad;
            for (int oh = oh_lo; oh <= oh_hi; ++oh) {
              const double* xrow = xb + std::size_t(oh * stride - pad + kh) * IW;
              double* yrow = ya + std::size_t(oh) * OW;
              if (stride == 1) {
                for (int ow = ow_lo; ow <= ow_hi; ++ow) yrow[ow] += wv * xrow[ow + xoff];
              } else {
                for (int ow = ow_lo; ow <= ow_hi; ++ow) yrow[ow] += wv * xrow[ow * stride + xoff];
              }
            }
          }
        }
      }
    }
  }
}

// v[n,b,oh*s-p+kh,ow*s-p+kw] += sum_a w[a,b,kh,kw] * u[n,a,oh,ow]
// Adjoint of gather_acc; u plays the role of y, v the role of x.
void scatter_acc(double* v, const Shape4& vs, const double* u, const Shape4& us,
                 const double* w, const Shape4& ws, int stride, int pad) {
  const int B = vs.c, VH = vs.h, VW = vs.w;
  const int A = ws.n, K = ws.h;
  const int UH = us.h, UW = us.w;
  for (int n = 0; n < us.n; ++n) {
    const double* un = u + std::size_t(n) * A * UH * UW;
    double* vn = v + std::size_t(n) * B * VH * VW;
    for (int a = 0; a < A; ++a) {
      const double* ua = un + std::size_t(a) * UH * UW;
      for (int b = 0; b < B; ++b) {
        double* vb = vn + std::size_t(b) * VH * VW;
        const double* wab = w + (std::size_t(a) * B + b) * K * K;
        for (int kh = 0; kh < K; ++kh) {
          const int oh_lo = lo_index(pad - kh, stride);
          const int oh_hi = hi_index(VH - 1 + pad - kh, stride, UH);
          for (int kw = 0; kw < K; ++kw) {
            const double wv = wab[kh * K + kw];
            const int ow_lo = lo_index(pad - kw, stride);
            const int ow_hi = hi_index(VW - 1 + pad - kw, stride, UW);
            const int voff = kw - pad;
            for (int oh = oh_lo; oh <= oh_hi; ++oh) {
              double* vrow = vb + std::size_t(oh * stride - pad + kh) * VW;
              const double* urow = ua + std::size_t(oh) * UW;
              for (int ow = ow_lo; ow <= ow_hi; ++ow) vrow[ow * stride + voff] += wv * urow[ow];
            }
          }
        }
      }
    }
  }
}

// dw[a,b,kh,kw] += sum_{n,oh,ow} dy[n,a,oh,ow] * x[n,b,oh*s-p+kh,ow*s-p+kw]
void wgrad_acc(double* dw, const Shape4& ws, const double* dy, const Shape4& ys,
               const double* x, const Shape4& xs, int stride, int pad) {
  const int B = xs.c, IH = xs.h, IW = xs.w;
  const int A = ws.n, K = ws.h;
  const int OH = ys.h, OW = ys.w;
  for (int n = 0; n < xs.n; ++n) {
    const double* xn = x + std::size_t(n) * B * IH * IW;
    const double* yn = dy + std::size_t(n) * A * OH * OW;
    for (int a = 0; a < A; ++a) {
      const double* ya = yn + std::size_t(a) * OH * OW;
      for (int b = 0; b < B; ++b) {
        const double* xb = xn + std::size_t(b) * IH * IW;
        double* wab = dw + (std::size_t(a) * B + b) * K * K;
        for (int kh = 0; kh < K; ++kh) {
          const int oh_lo = lo_index(pad - kh, stride);
          const int oh_hi = hi_index(IH - 1 + pad - kh, stride, OH);
          for (int kw = 0; kw < K; ++kw) {
            const int ow_lo = lo_index(pad - kw, stride);
            const int ow_hi = hi_index(IW - 1 + pad - kw, stride, OW);
            const int xoff = kw - pad;
            double acc = 0.0;
            for (int oh = oh_lo; oh <= oh_hi; ++oh) {
              const double* xrow = xb + std::size_t(oh * stride - pad + kh) * IW;
              const double* yrow = ya + std::size_t(oh) * OW;
              if (stride == 1) {
                for (int ow = ow_lo; ow <= ow_hi; ++ow) acc += yrow[ow] * xrow[ow + xoff];
              } else {
                for (int ow = ow_lo; ow <= ow_hi; ++ow) acc += yrow[ow] * xrow[ow * stride + xoff];
              }
            }
            wab[kh * K + kw] += acc;
          }
        }
      }
    }
  }
}

Tensor4 make_node(Shape4 shape, std::vector<double> data, std::initializer_list<Tensor4> inputs,
                  std::function<void(TensorImpl&)> bw) {
  bool track = false;
  if (grad_enabled()) {
    for (const auto& t : inputs)
      if (t.defined() && t.get()->requires_grad) track = true;
  }
  Tensor4 out = Tensor4::from_data(shape, std::move(data));
  if (track) {
    out.get()->requires_grad = true;
    for (const auto& t : inputs)
      if (t.defined()) out.get()->parents.push_back(t.ptr());
    out.get()->backward_fn = std::move(bw);
  }
  return out;
}

// Gradient sink for an input, or nullptr when the input does not take part
// in this backward pass. Buffers are zeroed by the driver before use.
double* sink(const Tensor4& t) {
  if (!t.defined() || !t.get()->requires_grad) return nullptr;
  return t.get()->grad.data();
}

void validate_conv_weight(const Tensor4& w, const Tensor4& b, const ConvSpec& spec, int dim0,
                          int dim1, const char* op) {
  check(w.defined(), "shape", std::string(op) + ": undefined weight");
  const Shape4& ws = w.shape();
  check(ws.n == dim0 && ws.c == dim1 && ws.h == spec.kernel && ws.w == spec.kernel, "shape",
        std::string(op) + ": weight " + ws.str() + " does not match spec");
  check(spec.kernel >= 1 && spec.stride >= 1 && spec.padding >= 0, "shape",
        std::string(op) + ": bad kernel/stride/padding");
  if (b.defined()) {
    check(b.shape() == Shape4{1, spec.out_channels, 1, 1}, "shape",
          std::string(op) + ": bias " + b.shape().str() + " does not match out_channels");
  }
}

}  // namespace

Tensor4 conv2d(const Tensor4& x, const Tensor4& weight, const Tensor4& bias, const ConvSpec& spec) {
  check(x.defined(), "shape", "conv2d: undefined input");
  validate_conv_weight(weight, bias, spec, spec.out_channels, spec.in_channels, "conv2d");
  const Shape4& xs = x.shape();
  check(xs.c == spec.in_channels, "shape",
        "conv2d: input " + xs.str() + " does not have " + std::to_string(spec.in_channels) +
            " channels");
  const int span_h = xs.h + 2 * spec.padding - spec.kernel;
  const int span_w = xs.w + 2 * spec.padding - spec.kernel;
  check(span_h >= 0 && span_w >= 0, "shape", "conv2d: kernel larger than padded input " + xs.str());
  Shape4 ys{xs.n, spec.out_channels, span_h / spec.stride + 1, span_w / spec.stride + 1};

  std::vector<double> y(ys.numel(), 0.0);
  gather_acc(y.data(), ys, x.data().data(), xs, weight.data().data(), weight.shape(), spec.stride,
             spec.padding);
  if (bias.defined()) {
    const std::size_t hw = std::size_t(ys.h) * ys.w;
    for (int n = 0; n < ys.n; ++n)
      for (int c = 0; c < ys.c; ++c) {
        double bv = bias.data()[c];
        double* row = y.data() + (std::size_t(n) * ys.c + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) row[i] += bv;
      }
  }

  ConvSpec sp = spec;
  return make_node(ys, std::move(y), {x, weight, bias}, [x, weight, bias, sp](TensorImpl& self) {
    const double* dy = self.grad.data();
    if (double* dx = sink(x))
      scatter_acc(dx, x.shape(), dy, self.shape, weight.data().data(), weight.shape(), sp.stride,
                  sp.padding);
    if (double* dw = sink(weight))
      wgrad_acc(dw, weight.shape(), dy, self.shape, x.data().data(), x.shape(), sp.stride,
                sp.padding);
    if (double* db = sink(bias)) {
      const std::size_t hw = std::size_t(self.shape.h) * self.shape.w;
      for (int n = 0; n < self.shape.n; ++n)
        for (int c = 0; c < self.shape.c; ++c) {
          const double* row = dy + (std::size_t(n) * self.shape.c + c) * hw;
          double acc = 0.0;
          for (std::size_t i = 0; i < hw; ++i) acc += row[i];
          db[c] += acc;
        }
    }
  });
}

Tensor4 conv_transpose2d(const Tensor4& x, const Tensor4& weight, const Tensor4& bias,
                         const ConvSpec& spec) {
  check(x.defined(), "shape", "conv_transpose2d: undefined input");
  validate_conv_weight(weight, bias, spec, spec.in_channels, spec.out_channels,
                       "conv_transpose2d");
  const Shape4& xs = x.shape();
  check(xs.c == spec.in_channels, "shape",
        "conv_transpose2d: input " + xs.str() + " does not have " +
            std::to_string(spec.in_channels) + " channels");
  const int vh = (xs.h - 1) * spec.stride - 2 * spec.padding + spec.kernel;
  const int vw = (xs.w - 1) * spec.stride - 2 * spec.padding + spec.kernel;
  check(vh >= 1 && vw >= 1, "shape", "conv_transpose2d: empty output for input " + xs.str());
  Shape4 ys{xs.n, spec.out_channels, vh, vw};

  std::vector<double> y(ys.numel(), 0.0);
  scatter_acc(y.data(), ys, x.data().data(), xs, weight.data().data(), weight.shape(), spec.stride,
              spec.padding);
  if (bias.defined()) {
    const std::size_t hw = std::size_t(ys.h) * ys.w;
    for (int n = 0; n < ys.n; ++n)
      for (int c = 0; c < ys.c; ++c) {
        double bv = bias.data()[c];
        double* row = y.data() + (std::size_t(n) * ys.c + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) row[i] += bv;
      }
  }

  ConvSpec sp = spec;
  return make_node(ys, std::move(y), {x, weight, bias}, [x, weight, bias, sp](TensorImpl& self) {
    const double* dy = self.grad.data();
    if (double* dx = sink(x))
      gather_acc(dx, x.shape(), dy, self.shape, weight.data().data(), weight.shape(), sp.stride,
                 sp.padding);
    if (double* dw = sink(weight))
      wgrad_acc(dw, weight.shape(), x.data().data(), x.shape(), dy, self.shape, sp.stride,
                sp.padding);
    if (double* db = sink(bias)) {
      const std::size_t hw = std::size_t(self.shape.h) * self.shape.w;
      for (int n = 0; n < self.shape.n; ++n)
        for (int c = 0; c < self.shape.c; ++c) {
          const double* row = dy + (std::size_t(n) * self.shape.c + c) * hw;
          double acc = 0.0;
          for (std::size_t i = 0; i < hw; ++i) acc += row[i];
          db[c] += acc;
        }
    }
  });
}

Tensor4 instance_norm2d(const Tensor4& x, const Tensor4& scale, const Tensor4& shift, double eps) {
  check(x.defined() && scale.defined() && shift.defined(), "shape",
        "instance_norm2d: undefined input");
  const Shape4& xs = x.shape();
  check(scale.shape() == Shape4{1, xs.c, 1, 1} && shift.shape() == Shape4{1, xs.c, 1, 1}, "shape",
        "instance_norm2d: scale/shift must be (1," + std::to_string(xs.c) + ",1,1)");
  const std::size_t hw = std::size_t(xs.h) * xs.w;
  const std::size_t nc = std::size_t(xs.n) * xs.c;

  auto mean_v = std::make_shared<std::vector<double>>(nc);
  auto inv_v = std::make_shared<std::vector<double>>(nc);
  std::vector<double> y(xs.numel());
  const double* xd = x.data().data();
  for (std::size_t j = 0; j < nc; ++j) {
    const double* row = xd + j * hw;
    double m = 0.0;
    for (std::size_t i = 0; i < hw; ++i) m += row[i];
    m /= double(hw);
    double var = 0.0;
    for (std::size_t i = 0; i < hw; ++i) {
      double d = row[i] - m;
      var += d * d;
    }
    var /= double(hw);
    (*mean_v)[j] = m;
    (*inv_v)[j] = 1.0 / std::sqrt(var + eps);
  }
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c) {
      const std::size_t j = std::size_t(n) * xs.c + c;
      const double g = scale.data()[c], b = shift.data()[c];
      const double m = (*mean_v)[j], inv = (*inv_v)[j];
      const double* row = xd + j * hw;
      double* yr = y.data() + j * hw;
      for (std::size_t i = 0; i < hw; ++i) yr[i] = g * ((row[i] - m) * inv) + b;
    }

  return make_node(xs, std::move(y), {x, scale, shift},
                   [x, scale, shift, mean_v, inv_v, hw](TensorImpl& self) {
    const Shape4& s = self.shape;
    const double* dy = self.grad.data();
    const double* xd = x.data().data();
    double* dxs = sink(x);
    double* dscale = sink(scale);
    double* dshift = sink(shift);
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c) {
        const std::size_t j = std::size_t(n) * s.c + c;
        const double g = scale.data()[c];
        const double m = (*mean_v)[j], inv = (*inv_v)[j];
        const double* xr = xd + j * hw;
        const double* dyr = dy + j * hw;
        // per-channel reductions shared by all three gradients
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t i = 0; i < hw; ++i) {
          const double xhat = (xr[i] - m) * inv;
          sum_dy += dyr[i];
          sum_dy_xhat += dyr[i] * xhat;
        }
        if (dscale) dscale[c] += sum_dy_xhat;
        if (dshift) dshift[c] += sum_dy;
        if (dxs) {
          const double mg = sum_dy / double(hw);
          const double mgx = sum_dy_xhat / double(hw);
          double* dxr = dxs + j * hw;
          for (std::size_t i = 0; i < hw; ++i) {
            const double xhat = (xr[i] - m) * inv;
            dxr[i] += g * inv * (dyr[i] - mg - xhat * mgx);
          }
        }
      }
  });
}

namespace {

template <class F, class DF>
Tensor4 pointwise(const Tensor4& x, const char* op, F f, DF df) {
  check(x.defined(), "shape", std::string(op) + ": undefined input");
  std::vector<double> y(x.numel());
  const double* xd = x.data().data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(xd[i]);
  return make_node(x.shape(), std::move(y), {x}, [x, df](TensorImpl& self) {
    if (double* dx = sink(x)) {
      const double* dy = self.grad.data();
      const double* xd = x.data().data();
      const double* yd = self.data.data();
      for (std::size_t i = 0; i < self.data.size(); ++i) dx[i] += df(xd[i], yd[i]) * dy[i];
    }
  });
}

}  // namespace

Tensor4 relu(const Tensor4& x) {
  return pointwise(
      x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor4 leaky_relu(const Tensor4& x, double slope) {
  return pointwise(
      x, "leaky_relu", [slope](double v) { return v > 0.0 ? v : slope * v; },
      [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

// tanh/sigmoid outputs are nudged off their asymptotes so downstream range
// invariants ((-1,1), (0,1)) hold even for saturating inputs; the derivative
// is taken at the nudged output.
Tensor4 tanh(const Tensor4& x) {
  return pointwise(
      x, "tanh",
      [](double v) {
        double y = std::tanh(v);
        if (y > 1.0 - 1e-15) y = 1.0 - 1e-15;
        if (y < -1.0 + 1e-15) y = -1.0 + 1e-15;
        return y;
      },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor4 sigmoid(const Tensor4& x) {
  return pointwise(
      x, "sigmoid",
      [](double v) {
        double y;
        if (v >= 0.0) {
          y = 1.0 / (1.0 + std::exp(-v));
        } else {
          double e = std::exp(v);
          y = e / (1.0 + e);
        }
        if (y < 1e-15) y = 1e-15;
        if (y > 1.0 - 1e-15) y = 1.0 - 1e-15;
        return y;
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor4 add(const Tensor4& a, const Tensor4& b) {
  check(a.defined() && b.defined(), "shape", "add: undefined input");
  check(a.shape() == b.shape(), "shape",
        "add: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  std::vector<double> y(a.numel());
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = ad[i] + bd[i];
  return make_node(a.shape(), std::move(y), {a, b}, [a, b](TensorImpl& self) {
    const double* dy = self.grad.data();
    if (double* da = sink(a))
      for (std::size_t i = 0; i < self.data.size(); ++i) da[i] += dy[i];
    if (double* db = sink(b))
      for (std::size_t i = 0; i < self.data.size(); ++i) db[i] += dy[i];
  });
}

Tensor4 scale(const Tensor4& a, double k) {
  check(a.defined(), "shape", "scale: undefined input");
  std::vector<double> y(a.numel());
  const double* ad = a.data().data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = k * ad[i];
  return make_node(a.shape(), std::move(y), {a}, [a, k](TensorImpl& self) {
    if (double* da = sink(a)) {
      const double* dy = self.grad.data();
      for (std::size_t i = 0; i < self.data.size(); ++i) da[i] += k * dy[i];
    }
  });
}

Tensor4 l1_mean(const Tensor4& a, const Tensor4& b) {
  check(a.defined() && b.defined(), "shape", "l1_mean: undefined input");
  check(a.shape() == b.shape(), "shape",
        "l1_mean: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  double acc = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) acc += std::abs(ad[i] - bd[i]);
  const double inv_n = 1.0 / double(a.numel());
  return make_node({1, 1, 1, 1}, {acc * inv_n}, {a, b}, [a, b, inv_n](TensorImpl& self) {
    const double g = self.grad[0] * inv_n;
    const double* ad = a.data().data();
    const double* bd = b.data().data();
    double* da = sink(a);
    double* db = sink(b);
    for (std::size_t i = 0; i < a.numel(); ++i) {
      const double d = ad[i] - bd[i];
      const double sg = d > 0.0 ? g : (d < 0.0 ? -g : 0.0);
      if (da) da[i] += sg;
      if (db) db[i] -= sg;
    }
  });
}

namespace {

constexpr double kLogClamp = 1e-12;

// -mean(log(max(sel(x), clamp))); sel is v -> v or v -> 1-v. The gradient is
// the exact derivative of the clamped composite: zero where the clamp binds.
template <class Sel, class DSel>
Tensor4 neg_mean_log_impl(const Tensor4& x, const char* op, Sel sel, DSel dsel) {
  check(x.defined(), "shape", std::string(op) + ": undefined input");
  const double* xd = x.data().data();
  double acc = 0.0;
  for (std::size_t i = 0; i < x.numel(); ++i)
    acc += std::log(std::max(sel(xd[i]), kLogClamp));
  const double inv_n = 1.0 / double(x.numel());
  return make_node({1, 1, 1, 1}, {-acc * inv_n}, {x}, [x, inv_n, sel, dsel](TensorImpl& self) {
    if (double* dx = sink(x)) {
      const double g = self.grad[0] * inv_n;
      const double* xd = x.data().data();
      for (std::size_t i = 0; i < x.numel(); ++i) {
        const double v = sel(xd[i]);
        if (v > kLogClamp) dx[i] -= g * dsel(xd[i]) / v;
      }
    }
  });
}

}  // namespace

Tensor4 neg_mean_log(const Tensor4& x) {
  return neg_mean_log_impl(
      x, "neg_mean_log", [](double v) { return v; }, [](double) { return 1.0; });
}

Tensor4 neg_mean_log1m(const Tensor4& x) {
  return neg_mean_log_impl(
      x, "neg_mean_log1m", [](double v) { return 1.0 - v; }, [](double) { return -1.0; });
}

Tensor4 mean_spatial(const Tensor4& x) {
  check(x.defined(), "shape", "mean_spatial: undefined input");
  const Shape4& xs = x.shape();
  const std::size_t hw = std::size_t(xs.h) * xs.w;
  const std::size_t nc = std::size_t(xs.n) * xs.c;
  std::vector<double> y(nc);
  const double* xd = x.data().data();
  for (std::size_t j = 0; j < nc; ++j) {
    const double* row = xd + j * hw;
    double acc = 0.0;
    for (std::size_t i = 0; i < hw; ++i) acc += row[i];
    y[j] = acc / double(hw);
  }
  return make_node({xs.n, xs.c, 1, 1}, std::move(y), {x}, [x, hw](TensorImpl& self) {
    if (double* dx = sink(x)) {
      const double* dy = self.grad.data();
      const std::size_t nc = self.data.size();
      for (std::size_t j = 0; j < nc; ++j) {
        const double g = dy[j] / double(hw);
        double* row = dx + j * hw;
        for (std::size_t i = 0; i < hw; ++i) row[i] += g;
      }
    }
  });
}

Tensor4 softmax_cross_entropy(const Tensor4& logits, const std::vector<int>& labels) {
  check(logits.defined(), "shape", "softmax_cross_entropy: undefined input");
  const Shape4& s = logits.shape();
  check(s.h == 1 && s.w == 1, "shape",
        "softmax_cross_entropy: logits must be (n,c,1,1), got " + s.str());
  check(labels.size() == std::size_t(s.n), "shape",
        "softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for batch " +
            std::to_string(s.n));
  const int C = s.c;
  for (int lab : labels)
    check(lab >= 0 && lab < C, "shape",
          "softmax_cross_entropy: label " + std::to_string(lab) + " outside [0," +
              std::to_string(C) + ")");

  auto probs = std::make_shared<std::vector<double>>(std::size_t(s.n) * C);
  const double* ld = logits.data().data();
  double loss = 0.0;
  for (int n = 0; n < s.n; ++n) {
    const double* row = ld + std::size_t(n) * C;
    double mx = row[0];
    for (int c = 1; c < C; ++c) mx = std::max(mx, row[c]);
    double z = 0.0;
    for (int c = 0; c < C; ++c) z += std::exp(row[c] - mx);
    for (int c = 0; c < C; ++c) (*probs)[std::size_t(n) * C + c] = std::exp(row[c] - mx) / z;
    loss += std::log(z) + mx - row[labels[n]];
  }
  const double inv_n = 1.0 / double(s.n);
  std::vector<int> labs = labels;
  return make_node({1, 1, 1, 1}, {loss * inv_n}, {logits},
                   [logits, probs, labs, inv_n, C](TensorImpl& self) {
    if (double* dx = sink(logits)) {
      const double g = self.grad[0] * inv_n;
      const int n = logits.shape().n;
      for (int i = 0; i < n; ++i)
        for (int c = 0; c < C; ++c) {
          const std::size_t k = std::size_t(i) * C + c;
          dx[k] += g * ((*probs)[k] - (c == labs[i] ? 1.0 : 0.0));
        }
    }
  });
}

void backward(const Tensor4& loss) {
  check(loss.defined(), "usage", "backward: undefined tensor");
  check(loss.numel() == 1, "shape", "backward: loss must be scalar, got " + loss.shape().str());
  check(std::isfinite(loss.item()), "numeric", "backward: non-finite loss");
  check(loss.get()->requires_grad, "usage", "backward: loss has no tape");

  // Iterative post-order DFS; reverse post-order is a topological order of
  // the tape, so every node runs before the nodes it depends on.
  std::vector<TensorImpl*> order;
  std::unordered_set<TensorImpl*> visited;
  struct Frame {
    TensorImpl* node;
    std::size_t next;
  };
  std::vector<Frame> stack{{loss.get(), 0}};
  visited.insert(loss.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.node->parents.size()) {
      TensorImpl* p = f.node->parents[f.next++].get();
      if (visited.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }
  for (TensorImpl* nd : order)
    if (nd->requires_grad) nd->grad.assign(nd->shape.numel(), 0.0);
  loss.get()->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl* nd = *it;
    if (nd->requires_grad && nd->backward_fn) nd->backward_fn(*nd);
  }
}

}  // namespace p2c

#pragma once

#include <vector>

#include "p2c/tensor.hpp"

namespace p2c {

struct ConvSpec {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int padding = 0;
};

// conv2d: weight (out,in,k,k), optional bias (1,out,1,1) (undefined handle =
// no bias). Output spatial size floor((in + 2p - k)/s) + 1.
Tensor4 conv2d(const Tensor4& x, const Tensor4& weight, const Tensor4& bias, const ConvSpec& spec);

// conv_transpose2d: weight (in,out,k,k) where "in" is the input's channel
// count; adjoint of the matching conv2d. Output spatial size (in-1)*s - 2p + k.
Tensor4 conv_transpose2d(const Tensor4& x, const Tensor4& weight, const Tensor4& bias,
                         const ConvSpec& spec);

// Per-(sample,channel) normalization over H*W with learned scale/shift, each
// shaped (1,c,1,1). Population variance, eps inside the square root.
Tensor4 instance_norm2d(const Tensor4& x, const Tensor4& scale, const Tensor4& shift,
                        double eps = 1e-5);

Tensor4 relu(const Tensor4& x);
Tensor4 leaky_relu(const Tensor4& x, double slope = 0.2);
Tensor4 tanh(const Tensor4& x);
Tensor4 sigmoid(const Tensor4& x);

Tensor4 add(const Tensor4& a, const Tensor4& b);
Tensor4 scale(const Tensor4& a, double k);

// mean(|a - b|) over all elements, scalar output. Subgradient sign(0) = 0.
Tensor4 l1_mean(const Tensor4& a, const Tensor4& b);

// -mean(log x), scalar; x clamped to >= 1e-12 inside the log.
Tensor4 neg_mean_log(const Tensor4& x);
// -mean(log(1 - x)), scalar; 1-x clamped to >= 1e-12 inside the log.
Tensor4 neg_mean_log1m(const Tensor4& x);

// Global average pool to (n,c,1,1).
Tensor4 mean_spatial(const Tensor4& x);

// Mean cross entropy of row-wise softmax over channels of (n,c,1,1) logits.
Tensor4 softmax_cross_entropy(const Tensor4& logits, const std::vector<int>& labels);

// Reverse pass from a finite scalar loss. Zeroes the gradients of every
// requires-grad node reachable from loss, then accumulates.
void backward(const Tensor4& loss);

}  // namespace p2c

#pragma once

#include "rcsb/tensor.hpp"

// Serial nested-loop reference implementations. Deliberately naive: these are
// the oracles the parallel kernels are tested against and the baseline the
// benchmark compares with. Keep them obvious, not fast.
namespace rcsb::ref {

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad);
Tensor bilinear_resize(const Tensor& x, int out_h, int out_w);
Tensor channel_group_max(const Tensor& x, int out_channels);
Tensor box_mean(const Tensor& x, int k);
Tensor maxpool_3x3_s2(const Tensor& x);

// Per-channel affine y = (x - mean[c]) / sqrt(var[c] + eps) * gamma[c] + beta[c].
Tensor channel_affine(const Tensor& x, const Tensor& mean, const Tensor& var,
                      const Tensor& gamma, const Tensor& beta, Scalar eps);

Tensor leaky_relu(const Tensor& x, Scalar slope);
Tensor sigmoid(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor concat_channels(const Tensor& a, const Tensor& b);

// Binary morphology with a k x k square structuring element, zero padding.
Tensor dilate(const Tensor& mask, int k);
Tensor erode(const Tensor& mask, int k);

}  // namespace rcsb::ref

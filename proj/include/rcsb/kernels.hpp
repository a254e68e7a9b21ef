#pragma once

#include <vector>

#include "rcsb/tensor.hpp"

// OpenMP-parallel compute kernels. Every kernel parallelizes over independent
// output slices (image/channel planes), so results are bitwise deterministic
// for any thread count. Serial nested-loop counterparts live in rcsb::ref and
// are used as test oracles and benchmark baselines.
namespace rcsb::kernels {

// y = conv(x, w) + b. x:[n,ci,h,w], w:[co,ci,kh,kw], b:[co] or empty. Zero padding.
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad);
Tensor conv2d_backward_input(const Tensor& grad_out, const Tensor& w, int in_h, int in_w, int stride, int pad);
Tensor conv2d_backward_weight(const Tensor& grad_out, const Tensor& x, int kh, int kw, int stride, int pad);
Tensor conv2d_backward_bias(const Tensor& grad_out);

// Bilinear resize to (out_h, out_w), half-pixel-center convention, edges clamped.
Tensor bilinear_resize(const Tensor& x, int out_h, int out_w);
Tensor bilinear_resize_backward(const Tensor& grad_out, int in_h, int in_w);

// 3x3 max pooling, stride 2, padding 1 (the classifier-backbone stem pool).
// argmax holds the flat input index that produced each output element.
Tensor maxpool_3x3_s2(const Tensor& x, std::vector<int64_t>* argmax);
Tensor maxpool_3x3_s2_backward(const Tensor& grad_out, const std::vector<int64_t>& argmax, const std::vector<int>& in_shape);

// Grouped channel max: n input channels reduced to m = out_channels groups,
// output channel j = max over input channels [j*(n/m), (j+1)*(n/m)).
Tensor channel_group_max(const Tensor& x, int out_channels, std::vector<int64_t>* argmax);
Tensor channel_group_max_backward(const Tensor& grad_out, const std::vector<int64_t>& argmax, const std::vector<int>& in_shape);

// k x k mean filter, stride 1, zero padding (k-1)/2, zeros counted in the mean.
// Computed with per-plane integral images.
Tensor box_mean(const Tensor& x, int k);

// Per-channel mean/variance over (n, h, w); biased variance.
void batch_moments(const Tensor& x, Tensor& mean, Tensor& var);

}  // namespace rcsb::kernels

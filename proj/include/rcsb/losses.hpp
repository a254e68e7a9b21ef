#pragma once

#include "rcsb/autograd.hpp"
#include "rcsb/tensor.hpp"

// Training losses over post-sigmoid probability maps. Values are nonnegative
// penalties: the cross-entropy term is -[y*log(x) + (1-y)*log(1-x)] and the
// unconfidence term lambda*W adds a positive cost for predictions near 0.5.
// Each scalar function optionally emits the analytic gradient w.r.t. its
// inputs; the ag::Var overloads wrap those gradients into graph nodes.
namespace rcsb::losses {

// predictions are clamped to [kClampEps, 1 - kClampEps] before any log
constexpr Scalar kClampEps = 1e-7;

// W = beta * x * (1 - x); requires x in [0,1]
Tensor confidence_weight(const Tensor& x, Scalar beta);
// per-pixel W*bce + lambda*W map (weight-map dumps use lambda = 1)
Tensor confidence_loss_map(const Tensor& x, const Tensor& y, Scalar beta, Scalar lambda);
// W = theta * max(x_other, y_other) + 1, the cross-stream confinement weight
Tensor dc_weight_map(const Tensor& x_other, const Tensor& y_other, Scalar theta);
// alpha * |y - x|^gamma, kept for weight-map visualization only
Tensor focal_weight(const Tensor& x, const Tensor& y, Scalar alpha, Scalar gamma);

// mean over pixels of [W_c * bce(x,y) + lambda * W_c]
Scalar confidence_loss(const Tensor& x, const Tensor& y, Scalar beta, Scalar lambda,
                       Tensor* dx = nullptr, Tensor* dy = nullptr);

// mean[W_sal * bce(x_sal,y_sal)] + mean[W_ctr * bce(x_ctr,y_ctr)] with each
// weight map built from the other stream's prediction/GT pair
Scalar dual_confinement_loss(const Tensor& x_sal, const Tensor& y_sal,
                             const Tensor& x_ctr, const Tensor& y_ctr, Scalar theta,
                             Tensor* dx_sal = nullptr, Tensor* dy_sal = nullptr,
                             Tensor* dx_ctr = nullptr, Tensor* dy_ctr = nullptr);

// 1 - (sum(w*x*y)+1)/(sum(w*(x+y-x*y))+1) with w = 1 + 5*|boxmean_31(y) - y|,
// computed per batch item and averaged
Scalar weighted_iou_loss(const Tensor& x, const Tensor& y, Tensor* dx = nullptr);

// plain mean binary cross entropy
Scalar bce_loss(const Tensor& x, const Tensor& y, Tensor* dx = nullptr, Tensor* dy = nullptr);

// graph-building overloads (ground truths stay constant)
ag::Var confidence_loss(const ag::Var& x, const Tensor& y, Scalar beta, Scalar lambda);
ag::Var dual_confinement_loss(const ag::Var& x_sal, const Tensor& y_sal,
                              const ag::Var& x_ctr, const Tensor& y_ctr, Scalar theta);
ag::Var weighted_iou_loss(const ag::Var& x, const Tensor& y);
ag::Var bce_loss(const ag::Var& x, const Tensor& y);

}  // namespace rcsb::losses

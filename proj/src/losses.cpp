#include "rcsb/losses.hpp"

#include <cmath>

#include "rcsb/kernels.hpp"

namespace rcsb::losses {

namespace {

inline Scalar clamp01(Scalar v) {
    return std::min(Scalar(1) - kClampEps, std::max(kClampEps, v));
}

// -[y*log(x) + (1-y)*log(1-x)] on a clamped prediction
inline Scalar bce_term(Scalar xc, Scalar y) {
    return -(y * std::log(xc) + (1 - y) * std::log(1 - xc));
}
inline Scalar bce_term_dx(Scalar xc, Scalar y) {
    return (xc - y) / (xc * (1 - xc));
}
inline Scalar bce_term_dy(Scalar xc) {
    return std::log((1 - xc) / xc);
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    RCSB_CHECK(a.same_shape(b), what, ": shape mismatch ", a.shape_str(), " vs ", b.shape_str());
}

}  // namespace

Tensor confidence_weight(const Tensor& x, Scalar beta) {
    Tensor w = x;
    for (int64_t i = 0; i < w.numel(); ++i) {
        RCSB_CHECK(x[i] >= 0 && x[i] <= 1, "confidence_weight: value ", x[i], " outside [0,1]");
        w[i] = beta * x[i] * (1 - x[i]);
    }
    return w;
}

Tensor confidence_loss_map(const Tensor& x, const Tensor& y, Scalar beta, Scalar lambda) {
    check_same_shape(x, y, "confidence_loss_map");
    Tensor m = x;
    for (int64_t i = 0; i < m.numel(); ++i) {
        const Scalar xc = clamp01(x[i]);
        const Scalar w = beta * xc * (1 - xc);
        m[i] = w * bce_term(xc, y[i]) + lambda * w;
    }
    return m;
}

Tensor dc_weight_map(const Tensor& x_other, const Tensor& y_other, Scalar theta) {
    check_same_shape(x_other, y_other, "dc_weight_map");
    Tensor w = x_other;
    for (int64_t i = 0; i < w.numel(); ++i) w[i] = theta * std::max(x_other[i], y_other[i]) + 1;
    return w;
}

Tensor focal_weight(const Tensor& x, const Tensor& y, Scalar alpha, Scalar gamma) {
    check_same_shape(x, y, "focal_weight");
    Tensor w = x;
    for (int64_t i = 0; i < w.numel(); ++i) w[i] = alpha * std::pow(std::abs(y[i] - x[i]), gamma);
    return w;
}

Scalar confidence_loss(const Tensor& x, const Tensor& y, Scalar beta, Scalar lambda,
                       Tensor* dx, Tensor* dy) {
    check_same_shape(x, y, "confidence_loss");
    const int64_t n = x.numel();
    const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
    if (dx) *dx = Tensor(x.shape());
    if (dy) *dy = Tensor(x.shape());
    Scalar total = 0;
    for (int64_t i = 0; i < n; ++i) {
        const Scalar xc = clamp01(x[i]);
        const Scalar w = beta * xc * (1 - xc);
        const Scalar ell = bce_term(xc, y[i]);
        total += w * ell + lambda * w;
        if (dx) {
            const bool clamped = x[i] < kClampEps || x[i] > 1 - kClampEps;
            (*dx)[i] = clamped ? 0
                               : (beta * (1 - 2 * xc) * (ell + lambda) + w * bce_term_dx(xc, y[i])) * inv_n;
        }
        if (dy) (*dy)[i] = w * bce_term_dy(xc) * inv_n;
    }
    return total * inv_n;
}

Scalar dual_confinement_loss(const Tensor& x_sal, const Tensor& y_sal,
                             const Tensor& x_ctr, const Tensor& y_ctr, Scalar theta,
                             Tensor* dx_sal, Tensor* dy_sal, Tensor* dx_ctr, Tensor* dy_ctr) {
    check_same_shape(x_sal, y_sal, "dual_confinement_loss");
    check_same_shape(x_sal, x_ctr, "dual_confinement_loss");
    check_same_shape(x_ctr, y_ctr, "dual_confinement_loss");
    const int64_t n = x_sal.numel();
    const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
    for (Tensor* g : {dx_sal, dy_sal, dx_ctr, dy_ctr})
        if (g) *g = Tensor(x_sal.shape());

    Scalar total = 0;
    for (int64_t i = 0; i < n; ++i) {
        const Scalar xs = clamp01(x_sal[i]), xc = clamp01(x_ctr[i]);
        const Scalar ys = y_sal[i], yc = y_ctr[i];
        const Scalar w_sal = theta * std::max(xc, yc) + 1;  // contour pair confines saliency
        const Scalar w_ctr = theta * std::max(xs, ys) + 1;  // and vice versa
        const Scalar ell_s = bce_term(xs, ys);
        const Scalar ell_c = bce_term(xc, yc);
        total += w_sal * ell_s + w_ctr * ell_c;

        const bool s_clamped = x_sal[i] < kClampEps || x_sal[i] > 1 - kClampEps;
        const bool c_clamped = x_ctr[i] < kClampEps || x_ctr[i] > 1 - kClampEps;
        if (dx_sal)
            (*dx_sal)[i] = s_clamped ? 0
                                     : (w_sal * bce_term_dx(xs, ys) +
                                        (xs > ys ? theta * ell_c : 0)) * inv_n;
        if (dy_sal)
            (*dy_sal)[i] = (w_sal * bce_term_dy(xs) + (ys >= xs ? theta * ell_c : 0)) * inv_n;
        if (dx_ctr)
            (*dx_ctr)[i] = c_clamped ? 0
                                     : (w_ctr * bce_term_dx(xc, yc) +
                                        (xc > yc ? theta * ell_s : 0)) * inv_n;
        if (dy_ctr)
            (*dy_ctr)[i] = (w_ctr * bce_term_dy(xc) + (yc >= xc ? theta * ell_s : 0)) * inv_n;
    }
    return total * inv_n;
}

Scalar weighted_iou_loss(const Tensor& x, const Tensor& y, Tensor* dx) {
    check_same_shape(x, y, "weighted_iou_loss");
    RCSB_CHECK(x.rank() == 4, "weighted_iou_loss expects [n,1,h,w], got ", x.shape_str());
    const Tensor local_mean = kernels::box_mean(y, 31);
    const int batch = x.n();
    const int64_t per_item = x.numel() / batch;
    if (dx) *dx = Tensor(x.shape());

    Scalar total = 0;
    for (int b = 0; b < batch; ++b) {
        const int64_t base = b * per_item;
        Scalar inter = 0, uni = 0;
        for (int64_t i = 0; i < per_item; ++i) {
            const Scalar w = 1 + 5 * std::abs(local_mean[base + i] - y[base + i]);
            inter += w * x[base + i] * y[base + i];
            uni += w * (x[base + i] + y[base + i] - x[base + i] * y[base + i]);
        }
        total += 1 - (inter + 1) / (uni + 1);
        if (dx) {
            const Scalar denom = (uni + 1) * (uni + 1);
            for (int64_t i = 0; i < per_item; ++i) {
                const Scalar w = 1 + 5 * std::abs(local_mean[base + i] - y[base + i]);
                (*dx)[base + i] = -(w * y[base + i] * (uni + 1) -
                                    (inter + 1) * w * (1 - y[base + i])) /
                                  denom / static_cast<Scalar>(batch);
            }
        }
    }
    return total / static_cast<Scalar>(batch);
}

Scalar bce_loss(const Tensor& x, const Tensor& y, Tensor* dx, Tensor* dy) {
    check_same_shape(x, y, "bce_loss");
    const int64_t n = x.numel();
    const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
    if (dx) *dx = Tensor(x.shape());
    if (dy) *dy = Tensor(x.shape());
    Scalar total = 0;
    for (int64_t i = 0; i < n; ++i) {
        const Scalar xc = clamp01(x[i]);
        total += bce_term(xc, y[i]);
        if (dx) {
            const bool clamped = x[i] < kClampEps || x[i] > 1 - kClampEps;
            (*dx)[i] = clamped ? 0 : bce_term_dx(xc, y[i]) * inv_n;
        }
        if (dy) (*dy)[i] = bce_term_dy(xc) * inv_n;
    }
    return total * inv_n;
}

ag::Var confidence_loss(const ag::Var& x, const Tensor& y, Scalar beta, Scalar lambda) {
    Tensor dx;
    const Scalar v = confidence_loss(x.value(), y, beta, lambda, &dx);
    return ag::custom_scalar(v, {x}, {std::move(dx)});
}

ag::Var dual_confinement_loss(const ag::Var& x_sal, const Tensor& y_sal,
                              const ag::Var& x_ctr, const Tensor& y_ctr, Scalar theta) {
    Tensor dxs, dxc;
    const Scalar v = dual_confinement_loss(x_sal.value(), y_sal, x_ctr.value(), y_ctr, theta,
                                           &dxs, nullptr, &dxc, nullptr);
    return ag::custom_scalar(v, {x_sal, x_ctr}, {std::move(dxs), std::move(dxc)});
}

ag::Var weighted_iou_loss(const ag::Var& x, const Tensor& y) {
    Tensor dx;
    const Scalar v = weighted_iou_loss(x.value(), y, &dx);
    return ag::custom_scalar(v, {x}, {std::move(dx)});
}

ag::Var bce_loss(const ag::Var& x, const Tensor& y) {
    Tensor dx;
    const Scalar v = bce_loss(x.value(), y, &dx);
    return ag::custom_scalar(v, {x}, {std::move(dx)});
}

}  // namespace rcsb::losses

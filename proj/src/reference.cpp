#include "rcsb/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rcsb::ref {

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
    const int n = x.n(), ci = x.c(), ih = x.h(), iw = x.w();
    const int co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int oh = (ih + 2 * pad - kh) / stride + 1;
    const int ow = (iw + 2 * pad - kw) / stride + 1;
    Tensor y({n, co, oh, ow});
    for (int in = 0; in < n; ++in)
        for (int oc = 0; oc < co; ++oc)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    Scalar acc = (b.defined() && b.numel() > 0) ? b[oc] : Scalar(0);
                    for (int ic = 0; ic < ci; ++ic)
                        for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx) {
                                const int iy = oy * stride - pad + ky;
                                const int ix = ox * stride - pad + kx;
                                if (iy < 0 || iy >= ih || ix < 0 || ix >= iw) continue;
                                acc += w.at4(oc, ic, ky, kx) * x.at4(in, ic, iy, ix);
                            }
                    y.at4(in, oc, oy, ox) = acc;
                }
    return y;
}

Tensor bilinear_resize(const Tensor& x, int out_h, int out_w) {
    const int n = x.n(), c = x.c(), ih = x.h(), iw = x.w();
    Tensor y({n, c, out_h, out_w});
    for (int in = 0; in < n; ++in)
        for (int ic = 0; ic < c; ++ic)
            for (int oy = 0; oy < out_h; ++oy)
                for (int ox = 0; ox < out_w; ++ox) {
                    Scalar sy = (oy + 0.5) * static_cast<Scalar>(ih) / out_h - 0.5;
                    Scalar sx = (ox + 0.5) * static_cast<Scalar>(iw) / out_w - 0.5;
                    sy = std::clamp(sy, Scalar(0), static_cast<Scalar>(ih - 1));
                    sx = std::clamp(sx, Scalar(0), static_cast<Scalar>(iw - 1));
                    const int y0 = static_cast<int>(std::floor(sy));
                    const int x0 = static_cast<int>(std::floor(sx));
                    const int y1 = std::min(y0 + 1, ih - 1);
                    const int x1 = std::min(x0 + 1, iw - 1);
                    const Scalar fy = sy - y0, fx = sx - x0;
                    y.at4(in, ic, oy, ox) =
                        x.at4(in, ic, y0, x0) * (1 - fy) * (1 - fx) +
                        x.at4(in, ic, y0, x1) * (1 - fy) * fx +
                        x.at4(in, ic, y1, x0) * fy * (1 - fx) +
                        x.at4(in, ic, y1, x1) * fy * fx;
                }
    return y;
}

Tensor channel_group_max(const Tensor& x, int out_channels) {
    const int n = x.n(), ci = x.c(), h = x.h(), w = x.w();
    const int group = ci / out_channels;
    Tensor y({n, out_channels, h, w});
    for (int in = 0; in < n; ++in)
        for (int oc = 0; oc < out_channels; ++oc)
            for (int yy = 0; yy < h; ++yy)
                for (int xx = 0; xx < w; ++xx) {
                    Scalar best = -std::numeric_limits<Scalar>::infinity();
                    for (int k = 0; k < group; ++k)
                        best = std::max(best, x.at4(in, oc * group + k, yy, xx));
                    y.at4(in, oc, yy, xx) = best;
                }
    return y;
}

Tensor box_mean(const Tensor& x, int k) {
    const int n = x.n(), c = x.c(), h = x.h(), w = x.w();
    const int r = (k - 1) / 2;
    Tensor y({n, c, h, w});
    for (int in = 0; in < n; ++in)
        for (int ic = 0; ic < c; ++ic)
            for (int yy = 0; yy < h; ++yy)
                for (int xx = 0; xx < w; ++xx) {
                    Scalar s = 0;
                    for (int dy = -r; dy <= r; ++dy)
                        for (int dx = -r; dx <= r; ++dx) {
                            const int iy = yy + dy, ix = xx + dx;
                            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                            s += x.at4(in, ic, iy, ix);
                        }
                    y.at4(in, ic, yy, xx) = s / (static_cast<Scalar>(k) * k);
                }
    return y;
}

Tensor maxpool_3x3_s2(const Tensor& x) {
    const int n = x.n(), c = x.c(), ih = x.h(), iw = x.w();
    const int oh = (ih + 2 - 3) / 2 + 1, ow = (iw + 2 - 3) / 2 + 1;
    Tensor y({n, c, oh, ow});
    for (int in = 0; in < n; ++in)
        for (int ic = 0; ic < c; ++ic)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    Scalar best = -std::numeric_limits<Scalar>::infinity();
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx) {
                            const int iy = oy * 2 - 1 + ky, ix = ox * 2 - 1 + kx;
                            if (iy < 0 || iy >= ih || ix < 0 || ix >= iw) continue;
                            best = std::max(best, x.at4(in, ic, iy, ix));
                        }
                    y.at4(in, ic, oy, ox) = best;
                }
    return y;
}

Tensor channel_affine(const Tensor& x, const Tensor& mean, const Tensor& var,
                      const Tensor& gamma, const Tensor& beta, Scalar eps) {
    const int n = x.n(), c = x.c(), h = x.h(), w = x.w();
    Tensor y({n, c, h, w});
    for (int in = 0; in < n; ++in)
        for (int ic = 0; ic < c; ++ic) {
            const Scalar inv = Scalar(1) / std::sqrt(var[ic] + eps);
            for (int yy = 0; yy < h; ++yy)
                for (int xx = 0; xx < w; ++xx)
                    y.at4(in, ic, yy, xx) = (x.at4(in, ic, yy, xx) - mean[ic]) * inv * gamma[ic] + beta[ic];
        }
    return y;
}

Tensor leaky_relu(const Tensor& x, Scalar slope) {
    Tensor y = x;
    for (int64_t i = 0; i < y.numel(); ++i)
        if (y[i] < 0) y[i] *= slope;
    return y;
}

Tensor sigmoid(const Tensor& x) {
    Tensor y = x;
    for (int64_t i = 0; i < y.numel(); ++i) y[i] = Scalar(1) / (Scalar(1) + std::exp(-y[i]));
    return y;
}

Tensor add(const Tensor& a, const Tensor& b) {
    Tensor y = a;
    for (int64_t i = 0; i < y.numel(); ++i) y[i] += b[i];
    return y;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    const int n = a.n(), h = a.h(), w = a.w();
    Tensor y({n, a.c() + b.c(), h, w});
    for (int in = 0; in < n; ++in) {
        for (int ic = 0; ic < a.c(); ++ic)
            for (int yy = 0; yy < h; ++yy)
                for (int xx = 0; xx < w; ++xx) y.at4(in, ic, yy, xx) = a.at4(in, ic, yy, xx);
        for (int ic = 0; ic < b.c(); ++ic)
            for (int yy = 0; yy < h; ++yy)
                for (int xx = 0; xx < w; ++xx) y.at4(in, a.c() + ic, yy, xx) = b.at4(in, ic, yy, xx);
    }
    return y;
}

Tensor dilate(const Tensor& mask, int k) {
    const int n = mask.n(), c = mask.c(), h = mask.h(), w = mask.w();
    const int r = (k - 1) / 2;
    Tensor y({n, c, h, w});
    for (int in = 0; in < n; ++in)
        for (int ic = 0; ic < c; ++ic)
            for (int yy = 0; yy < h; ++yy)
                for (int xx = 0; xx < w; ++xx) {
                    Scalar best = 0;
                    for (int dy = -r; dy <= r && best == 0; ++dy)
                        for (int dx = -r; dx <= r; ++dx) {
                            const int iy = yy + dy, ix = xx + dx;
                            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                            if (mask.at4(in, ic, iy, ix) > 0) {
                                best = 1;
                                break;
                            }
                        }
                    y.at4(in, ic, yy, xx) = best;
                }
    return y;
}

Tensor erode(const Tensor& mask, int k) {
    const int n = mask.n(), c = mask.c(), h = mask.h(), w = mask.w();
    const int r = (k - 1) / 2;
    Tensor y({n, c, h, w});
    for (int in = 0; in < n; ++in)
        for (int ic = 0; ic < c; ++ic)
            for (int yy = 0; yy < h; ++yy)
                for (int xx = 0; xx < w; ++xx) {
                    Scalar all_on = 1;
                    for (int dy = -r; dy <= r && all_on == 1; ++dy)
                        for (int dx = -r; dx <= r; ++dx) {
                            const int iy = yy + dy, ix = xx + dx;
                            // outside the image counts as background
                            if (iy < 0 || iy >= h || ix < 0 || ix >= w ||
                                mask.at4(in, ic, iy, ix) == 0) {
                                all_on = 0;
                                break;
                            }
                        }
                    y.at4(in, ic, yy, xx) = all_on;
                }
    return y;
}

}  // namespace rcsb::ref

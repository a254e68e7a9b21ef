#include "rcsb/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace rcsb::kernels {

namespace {
inline int out_extent(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}
}  // namespace

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
    const int n = x.n(), ci = x.c(), ih = x.h(), iw = x.w();
    const int co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    RCSB_CHECK(w.dim(1) == ci, "conv2d: weight expects ", w.dim(1), " input channels, got ", ci);
    const int oh = out_extent(ih, kh, stride, pad);
    const int ow = out_extent(iw, kw, stride, pad);
    RCSB_CHECK(oh > 0 && ow > 0, "conv2d: output would be empty for input ", x.shape_str());
    Tensor y({n, co, oh, ow});
    const bool has_bias = b.defined() && b.numel() > 0;

#pragma omp parallel for collapse(2) schedule(static)
    for (int in = 0; in < n; ++in) {
        for (int oc = 0; oc < co; ++oc) {
            Scalar* yp = y.data() + y.idx4(in, oc, 0, 0);
            if (has_bias) {
                const Scalar bv = b[oc];
                for (int i = 0; i < oh * ow; ++i) yp[i] = bv;
            }
            for (int ic = 0; ic < ci; ++ic) {
                const Scalar* xp = x.data() + x.idx4(in, ic, 0, 0);
                for (int ky = 0; ky < kh; ++ky) {
                    for (int kx = 0; kx < kw; ++kx) {
                        const Scalar wv = w.at4(oc, ic, ky, kx);
                        if (wv == 0.0) continue;
                        for (int oy = 0; oy < oh; ++oy) {
                            const int iy = oy * stride - pad + ky;
                            if (iy < 0 || iy >= ih) continue;
                            // valid ox range so that ix = ox*stride - pad + kx stays in bounds
                            int ox_lo = 0, ox_hi = ow;  // [lo, hi)
                            while (ox_lo < ow && ox_lo * stride - pad + kx < 0) ++ox_lo;
                            while (ox_hi > ox_lo && (ox_hi - 1) * stride - pad + kx >= iw) --ox_hi;
                            const Scalar* xrow = xp + static_cast<int64_t>(iy) * iw;
                            Scalar* yrow = yp + static_cast<int64_t>(oy) * ow;
                            const int shift = kx - pad;
                            if (stride == 1) {
                                for (int ox = ox_lo; ox < ox_hi; ++ox) yrow[ox] += wv * xrow[ox + shift];
                            } else {
                                for (int ox = ox_lo; ox < ox_hi; ++ox) yrow[ox] += wv * xrow[ox * stride + shift];
                            }
                        }
                    }
                }
            }
        }
    }
    return y;
}

Tensor conv2d_backward_input(const Tensor& grad_out, const Tensor& w, int in_h, int in_w, int stride, int pad) {
    const int n = grad_out.n(), co = grad_out.c(), oh = grad_out.h(), ow = grad_out.w();
    const int ci = w.dim(1), kh = w.dim(2), kw = w.dim(3);
    Tensor dx({n, ci, in_h, in_w});

#pragma omp parallel for collapse(2) schedule(static)
    for (int in = 0; in < n; ++in) {
        for (int ic = 0; ic < ci; ++ic) {
            Scalar* dxp = dx.data() + dx.idx4(in, ic, 0, 0);
            for (int oc = 0; oc < co; ++oc) {
                const Scalar* gp = grad_out.data() + grad_out.idx4(in, oc, 0, 0);
                for (int ky = 0; ky < kh; ++ky) {
                    for (int kx = 0; kx < kw; ++kx) {
                        const Scalar wv = w.at4(oc, ic, ky, kx);
                        if (wv == 0.0) continue;
                        for (int oy = 0; oy < oh; ++oy) {
                            const int iy = oy * stride - pad + ky;
                            if (iy < 0 || iy >= in_h) continue;
                            int ox_lo = 0, ox_hi = ow;
                            while (ox_lo < ow && ox_lo * stride - pad + kx < 0) ++ox_lo;
                            while (ox_hi > ox_lo && (ox_hi - 1) * stride - pad + kx >= in_w) --ox_hi;
                            Scalar* dxrow = dxp + static_cast<int64_t>(iy) * in_w;
                            const Scalar* grow = gp + static_cast<int64_t>(oy) * ow;
                            const int shift = kx - pad;
                            if (stride == 1) {
                                for (int ox = ox_lo; ox < ox_hi; ++ox) dxrow[ox + shift] += wv * grow[ox];
                            } else {
                                for (int ox = ox_lo; ox < ox_hi; ++ox) dxrow[ox * stride + shift] += wv * grow[ox];
                            }
                        }
                    }
                }
            }
        }
    }
    return dx;
}

Tensor conv2d_backward_weight(const Tensor& grad_out, const Tensor& x, int kh, int kw, int stride, int pad) {
    const int n = x.n(), ci = x.c(), ih = x.h(), iw = x.w();
    const int co = grad_out.c(), oh = grad_out.h(), ow = grad_out.w();
    Tensor dw({co, ci, kh, kw});

#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < co; ++oc) {
        for (int in = 0; in < n; ++in) {
            const Scalar* gp = grad_out.data() + grad_out.idx4(in, oc, 0, 0);
            for (int ic = 0; ic < ci; ++ic) {
                const Scalar* xp = x.data() + x.idx4(in, ic, 0, 0);
                for (int ky = 0; ky < kh; ++ky) {
                    for (int kx = 0; kx < kw; ++kx) {
                        Scalar acc = 0;
                        for (int oy = 0; oy < oh; ++oy) {
                            const int iy = oy * stride - pad + ky;
                            if (iy < 0 || iy >= ih) continue;
                            int ox_lo = 0, ox_hi = ow;
                            while (ox_lo < ow && ox_lo * stride - pad + kx < 0) ++ox_lo;
                            while (ox_hi > ox_lo && (ox_hi - 1) * stride - pad + kx >= iw) --ox_hi;
                            const Scalar* xrow = xp + static_cast<int64_t>(iy) * iw;
                            const Scalar* grow = gp + static_cast<int64_t>(oy) * ow;
                            const int shift = kx - pad;
                            if (stride == 1) {
                                for (int ox = ox_lo; ox < ox_hi; ++ox) acc += grow[ox] * xrow[ox + shift];
                            } else {
                                for (int ox = ox_lo; ox < ox_hi; ++ox) acc += grow[ox] * xrow[ox * stride + shift];
                            }
                        }
                        dw.at4(oc, ic, ky, kx) += acc;
                    }
                }
            }
        }
    }
    return dw;
}

Tensor conv2d_backward_bias(const Tensor& grad_out) {
    const int n = grad_out.n(), co = grad_out.c();
    const int64_t plane = static_cast<int64_t>(grad_out.h()) * grad_out.w();
    Tensor db({co});
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < co; ++oc) {
        Scalar acc = 0;
        for (int in = 0; in < n; ++in) {
            const Scalar* gp = grad_out.data() + grad_out.idx4(in, oc, 0, 0);
            for (int64_t i = 0; i < plane; ++i) acc += gp[i];
        }
        db[oc] = acc;
    }
    return db;
}

namespace {
struct LerpCoord {
    int lo, hi;
    Scalar w_hi;  // weight of the hi sample; lo gets 1 - w_hi
};
// Half-pixel-center source coordinate, clamped to the valid range.
inline LerpCoord lerp_coord(int out_i, int out_n, int in_n) {
    const Scalar scale = static_cast<Scalar>(in_n) / static_cast<Scalar>(out_n);
    Scalar src = (static_cast<Scalar>(out_i) + 0.5) * scale - 0.5;
    src = std::clamp(src, Scalar(0), static_cast<Scalar>(in_n - 1));
    const int lo = static_cast<int>(std::floor(src));
    const int hi = std::min(lo + 1, in_n - 1);
    return {lo, hi, src - static_cast<Scalar>(lo)};
}
}  // namespace

Tensor bilinear_resize(const Tensor& x, int out_h, int out_w) {
    const int n = x.n(), c = x.c(), ih = x.h(), iw = x.w();
    if (out_h == ih && out_w == iw) return x;
    Tensor y({n, c, out_h, out_w});
    std::vector<LerpCoord> ys(static_cast<size_t>(out_h)), xs(static_cast<size_t>(out_w));
    for (int i = 0; i < out_h; ++i) ys[static_cast<size_t>(i)] = lerp_coord(i, out_h, ih);
    for (int i = 0; i < out_w; ++i) xs[static_cast<size_t>(i)] = lerp_coord(i, out_w, iw);

#pragma omp parallel for collapse(2) schedule(static)
    for (int in = 0; in < n; ++in) {
        for (int ic = 0; ic < c; ++ic) {
            const Scalar* xp = x.data() + x.idx4(in, ic, 0, 0);
            Scalar* yp = y.data() + y.idx4(in, ic, 0, 0);
            for (int oy = 0; oy < out_h; ++oy) {
                const LerpCoord& cy = ys[static_cast<size_t>(oy)];
                const Scalar* row_lo = xp + static_cast<int64_t>(cy.lo) * iw;
                const Scalar* row_hi = xp + static_cast<int64_t>(cy.hi) * iw;
                Scalar* yrow = yp + static_cast<int64_t>(oy) * out_w;
                for (int ox = 0; ox < out_w; ++ox) {
                    const LerpCoord& cx = xs[static_cast<size_t>(ox)];
                    const Scalar top = row_lo[cx.lo] * (1 - cx.w_hi) + row_lo[cx.hi] * cx.w_hi;
                    const Scalar bot = row_hi[cx.lo] * (1 - cx.w_hi) + row_hi[cx.hi] * cx.w_hi;
                    yrow[ox] = top * (1 - cy.w_hi) + bot * cy.w_hi;
                }
            }
        }
    }
    return y;
}

Tensor bilinear_resize_backward(const Tensor& grad_out, int in_h, int in_w) {
    const int n = grad_out.n(), c = grad_out.c(), oh = grad_out.h(), ow = grad_out.w();
    Tensor dx({n, c, in_h, in_w});
    if (oh == in_h && ow == in_w) return grad_out;
    std::vector<LerpCoord> ys(static_cast<size_t>(oh)), xs(static_cast<size_t>(ow));
    for (int i = 0; i < oh; ++i) ys[static_cast<size_t>(i)] = lerp_coord(i, oh, in_h);
    for (int i = 0; i < ow; ++i) xs[static_cast<size_t>(i)] = lerp_coord(i, ow, in_w);

#pragma omp parallel for collapse(2) schedule(static)
    for (int in = 0; in < n; ++in) {
        for (int ic = 0; ic < c; ++ic) {
            const Scalar* gp = grad_out.data() + grad_out.idx4(in, ic, 0, 0);
            Scalar* dxp = dx.data() + dx.idx4(in, ic, 0, 0);
            for (int oy = 0; oy < oh; ++oy) {
                const LerpCoord& cy = ys[static_cast<size_t>(oy)];
                for (int ox = 0; ox < ow; ++ox) {
                    const LerpCoord& cx = xs[static_cast<size_t>(ox)];
                    const Scalar g = gp[static_cast<int64_t>(oy) * ow + ox];
                    dxp[static_cast<int64_t>(cy.lo) * in_w + cx.lo] += g * (1 - cy.w_hi) * (1 - cx.w_hi);
                    dxp[static_cast<int64_t>(cy.lo) * in_w + cx.hi] += g * (1 - cy.w_hi) * cx.w_hi;
                    dxp[static_cast<int64_t>(cy.hi) * in_w + cx.lo] += g * cy.w_hi * (1 - cx.w_hi);
                    dxp[static_cast<int64_t>(cy.hi) * in_w + cx.hi] += g * cy.w_hi * cx.w_hi;
                }
            }
        }
    }
    return dx;
}

Tensor maxpool_3x3_s2(const Tensor& x, std::vector<int64_t>* argmax) {
    const int n = x.n(), c = x.c(), ih = x.h(), iw = x.w();
    const int oh = out_extent(ih, 3, 2, 1), ow = out_extent(iw, 3, 2, 1);
    Tensor y({n, c, oh, ow});
    if (argmax) argmax->assign(static_cast<size_t>(y.numel()), -1);

#pragma omp parallel for collapse(2) schedule(static)
    for (int in = 0; in < n; ++in) {
        for (int ic = 0; ic < c; ++ic) {
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    Scalar best = -std::numeric_limits<Scalar>::infinity();
                    int64_t best_idx = -1;
                    for (int ky = 0; ky < 3; ++ky) {
                        const int iy = oy * 2 - 1 + ky;
                        if (iy < 0 || iy >= ih) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int ix = ox * 2 - 1 + kx;
                            if (ix < 0 || ix >= iw) continue;
                            const int64_t src = x.idx4(in, ic, iy, ix);
                            if (x[src] > best) {
                                best = x[src];
                                best_idx = src;
                            }
                        }
                    }
                    y.at4(in, ic, oy, ox) = best;
                    if (argmax) (*argmax)[static_cast<size_t>(y.idx4(in, ic, oy, ox))] = best_idx;
                }
            }
        }
    }
    return y;
}

Tensor maxpool_3x3_s2_backward(const Tensor& grad_out, const std::vector<int64_t>& argmax, const std::vector<int>& in_shape) {
    Tensor dx(in_shape);
    // scatter is serial: distinct outputs may share an input element
    for (int64_t i = 0; i < grad_out.numel(); ++i) {
        const int64_t src = argmax[static_cast<size_t>(i)];
        if (src >= 0) dx[src] += grad_out[i];
    }
    return dx;
}

Tensor channel_group_max(const Tensor& x, int out_channels, std::vector<int64_t>* argmax) {
    const int n = x.n(), ci = x.c(), h = x.h(), w = x.w();
    RCSB_CHECK(out_channels > 0 && ci % out_channels == 0,
               "channel_group_max: ", out_channels, " does not divide ", ci, " input channels");
    const int group = ci / out_channels;
    Tensor y({n, out_channels, h, w});
    if (argmax) argmax->assign(static_cast<size_t>(y.numel()), -1);
    const int64_t plane = static_cast<int64_t>(h) * w;

#pragma omp parallel for collapse(2) schedule(static)
    for (int in = 0; in < n; ++in) {
        for (int oc = 0; oc < out_channels; ++oc) {
            Scalar* yp = y.data() + y.idx4(in, oc, 0, 0);
            const int64_t out_base = y.idx4(in, oc, 0, 0);
            for (int64_t i = 0; i < plane; ++i) {
                Scalar best = -std::numeric_limits<Scalar>::infinity();
                int64_t best_idx = -1;
                for (int k = 0; k < group; ++k) {
                    const int64_t src = x.idx4(in, oc * group + k, 0, 0) + i;
                    if (x[src] > best) {
                        best = x[src];
                        best_idx = src;
                    }
                }
                yp[i] = best;
                if (argmax) (*argmax)[static_cast<size_t>(out_base + i)] = best_idx;
            }
        }
    }
    return y;
}

Tensor channel_group_max_backward(const Tensor& grad_out, const std::vector<int64_t>& argmax, const std::vector<int>& in_shape) {
    Tensor dx(in_shape);
    // argmax indices are unique per output element, so the scatter is race-free
    for (int64_t i = 0; i < grad_out.numel(); ++i) {
        const int64_t src = argmax[static_cast<size_t>(i)];
        if (src >= 0) dx[src] += grad_out[i];
    }
    return dx;
}

Tensor box_mean(const Tensor& x, int k) {
    RCSB_CHECK(k >= 1 && k % 2 == 1, "box_mean: kernel must be odd, got ", k);
    const int n = x.n(), c = x.c(), h = x.h(), w = x.w();
    const int r = (k - 1) / 2;
    Tensor y({n, c, h, w});
    const Scalar inv_area = Scalar(1) / (static_cast<Scalar>(k) * k);

#pragma omp parallel for collapse(2) schedule(static)
    for (int in = 0; in < n; ++in) {
        for (int ic = 0; ic < c; ++ic) {
            const Scalar* xp = x.data() + x.idx4(in, ic, 0, 0);
            Scalar* yp = y.data() + y.idx4(in, ic, 0, 0);
            // integral image with a zero top row / left column
            std::vector<Scalar> sat(static_cast<size_t>((h + 1) * (w + 1)), 0);
            for (int yy = 0; yy < h; ++yy) {
                Scalar rowsum = 0;
                for (int xx = 0; xx < w; ++xx) {
                    rowsum += xp[static_cast<int64_t>(yy) * w + xx];
                    sat[static_cast<size_t>((yy + 1) * (w + 1) + (xx + 1))] =
                        sat[static_cast<size_t>(yy * (w + 1) + (xx + 1))] + rowsum;
                }
            }
            auto rect_sum = [&](int y0, int x0, int y1, int x1) {  // inclusive, clipped
                y0 = std::max(y0, 0); x0 = std::max(x0, 0);
                y1 = std::min(y1, h - 1); x1 = std::min(x1, w - 1);
                if (y0 > y1 || x0 > x1) return Scalar(0);
                return sat[static_cast<size_t>((y1 + 1) * (w + 1) + (x1 + 1))] -
                       sat[static_cast<size_t>(y0 * (w + 1) + (x1 + 1))] -
                       sat[static_cast<size_t>((y1 + 1) * (w + 1) + x0)] +
                       sat[static_cast<size_t>(y0 * (w + 1) + x0)];
            };
            for (int yy = 0; yy < h; ++yy) {
                for (int xx = 0; xx < w; ++xx) {
                    yp[static_cast<int64_t>(yy) * w + xx] =
                        rect_sum(yy - r, xx - r, yy + r, xx + r) * inv_area;
                }
            }
        }
    }
    return y;
}

void batch_moments(const Tensor& x, Tensor& mean, Tensor& var) {
    const int n = x.n(), c = x.c();
    const int64_t plane = static_cast<int64_t>(x.h()) * x.w();
    const Scalar count = static_cast<Scalar>(n) * static_cast<Scalar>(plane);
    mean = Tensor({c});
    var = Tensor({c});
#pragma omp parallel for schedule(static)
    for (int ic = 0; ic < c; ++ic) {
        Scalar s = 0, s2 = 0;
        for (int in = 0; in < n; ++in) {
            const Scalar* xp = x.data() + x.idx4(in, ic, 0, 0);
            for (int64_t i = 0; i < plane; ++i) {
                s += xp[i];
                s2 += xp[i] * xp[i];
            }
        }
        const Scalar m = s / count;
        mean[ic] = m;
        var[ic] = std::max(Scalar(0), s2 / count - m * m);
    }
}

}  // namespace rcsb::kernels

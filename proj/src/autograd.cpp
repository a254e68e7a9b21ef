#include "rcsb/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "rcsb/kernels.hpp"

namespace rcsb::ag {

namespace {

thread_local bool t_grad_enabled = true;

bool any_requires_grad(const std::vector<Var>& inputs) {
    for (const auto& v : inputs)
        if (v.defined() && v.requires_grad()) return true;
    return false;
}

// Builds the result node. When recording is off (or no input needs grads) the
// result is a detached leaf.
Var make_result(Tensor value, const std::vector<Var>& inputs, std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    if (t_grad_enabled && any_requires_grad(inputs)) {
        n->requires_grad = true;
        n->parents.reserve(inputs.size());
        for (const auto& v : inputs) n->parents.push_back(v.node());
        n->backward_fn = std::move(backward_fn);
    }
    return Var(std::move(n));
}

void accumulate(Node& dst, const Tensor& g) {
    Tensor& grad = dst.ensure_grad();
    for (int64_t i = 0; i < grad.numel(); ++i) grad[i] += g[i];
}

}  // namespace

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = prev_; }

void Var::backward() const {
    RCSB_CHECK(node_ != nullptr, "backward on undefined Var");
    RCSB_CHECK(node_->value.numel() == 1, "backward root must be scalar, got ", node_->value.shape_str());

    // iterative post-order DFS; reverse post-order is a topological order
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [cur, next_child] = stack.back();
        if (next_child < cur->parents.size()) {
            Node* p = cur->parents[next_child++].get();
            if (p && p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(cur);
            stack.pop_back();
        }
    }

    node_->ensure_grad();
    node_->grad.fill(Scalar(1));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && n->grad.defined()) n->backward_fn(*n);
    }
}

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
    Tensor y = kernels::conv2d_forward(x.value(), w.value(), b.defined() ? b.value() : Tensor(), stride, pad);
    std::vector<Var> inputs = b.defined() ? std::vector<Var>{x, w, b} : std::vector<Var>{x, w};
    return make_result(std::move(y), inputs, [stride, pad, has_bias = b.defined()](Node& self) {
        const auto& xn = self.parents[0];
        const auto& wn = self.parents[1];
        if (xn->requires_grad) {
            accumulate(*xn, kernels::conv2d_backward_input(self.grad, wn->value, xn->value.h(), xn->value.w(), stride, pad));
        }
        if (wn->requires_grad) {
            accumulate(*wn, kernels::conv2d_backward_weight(self.grad, xn->value, wn->value.dim(2), wn->value.dim(3), stride, pad));
        }
        if (has_bias && self.parents[2]->requires_grad) {
            accumulate(*self.parents[2], kernels::conv2d_backward_bias(self.grad));
        }
    });
}

Var batch_norm(const Var& x, const Var& gamma, const Var& beta,
               Tensor& running_mean, Tensor& running_var,
               bool training, Scalar momentum, Scalar eps) {
    const Tensor& xv = x.value();
    const int c = xv.c();
    Tensor mean, var;
    if (training) {
        kernels::batch_moments(xv, mean, var);
        for (int i = 0; i < c; ++i) {
            running_mean[i] = (1 - momentum) * running_mean[i] + momentum * mean[i];
            running_var[i] = (1 - momentum) * running_var[i] + momentum * var[i];
        }
    } else {
        mean = running_mean;
        var = running_var;
    }

    Tensor inv_std({c});
    for (int i = 0; i < c; ++i) inv_std[i] = Scalar(1) / std::sqrt(var[i] + eps);

    const int n = xv.n();
    const int64_t plane = static_cast<int64_t>(xv.h()) * xv.w();
    Tensor y(xv.shape());
#pragma omp parallel for schedule(static)
    for (int ic = 0; ic < c; ++ic) {
        const Scalar g = gamma.value()[ic], bt = beta.value()[ic];
        const Scalar m = mean[ic], is = inv_std[ic];
        for (int in = 0; in < n; ++in) {
            const Scalar* xp = xv.data() + xv.idx4(in, ic, 0, 0);
            Scalar* yp = y.data() + y.idx4(in, ic, 0, 0);
            for (int64_t i = 0; i < plane; ++i) yp[i] = (xp[i] - m) * is * g + bt;
        }
    }

    return make_result(std::move(y), {x, gamma, beta},
                       [mean = std::move(mean), inv_std = std::move(inv_std), training](Node& self) {
        const auto& xn = self.parents[0];
        const auto& gn = self.parents[1];
        const auto& bn = self.parents[2];
        const Tensor& xv = xn->value;
        const int n = xv.n(), c = xv.c();
        const int64_t plane = static_cast<int64_t>(xv.h()) * xv.w();
        const Scalar count = static_cast<Scalar>(n) * static_cast<Scalar>(plane);

        Tensor dgamma({c}), dbeta({c});
        Tensor dx(xv.shape());
#pragma omp parallel for schedule(static)
        for (int ic = 0; ic < c; ++ic) {
            const Scalar m = mean[ic], is = inv_std[ic], g = gn->value[ic];
            Scalar sum_g = 0, sum_gx = 0;  // sums of grad and grad*xhat
            for (int in = 0; in < n; ++in) {
                const Scalar* gp = self.grad.data() + self.grad.idx4(in, ic, 0, 0);
                const Scalar* xp = xv.data() + xv.idx4(in, ic, 0, 0);
                for (int64_t i = 0; i < plane; ++i) {
                    sum_g += gp[i];
                    sum_gx += gp[i] * (xp[i] - m) * is;
                }
            }
            dbeta[ic] = sum_g;
            dgamma[ic] = sum_gx;
            if (xn->requires_grad) {
                for (int in = 0; in < n; ++in) {
                    const Scalar* gp = self.grad.data() + self.grad.idx4(in, ic, 0, 0);
                    const Scalar* xp = xv.data() + xv.idx4(in, ic, 0, 0);
                    Scalar* dxp = dx.data() + dx.idx4(in, ic, 0, 0);
                    for (int64_t i = 0; i < plane; ++i) {
                        const Scalar xhat = (xp[i] - m) * is;
                        if (training) {
                            dxp[i] = g * is * (gp[i] - sum_g / count - xhat * sum_gx / count);
                        } else {
                            dxp[i] = g * is * gp[i];
                        }
                    }
                }
            }
        }
        if (xn->requires_grad) accumulate(*xn, dx);
        if (gn->requires_grad) accumulate(*gn, dgamma);
        if (bn->requires_grad) accumulate(*bn, dbeta);
    });
}

Var leaky_relu(const Var& x, Scalar slope) {
    Tensor y = x.value();
    Scalar* yp = y.data();
    const int64_t n = y.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i)
        if (yp[i] < 0) yp[i] *= slope;
    return make_result(std::move(y), {x}, [slope](Node& self) {
        const auto& xn = self.parents[0];
        if (!xn->requires_grad) return;
        Tensor g = self.grad;
        for (int64_t i = 0; i < g.numel(); ++i)
            if (xn->value[i] <= 0) g[i] *= slope;
        accumulate(*xn, g);
    });
}

Var relu(const Var& x) { return leaky_relu(x, Scalar(0)); }

Var sigmoid(const Var& x) {
    Tensor y = x.value();
    Scalar* yp = y.data();
    const int64_t n = y.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) yp[i] = Scalar(1) / (Scalar(1) + std::exp(-yp[i]));
    return make_result(std::move(y), {x}, [](Node& self) {
        const auto& xn = self.parents[0];
        if (!xn->requires_grad) return;
        Tensor g = self.grad;
        for (int64_t i = 0; i < g.numel(); ++i) {
            const Scalar s = self.value[i];
            g[i] *= s * (1 - s);
        }
        accumulate(*xn, g);
    });
}

Var add(const Var& a, const Var& b) {
    RCSB_CHECK(a.value().same_shape(b.value()),
               "add: shape mismatch ", a.value().shape_str(), " vs ", b.value().shape_str());
    Tensor y = a.value();
    const Scalar* bp = b.value().data();
    Scalar* yp = y.data();
    const int64_t n = y.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) yp[i] += bp[i];
    return make_result(std::move(y), {a, b}, [](Node& self) {
        for (auto& p : self.parents)
            if (p->requires_grad) accumulate(*p, self.grad);
    });
}

Var scale(const Var& x, const Var& k) {
    RCSB_CHECK(k.value().numel() == 1, "scale: k must be a single scalar");
    const Scalar kv = k.value()[0];
    Tensor y = x.value();
    for (int64_t i = 0; i < y.numel(); ++i) y[i] *= kv;
    return make_result(std::move(y), {x, k}, [kv](Node& self) {
        const auto& xn = self.parents[0];
        const auto& kn = self.parents[1];
        if (xn->requires_grad) {
            Tensor g = self.grad;
            for (int64_t i = 0; i < g.numel(); ++i) g[i] *= kv;
            accumulate(*xn, g);
        }
        if (kn->requires_grad) {
            Scalar acc = 0;
            for (int64_t i = 0; i < self.grad.numel(); ++i) acc += self.grad[i] * xn->value[i];
            kn->ensure_grad()[0] += acc;
        }
    });
}

Var concat_channels(const Var& a, const Var& b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    RCSB_CHECK(av.n() == bv.n() && av.h() == bv.h() && av.w() == bv.w(),
               "concat_channels: spatial/batch mismatch ", av.shape_str(), " vs ", bv.shape_str());
    const int n = av.n(), ca = av.c(), cb = bv.c();
    const int64_t plane = static_cast<int64_t>(av.h()) * av.w();
    Tensor y({n, ca + cb, av.h(), av.w()});
    for (int in = 0; in < n; ++in) {
        std::copy_n(av.data() + av.idx4(in, 0, 0, 0), ca * plane, y.data() + y.idx4(in, 0, 0, 0));
        std::copy_n(bv.data() + bv.idx4(in, 0, 0, 0), cb * plane, y.data() + y.idx4(in, ca, 0, 0));
    }
    return make_result(std::move(y), {a, b}, [ca, cb, plane, n](Node& self) {
        const auto& an = self.parents[0];
        const auto& bn = self.parents[1];
        if (an->requires_grad) {
            Tensor ga(an->value.shape());
            for (int in = 0; in < n; ++in)
                std::copy_n(self.grad.data() + self.grad.idx4(in, 0, 0, 0), ca * plane,
                            ga.data() + ga.idx4(in, 0, 0, 0));
            accumulate(*an, ga);
        }
        if (bn->requires_grad) {
            Tensor gb(bn->value.shape());
            for (int in = 0; in < n; ++in)
                std::copy_n(self.grad.data() + self.grad.idx4(in, ca, 0, 0), cb * plane,
                            gb.data() + gb.idx4(in, 0, 0, 0));
            accumulate(*bn, gb);
        }
    });
}

Var channel_pool_max(const Var& x, int out_channels) {
    auto argmax = std::make_shared<std::vector<int64_t>>();
    Tensor y = kernels::channel_group_max(x.value(), out_channels, argmax.get());
    return make_result(std::move(y), {x}, [argmax](Node& self) {
        const auto& xn = self.parents[0];
        if (!xn->requires_grad) return;
        accumulate(*xn, kernels::channel_group_max_backward(self.grad, *argmax, xn->value.shape()));
    });
}

Var upsample_bilinear(const Var& x, int out_h, int out_w) {
    Tensor y = kernels::bilinear_resize(x.value(), out_h, out_w);
    return make_result(std::move(y), {x}, [](Node& self) {
        const auto& xn = self.parents[0];
        if (!xn->requires_grad) return;
        accumulate(*xn, kernels::bilinear_resize_backward(self.grad, xn->value.h(), xn->value.w()));
    });
}

Var maxpool_3x3_s2(const Var& x) {
    auto argmax = std::make_shared<std::vector<int64_t>>();
    Tensor y = kernels::maxpool_3x3_s2(x.value(), argmax.get());
    return make_result(std::move(y), {x}, [argmax](Node& self) {
        const auto& xn = self.parents[0];
        if (!xn->requires_grad) return;
        accumulate(*xn, kernels::maxpool_3x3_s2_backward(self.grad, *argmax, xn->value.shape()));
    });
}

Var add_scalar_vars(const std::vector<Var>& terms) {
    RCSB_CHECK(!terms.empty(), "add_scalar_vars: no terms");
    Scalar total = 0;
    for (const auto& t : terms) {
        RCSB_CHECK(t.value().numel() == 1, "add_scalar_vars: non-scalar term");
        total += t.value()[0];
    }
    return make_result(Tensor::scalar(total), terms, [](Node& self) {
        for (auto& p : self.parents)
            if (p->requires_grad) p->ensure_grad()[0] += self.grad[0];
    });
}

Var custom_scalar(Scalar value, const std::vector<Var>& inputs, std::vector<Tensor> input_grads) {
    RCSB_CHECK(inputs.size() == input_grads.size(), "custom_scalar: grads/inputs size mismatch");
    return make_result(Tensor::scalar(value), inputs, [grads = std::move(input_grads)](Node& self) {
        const Scalar g = self.grad[0];
        for (size_t i = 0; i < self.parents.size(); ++i) {
            auto& p = self.parents[i];
            if (!p->requires_grad) continue;
            Tensor contrib = grads[i];
            for (int64_t j = 0; j < contrib.numel(); ++j) contrib[j] *= g;
            accumulate(*p, contrib);
        }
    });
}

}  // namespace rcsb::ag

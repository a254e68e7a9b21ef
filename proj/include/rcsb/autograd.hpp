#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "rcsb/tensor.hpp"

// Minimal reverse-mode autodiff over Tensor. Every op builds a graph node when
// grad recording is on; backward() walks the graph in reverse topological
// order and accumulates into leaf gradients. Shared parameters (recursive
// blocks reuse the same weights every recursion) accumulate naturally because
// each application adds another consumer edge to the same node.
namespace rcsb::ag {

struct Node {
    Tensor value;
    Tensor grad;  // allocated on demand
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    // Reads this->grad and accumulates into parents' grads. The closure must
    // not capture a shared_ptr to its own node.
    std::function<void(Node&)> backward_fn;

    Tensor& ensure_grad() {
        if (!grad.defined()) grad = Tensor(value.shape());
        return grad;
    }
};

class Var {
  public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> n) : node_(std::move(n)) {}

    static Var leaf(Tensor value, bool requires_grad = false) {
        auto n = std::make_shared<Node>();
        n->value = std::move(value);
        n->requires_grad = requires_grad;
        return Var(std::move(n));
    }

    bool defined() const { return node_ != nullptr; }
    const Tensor& value() const { return node_->value; }
    Tensor& value() { return node_->value; }
    const Tensor& grad() const { return node_->grad; }
    Tensor& grad() { return node_->ensure_grad(); }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    void zero_grad() {
        if (node_ && node_->grad.defined()) node_->grad.zero();
    }
    const std::shared_ptr<Node>& node() const { return node_; }

    // Runs reverse-mode accumulation from this (scalar) variable.
    void backward() const;

  private:
    std::shared_ptr<Node> node_;
};

inline Var constant(Tensor t) { return Var::leaf(std::move(t), false); }
inline Var param(Tensor t) { return Var::leaf(std::move(t), true); }

// Grad recording toggle (thread local). Forward passes under NoGradGuard build
// plain value nodes with no parents, so inference holds no graph memory.
bool grad_enabled();
struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

  private:
    bool prev_;
};

// --- ops ---------------------------------------------------------------

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
// Batch norm. In training mode normalizes with batch moments and updates the
// running buffers in place; in eval mode applies the running-statistics affine.
Var batch_norm(const Var& x, const Var& gamma, const Var& beta,
               Tensor& running_mean, Tensor& running_var,
               bool training, Scalar momentum, Scalar eps);
Var leaky_relu(const Var& x, Scalar slope);
Var relu(const Var& x);
Var sigmoid(const Var& x);
Var add(const Var& a, const Var& b);
// x * k with k a one-element variable (learned scalar).
Var scale(const Var& x, const Var& k);
Var concat_channels(const Var& a, const Var& b);
Var channel_pool_max(const Var& x, int out_channels);
Var upsample_bilinear(const Var& x, int out_h, int out_w);
Var maxpool_3x3_s2(const Var& x);
Var add_scalar_vars(const std::vector<Var>& terms);  // sum of one-element vars

// Generic custom scalar: value plus cached gradients w.r.t. each input.
Var custom_scalar(Scalar value, const std::vector<Var>& inputs, std::vector<Tensor> input_grads);

}  // namespace rcsb::ag

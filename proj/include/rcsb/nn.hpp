#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "rcsb/autograd.hpp"

namespace rcsb::nn {

// Flat registry of named parameters and buffers. Modules register themselves
// under a dotted prefix; the trainer, checkpointing and parameter counting all
// operate on this view.
struct ParamRegistry {
    std::vector<std::pair<std::string, ag::Var>> params;
    std::vector<std::pair<std::string, Tensor*>> buffers;

    void param(std::string name, const ag::Var& v) { params.emplace_back(std::move(name), v); }
    void buffer(std::string name, Tensor* t) { buffers.emplace_back(std::move(name), t); }

    int64_t total_params() const {
        int64_t n = 0;
        for (const auto& [name, v] : params) n += v.value().numel();
        return n;
    }
    int64_t count_prefix(const std::string& prefix) const {
        int64_t n = 0;
        for (const auto& [name, v] : params)
            if (name.rfind(prefix, 0) == 0) n += v.value().numel();
        return n;
    }
};

struct Conv2d {
    ag::Var weight;  // [co, ci, k, k]
    ag::Var bias;    // [co] or undefined
    int stride = 1;
    int pad = 0;

    Conv2d() = default;
    Conv2d(int in_ch, int out_ch, int k, int stride_, bool with_bias, std::mt19937& rng)
        : stride(stride_), pad(k / 2) {
        const Scalar std_dev = std::sqrt(Scalar(2) / (static_cast<Scalar>(in_ch) * k * k));
        weight = ag::param(Tensor::randn({out_ch, in_ch, k, k}, rng, std_dev));
        if (with_bias) bias = ag::param(Tensor({out_ch}));
    }

    ag::Var forward(const ag::Var& x) const { return ag::conv2d(x, weight, bias, stride, pad); }

    void reg(ParamRegistry& r, const std::string& prefix) const {
        r.param(prefix + ".weight", weight);
        if (bias.defined()) r.param(prefix + ".bias", bias);
    }
};

struct BatchNorm2d {
    ag::Var gamma, beta;
    Tensor running_mean, running_var;
    Scalar momentum = 0.1;
    Scalar eps = 1e-5;

    BatchNorm2d() = default;
    explicit BatchNorm2d(int ch)
        : gamma(ag::param(Tensor::full({ch}, 1.0))),
          beta(ag::param(Tensor({ch}))),
          running_mean(Tensor({ch})),
          running_var(Tensor::full({ch}, 1.0)) {}

    ag::Var forward(const ag::Var& x, bool training) {
        return ag::batch_norm(x, gamma, beta, running_mean, running_var, training, momentum, eps);
    }

    void reg(ParamRegistry& r, const std::string& prefix) {
        r.param(prefix + ".gamma", gamma);
        r.param(prefix + ".beta", beta);
        r.buffer(prefix + ".running_mean", &running_mean);
        r.buffer(prefix + ".running_var", &running_var);
    }
};

constexpr Scalar kLeakySlope = 0.01;

// conv -> batchnorm -> leaky ReLU, the decoder's standard unit
struct ConvBnAct {
    Conv2d conv;
    BatchNorm2d bn;

    ConvBnAct() = default;
    ConvBnAct(int in_ch, int out_ch, int k, std::mt19937& rng)
        : conv(in_ch, out_ch, k, 1, /*with_bias=*/false, rng), bn(out_ch) {}

    ag::Var forward(const ag::Var& x, bool training) {
        return ag::leaky_relu(bn.forward(conv.forward(x), training), kLeakySlope);
    }
    void reg(ParamRegistry& r, const std::string& prefix) {
        conv.reg(r, prefix);
        bn.reg(r, prefix + ".bn");
    }
};

}  // namespace rcsb::nn

#pragma once

#include <array>
#include <random>
#include <vector>

#include "rcsb/config.hpp"
#include "rcsb/nn.hpp"

namespace rcsb {

// Both backbones expose five taps at spatial strides (2, 4, 8, 16, 32).
struct BackboneTaps {
    std::array<ag::Var, 5> levels;
};

// Five stride-2 conv/bn/leaky-relu stages, `channels` wide throughout. Small
// enough that the whole test suite trains without pretrained weights.
class TinyBackbone {
  public:
    TinyBackbone(int channels, std::mt19937& rng);
    BackboneTaps forward(const ag::Var& image, bool training);
    void reg(nn::ParamRegistry& r, const std::string& prefix);
    std::array<int, 5> tap_channels() const {
        return {channels_, channels_, channels_, channels_, channels_};
    }

  private:
    int channels_;
    std::vector<nn::Conv2d> convs_;
    std::vector<nn::BatchNorm2d> bns_;
};

// Standard 50-layer residual classifier backbone (bottleneck blocks, no
// classifier head). Taps: stem (64ch, stride 2) and the four residual stages
// (256/512/1024/2048 ch at strides 4/8/16/32).
class ResNet50 {
  public:
    explicit ResNet50(std::mt19937& rng);
    BackboneTaps forward(const ag::Var& image, bool training);
    void reg(nn::ParamRegistry& r, const std::string& prefix);
    std::array<int, 5> tap_channels() const { return {64, 256, 512, 1024, 2048}; }

  private:
    struct Bottleneck {
        nn::Conv2d conv1, conv2, conv3;
        nn::BatchNorm2d bn1, bn2, bn3;
        nn::Conv2d down_conv;  // defined only when the skip needs projection
        nn::BatchNorm2d down_bn;
        bool has_down = false;

        Bottleneck(int in_ch, int mid_ch, int stride, std::mt19937& rng);
        ag::Var forward(const ag::Var& x, bool training);
        void reg(nn::ParamRegistry& r, const std::string& prefix);
    };

    nn::Conv2d stem_conv_;
    nn::BatchNorm2d stem_bn_;
    std::array<std::vector<Bottleneck>, 4> layers_;
};

}  // namespace rcsb

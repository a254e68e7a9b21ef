#pragma once

#include <memory>
#include <random>

#include "rcsb/backbone.hpp"

namespace rcsb {

// Backbone taps reduced to a uniform channel width: grouped channel max
// pooling (identity when the tap is already that wide) followed by one 3x3
// conv/bn/leaky-relu per level.
class Encoder {
  public:
    Encoder(const BackboneSpec& spec, int channels, std::mt19937& rng);

    // image: [n,3,h,w], h and w divisible by 32
    std::array<ag::Var, 5> forward(const ag::Var& image, bool training);
    void reg(nn::ParamRegistry& r, const std::string& prefix);

    static constexpr std::array<int, 5> kStrides{2, 4, 8, 16, 32};

  private:
    int channels_;
    std::unique_ptr<TinyBackbone> tiny_;
    std::unique_ptr<ResNet50> resnet_;
    std::array<int, 5> tap_channels_{};
    std::vector<nn::ConvBnAct> level_convs_;
};

}  // namespace rcsb

#include "rcsb/encoder.hpp"

#include <filesystem>

namespace rcsb {

Encoder::Encoder(const BackboneSpec& spec, int channels, std::mt19937& rng) : channels_(channels) {
    if (spec.kind == BackboneKind::TinyRandom) {
        tiny_ = std::make_unique<TinyBackbone>(channels, rng);
        tap_channels_ = tiny_->tap_channels();
    } else {
        if (!spec.weights_path.empty()) {
            RCSB_CHECK(std::filesystem::exists(spec.weights_path),
                       "backbone weights file not found: ", spec.weights_path);
        }
        resnet_ = std::make_unique<ResNet50>(rng);
        tap_channels_ = resnet_->tap_channels();
    }
    level_convs_.reserve(5);
    for (int i = 0; i < 5; ++i) {
        RCSB_CHECK(tap_channels_[static_cast<size_t>(i)] % channels == 0,
                   "channel width ", channels, " must divide backbone tap width ",
                   tap_channels_[static_cast<size_t>(i)]);
        level_convs_.emplace_back(channels, channels, 3, rng);
    }
}

std::array<ag::Var, 5> Encoder::forward(const ag::Var& image, bool training) {
    const Tensor& img = image.value();
    RCSB_CHECK(img.rank() == 4 && img.c() == 3, "encoder expects [n,3,h,w], got ", img.shape_str());
    RCSB_CHECK(img.h() % 32 == 0 && img.w() % 32 == 0,
               "input spatial dims must be divisible by 32, got ", img.h(), "x", img.w());

    BackboneTaps taps = tiny_ ? tiny_->forward(image, training) : resnet_->forward(image, training);
    std::array<ag::Var, 5> out;
    for (int i = 0; i < 5; ++i) {
        ag::Var x = taps.levels[static_cast<size_t>(i)];
        if (tap_channels_[static_cast<size_t>(i)] != channels_) {
            x = ag::channel_pool_max(x, channels_);
        }
        out[static_cast<size_t>(i)] = level_convs_[static_cast<size_t>(i)].forward(x, training);
    }
    return out;
}

void Encoder::reg(nn::ParamRegistry& r, const std::string& prefix) {
    if (tiny_) tiny_->reg(r, prefix + ".backbone");
    if (resnet_) resnet_->reg(r, prefix + ".backbone");
    for (int i = 0; i < 5; ++i) {
        level_convs_[static_cast<size_t>(i)].reg(r, prefix + ".cp" + std::to_string(i + 1) + ".conv");
    }
}

}  // namespace rcsb

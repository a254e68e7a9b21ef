#include "rcsb/backbone.hpp"

namespace rcsb {

TinyBackbone::TinyBackbone(int channels, std::mt19937& rng) : channels_(channels) {
    convs_.reserve(5);
    bns_.reserve(5);
    int in_ch = 3;
    for (int i = 0; i < 5; ++i) {
        convs_.emplace_back(in_ch, channels, 3, /*stride=*/2, /*with_bias=*/false, rng);
        bns_.emplace_back(channels);
        in_ch = channels;
    }
}

BackboneTaps TinyBackbone::forward(const ag::Var& image, bool training) {
    BackboneTaps taps;
    ag::Var x = image;
    for (int i = 0; i < 5; ++i) {
        x = ag::leaky_relu(bns_[static_cast<size_t>(i)].forward(
                               convs_[static_cast<size_t>(i)].forward(x), training),
                           nn::kLeakySlope);
        taps.levels[static_cast<size_t>(i)] = x;
    }
    return taps;
}

void TinyBackbone::reg(nn::ParamRegistry& r, const std::string& prefix) {
    for (int i = 0; i < 5; ++i) {
        const std::string p = prefix + ".stage" + std::to_string(i + 1);
        convs_[static_cast<size_t>(i)].reg(r, p + ".conv");
        bns_[static_cast<size_t>(i)].reg(r, p + ".bn");
    }
}

ResNet50::Bottleneck::Bottleneck(int in_ch, int mid_ch, int stride, std::mt19937& rng)
    : conv1(in_ch, mid_ch, 1, 1, false, rng),
      conv2(mid_ch, mid_ch, 3, stride, false, rng),
      conv3(mid_ch, mid_ch * 4, 1, 1, false, rng),
      bn1(mid_ch),
      bn2(mid_ch),
      bn3(mid_ch * 4) {
    if (stride != 1 || in_ch != mid_ch * 4) {
        has_down = true;
        down_conv = nn::Conv2d(in_ch, mid_ch * 4, 1, stride, false, rng);
        down_bn = nn::BatchNorm2d(mid_ch * 4);
    }
}

ag::Var ResNet50::Bottleneck::forward(const ag::Var& x, bool training) {
    ag::Var out = ag::relu(bn1.forward(conv1.forward(x), training));
    out = ag::relu(bn2.forward(conv2.forward(out), training));
    out = bn3.forward(conv3.forward(out), training);
    ag::Var skip = has_down ? down_bn.forward(down_conv.forward(x), training) : x;
    return ag::relu(ag::add(out, skip));
}

void ResNet50::Bottleneck::reg(nn::ParamRegistry& r, const std::string& prefix) {
    conv1.reg(r, prefix + ".conv1");
    bn1.reg(r, prefix + ".bn1");
    conv2.reg(r, prefix + ".conv2");
    bn2.reg(r, prefix + ".bn2");
    conv3.reg(r, prefix + ".conv3");
    bn3.reg(r, prefix + ".bn3");
    if (has_down) {
        down_conv.reg(r, prefix + ".downsample.conv");
        down_bn.reg(r, prefix + ".downsample.bn");
    }
}

ResNet50::ResNet50(std::mt19937& rng)
    : stem_conv_(3, 64, 7, 2, false, rng), stem_bn_(64) {
    const int block_counts[4] = {3, 4, 6, 3};
    const int mid_channels[4] = {64, 128, 256, 512};
    int in_ch = 64;
    for (int li = 0; li < 4; ++li) {
        auto& layer = layers_[static_cast<size_t>(li)];
        layer.reserve(static_cast<size_t>(block_counts[li]));
        for (int b = 0; b < block_counts[li]; ++b) {
            // first block of stages 2-4 downsamples; stage 1 keeps the pooled stride
            const int stride = (b == 0 && li > 0) ? 2 : 1;
            layer.emplace_back(in_ch, mid_channels[li], stride, rng);
            in_ch = mid_channels[li] * 4;
        }
    }
}

BackboneTaps ResNet50::forward(const ag::Var& image, bool training) {
    BackboneTaps taps;
    ag::Var x = ag::relu(stem_bn_.forward(stem_conv_.forward(image), training));
    taps.levels[0] = x;  // 64ch, stride 2
    x = ag::maxpool_3x3_s2(x);
    for (int li = 0; li < 4; ++li) {
        for (auto& block : layers_[static_cast<size_t>(li)]) x = block.forward(x, training);
        taps.levels[static_cast<size_t>(li + 1)] = x;
    }
    return taps;
}

void ResNet50::reg(nn::ParamRegistry& r, const std::string& prefix) {
    stem_conv_.reg(r, prefix + ".stem.conv");
    stem_bn_.reg(r, prefix + ".stem.bn");
    for (int li = 0; li < 4; ++li) {
        auto& layer = layers_[static_cast<size_t>(li)];
        for (size_t b = 0; b < layer.size(); ++b) {
            layer[b].reg(r, prefix + ".layer" + std::to_string(li + 1) + ".block" + std::to_string(b));
        }
    }
}

}  // namespace rcsb

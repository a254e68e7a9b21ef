#pragma once

#include <optional>
#include <random>

#include "rcsb/decoder.hpp"

namespace rcsb {

// A decoder stage's supervision point plus what flows to the next stage.
struct StageOutput {
    ag::Var sal_logits;     // 1 channel, stage resolution, pre-sigmoid
    ag::Var ctr_logits;     // 1 channel, stage resolution, pre-sigmoid
    ag::Var next_features;  // `channels` wide at 2x resolution; undefined for the top stage
};

// Stage-wise feature extraction. Per-stream 1x1 heads scaled by a learned
// scalar produce the stage predictions; with the module enabled the sigmoided
// predictions are the only path onward (2 channels, upsampled 2x, then a 3x3
// conv back to full width). Disabled, the heads become a conventional side
// branch and the raw saliency stream is upsampled and re-convolved instead.
class SfeModule {
  public:
    // `with_fuse` is false for the topmost stage, whose outputs feed the
    // refinement module directly instead of another decoder stage.
    SfeModule(int channels, bool enabled, bool with_fuse, std::mt19937& rng);

    std::pair<ag::Var, ag::Var> stage_predict(const DualStream& x) const;
    ag::Var extract_features(const ag::Var& sal_logits, const ag::Var& ctr_logits, bool training);
    StageOutput forward(const DualStream& x, bool training);

    bool enabled() const { return enabled_; }
    void reg(nn::ParamRegistry& r, const std::string& prefix);

  private:
    bool enabled_;
    nn::Conv2d sal_head_, ctr_head_;  // 1x1 c->1, bias
    ag::Var k_sal_, k_ctr_;           // learned scalars, start at 1
    std::optional<nn::ConvBnAct> fuse_;  // 3x3 (2 or c)->c
};

}  // namespace rcsb

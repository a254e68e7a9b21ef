#pragma once

#include <random>
#include <vector>

#include "rcsb/nn.hpp"

namespace rcsb {

// The paired saliency / contour feature streams flowing through the decoder.
struct DualStream {
    ag::Var sal;
    ag::Var ctr;
};

// Dual-stream blending unit: each stream runs a 3x3 conv, the two results are
// concatenated and fed through per-stream 1x1 then 3x3 convs. With the fusion
// branch removed (ablation) each stream sees only its own features.
class Csbu {
  public:
    Csbu(int channels, bool early_fusion, std::mt19937& rng);
    DualStream forward(const DualStream& x, bool training);
    void reg(nn::ParamRegistry& r, const std::string& prefix);
    bool early_fusion() const { return early_fusion_; }

  private:
    bool early_fusion_;
    nn::ConvBnAct sal_entry_, ctr_entry_;   // 3x3 c->c
    nn::ConvBnAct sal_mix_, ctr_mix_;       // 1x1 (2c or c)->c
    nn::ConvBnAct sal_out_, ctr_out_;       // 3x3 c->c
};

// One blending unit unfolded `recursions` times with shared weights, the block
// input re-injected at every recursion and a trailing per-stream conv:
//   A_1 = f(X);  A_k = f(A_{k-1} + X);  X_R = A_R + X;  out = F(X_R + X) + X
class RecursiveBlock {
  public:
    RecursiveBlock(int channels, bool early_fusion, int recursions, std::mt19937& rng);
    DualStream forward(const DualStream& x, bool training);
    void reg(nn::ParamRegistry& r, const std::string& prefix);
    int recursions() const { return recursions_; }

  private:
    int recursions_;
    Csbu csbu_;
    nn::ConvBnAct sal_tail_, ctr_tail_;  // 3x3 c->c
};

// Sequential stack of `blocks` recursive blocks with independent weights.
class RcsbStack {
  public:
    RcsbStack(int channels, bool early_fusion, int blocks, int recursions, std::mt19937& rng);
    DualStream forward(const DualStream& x, bool training);
    void reg(nn::ParamRegistry& r, const std::string& prefix);
    int block_count() const { return static_cast<int>(blocks_.size()); }

  private:
    std::vector<RecursiveBlock> blocks_;
};

// One U-Net decoder stage: the encoder skip plus features carried up from the
// deeper stage (elementwise) seed both streams, then the stage's block stack runs.
class DecoderStage {
  public:
    DecoderStage(int channels, bool early_fusion, int blocks, int recursions, std::mt19937& rng);
    // `carried` may be undefined at the deepest stage.
    DualStream forward(const ag::Var& skip, const ag::Var& carried, bool training);
    void reg(nn::ParamRegistry& r, const std::string& prefix);
    RcsbStack& stack() { return stack_; }

  private:
    RcsbStack stack_;
};

}  // namespace rcsb

#pragma once

#include <random>

#include "rcsb/decoder.hpp"

namespace rcsb {

// Full-resolution refinement: the decoder's final saliency/contour
// probabilities are concatenated with the input image (5 channels), seeded
// into both streams through separate entry convs, passed through one
// recursive block, and read out by scaled 1x1 heads.
class Refinement {
  public:
    Refinement(int channels, bool early_fusion, int blocks, int recursions, std::mt19937& rng);

    // image [n,3,h,w]; sal_prob/ctr_prob [n,1,h,w] in [0,1].
    // Returns final (sal_logits, ctr_logits) at [n,1,h,w].
    std::pair<ag::Var, ag::Var> forward(const ag::Var& image, const ag::Var& sal_prob,
                                        const ag::Var& ctr_prob, bool training);
    void reg(nn::ParamRegistry& r, const std::string& prefix);

  private:
    nn::ConvBnAct sal_entry_, ctr_entry_;  // 3x3 5->c
    RcsbStack stack_;
    nn::Conv2d sal_head_, ctr_head_;
    ag::Var k_sal_, k_ctr_;
};

}  // namespace rcsb

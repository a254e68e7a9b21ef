#include "rcsb/decoder.hpp"

namespace rcsb {

Csbu::Csbu(int channels, bool early_fusion, std::mt19937& rng)
    : early_fusion_(early_fusion),
      sal_entry_(channels, channels, 3, rng),
      ctr_entry_(channels, channels, 3, rng),
      sal_mix_(early_fusion ? 2 * channels : channels, channels, 1, rng),
      ctr_mix_(early_fusion ? 2 * channels : channels, channels, 1, rng),
      sal_out_(channels, channels, 3, rng),
      ctr_out_(channels, channels, 3, rng) {}

DualStream Csbu::forward(const DualStream& x, bool training) {
    RCSB_CHECK(x.sal.value().same_shape(x.ctr.value()),
               "csbu: stream shape mismatch ", x.sal.value().shape_str(), " vs ", x.ctr.value().shape_str());
    ag::Var ctr_feat = ctr_entry_.forward(x.ctr, training);
    ag::Var sal_feat = sal_entry_.forward(x.sal, training);
    DualStream out;
    if (early_fusion_) {
        ag::Var blended = ag::concat_channels(ctr_feat, sal_feat);
        out.ctr = ctr_out_.forward(ctr_mix_.forward(blended, training), training);
        out.sal = sal_out_.forward(sal_mix_.forward(blended, training), training);
    } else {
        out.ctr = ctr_out_.forward(ctr_mix_.forward(ctr_feat, training), training);
        out.sal = sal_out_.forward(sal_mix_.forward(sal_feat, training), training);
    }
    return out;
}

void Csbu::reg(nn::ParamRegistry& r, const std::string& prefix) {
    sal_entry_.reg(r, prefix + ".sal_entry");
    ctr_entry_.reg(r, prefix + ".ctr_entry");
    sal_mix_.reg(r, prefix + ".sal_mix");
    ctr_mix_.reg(r, prefix + ".ctr_mix");
    sal_out_.reg(r, prefix + ".sal_out");
    ctr_out_.reg(r, prefix + ".ctr_out");
}

RecursiveBlock::RecursiveBlock(int channels, bool early_fusion, int recursions, std::mt19937& rng)
    : recursions_(recursions),
      csbu_(channels, early_fusion, rng),
      sal_tail_(channels, channels, 3, rng),
      ctr_tail_(channels, channels, 3, rng) {
    RCSB_CHECK(recursions >= 1, "recursive block needs at least one recursion, got ", recursions);
}

DualStream RecursiveBlock::forward(const DualStream& x, bool training) {
    DualStream acc = csbu_.forward(x, training);
    for (int r = 1; r < recursions_; ++r) {
        acc = csbu_.forward({ag::add(acc.sal, x.sal), ag::add(acc.ctr, x.ctr)}, training);
    }
    DualStream unrolled{ag::add(acc.sal, x.sal), ag::add(acc.ctr, x.ctr)};
    DualStream tail_in{ag::add(unrolled.sal, x.sal), ag::add(unrolled.ctr, x.ctr)};
    return {ag::add(sal_tail_.forward(tail_in.sal, training), x.sal),
            ag::add(ctr_tail_.forward(tail_in.ctr, training), x.ctr)};
}

void RecursiveBlock::reg(nn::ParamRegistry& r, const std::string& prefix) {
    csbu_.reg(r, prefix + ".csbu");
    sal_tail_.reg(r, prefix + ".sal_tail");
    ctr_tail_.reg(r, prefix + ".ctr_tail");
}

RcsbStack::RcsbStack(int channels, bool early_fusion, int blocks, int recursions, std::mt19937& rng) {
    RCSB_CHECK(blocks >= 1, "block stack needs at least one block, got ", blocks);
    blocks_.reserve(static_cast<size_t>(blocks));
    for (int b = 0; b < blocks; ++b) blocks_.emplace_back(channels, early_fusion, recursions, rng);
}

DualStream RcsbStack::forward(const DualStream& x, bool training) {
    DualStream cur = x;
    for (auto& block : blocks_) cur = block.forward(cur, training);
    return cur;
}

void RcsbStack::reg(nn::ParamRegistry& r, const std::string& prefix) {
    for (size_t b = 0; b < blocks_.size(); ++b) {
        blocks_[b].reg(r, prefix + ".block" + std::to_string(b));
    }
}

DecoderStage::DecoderStage(int channels, bool early_fusion, int blocks, int recursions, std::mt19937& rng)
    : stack_(channels, early_fusion, blocks, recursions, rng) {}

DualStream DecoderStage::forward(const ag::Var& skip, const ag::Var& carried, bool training) {
    ag::Var fused = skip;
    if (carried.defined()) {
        RCSB_CHECK(carried.value().same_shape(skip.value()),
                   "decoder stage: carried features ", carried.value().shape_str(),
                   " do not match skip ", skip.value().shape_str());
        fused = ag::add(skip, carried);
    }
    return stack_.forward({fused, fused}, training);
}

void DecoderStage::reg(nn::ParamRegistry& r, const std::string& prefix) {
    stack_.reg(r, prefix);
}

}  // namespace rcsb

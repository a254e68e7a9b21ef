#include "rcsb/sfe.hpp"

namespace rcsb {

SfeModule::SfeModule(int channels, bool enabled, bool with_fuse, std::mt19937& rng)
    : enabled_(enabled),
      sal_head_(channels, 1, 1, 1, /*with_bias=*/true, rng),
      ctr_head_(channels, 1, 1, 1, /*with_bias=*/true, rng),
      k_sal_(ag::param(Tensor::scalar(1.0))),
      k_ctr_(ag::param(Tensor::scalar(1.0))) {
    if (with_fuse) fuse_.emplace(enabled ? 2 : channels, channels, 3, rng);
}

std::pair<ag::Var, ag::Var> SfeModule::stage_predict(const DualStream& x) const {
    ag::Var sal = ag::scale(sal_head_.forward(x.sal), k_sal_);
    ag::Var ctr = ag::scale(ctr_head_.forward(x.ctr), k_ctr_);
    return {sal, ctr};
}

ag::Var SfeModule::extract_features(const ag::Var& sal_logits, const ag::Var& ctr_logits, bool training) {
    RCSB_CHECK(fuse_.has_value(), "this SFE instance has no feature-extraction conv");
    RCSB_CHECK(sal_logits.value().same_shape(ctr_logits.value()), "stage logits shape mismatch");
    ag::Var planes = ag::concat_channels(ag::sigmoid(sal_logits), ag::sigmoid(ctr_logits));
    planes = ag::upsample_bilinear(planes, planes.value().h() * 2, planes.value().w() * 2);
    return fuse_->forward(planes, training);
}

StageOutput SfeModule::forward(const DualStream& x, bool training) {
    StageOutput out;
    std::tie(out.sal_logits, out.ctr_logits) = stage_predict(x);
    if (!fuse_.has_value()) return out;
    if (enabled_) {
        out.next_features = extract_features(out.sal_logits, out.ctr_logits, training);
    } else {
        // conventional side-branch topology: the stream features bypass the heads
        ag::Var up = ag::upsample_bilinear(x.sal, x.sal.value().h() * 2, x.sal.value().w() * 2);
        out.next_features = fuse_->forward(up, training);
    }
    return out;
}

void SfeModule::reg(nn::ParamRegistry& r, const std::string& prefix) {
    sal_head_.reg(r, prefix + ".sal_head");
    ctr_head_.reg(r, prefix + ".ctr_head");
    r.param(prefix + ".k_sal", k_sal_);
    r.param(prefix + ".k_ctr", k_ctr_);
    if (fuse_.has_value()) fuse_->reg(r, prefix + ".fuse");
}

}  // namespace rcsb

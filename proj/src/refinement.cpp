#include "rcsb/refinement.hpp"

namespace rcsb {

Refinement::Refinement(int channels, bool early_fusion, int blocks, int recursions, std::mt19937& rng)
    : sal_entry_(5, channels, 3, rng),
      ctr_entry_(5, channels, 3, rng),
      stack_(channels, early_fusion, blocks, recursions, rng),
      sal_head_(channels, 1, 1, 1, /*with_bias=*/true, rng),
      ctr_head_(channels, 1, 1, 1, /*with_bias=*/true, rng),
      k_sal_(ag::param(Tensor::scalar(1.0))),
      k_ctr_(ag::param(Tensor::scalar(1.0))) {}

std::pair<ag::Var, ag::Var> Refinement::forward(const ag::Var& image, const ag::Var& sal_prob,
                                                const ag::Var& ctr_prob, bool training) {
    const Tensor& img = image.value();
    RCSB_CHECK(sal_prob.value().h() == img.h() && sal_prob.value().w() == img.w() &&
                   ctr_prob.value().h() == img.h() && ctr_prob.value().w() == img.w(),
               "refinement inputs must share the image resolution ", img.shape_str());
    ag::Var stacked = ag::concat_channels(ag::concat_channels(image, sal_prob), ctr_prob);
    DualStream seed{sal_entry_.forward(stacked, training), ctr_entry_.forward(stacked, training)};
    DualStream refined = stack_.forward(seed, training);
    return {ag::scale(sal_head_.forward(refined.sal), k_sal_),
            ag::scale(ctr_head_.forward(refined.ctr), k_ctr_)};
}

void Refinement::reg(nn::ParamRegistry& r, const std::string& prefix) {
    sal_entry_.reg(r, prefix + ".sal_entry");
    ctr_entry_.reg(r, prefix + ".ctr_entry");
    stack_.reg(r, prefix);
    sal_head_.reg(r, prefix + ".sal_head");
    ctr_head_.reg(r, prefix + ".ctr_head");
    r.param(prefix + ".k_sal", k_sal_);
    r.param(prefix + ".k_ctr", k_ctr_);
}

}  // namespace rcsb

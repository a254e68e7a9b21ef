#include "rcsb/network.hpp"

#include "rcsb/losses.hpp"

namespace rcsb {

RcsbNet::RcsbNet(const ModelConfig& cfg, uint64_t init_seed)
    : cfg_(cfg),
      encoder_([&] {
          std::mt19937 rng(static_cast<uint32_t>(mix_seed(init_seed, 1)));
          return Encoder(cfg.backbone, cfg.channels, rng);
      }()) {
    std::mt19937 rng(static_cast<uint32_t>(mix_seed(init_seed, 2)));
    // g_list: [0] refinement, [1..5] decoder stages shallowest -> deepest
    stages_.reserve(5);
    sfes_.reserve(5);
    for (int k = 0; k < 5; ++k) {
        const int blocks = cfg.g_list[static_cast<size_t>(5 - k)];  // deepest first
        stages_.emplace_back(cfg.channels, cfg.early_fusion, blocks, cfg.recursions, rng);
        const bool topmost = (k == 4);
        sfes_.emplace_back(cfg.channels, cfg.sfe, /*with_fuse=*/!topmost, rng);
    }
    if (cfg.refinement) {
        refinement_ = std::make_unique<Refinement>(cfg.channels, cfg.early_fusion,
                                                   cfg.g_list[0], cfg.recursions, rng);
    }

    encoder_.reg(registry_, "encoder");
    for (int k = 0; k < 5; ++k) {
        stages_[static_cast<size_t>(k)].reg(registry_, "decoder.stage" + std::to_string(k + 1));
        sfes_[static_cast<size_t>(k)].reg(registry_, "sfe.stage" + std::to_string(k + 1));
    }
    if (refinement_) refinement_->reg(registry_, "refinement");
}

ForwardResult RcsbNet::forward(const ag::Var& image) {
    const int full_h = image.value().h(), full_w = image.value().w();
    std::array<ag::Var, 5> levels = encoder_.forward(image, training_);

    ForwardResult out;
    ag::Var carried;
    for (int k = 0; k < 5; ++k) {
        const ag::Var& skip = levels[static_cast<size_t>(4 - k)];  // deepest first
        DualStream streams = stages_[static_cast<size_t>(k)].forward(skip, carried, training_);
        StageOutput so = sfes_[static_cast<size_t>(k)].forward(streams, training_);
        out.stages[static_cast<size_t>(k)] = {so.sal_logits, so.ctr_logits};
        carried = so.next_features;
    }

    const StageSupervision& top = out.stages[4];
    if (refinement_) {
        ag::Var sal_prob = ag::upsample_bilinear(ag::sigmoid(top.sal_logits), full_h, full_w);
        ag::Var ctr_prob = ag::upsample_bilinear(ag::sigmoid(top.ctr_logits), full_h, full_w);
        std::tie(out.final_sal, out.final_ctr) =
            refinement_->forward(image, sal_prob, ctr_prob, training_);
    } else {
        out.final_sal = ag::upsample_bilinear(top.sal_logits, full_h, full_w);
        out.final_ctr = ag::upsample_bilinear(top.ctr_logits, full_h, full_w);
    }
    return out;
}

std::pair<ag::Var, ag::Var> RcsbNet::stage_losses(const ag::Var& sal_prob, const ag::Var& ctr_prob,
                                                  const Tensor& sal_gt, const Tensor& ctr_gt,
                                                  const LossConfig& lcfg, const std::string& tag,
                                                  std::vector<ag::Var>& terms,
                                                  std::map<std::string, Scalar>* breakdown) {
    auto note = [&](const std::string& name, const ag::Var& v) {
        terms.push_back(v);
        if (breakdown) (*breakdown)[tag + "." + name] = v.value()[0];
    };
    const LossSelect& sel = cfg_.loss_select;
    if (sel.dcloss) {
        RCSB_CHECK(ctr_gt.defined(), "dual confinement loss selected but no contour ground truth given");
        ag::Var dc = losses::dual_confinement_loss(sal_prob, sal_gt, ctr_prob, ctr_gt, lcfg.theta);
        note("dc", dc);
        if (cfg_.double_count_dc) note("dc2", dc);
    }
    if (sel.wiou) note("wiou", losses::weighted_iou_loss(sal_prob, sal_gt));
    if (sel.bce) {
        note("bce_sal", losses::bce_loss(sal_prob, sal_gt));
        note("bce_ctr", losses::bce_loss(ctr_prob, ctr_gt));
    }
    return {sal_prob, ctr_prob};
}

ag::Var RcsbNet::total_loss(const ForwardResult& out, const Tensor& sal_gt, const Tensor& ctr_gt,
                            const LossConfig& lcfg, std::map<std::string, Scalar>* breakdown) {
    RCSB_CHECK(sal_gt.rank() == 4 && sal_gt.c() == 1, "saliency GT must be [n,1,h,w], got ", sal_gt.shape_str());
    const int gt_h = sal_gt.h(), gt_w = sal_gt.w();

    std::vector<ag::Var> terms;
    for (int k = 0; k < 5; ++k) {
        const StageSupervision& st = out.stages[static_cast<size_t>(k)];
        ag::Var sal_prob = ag::sigmoid(ag::upsample_bilinear(st.sal_logits, gt_h, gt_w));
        ag::Var ctr_prob = ag::sigmoid(ag::upsample_bilinear(st.ctr_logits, gt_h, gt_w));
        stage_losses(sal_prob, ctr_prob, sal_gt, ctr_gt, lcfg, "s" + std::to_string(k + 1), terms, breakdown);
    }

    ag::Var final_sal_prob = ag::sigmoid(out.final_sal);
    ag::Var final_ctr_prob = ag::sigmoid(out.final_ctr);
    const bool closs_active = cfg_.loss_select.closs && cfg_.confidence_supervision;
    if (closs_active) {
        ag::Var cs = losses::confidence_loss(final_sal_prob, sal_gt, lcfg.beta, lcfg.lambda);
        ag::Var cc = losses::confidence_loss(final_ctr_prob, ctr_gt, lcfg.beta, lcfg.lambda);
        terms.push_back(cs);
        terms.push_back(cc);
        if (breakdown) {
            (*breakdown)["final.con_sal"] = cs.value()[0];
            (*breakdown)["final.con_ctr"] = cc.value()[0];
        }
    } else {
        // without confidence supervision the refinement output trains on the
        // same accuracy losses as the stages
        stage_losses(final_sal_prob, final_ctr_prob, sal_gt, ctr_gt, lcfg, "final", terms, breakdown);
    }

    ag::Var total = ag::add_scalar_vars(terms);
    if (breakdown) (*breakdown)["total"] = total.value()[0];
    return total;
}

std::map<std::string, int64_t> RcsbNet::param_breakdown() const {
    std::map<std::string, int64_t> out;
    out["encoder.backbone"] = registry_.count_prefix("encoder.backbone.");
    out["encoder.channel_reduce"] = registry_.count_prefix("encoder.cp");
    out["decoder"] = registry_.count_prefix("decoder.");
    out["sfe"] = registry_.count_prefix("sfe.");
    out["refinement"] = registry_.count_prefix("refinement.");
    return out;
}

void RcsbNet::export_weights(archive::Archive& a) const {
    for (const auto& [name, v] : registry_.params) a.tensors.emplace_back(name, v.value());
    for (const auto& [name, t] : registry_.buffers) a.tensors.emplace_back(name, *t);
}

void RcsbNet::import_weights(const archive::Archive& a, bool strict) {
    auto apply = [&](const std::string& name, Tensor& dst) {
        const Tensor* src = a.find(name);
        if (!src) {
            RCSB_CHECK(!strict, "checkpoint is missing tensor '", name, "'");
            return;
        }
        RCSB_CHECK(src->same_shape(dst), "checkpoint tensor '", name, "' has shape ",
                   src->shape_str(), ", expected ", dst.shape_str());
        dst = *src;
    };
    for (auto& [name, v] : registry_.params) apply(name, v.value());
    for (auto& [name, t] : registry_.buffers) apply(name, *t);
}

void RcsbNet::load_backbone_weights(const std::string& path) {
    const archive::Archive a = archive::load(path);
    const std::string prefix = "encoder.backbone.";
    int applied = 0;
    auto apply = [&](const std::string& name, Tensor& dst) {
        if (name.rfind(prefix, 0) != 0) return;
        const Tensor* src = a.find(name);
        RCSB_CHECK(src, "backbone weights file ", path, " is missing tensor '", name, "'");
        RCSB_CHECK(src->same_shape(dst), "backbone tensor '", name, "' has shape ",
                   src->shape_str(), ", expected ", dst.shape_str());
        dst = *src;
        ++applied;
    };
    for (auto& [name, v] : registry_.params) apply(name, v.value());
    for (auto& [name, t] : registry_.buffers) apply(name, *t);
    RCSB_CHECK(applied > 0, "no backbone tensors found in ", path);
}

}  // namespace rcsb

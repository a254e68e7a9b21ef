#pragma once

#include <map>
#include <memory>

#include "rcsb/checkpoint.hpp"
#include "rcsb/config.hpp"
#include "rcsb/decoder.hpp"
#include "rcsb/encoder.hpp"
#include "rcsb/refinement.hpp"
#include "rcsb/sfe.hpp"

namespace rcsb {

struct StageSupervision {
    ag::Var sal_logits;  // at the stage's own resolution
    ag::Var ctr_logits;
};

struct ForwardResult {
    // stages[0] is the deepest decoder stage (coarsest prediction)
    std::array<StageSupervision, 5> stages;
    ag::Var final_sal;  // full-resolution logits
    ag::Var final_ctr;
};

// The full dual-stream network: encoder taps feed five decoder stages deepest
// first, stage predictions travel through the feature-extraction modules, and
// the top predictions plus the image pass through the refinement block.
class RcsbNet {
  public:
    RcsbNet(const ModelConfig& cfg, uint64_t init_seed);
    RcsbNet(const RcsbNet&) = delete;
    RcsbNet& operator=(const RcsbNet&) = delete;

    ForwardResult forward(const ag::Var& image);

    void set_training(bool training) { training_ = training; }
    bool training() const { return training_; }
    const ModelConfig& config() const { return cfg_; }
    nn::ParamRegistry& params() { return registry_; }
    const nn::ParamRegistry& params() const { return registry_; }

    // Combined objective over all six supervision points. Stage logits are
    // upsampled to the GT resolution and sigmoided; the refinement output is
    // trained on the confidence loss when confidence supervision is active,
    // otherwise on the stage losses. `breakdown` receives one entry per term.
    ag::Var total_loss(const ForwardResult& out, const Tensor& sal_gt, const Tensor& ctr_gt,
                       const LossConfig& lcfg, std::map<std::string, Scalar>* breakdown = nullptr);

    int64_t count_params() const { return registry_.total_params(); }
    std::map<std::string, int64_t> param_breakdown() const;

    void export_weights(archive::Archive& a) const;
    // strict: every parameter and buffer must be present with matching shape
    void import_weights(const archive::Archive& a, bool strict = true);
    // applies an archive holding only encoder.backbone.* tensors
    void load_backbone_weights(const std::string& path);

  private:
    std::pair<ag::Var, ag::Var> stage_losses(const ag::Var& sal_prob, const ag::Var& ctr_prob,
                                             const Tensor& sal_gt, const Tensor& ctr_gt,
                                             const LossConfig& lcfg, const std::string& tag,
                                             std::vector<ag::Var>& terms,
                                             std::map<std::string, Scalar>* breakdown);

    ModelConfig cfg_;
    bool training_ = true;
    Encoder encoder_;
    std::vector<DecoderStage> stages_;  // [0] deepest
    std::vector<SfeModule> sfes_;       // [4] has no feature-extraction conv
    std::unique_ptr<Refinement> refinement_;
    nn::ParamRegistry registry_;
};

}  // namespace rcsb

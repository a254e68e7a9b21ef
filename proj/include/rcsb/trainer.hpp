#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "rcsb/dataset.hpp"
#include "rcsb/network.hpp"

namespace rcsb::train {

// Adam with two learning-rate groups: the pretrained backbone
// (encoder.backbone.*) and everything else.
class Adam {
  public:
    explicit Adam(nn::ParamRegistry& reg, Scalar beta1 = 0.9, Scalar beta2 = 0.999, Scalar eps = 1e-8);
    void step(Scalar lr_encoder, Scalar lr_decoder);
    void zero_grad();
    int64_t step_count() const { return t_; }

    void export_state(archive::Archive& a) const;
    void import_state(const archive::Archive& a);

  private:
    struct Slot {
        std::string name;
        ag::Var var;
        Tensor m, v;
        bool encoder_group;
    };
    std::vector<Slot> slots_;
    int64_t t_ = 0;
    Scalar beta1_, beta2_, eps_;
};

struct EpochLog {
    int epoch = 0;
    Scalar lr_encoder = 0;
    Scalar lr_decoder = 0;
    Scalar loss_total = 0;  // sample-weighted mean over the epoch's batches
    std::map<std::string, Scalar> loss_terms;
};

struct TrainResult {
    std::vector<EpochLog> epochs;
    Scalar final_train_mae = -1;
    std::string last_checkpoint;
};

// decayed = base * 0.5^(epoch / halve_every), epochs counted from 0
Scalar scheduled_lr(Scalar base, int epoch, int halve_every);

Tensor stack_images(const std::vector<data::Sample>& samples, const std::vector<int>& indices);
Tensor stack_masks(const std::vector<data::Sample>& samples, const std::vector<int>& indices, bool contour);

class Trainer {
  public:
    explicit Trainer(const Config& cfg);
    static std::unique_ptr<Trainer> from_checkpoint(const std::string& path);

    // Trains from next_epoch() up to cfg.train.epochs, writing checkpoints and
    // a JSONL log under out_dir (pass "" to keep everything in memory).
    TrainResult run(const std::vector<data::Sample>& dataset, const std::string& out_dir);

    // One optimizer step over the given samples; returns the loss breakdown.
    std::map<std::string, Scalar> train_step(const std::vector<data::Sample>& samples);

    // Mean absolute error of the final saliency prediction over a dataset
    // (evaluation mode, no graph).
    Scalar eval_mae(const std::vector<data::Sample>& dataset);

    void save_checkpoint(const std::string& path) const;

    RcsbNet& net() { return *net_; }
    const Config& config() const { return cfg_; }
    int next_epoch() const { return next_epoch_; }

  private:
    Config cfg_;
    std::unique_ptr<RcsbNet> net_;
    std::unique_ptr<Adam> opt_;
    int next_epoch_ = 0;
};

// Loads a checkpoint and writes 8-bit saliency PNGs (and optionally contour
// PNGs under <out_dir>/contours) for one image file or every image in a
// directory. Predictions are computed at the checkpoint's training resolution
// and resized back to each image's original size.
void infer(const std::string& checkpoint_path, const std::string& input_path,
           const std::string& out_dir, bool write_contours);

}  // namespace rcsb::train

#include "rcsb/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>

#include "rcsb/image_io.hpp"
#include "rcsb/kernels.hpp"

namespace rcsb::train {

namespace fs = std::filesystem;

Adam::Adam(nn::ParamRegistry& reg, Scalar beta1, Scalar beta2, Scalar eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
    slots_.reserve(reg.params.size());
    for (auto& [name, var] : reg.params) {
        Slot s;
        s.name = name;
        s.var = var;
        s.m = Tensor(var.value().shape());
        s.v = Tensor(var.value().shape());
        s.encoder_group = name.rfind("encoder.backbone.", 0) == 0;
        slots_.push_back(std::move(s));
    }
}

void Adam::step(Scalar lr_encoder, Scalar lr_decoder) {
    ++t_;
    const Scalar bc1 = 1 - std::pow(beta1_, static_cast<Scalar>(t_));
    const Scalar bc2 = 1 - std::pow(beta2_, static_cast<Scalar>(t_));
    for (auto& s : slots_) {
        if (!s.var.node()->grad.defined()) continue;
        const Scalar lr = s.encoder_group ? lr_encoder : lr_decoder;
        Tensor& p = s.var.value();
        const Tensor& g = s.var.node()->grad;
        for (int64_t i = 0; i < p.numel(); ++i) {
            s.m[i] = beta1_ * s.m[i] + (1 - beta1_) * g[i];
            s.v[i] = beta2_ * s.v[i] + (1 - beta2_) * g[i] * g[i];
            p[i] -= lr * (s.m[i] / bc1) / (std::sqrt(s.v[i] / bc2) + eps_);
        }
    }
}

void Adam::zero_grad() {
    for (auto& s : slots_) s.var.zero_grad();
}

void Adam::export_state(archive::Archive& a) const {
    a.meta["adam_step"] = t_;
    for (const auto& s : slots_) {
        a.tensors.emplace_back("adam.m." + s.name, s.m);
        a.tensors.emplace_back("adam.v." + s.name, s.v);
    }
}

void Adam::import_state(const archive::Archive& a) {
    t_ = a.meta.value("adam_step", int64_t(0));
    for (auto& s : slots_) {
        const Tensor* m = a.find("adam.m." + s.name);
        const Tensor* v = a.find("adam.v." + s.name);
        RCSB_CHECK(m && v, "checkpoint is missing optimizer state for '", s.name, "'");
        s.m = *m;
        s.v = *v;
    }
}

Scalar scheduled_lr(Scalar base, int epoch, int halve_every) {
    return base * std::pow(Scalar(0.5), static_cast<Scalar>(epoch / halve_every));
}

Tensor stack_images(const std::vector<data::Sample>& samples, const std::vector<int>& indices) {
    RCSB_CHECK(!indices.empty(), "empty batch");
    const Tensor& first = samples[static_cast<size_t>(indices[0])].image;
    Tensor out({static_cast<int>(indices.size()), first.dim(0), first.dim(1), first.dim(2)});
    for (size_t b = 0; b < indices.size(); ++b) {
        const Tensor& img = samples[static_cast<size_t>(indices[b])].image;
        RCSB_CHECK(img.same_shape(first), "batch images must share a shape");
        std::copy_n(img.data(), img.numel(), out.data() + static_cast<int64_t>(b) * img.numel());
    }
    return out;
}

Tensor stack_masks(const std::vector<data::Sample>& samples, const std::vector<int>& indices, bool contour) {
    const Tensor& first = contour ? samples[static_cast<size_t>(indices[0])].contour_gt
                                  : samples[static_cast<size_t>(indices[0])].saliency_gt;
    Tensor out({static_cast<int>(indices.size()), 1, first.dim(1), first.dim(2)});
    for (size_t b = 0; b < indices.size(); ++b) {
        const auto& s = samples[static_cast<size_t>(indices[b])];
        const Tensor& m = contour ? s.contour_gt : s.saliency_gt;
        std::copy_n(m.data(), m.numel(), out.data() + static_cast<int64_t>(b) * m.numel());
    }
    return out;
}

Trainer::Trainer(const Config& cfg) : cfg_(cfg) {
    net_ = std::make_unique<RcsbNet>(cfg.model, cfg.train.seed);
    if (cfg.model.backbone.kind == BackboneKind::ResNet50Pretrained &&
        !cfg.model.backbone.weights_path.empty()) {
        net_->load_backbone_weights(cfg.model.backbone.weights_path);
    }
    opt_ = std::make_unique<Adam>(net_->params());
}

std::unique_ptr<Trainer> Trainer::from_checkpoint(const std::string& path) {
    const archive::Archive a = archive::load(path);
    RCSB_CHECK(a.meta.contains("config"), "checkpoint ", path, " has no embedded config");
    Config cfg = config_from_json(a.meta.at("config"));
    // weights come from the checkpoint itself
    cfg.model.backbone.weights_path.clear();
    auto t = std::make_unique<Trainer>(cfg);
    t->net_->import_weights(a, /*strict=*/true);
    t->opt_->import_state(a);
    t->next_epoch_ = a.meta.value("epoch", 0);
    return t;
}

void Trainer::save_checkpoint(const std::string& path) const {
    archive::Archive a;
    a.meta["config"] = config_to_json(cfg_);
    a.meta["epoch"] = next_epoch_;
    net_->export_weights(a);
    opt_->export_state(a);
    archive::save(path, a);
}

std::map<std::string, Scalar> Trainer::train_step(const std::vector<data::Sample>& samples) {
    std::vector<int> idx(samples.size());
    std::iota(idx.begin(), idx.end(), 0);
    net_->set_training(true);
    opt_->zero_grad();
    ag::Var image = ag::constant(stack_images(samples, idx));
    ForwardResult out = net_->forward(image);
    std::map<std::string, Scalar> breakdown;
    ag::Var loss = net_->total_loss(out, stack_masks(samples, idx, false),
                                    stack_masks(samples, idx, true), cfg_.loss, &breakdown);
    loss.backward();
    opt_->step(cfg_.train.lr_encoder, cfg_.train.lr_decoder);
    return breakdown;
}

TrainResult Trainer::run(const std::vector<data::Sample>& dataset, const std::string& out_dir) {
    RCSB_CHECK(!dataset.empty(), "training dataset is empty");
    const TrainConfig& tc = cfg_.train;

    std::ofstream log_file;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        log_file.open(fs::path(out_dir) / "train_log.jsonl", std::ios::app);
        RCSB_RUNTIME_CHECK(log_file.good(), "cannot open training log under ", out_dir);
    }

    TrainResult result;
    net_->set_training(true);
    for (int epoch = next_epoch_; epoch < tc.epochs; ++epoch) {
        const Scalar lr_enc = scheduled_lr(tc.lr_encoder, epoch, tc.halve_every);
        const Scalar lr_dec = scheduled_lr(tc.lr_decoder, epoch, tc.halve_every);

        std::vector<int> order(dataset.size());
        std::iota(order.begin(), order.end(), 0);
        std::mt19937 shuffle_rng(static_cast<uint32_t>(mix_seed(tc.seed, 0x5f5f, static_cast<uint64_t>(epoch))));
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        EpochLog log;
        log.epoch = epoch;
        log.lr_encoder = lr_enc;
        log.lr_decoder = lr_dec;
        int64_t seen = 0;

        for (size_t start = 0, batch_id = 0; start < order.size(); start += static_cast<size_t>(tc.batch_size), ++batch_id) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(tc.batch_size));
            std::vector<data::Sample> batch;
            batch.reserve(end - start);
            std::vector<std::string> ids;
            for (size_t i = start; i < end; ++i) {
                const data::Sample& s = dataset[static_cast<size_t>(order[i])];
                ids.push_back(s.id);
                batch.push_back(tc.augment
                                    ? data::augment(s, mix_seed(tc.seed, static_cast<uint64_t>(epoch),
                                                                static_cast<uint64_t>(order[i])))
                                    : s);
            }

            opt_->zero_grad();
            std::vector<int> all(batch.size());
            std::iota(all.begin(), all.end(), 0);
            ag::Var image = ag::constant(stack_images(batch, all));
            ForwardResult out = net_->forward(image);
            std::map<std::string, Scalar> breakdown;
            ag::Var loss = net_->total_loss(out, stack_masks(batch, all, false),
                                            stack_masks(batch, all, true), cfg_.loss, &breakdown);
            const Scalar loss_value = loss.value()[0];
            if (!std::isfinite(loss_value)) {
                std::string id_list;
                for (const auto& id : ids) id_list += (id_list.empty() ? "" : ",") + id;
                throw RuntimeFailure(strcat_msg("non-finite loss at epoch ", epoch, " batch ", batch_id,
                                                " (samples: ", id_list, ")"));
            }
            loss.backward();
            opt_->step(lr_enc, lr_dec);

            const auto weight = static_cast<Scalar>(batch.size());
            log.loss_total += loss_value * weight;
            for (const auto& [k, v] : breakdown)
                if (k != "total") log.loss_terms[k] += v * weight;
            seen += static_cast<int64_t>(batch.size());
        }

        log.loss_total /= static_cast<Scalar>(seen);
        for (auto& [k, v] : log.loss_terms) v /= static_cast<Scalar>(seen);
        next_epoch_ = epoch + 1;

        if (log_file.is_open()) {
            nlohmann::json j;
            j["epoch"] = log.epoch;
            j["lr_encoder"] = log.lr_encoder;
            j["lr_decoder"] = log.lr_decoder;
            j["loss_total"] = log.loss_total;
            j["loss_terms"] = log.loss_terms;
            log_file << j.dump() << "\n";
            log_file.flush();
        }
        if (!out_dir.empty() && (tc.checkpoint_every > 0 && ((epoch + 1) % tc.checkpoint_every == 0 ||
                                                             epoch + 1 == tc.epochs))) {
            char name[64];
            std::snprintf(name, sizeof(name), "ckpt_epoch_%04d.rcsb", epoch);
            const std::string path = (fs::path(out_dir) / name).string();
            save_checkpoint(path);
            save_checkpoint((fs::path(out_dir) / "latest.rcsb").string());
            result.last_checkpoint = path;
        }
        result.epochs.push_back(std::move(log));
    }

    result.final_train_mae = eval_mae(dataset);
    if (log_file.is_open()) {
        nlohmann::json j;
        j["final_train_mae"] = result.final_train_mae;
        log_file << j.dump() << "\n";
    }
    return result;
}

Scalar Trainer::eval_mae(const std::vector<data::Sample>& dataset) {
    ag::NoGradGuard no_grad;
    const bool was_training = net_->training();
    net_->set_training(false);
    Scalar total = 0;
    for (const auto& s : dataset) {
        ag::Var image = ag::constant(
            s.image.reshaped({1, s.image.dim(0), s.image.dim(1), s.image.dim(2)}));
        ForwardResult out = net_->forward(image);
        Tensor prob = out.final_sal.value();
        for (int64_t i = 0; i < prob.numel(); ++i) prob[i] = Scalar(1) / (Scalar(1) + std::exp(-prob[i]));
        Scalar err = 0;
        for (int64_t i = 0; i < prob.numel(); ++i) err += std::abs(prob[i] - s.saliency_gt[i]);
        total += err / static_cast<Scalar>(prob.numel());
    }
    net_->set_training(was_training);
    return total / static_cast<Scalar>(dataset.size());
}

void infer(const std::string& checkpoint_path, const std::string& input_path,
           const std::string& out_dir, bool write_contours) {
    auto trainer = Trainer::from_checkpoint(checkpoint_path);
    RcsbNet& net = trainer->net();
    net.set_training(false);
    const Config& cfg = trainer->config();

    std::vector<fs::path> inputs;
    if (fs::is_directory(input_path)) {
        for (const auto& e : fs::directory_iterator(input_path))
            if (e.is_regular_file() && io::is_image_file(e.path())) inputs.push_back(e.path());
        std::sort(inputs.begin(), inputs.end());
    } else {
        RCSB_CHECK(fs::exists(input_path), "input not found: ", input_path);
        inputs.push_back(input_path);
    }
    RCSB_CHECK(!inputs.empty(), "no images found under ", input_path);

    fs::create_directories(out_dir);
    if (write_contours) fs::create_directories(fs::path(out_dir) / "contours");

    ag::NoGradGuard no_grad;
    for (const auto& p : inputs) {
        Tensor img = io::load_image_rgb(p.string());
        const int orig_h = img.dim(1), orig_w = img.dim(2);
        Tensor resized = kernels::bilinear_resize(img.reshaped({1, 3, orig_h, orig_w}),
                                                  cfg.data.resize_h, cfg.data.resize_w);
        ForwardResult out = net.forward(ag::constant(resized));

        auto to_plane = [&](const Tensor& logits) {
            Tensor prob = logits;
            for (int64_t i = 0; i < prob.numel(); ++i)
                prob[i] = Scalar(1) / (Scalar(1) + std::exp(-prob[i]));
            return kernels::bilinear_resize(prob, orig_h, orig_w);
        };
        const std::string stem = p.stem().string();
        io::write_png_gray((fs::path(out_dir) / (stem + ".png")).string(), to_plane(out.final_sal.value()));
        if (write_contours) {
            io::write_png_gray((fs::path(out_dir) / "contours" / (stem + ".png")).string(),
                               to_plane(out.final_ctr.value()));
        }
    }
}

}  // namespace rcsb::train

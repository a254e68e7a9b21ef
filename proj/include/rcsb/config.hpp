#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace rcsb {

enum class BackboneKind { TinyRandom, ResNet50Pretrained };

struct BackboneSpec {
    BackboneKind kind = BackboneKind::ResNet50Pretrained;
    std::string weights_path;  // empty: random init (architecture only)
};

struct LossSelect {
    bool bce = false;
    bool wiou = true;
    bool dcloss = true;
    bool closs = true;
};

struct ModelConfig {
    BackboneSpec backbone;
    int channels = 64;
    // six entries: [0] refinement module, [1..5] decoder stages shallow -> deep
    std::array<int, 6> g_list{1, 2, 2, 3, 3, 5};
    int recursions = 3;
    bool early_fusion = true;
    bool sfe = true;
    bool refinement = true;
    bool confidence_supervision = true;
    LossSelect loss_select;
    // counts the cross-stream loss term once per stage by default; switch on to
    // sum it for both heads
    bool double_count_dc = false;
};

struct LossConfig {
    double beta = 2.0;
    double lambda = 0.3;
    double theta = 4.0;
    double focal_alpha = 2.0;
    double focal_gamma = 2.0;
};

struct TrainConfig {
    double lr_encoder = 1e-5;
    double lr_decoder = 1e-4;
    int halve_every = 20;
    int epochs = 100;
    int batch_size = 4;
    uint64_t seed = 7;
    bool augment = true;
    int checkpoint_every = 1;
};

struct DataConfig {
    std::string root;
    int resize_h = 256;
    int resize_w = 256;
};

struct Config {
    ModelConfig model;
    LossConfig loss;
    TrainConfig train;
    DataConfig data;
};

nlohmann::json config_to_json(const Config& cfg);
Config config_from_json(const nlohmann::json& j);

// Loads defaults, merges an optional JSON file ("" = defaults only; a bare
// name resolves against ./configs/<name>.json), then applies key=value
// overrides. Unknown keys anywhere are fatal.
Config load_config(const std::string& path_or_name, const std::vector<std::string>& overrides);

}  // namespace rcsb

#include "rcsb/config.hpp"

#include <filesystem>
#include <fstream>

#include "rcsb/errors.hpp"

namespace rcsb {

using nlohmann::json;

namespace {

std::string backbone_name(BackboneKind k) {
    return k == BackboneKind::TinyRandom ? "tiny_random" : "resnet50_pretrained";
}

BackboneKind backbone_from_name(const std::string& s) {
    if (s == "tiny_random") return BackboneKind::TinyRandom;
    if (s == "resnet50_pretrained") return BackboneKind::ResNet50Pretrained;
    throw ValidationError("unknown backbone kind '" + s + "' (expected tiny_random or resnet50_pretrained)");
}

// Every key present in `user` must exist in `base` with a compatible type.
void validate_keys(const json& user, const json& base, const std::string& path) {
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string key_path = path.empty() ? it.key() : path + "." + it.key();
        RCSB_CHECK(base.contains(it.key()), "unknown config key '", key_path, "'");
        const json& bv = base.at(it.key());
        const json& uv = it.value();
        if (bv.is_object()) {
            RCSB_CHECK(uv.is_object(), "config key '", key_path, "' must be an object");
            validate_keys(uv, bv, key_path);
        } else if (bv.is_number() && !uv.is_number()) {
            throw ValidationError(strcat_msg("config key '", key_path, "' must be a number"));
        } else if (bv.is_boolean() && !uv.is_boolean()) {
            throw ValidationError(strcat_msg("config key '", key_path, "' must be a boolean"));
        } else if (bv.is_string() && !uv.is_string()) {
            throw ValidationError(strcat_msg("config key '", key_path, "' must be a string"));
        } else if (bv.is_array() && !uv.is_array()) {
            throw ValidationError(strcat_msg("config key '", key_path, "' must be an array"));
        }
    }
}

void merge_into(json& base, const json& user) {
    for (auto it = user.begin(); it != user.end(); ++it) {
        if (it.value().is_object() && base[it.key()].is_object()) {
            merge_into(base[it.key()], it.value());
        } else {
            base[it.key()] = it.value();
        }
    }
}

json parse_override_value(const std::string& raw) {
    json v = json::parse(raw, nullptr, /*allow_exceptions=*/false);
    if (v.is_discarded()) return json(raw);  // plain string
    return v;
}

void apply_override(json& cfg, const std::string& kv) {
    const auto eq = kv.find('=');
    RCSB_CHECK(eq != std::string::npos && eq > 0, "override '", kv, "' must look like key=value");
    const std::string key = kv.substr(0, eq);
    const json value = parse_override_value(kv.substr(eq + 1));

    json* cur = &cfg;
    size_t start = 0;
    std::vector<std::string> parts;
    while (true) {
        const auto dot = key.find('.', start);
        parts.push_back(key.substr(start, dot == std::string::npos ? dot : dot - start));
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    for (size_t i = 0; i + 1 < parts.size(); ++i) {
        RCSB_CHECK(cur->contains(parts[i]) && (*cur)[parts[i]].is_object(),
                   "unknown config key '", key, "'");
        cur = &(*cur)[parts[i]];
    }
    const std::string& leaf = parts.back();
    RCSB_CHECK(cur->contains(leaf), "unknown config key '", key, "'");
    json probe;
    probe[leaf] = value;
    json base;
    base[leaf] = (*cur)[leaf];
    validate_keys(probe, base, key.substr(0, key.size() - leaf.size() - (parts.size() > 1 ? 1 : 0)));
    (*cur)[leaf] = value;
}

}  // namespace

json config_to_json(const Config& cfg) {
    json j;
    j["model"]["backbone"] = backbone_name(cfg.model.backbone.kind);
    j["model"]["weights_path"] = cfg.model.backbone.weights_path;
    j["model"]["channels"] = cfg.model.channels;
    j["model"]["g_list"] = cfg.model.g_list;
    j["model"]["recursions"] = cfg.model.recursions;
    j["model"]["early_fusion"] = cfg.model.early_fusion;
    j["model"]["sfe"] = cfg.model.sfe;
    j["model"]["refinement"] = cfg.model.refinement;
    j["model"]["confidence_supervision"] = cfg.model.confidence_supervision;
    std::vector<std::string> losses;
    if (cfg.model.loss_select.bce) losses.push_back("bce");
    if (cfg.model.loss_select.wiou) losses.push_back("wiou");
    if (cfg.model.loss_select.dcloss) losses.push_back("dcloss");
    if (cfg.model.loss_select.closs) losses.push_back("closs");
    j["model"]["loss_select"] = losses;
    j["model"]["double_count_dc"] = cfg.model.double_count_dc;

    j["loss"]["beta"] = cfg.loss.beta;
    j["loss"]["lambda"] = cfg.loss.lambda;
    j["loss"]["theta"] = cfg.loss.theta;
    j["loss"]["focal_alpha"] = cfg.loss.focal_alpha;
    j["loss"]["focal_gamma"] = cfg.loss.focal_gamma;

    j["train"]["lr_encoder"] = cfg.train.lr_encoder;
    j["train"]["lr_decoder"] = cfg.train.lr_decoder;
    j["train"]["halve_every"] = cfg.train.halve_every;
    j["train"]["epochs"] = cfg.train.epochs;
    j["train"]["batch_size"] = cfg.train.batch_size;
    j["train"]["seed"] = cfg.train.seed;
    j["train"]["augment"] = cfg.train.augment;
    j["train"]["checkpoint_every"] = cfg.train.checkpoint_every;

    j["data"]["root"] = cfg.data.root;
    j["data"]["resize"] = {cfg.data.resize_h, cfg.data.resize_w};
    return j;
}

Config config_from_json(const json& j) {
    Config cfg;
    const json& m = j.at("model");
    cfg.model.backbone.kind = backbone_from_name(m.at("backbone").get<std::string>());
    cfg.model.backbone.weights_path = m.at("weights_path").get<std::string>();
    cfg.model.channels = m.at("channels").get<int>();
    const auto g = m.at("g_list").get<std::vector<int>>();
    RCSB_CHECK(g.size() == 6, "model.g_list must have exactly 6 entries, got ", g.size());
    std::copy(g.begin(), g.end(), cfg.model.g_list.begin());
    for (int v : cfg.model.g_list) RCSB_CHECK(v >= 1, "model.g_list entries must be >= 1");
    cfg.model.recursions = m.at("recursions").get<int>();
    RCSB_CHECK(cfg.model.recursions >= 1, "model.recursions must be >= 1");
    RCSB_CHECK(cfg.model.channels >= 1, "model.channels must be >= 1");
    cfg.model.early_fusion = m.at("early_fusion").get<bool>();
    cfg.model.sfe = m.at("sfe").get<bool>();
    cfg.model.refinement = m.at("refinement").get<bool>();
    cfg.model.confidence_supervision = m.at("confidence_supervision").get<bool>();
    cfg.model.loss_select = LossSelect{false, false, false, false};
    for (const auto& s : m.at("loss_select").get<std::vector<std::string>>()) {
        if (s == "bce") cfg.model.loss_select.bce = true;
        else if (s == "wiou") cfg.model.loss_select.wiou = true;
        else if (s == "dcloss") cfg.model.loss_select.dcloss = true;
        else if (s == "closs") cfg.model.loss_select.closs = true;
        else throw ValidationError("unknown loss in model.loss_select: '" + s + "'");
    }
    RCSB_CHECK(cfg.model.loss_select.bce || cfg.model.loss_select.wiou || cfg.model.loss_select.dcloss,
               "model.loss_select must include at least one stage loss (bce, wiou or dcloss)");
    cfg.model.double_count_dc = m.at("double_count_dc").get<bool>();

    const json& l = j.at("loss");
    cfg.loss.beta = l.at("beta").get<double>();
    cfg.loss.lambda = l.at("lambda").get<double>();
    cfg.loss.theta = l.at("theta").get<double>();
    cfg.loss.focal_alpha = l.at("focal_alpha").get<double>();
    cfg.loss.focal_gamma = l.at("focal_gamma").get<double>();
    RCSB_CHECK(cfg.loss.beta > 0 && cfg.loss.lambda > 0 && cfg.loss.theta > 0 &&
                   cfg.loss.focal_alpha > 0 && cfg.loss.focal_gamma > 0,
               "loss hyperparameters must be positive");

    const json& t = j.at("train");
    cfg.train.lr_encoder = t.at("lr_encoder").get<double>();
    cfg.train.lr_decoder = t.at("lr_decoder").get<double>();
    cfg.train.halve_every = t.at("halve_every").get<int>();
    cfg.train.epochs = t.at("epochs").get<int>();
    cfg.train.batch_size = t.at("batch_size").get<int>();
    cfg.train.seed = t.at("seed").get<uint64_t>();
    cfg.train.augment = t.at("augment").get<bool>();
    cfg.train.checkpoint_every = t.at("checkpoint_every").get<int>();
    RCSB_CHECK(cfg.train.batch_size >= 1, "train.batch_size must be >= 1");
    RCSB_CHECK(cfg.train.halve_every >= 1, "train.halve_every must be >= 1");

    const json& d = j.at("data");
    cfg.data.root = d.at("root").get<std::string>();
    const auto rs = d.at("resize").get<std::vector<int>>();
    RCSB_CHECK(rs.size() == 2 && rs[0] > 0 && rs[1] > 0, "data.resize must be two positive integers");
    cfg.data.resize_h = rs[0];
    cfg.data.resize_w = rs[1];
    return cfg;
}

Config load_config(const std::string& path_or_name, const std::vector<std::string>& overrides) {
    json merged = config_to_json(Config{});
    if (!path_or_name.empty()) {
        namespace fs = std::filesystem;
        fs::path p(path_or_name);
        if (!fs::exists(p)) {
            const fs::path candidate = fs::path("configs") / (path_or_name + ".json");
            RCSB_CHECK(fs::exists(candidate), "config '", path_or_name, "' not found (also tried ",
                       candidate.string(), ")");
            p = candidate;
        }
        std::ifstream in(p);
        RCSB_CHECK(in.good(), "cannot open config file ", p.string());
        json user = json::parse(in, nullptr, /*allow_exceptions=*/false);
        RCSB_CHECK(!user.is_discarded(), "config file ", p.string(), " is not valid JSON");
        validate_keys(user, merged, "");
        merge_into(merged, user);
    }
    for (const auto& kv : overrides) apply_override(merged, kv);
    return config_from_json(merged);
}

}  // namespace rcsb

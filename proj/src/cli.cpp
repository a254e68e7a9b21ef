#include "rcsb/cli.hpp"

#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "rcsb/dataset.hpp"
#include "rcsb/image_io.hpp"
#include "rcsb/losses.hpp"
#include "rcsb/metrics.hpp"
#include "rcsb/trainer.hpp"

namespace rcsb::cli {

namespace fs = std::filesystem;

namespace {

struct SharedFlags {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir = "out";
    int64_t seed = -1;
};

void add_shared(CLI::App* cmd, SharedFlags& f, bool with_config = true) {
    if (with_config) {
        cmd->add_option("--config", f.config_path, "config file (path or name under ./configs)");
        cmd->add_option("--set", f.overrides, "config override KEY=VALUE (repeatable)")->take_all();
    }
    cmd->add_option("--seed", f.seed, "override train.seed");
    cmd->add_option("--out", f.out_dir, "output directory");
}

Config resolve_config(const SharedFlags& f) {
    Config cfg = load_config(f.config_path, f.overrides);
    if (f.seed >= 0) cfg.train.seed = static_cast<uint64_t>(f.seed);
    return cfg;
}

int run_train(const SharedFlags& f, const std::string& resume) {
    std::unique_ptr<train::Trainer> trainer;
    Config cfg;
    if (!resume.empty()) {
        trainer = train::Trainer::from_checkpoint(resume);
        cfg = trainer->config();
    } else {
        cfg = resolve_config(f);
        trainer = std::make_unique<train::Trainer>(cfg);
    }
    RCSB_CHECK(!cfg.data.root.empty(), "data.root must point at a dataset directory");
    data::DatasetSpec spec;
    spec.image_dir = (fs::path(cfg.data.root) / "images").string();
    spec.mask_dir = (fs::path(cfg.data.root) / "masks").string();
    spec.resize_h = cfg.data.resize_h;
    spec.resize_w = cfg.data.resize_w;
    const std::vector<data::Sample> dataset = data::load_dataset(spec);
    RCSB_CHECK(!dataset.empty(), "no training samples under ", cfg.data.root);

    const train::TrainResult res = trainer->run(dataset, f.out_dir);
    std::cout << "trained " << res.epochs.size() << " epoch(s), final loss "
              << (res.epochs.empty() ? -1.0 : res.epochs.back().loss_total)
              << ", train MAE " << res.final_train_mae << "\n";
    std::cout << "checkpoint: " << res.last_checkpoint << "\n";
    std::cout << "log: " << (fs::path(f.out_dir) / "train_log.jsonl").string() << "\n";
    return 0;
}

int run_infer(const SharedFlags& f, const std::string& checkpoint, const std::string& input,
              bool contours) {
    train::infer(checkpoint, input, f.out_dir, contours);
    std::cout << "predictions written to " << f.out_dir << (contours ? " (contours included)" : "")
              << "\n";
    return 0;
}

int run_eval(const SharedFlags& f, const std::string& pred_dir, const std::string& gt_dir) {
    const metrics::MetricsReport report = metrics::evaluate_dataset(pred_dir, gt_dir);
    fs::create_directories(f.out_dir);
    const std::string report_path = (fs::path(f.out_dir) / "report.json").string();
    const std::string curves_path = (fs::path(f.out_dir) / "curves.csv").string();
    metrics::write_report_json(report_path, report);
    metrics::write_curves_csv(curves_path, report);
    std::cout << "images " << report.image_count << "  meanF " << report.mean_f << "  MAE "
              << report.mae << "  wF " << report.weighted_f << "  E " << report.e_measure << "\n";
    std::cout << "report: " << report_path << "\ncurves: " << curves_path << "\n";
    return 0;
}

int run_gen_contours(const std::string& root, int kernel) {
    data::DatasetSpec probe;
    const fs::path mask_dir = fs::path(root) / "masks";
    const fs::path out_dir = fs::path(root) / "contours";
    RCSB_CHECK(fs::is_directory(mask_dir), "mask directory not found: ", mask_dir.string());
    fs::create_directories(out_dir);
    int count = 0;
    std::vector<fs::path> masks;
    for (const auto& e : fs::directory_iterator(mask_dir))
        if (e.is_regular_file() && io::is_image_file(e.path())) masks.push_back(e.path());
    std::sort(masks.begin(), masks.end());
    for (const auto& p : masks) {
        Tensor m = io::load_image_gray(p.string());
        for (int64_t i = 0; i < m.numel(); ++i) m[i] = m[i] >= 0.5 ? 1.0 : 0.0;
        const Tensor contour = data::gen_contour(m, kernel);
        io::write_png_gray((out_dir / (p.stem().string() + ".png")).string(), contour);
        ++count;
    }
    std::cout << count << " contour map(s) written to " << out_dir.string() << "\n";
    return 0;
}

int run_param_count(const SharedFlags& f) {
    const Config cfg = resolve_config(f);
    RcsbNet net(cfg.model, cfg.train.seed);
    std::cout << "total trainable parameters: " << net.count_params() << "\n";
    for (const auto& [module, count] : net.param_breakdown())
        std::cout << "  " << module << ": " << count << "\n";
    return 0;
}

int run_dump_weight_maps(const SharedFlags& f, const std::string& pred_path,
                         const std::string& gt_path, Scalar beta, Scalar lambda, Scalar theta,
                         Scalar alpha, Scalar gamma) {
    Tensor x = io::load_image_gray(pred_path);
    Tensor y = io::load_image_gray(gt_path);
    RCSB_CHECK(x.same_shape(y), "prediction and ground truth must share a size, got ",
               x.shape_str(), " vs ", y.shape_str());
    fs::create_directories(f.out_dir);

    auto dump = [&](const std::string& name, Tensor map, Scalar max_value) {
        if (max_value <= 0) {  // normalize by the map's own peak
            max_value = map.abs_max();
            if (max_value == 0) max_value = 1;
        }
        for (int64_t i = 0; i < map.numel(); ++i) map[i] /= max_value;
        const std::string path = (fs::path(f.out_dir) / name).string();
        io::write_png_gray(path, map);
        std::cout << path << "\n";
    };

    dump("focal_weight.png", losses::focal_weight(x, y, alpha, gamma), alpha);
    dump("confidence_weight.png", losses::confidence_weight(x, beta), beta / 4);
    dump("confidence_loss.png", losses::confidence_loss_map(x, y, beta, lambda), 0);
    dump("dc_weight.png", losses::dc_weight_map(x, y, theta), theta + 1);
    return 0;
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
    CLI::App app{"recursive contour-saliency blending network: train, infer and evaluate"};
    app.require_subcommand(1);

    SharedFlags train_f, infer_f, eval_f, pc_f, dump_f;

    auto* train_cmd = app.add_subcommand("train", "train a model and write checkpoints");
    std::string resume;
    add_shared(train_cmd, train_f);
    train_cmd->add_option("--resume", resume, "resume from a checkpoint");

    auto* infer_cmd = app.add_subcommand("infer", "run a checkpoint over images");
    std::string ckpt, input;
    bool contours = false;
    add_shared(infer_cmd, infer_f, /*with_config=*/false);
    infer_cmd->add_option("--checkpoint", ckpt, "model checkpoint")->required();
    infer_cmd->add_option("--input", input, "image file or directory")->required();
    infer_cmd->add_flag("--contours", contours, "also write contour predictions");

    auto* eval_cmd = app.add_subcommand("eval", "score predictions against ground truths");
    std::string pred_dir, gt_dir;
    add_shared(eval_cmd, eval_f, /*with_config=*/false);
    eval_cmd->add_option("--pred", pred_dir, "prediction directory")->required();
    eval_cmd->add_option("--gt", gt_dir, "ground-truth directory")->required();

    auto* gc_cmd = app.add_subcommand("gen-contours", "derive contour maps from <root>/masks");
    std::string gc_root;
    int gc_kernel = 5;
    gc_cmd->add_option("--root", gc_root, "dataset root containing masks/")->required();
    gc_cmd->add_option("--kernel", gc_kernel, "morphology kernel size (odd)");

    auto* pc_cmd = app.add_subcommand("param-count", "report trainable parameter counts");
    add_shared(pc_cmd, pc_f);

    auto* dump_cmd = app.add_subcommand("dump-weight-maps", "write loss weight maps as PNG heat maps");
    std::string dump_pred, dump_gt;
    double d_beta = 2, d_lambda = 1, d_theta = 4, d_alpha = 2, d_gamma = 2;
    add_shared(dump_cmd, dump_f, /*with_config=*/false);
    dump_cmd->add_option("--pred", dump_pred, "prediction map PNG")->required();
    dump_cmd->add_option("--gt", dump_gt, "ground-truth PNG")->required();
    dump_cmd->add_option("--beta", d_beta, "confidence weight scale");
    dump_cmd->add_option("--lambda", d_lambda, "unconfidence penalty weight");
    dump_cmd->add_option("--theta", d_theta, "confinement weight scale");
    dump_cmd->add_option("--alpha", d_alpha, "focal weight scale");
    dump_cmd->add_option("--gamma", d_gamma, "focal weight exponent");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(train_cmd)) return run_train(train_f, resume);
        if (app.got_subcommand(infer_cmd)) return run_infer(infer_f, ckpt, input, contours);
        if (app.got_subcommand(eval_cmd)) return run_eval(eval_f, pred_dir, gt_dir);
        if (app.got_subcommand(gc_cmd)) return run_gen_contours(gc_root, gc_kernel);
        if (app.got_subcommand(pc_cmd)) return run_param_count(pc_f);
        if (app.got_subcommand(dump_cmd))
            return run_dump_weight_maps(dump_f, dump_pred, dump_gt, d_beta, d_lambda, d_theta,
                                        d_alpha, d_gamma);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const RuntimeFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace rcsb::cli

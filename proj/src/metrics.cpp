#include "rcsb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>

#include "json.hpp"
#include "rcsb/image_io.hpp"

namespace rcsb::metrics {

namespace {

struct Plane {
    const Tensor* t;
    int h, w;
    Scalar at(int y, int x) const { return (*t)[static_cast<int64_t>(y) * w + x]; }
};

Plane as_plane(const Tensor& t, const char* what) {
    RCSB_CHECK(t.rank() == 2 || (t.rank() == 3 && t.dim(0) == 1) || (t.rank() == 4 && t.dim(0) == 1 && t.dim(1) == 1),
               what, ": expected a single plane, got ", t.shape_str());
    const int h = t.dim(t.rank() - 2);
    const int w = t.dim(t.rank() - 1);
    return {&t, h, w};
}

void check_binary(const Tensor& gt, const char* what) {
    for (int64_t i = 0; i < gt.numel(); ++i)
        RCSB_CHECK(gt[i] == 0 || gt[i] == 1, what, ": ground truth must be binary, found ", gt[i]);
}

void check_match(const Tensor& a, const Tensor& b, const char* what) {
    RCSB_CHECK(a.same_shape(b), what, ": shape mismatch ", a.shape_str(), " vs ", b.shape_str());
}

}  // namespace

Scalar mae(const Tensor& pred, const Tensor& gt) {
    check_match(pred, gt, "mae");
    Scalar s = 0;
    for (int64_t i = 0; i < pred.numel(); ++i) s += std::abs(pred[i] - gt[i]);
    return s / static_cast<Scalar>(pred.numel());
}

Curves pr_f_curves(const Tensor& pred, const Tensor& gt) {
    check_match(pred, gt, "pr_f_curves");
    check_binary(gt, "pr_f_curves");
    const int64_t n = pred.numel();
    Curves c;
#pragma omp parallel for schedule(static)
    for (int t = 0; t < kThresholds; ++t) {
        const Scalar thr = static_cast<Scalar>(t) / 255;
        int64_t tp = 0, fp = 0, fn = 0;
        for (int64_t i = 0; i < n; ++i) {
            const bool f = pred[i] >= thr;
            const bool g = gt[i] == 1;
            tp += f && g;
            fp += f && !g;
            fn += !f && g;
        }
        const Scalar p = static_cast<Scalar>(tp) / (static_cast<Scalar>(tp + fp) + kCountEps);
        const Scalar r = static_cast<Scalar>(tp) / (static_cast<Scalar>(tp + fn) + kCountEps);
        c.precision[static_cast<size_t>(t)] = p;
        c.recall[static_cast<size_t>(t)] = r;
        c.f[static_cast<size_t>(t)] = (1 + kFBetaSq) * p * r / (kFBetaSq * p + r + kCountEps);
    }
    return c;
}

Scalar mean_f(const std::array<Scalar, kThresholds>& f_curve) {
    Scalar s = 0;
    for (Scalar v : f_curve) s += v;
    return s / kThresholds;
}

namespace {

// Nearest ground-truth site per pixel, exact Euclidean metric, ties broken
// toward the smallest (row, col). Column pass finds each column's nearest GT
// row, the row pass scans columns.
struct NearestField {
    std::vector<int> site_row, site_col;  // -1 where GT is empty
    std::vector<Scalar> dist;
};

NearestField nearest_gt(const Plane& gt) {
    const int h = gt.h, w = gt.w;
    const int64_t n = static_cast<int64_t>(h) * w;
    NearestField f;
    f.site_row.assign(static_cast<size_t>(n), -1);
    f.site_col.assign(static_cast<size_t>(n), -1);
    f.dist.assign(static_cast<size_t>(n), std::numeric_limits<Scalar>::infinity());

    // per column: nearest GT row above/below, preferring the smaller row on ties
    std::vector<int> col_row(static_cast<size_t>(h) * static_cast<size_t>(w), -1);
    for (int c = 0; c < w; ++c) {
        int last = -1;
        for (int r = 0; r < h; ++r) {
            if (gt.at(r, c) == 1) last = r;
            col_row[static_cast<size_t>(r) * w + c] = last;
        }
        int next = -1;
        for (int r = h - 1; r >= 0; --r) {
            if (gt.at(r, c) == 1) next = r;
            int& cur = col_row[static_cast<size_t>(r) * w + c];
            if (next >= 0) {
                if (cur < 0 || (next - r) < (r - cur)) cur = next;  // strict: ties keep the upper row
            }
        }
    }

    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            int64_t best_d2 = std::numeric_limits<int64_t>::max();
            int best_r = -1, best_c = -1;
            for (int k = 0; k < w; ++k) {
                const int rr = col_row[static_cast<size_t>(r) * w + k];
                if (rr < 0) continue;
                const int64_t d2 = static_cast<int64_t>(c - k) * (c - k) +
                                   static_cast<int64_t>(r - rr) * (r - rr);
                if (d2 < best_d2 || (d2 == best_d2 && (rr < best_r || (rr == best_r && k < best_c)))) {
                    best_d2 = d2;
                    best_r = rr;
                    best_c = k;
                }
            }
            const size_t i = static_cast<size_t>(r) * w + c;
            if (best_r >= 0) {
                f.site_row[i] = best_r;
                f.site_col[i] = best_c;
                f.dist[i] = std::sqrt(static_cast<Scalar>(best_d2));
            }
        }
    }
    return f;
}

}  // namespace

Scalar weighted_f(const Tensor& pred, const Tensor& gt) {
    check_match(pred, gt, "weighted_f");
    check_binary(gt, "weighted_f");
    const Plane xp = as_plane(pred, "weighted_f");
    const Plane yp = as_plane(gt, "weighted_f");
    const int h = xp.h, w = xp.w;
    const int64_t n = static_cast<int64_t>(h) * w;

    Scalar gt_sum = 0;
    for (int64_t i = 0; i < n; ++i) gt_sum += (*yp.t)[i];
    if (gt_sum == 0) {
        for (int64_t i = 0; i < n; ++i)
            if ((*xp.t)[i] != 0) return 0;
        return 1;  // empty GT matched by an empty prediction
    }

    std::vector<Scalar> err(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) err[static_cast<size_t>(i)] = std::abs((*xp.t)[i] - (*yp.t)[i]);

    // propagate off-GT errors from the nearest GT pixel
    const NearestField field = nearest_gt(yp);
    std::vector<Scalar> err_t = err;
    for (int64_t i = 0; i < n; ++i) {
        if ((*yp.t)[i] == 1) continue;
        const size_t si = static_cast<size_t>(field.site_row[static_cast<size_t>(i)]) * w +
                          static_cast<size_t>(field.site_col[static_cast<size_t>(i)]);
        err_t[static_cast<size_t>(i)] = err[si];
    }

    // 7x7 sigma-5 Gaussian, zero padding
    constexpr int kR = 3;
    Scalar kern[2 * kR + 1][2 * kR + 1];
    Scalar ksum = 0;
    for (int dy = -kR; dy <= kR; ++dy)
        for (int dx = -kR; dx <= kR; ++dx) {
            kern[dy + kR][dx + kR] = std::exp(-(dy * dy + dx * dx) / (2.0 * 5.0 * 5.0));
            ksum += kern[dy + kR][dx + kR];
        }
    for (auto& row : kern)
        for (auto& v : row) v /= ksum;

    std::vector<Scalar> err_filtered(static_cast<size_t>(n), 0);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            Scalar acc = 0;
            for (int dy = -kR; dy <= kR; ++dy)
                for (int dx = -kR; dx <= kR; ++dx) {
                    const int rr = r + dy, cc = c + dx;
                    if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
                    acc += kern[dy + kR][dx + kR] * err_t[static_cast<size_t>(rr) * w + cc];
                }
            err_filtered[static_cast<size_t>(r) * w + c] = acc;
        }

    // inside the GT a smoothed error may only lower the raw one
    std::vector<Scalar> err_min = err;
    for (int64_t i = 0; i < n; ++i)
        if ((*yp.t)[i] == 1 && err_filtered[static_cast<size_t>(i)] < err[static_cast<size_t>(i)])
            err_min[static_cast<size_t>(i)] = err_filtered[static_cast<size_t>(i)];

    // importance decays away from the GT
    const Scalar alpha = std::log(0.5) / 5;
    Scalar weighted_err_gt = 0, weighted_err_bg = 0;
    for (int64_t i = 0; i < n; ++i) {
        if ((*yp.t)[i] == 1) {
            weighted_err_gt += err_min[static_cast<size_t>(i)];
        } else {
            const Scalar b = 2 - std::exp(alpha * field.dist[static_cast<size_t>(i)]);
            weighted_err_bg += err_min[static_cast<size_t>(i)] * b;
        }
    }

    const Scalar tp_w = gt_sum - weighted_err_gt;
    const Scalar recall_w = 1 - weighted_err_gt / gt_sum;
    const Scalar precision_w = tp_w / (kCountEps + tp_w + weighted_err_bg);
    return 2 * recall_w * precision_w / (kCountEps + recall_w + precision_w);
}

Scalar e_measure(const Tensor& pred, const Tensor& gt) {
    check_match(pred, gt, "e_measure");
    check_binary(gt, "e_measure");
    const int64_t n = pred.numel();

    const Scalar thr = 2 * pred.mean();
    std::vector<Scalar> xb(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i)
        xb[static_cast<size_t>(i)] = (thr <= 0 ? pred[i] > 0 : pred[i] >= thr) ? 1.0 : 0.0;

    Scalar gt_mean = gt.mean();
    if (gt_mean == 0) {  // all-background GT: reward empty predictions
        Scalar s = 0;
        for (Scalar v : xb) s += 1 - v;
        return s / static_cast<Scalar>(n);
    }
    if (gt_mean == 1) {  // all-foreground GT
        Scalar s = 0;
        for (Scalar v : xb) s += v;
        return s / static_cast<Scalar>(n);
    }

    Scalar xb_mean = 0;
    for (Scalar v : xb) xb_mean += v;
    xb_mean /= static_cast<Scalar>(n);

    Scalar total = 0;
    for (int64_t i = 0; i < n; ++i) {
        const Scalar a = xb[static_cast<size_t>(i)] - xb_mean;
        const Scalar b = gt[i] - gt_mean;
        const Scalar denom = a * a + b * b;
        const Scalar align = denom == 0 ? 0 : 2 * a * b / denom;
        total += (align + 1) * (align + 1) / 4;
    }
    return total / static_cast<Scalar>(n);
}

MetricsReport evaluate_dataset(const std::string& pred_dir, const std::string& gt_dir,
                               std::vector<ImagePairMetrics>* per_image) {
    namespace fs = std::filesystem;
    RCSB_CHECK(fs::is_directory(pred_dir), "prediction directory not found: ", pred_dir);
    RCSB_CHECK(fs::is_directory(gt_dir), "ground-truth directory not found: ", gt_dir);

    std::map<std::string, fs::path> preds, gts;
    for (const auto& e : fs::directory_iterator(pred_dir))
        if (e.is_regular_file() && io::is_image_file(e.path())) preds[e.path().stem().string()] = e.path();
    for (const auto& e : fs::directory_iterator(gt_dir))
        if (e.is_regular_file() && io::is_image_file(e.path())) gts[e.path().stem().string()] = e.path();

    std::vector<std::string> unmatched;
    for (const auto& [stem, p] : preds)
        if (!gts.count(stem)) unmatched.push_back(stem + " (no ground truth)");
    for (const auto& [stem, p] : gts)
        if (!preds.count(stem)) unmatched.push_back(stem + " (no prediction)");
    if (!unmatched.empty()) {
        std::string msg = "unmatched files between prediction and ground-truth directories:";
        for (const auto& s : unmatched) msg += "\n  " + s;
        throw ValidationError(msg);
    }
    RCSB_CHECK(!preds.empty(), "no image pairs found under ", pred_dir);

    std::vector<std::pair<std::string, std::pair<Tensor, Tensor>>> pairs;
    pairs.reserve(preds.size());
    for (const auto& [stem, p] : preds) {
        Tensor x = io::load_image_gray(p.string());
        Tensor y = io::load_image_gray(gts.at(stem).string());
        RCSB_CHECK(x.same_shape(y), "prediction/ground-truth size mismatch for '", stem, "': ",
                   x.shape_str(), " vs ", y.shape_str());
        for (int64_t i = 0; i < y.numel(); ++i) y[i] = y[i] >= 0.5 ? 1.0 : 0.0;
        pairs.emplace_back(stem, std::make_pair(std::move(x), std::move(y)));
    }

    std::vector<ImagePairMetrics> results(pairs.size());
#pragma omp parallel for schedule(dynamic)
    for (int64_t i = 0; i < static_cast<int64_t>(pairs.size()); ++i) {
        const auto& [stem, xy] = pairs[static_cast<size_t>(i)];
        ImagePairMetrics m;
        m.id = stem;
        m.mae = mae(xy.first, xy.second);
        m.weighted_f = weighted_f(xy.first, xy.second);
        m.e_measure = e_measure(xy.first, xy.second);
        m.curves = pr_f_curves(xy.first, xy.second);
        results[static_cast<size_t>(i)] = std::move(m);
    }

    MetricsReport report;
    report.image_count = static_cast<int>(results.size());
    const Scalar inv = Scalar(1) / static_cast<Scalar>(results.size());
    for (const auto& m : results) {
        report.mae += m.mae * inv;
        report.weighted_f += m.weighted_f * inv;
        report.e_measure += m.e_measure * inv;
        for (int t = 0; t < kThresholds; ++t) {
            report.curves.precision[static_cast<size_t>(t)] += m.curves.precision[static_cast<size_t>(t)] * inv;
            report.curves.recall[static_cast<size_t>(t)] += m.curves.recall[static_cast<size_t>(t)] * inv;
            report.curves.f[static_cast<size_t>(t)] += m.curves.f[static_cast<size_t>(t)] * inv;
        }
    }
    report.mean_f = mean_f(report.curves.f);
    if (per_image) *per_image = std::move(results);
    return report;
}

void write_report_json(const std::string& path, const MetricsReport& report) {
    nlohmann::json j;
    j["image_count"] = report.image_count;
    j["mean_f"] = report.mean_f;
    j["mae"] = report.mae;
    j["weighted_f"] = report.weighted_f;
    j["e_measure"] = report.e_measure;
    j["pr_curve"] = nlohmann::json::array();
    for (int t = 0; t < kThresholds; ++t)
        j["pr_curve"].push_back({report.curves.precision[static_cast<size_t>(t)],
                                 report.curves.recall[static_cast<size_t>(t)]});
    j["f_curve"] = report.curves.f;
    std::ofstream out(path);
    RCSB_RUNTIME_CHECK(out.good(), "cannot write report to ", path);
    out << j.dump(2) << "\n";
}

void write_curves_csv(const std::string& path, const MetricsReport& report) {
    std::ofstream out(path);
    RCSB_RUNTIME_CHECK(out.good(), "cannot write curves to ", path);
    out << "threshold,precision,recall,f\n";
    out.precision(10);
    for (int t = 0; t < kThresholds; ++t)
        out << t << "," << report.curves.precision[static_cast<size_t>(t)] << ","
            << report.curves.recall[static_cast<size_t>(t)] << ","
            << report.curves.f[static_cast<size_t>(t)] << "\n";
}

}  // namespace rcsb::metrics

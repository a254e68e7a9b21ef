#pragma once

#include <array>
#include <string>
#include <vector>

#include "rcsb/tensor.hpp"

namespace rcsb::metrics {

constexpr int kThresholds = 256;
constexpr Scalar kCountEps = 1e-12;
constexpr Scalar kFBetaSq = 0.3;

struct Curves {
    std::array<Scalar, kThresholds> precision{};
    std::array<Scalar, kThresholds> recall{};
    std::array<Scalar, kThresholds> f{};
};

struct MetricsReport {
    Scalar mean_f = 0;
    Scalar mae = 0;
    Scalar weighted_f = 0;
    Scalar e_measure = 0;
    Curves curves;
    int image_count = 0;
};

// All per-image metrics take a prediction in [0,1] and a ground truth plane of
// the same shape ([h,w] or [1,h,w]); curve/structure metrics require binary GT.

Scalar mae(const Tensor& pred, const Tensor& gt);

// threshold sweep t in 0..255, foreground = pred >= t/255
Curves pr_f_curves(const Tensor& pred, const Tensor& gt);

Scalar mean_f(const std::array<Scalar, kThresholds>& f_curve);

// error-weighted F with beta^2 = 1: errors off the ground truth propagate from
// the nearest GT pixel through a 7x7 sigma-5 Gaussian, and their importance
// decays as 2 - exp(ln(0.5)/5 * distance). Empty GT scores 1 exactly when the
// prediction is empty too.
Scalar weighted_f(const Tensor& pred, const Tensor& gt);

// enhanced-alignment measure, threshold-adaptive variant: the prediction is
// binarized at twice its mean, both maps are mean-centred, and the per-pixel
// alignment 2*a*b/(a^2+b^2) (0/0 -> 0) is enhanced by ((.+1)^2)/4 and averaged.
// Constant GT falls back to agreement ratios.
Scalar e_measure(const Tensor& pred, const Tensor& gt);

struct ImagePairMetrics {
    std::string id;
    Scalar mae = 0;
    Scalar weighted_f = 0;
    Scalar e_measure = 0;
    Curves curves;
};

// Prediction and GT directories matched by filename stem; GT is binarized at
// 0.5 after loading. Per-image metrics are averaged over the dataset and the
// curves averaged pointwise.
MetricsReport evaluate_dataset(const std::string& pred_dir, const std::string& gt_dir,
                               std::vector<ImagePairMetrics>* per_image = nullptr);

void write_report_json(const std::string& path, const MetricsReport& report);
void write_curves_csv(const std::string& path, const MetricsReport& report);

}  // namespace rcsb::metrics

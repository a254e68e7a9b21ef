#include "rcsb/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <random>

#include "rcsb/image_io.hpp"
#include "rcsb/kernels.hpp"

namespace rcsb::data {

namespace {

// Separable running-extreme filter: horizontal then vertical pass, out-of-image
// treated as background (0). Equivalent to the square-window scan but O(k)
// instead of O(k^2) per pixel.
Tensor square_filter(const Tensor& m, int k, bool take_max) {
    const int h = m.dim(1), w = m.dim(2);
    const int r = (k - 1) / 2;
    Tensor tmp({1, h, w}), out({1, h, w});
    auto extreme = [take_max](Scalar a, Scalar b) { return take_max ? std::max(a, b) : std::min(a, b); };
    const Scalar border = 0;  // zero padding for both dilation and erosion

#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            // every window position contributes; outside the image it is `border`
            Scalar v = (x - r < 0) ? border : m[static_cast<int64_t>(y) * w + (x - r)];
            for (int d = -r + 1; d <= r; ++d) {
                const int xx = x + d;
                v = extreme(v, (xx < 0 || xx >= w) ? border : m[static_cast<int64_t>(y) * w + xx]);
            }
            tmp[static_cast<int64_t>(y) * w + x] = v;
        }
    }
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            Scalar v = (y - r < 0) ? border : tmp[static_cast<int64_t>(y - r) * w + x];
            for (int d = -r + 1; d <= r; ++d) {
                const int yy = y + d;
                v = extreme(v, (yy < 0 || yy >= h) ? border : tmp[static_cast<int64_t>(yy) * w + x]);
            }
            out[static_cast<int64_t>(y) * w + x] = v;
        }
    }
    return out;
}

}  // namespace

Tensor gen_contour(const Tensor& mask, int kernel) {
    RCSB_CHECK(kernel >= 3 && kernel % 2 == 1, "contour kernel must be odd and >= 3, got ", kernel);
    RCSB_CHECK(mask.rank() == 3 && mask.dim(0) == 1, "gen_contour expects [1,h,w], got ", mask.shape_str());
    for (int64_t i = 0; i < mask.numel(); ++i)
        RCSB_CHECK(mask[i] == 0 || mask[i] == 1,
                   "gen_contour requires a binary mask (binarize at 0.5 first), found ", mask[i]);

    const Tensor dil = square_filter(mask, kernel, /*take_max=*/true);
    const Tensor ero = square_filter(mask, kernel, /*take_max=*/false);
    Tensor contour({1, mask.dim(1), mask.dim(2)});
    for (int64_t i = 0; i < contour.numel(); ++i)
        contour[i] = std::clamp(dil[i] - ero[i], Scalar(0), Scalar(1));
    return contour;
}

Tensor hflip(const Tensor& t) {
    const int c = t.dim(0), h = t.dim(1), w = t.dim(2);
    Tensor out({c, h, w});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                out[(static_cast<int64_t>(ch) * h + y) * w + x] =
                    t[(static_cast<int64_t>(ch) * h + y) * w + (w - 1 - x)];
    return out;
}

Tensor rot90ccw(const Tensor& t) {
    const int c = t.dim(0), h = t.dim(1), w = t.dim(2);
    Tensor out({c, w, h});  // (r,c) -> (w-1-c, r)
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                out[(static_cast<int64_t>(ch) * w + (w - 1 - x)) * h + y] =
                    t[(static_cast<int64_t>(ch) * h + y) * w + x];
    return out;
}

Sample apply_transform(const Sample& s, bool do_hflip, bool do_rot90) {
    Sample out;
    out.id = s.id;
    auto tf = [&](const Tensor& t) {
        Tensor r = do_hflip ? hflip(t) : t;
        if (do_rot90) r = rot90ccw(r);
        return r;
    };
    out.image = tf(s.image);
    out.saliency_gt = tf(s.saliency_gt);
    out.contour_gt = tf(s.contour_gt);
    return out;
}

Sample augment(const Sample& s, uint64_t seed) {
    std::mt19937 rng(static_cast<uint32_t>(mix_seed(seed, 0x61756721)));
    const bool do_flip = (rng() & 1u) != 0;
    const bool do_rot = (rng() & 1u) != 0;
    if (!do_flip && !do_rot) return s;
    return apply_transform(s, do_flip, do_rot);
}

std::vector<Sample> load_dataset(const DatasetSpec& spec) {
    namespace fs = std::filesystem;
    RCSB_CHECK(fs::is_directory(spec.image_dir), "image directory not found: ", spec.image_dir);
    RCSB_CHECK(fs::is_directory(spec.mask_dir), "mask directory not found: ", spec.mask_dir);

    std::map<std::string, fs::path> images;  // lexicographic by stem
    for (const auto& e : fs::directory_iterator(spec.image_dir))
        if (e.is_regular_file() && io::is_image_file(e.path())) images[e.path().stem().string()] = e.path();

    std::vector<Sample> samples;
    samples.reserve(images.size());
    for (const auto& [stem, img_path] : images) {
        const fs::path mask_path = fs::path(spec.mask_dir) / (stem + ".png");
        RCSB_CHECK(fs::exists(mask_path), "missing mask for image '", stem, "' (expected ",
                   mask_path.string(), ")");
        Sample s;
        s.id = stem;
        Tensor img = io::load_image_rgb(img_path.string());
        Tensor mask = io::load_image_gray(mask_path.string());
        s.image = kernels::bilinear_resize(img.reshaped({1, 3, img.dim(1), img.dim(2)}),
                                           spec.resize_h, spec.resize_w)
                      .reshaped({3, spec.resize_h, spec.resize_w});
        Tensor m = kernels::bilinear_resize(mask.reshaped({1, 1, mask.dim(1), mask.dim(2)}),
                                            spec.resize_h, spec.resize_w)
                       .reshaped({1, spec.resize_h, spec.resize_w});
        for (int64_t i = 0; i < m.numel(); ++i) m[i] = m[i] >= 0.5 ? 1.0 : 0.0;
        s.saliency_gt = m;
        s.contour_gt = gen_contour(m);
        samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace rcsb::data

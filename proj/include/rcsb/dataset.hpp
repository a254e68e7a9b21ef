#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rcsb/tensor.hpp"

namespace rcsb::data {

struct Sample {
    std::string id;
    Tensor image;        // [3,h,w] in [0,1]
    Tensor saliency_gt;  // [1,h,w] in {0,1}
    Tensor contour_gt;   // [1,h,w] in {0,1}
};

struct DatasetSpec {
    std::string image_dir;
    std::string mask_dir;
    int resize_h = 256;
    int resize_w = 256;
    bool augment = false;
};

// dilate(mask,k) - erode(mask,k) with a k x k square element and zero padding;
// a band straddling the object boundary. The mask must be strictly binary.
Tensor gen_contour(const Tensor& mask, int kernel = 5);

// Shared deterministic geometry ops; image and masks always receive the same
// transform. Rotation is 90 degrees counterclockwise.
Sample apply_transform(const Sample& s, bool hflip, bool rot90);
Tensor hflip(const Tensor& t);
Tensor rot90ccw(const Tensor& t);

// Coin-flips a horizontal flip and (independently) a 90-degree rotation,
// both with probability 1/2, deterministically from the seed.
Sample augment(const Sample& s, uint64_t seed);

// Images under <image_dir>/*.{png,jpg,jpeg} with masks <mask_dir>/<stem>.png.
// Images resized bilinearly, masks resized then binarized at 0.5, contours
// regenerated from the resized mask. Ordered lexicographically by id.
std::vector<Sample> load_dataset(const DatasetSpec& spec);

}  // namespace rcsb::data

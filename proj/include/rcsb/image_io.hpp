#pragma once

#include <filesystem>
#include <string>

#include "rcsb/tensor.hpp"

// Thin wrappers over the image codecs. 8-bit PNG/JPEG in, 8-bit PNG out;
// values are scaled by 1/255 into [0,1] doubles.
namespace rcsb::io {

bool is_image_file(const std::filesystem::path& p);

// [3,h,w], RGB order
Tensor load_image_rgb(const std::string& path);
// [1,h,w]
Tensor load_image_gray(const std::string& path);

// value -> round(v*255) clamped to [0,255]
void write_png_gray(const std::string& path, const Tensor& plane);

}  // namespace rcsb::io

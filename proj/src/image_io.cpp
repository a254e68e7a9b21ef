#include "rcsb/image_io.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>

#include "rcsb/errors.hpp"

namespace rcsb::io {

bool is_image_file(const std::filesystem::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

Tensor load_image_rgb(const std::string& path) {
    cv::Mat img = cv::imread(path, cv::IMREAD_COLOR);  // BGR
    RCSB_RUNTIME_CHECK(!img.empty(), "cannot decode image: ", path);
    Tensor t({3, img.rows, img.cols});
    const int64_t plane = static_cast<int64_t>(img.rows) * img.cols;
    for (int y = 0; y < img.rows; ++y) {
        const cv::Vec3b* row = img.ptr<cv::Vec3b>(y);
        for (int x = 0; x < img.cols; ++x) {
            const int64_t i = static_cast<int64_t>(y) * img.cols + x;
            t[0 * plane + i] = row[x][2] / 255.0;  // R
            t[1 * plane + i] = row[x][1] / 255.0;  // G
            t[2 * plane + i] = row[x][0] / 255.0;  // B
        }
    }
    return t;
}

Tensor load_image_gray(const std::string& path) {
    cv::Mat img = cv::imread(path, cv::IMREAD_GRAYSCALE);
    RCSB_RUNTIME_CHECK(!img.empty(), "cannot decode image: ", path);
    Tensor t({1, img.rows, img.cols});
    for (int y = 0; y < img.rows; ++y) {
        const uchar* row = img.ptr<uchar>(y);
        for (int x = 0; x < img.cols; ++x) t[static_cast<int64_t>(y) * img.cols + x] = row[x] / 255.0;
    }
    return t;
}

void write_png_gray(const std::string& path, const Tensor& plane) {
    RCSB_CHECK(plane.rank() == 2 || (plane.rank() == 3 && plane.dim(0) == 1) ||
                   (plane.rank() == 4 && plane.dim(0) == 1 && plane.dim(1) == 1),
               "write_png_gray expects a single plane, got ", plane.shape_str());
    const int h = plane.dim(plane.rank() - 2);
    const int w = plane.dim(plane.rank() - 1);
    cv::Mat img(h, w, CV_8UC1);
    for (int y = 0; y < h; ++y) {
        uchar* row = img.ptr<uchar>(y);
        for (int x = 0; x < w; ++x) {
            const Scalar v = std::clamp(plane[static_cast<int64_t>(y) * w + x], Scalar(0), Scalar(1));
            row[x] = static_cast<uchar>(std::lround(v * 255.0));
        }
    }
    RCSB_RUNTIME_CHECK(cv::imwrite(path, img), "cannot write PNG: ", path);
}

}  // namespace rcsb::io

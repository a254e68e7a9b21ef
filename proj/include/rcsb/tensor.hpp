#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "rcsb/errors.hpp"

namespace rcsb {

using Scalar = double;

// Dense row-major tensor. Activations are NCHW; parameters use whatever rank
// fits (conv weights [co,ci,kh,kw], per-channel vectors rank 1, scalars rank 1
// with a single element).
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(static_cast<size_t>(numel_of(shape_)), Scalar(0));
    }
    Tensor(std::vector<int> shape, Scalar fill_value) : Tensor(std::move(shape)) {
        std::fill(data_.begin(), data_.end(), fill_value);
    }

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, Scalar v) { return Tensor(std::move(shape), v); }
    static Tensor scalar(Scalar v) { return Tensor({1}, v); }

    static Tensor randn(std::vector<int> shape, std::mt19937& rng, Scalar stddev = 1.0) {
        Tensor t(std::move(shape));
        std::normal_distribution<Scalar> dist(0.0, stddev);
        for (auto& v : t.data_) v = dist(rng);
        return t;
    }
    static Tensor uniform(std::vector<int> shape, std::mt19937& rng, Scalar lo = 0.0, Scalar hi = 1.0) {
        Tensor t(std::move(shape));
        std::uniform_real_distribution<Scalar> dist(lo, hi);
        for (auto& v : t.data_) v = dist(rng);
        return t;
    }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    int64_t numel() const { return static_cast<int64_t>(data_.size()); }
    bool defined() const { return !shape_.empty(); }

    Scalar* data() { return data_.data(); }
    const Scalar* data() const { return data_.data(); }
    Scalar& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    Scalar operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    // NCHW accessors (rank-4 tensors only).
    int n() const { return shape_[0]; }
    int c() const { return shape_[1]; }
    int h() const { return shape_[2]; }
    int w() const { return shape_[3]; }
    int64_t idx4(int n, int c, int y, int x) const {
        return ((static_cast<int64_t>(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x;
    }
    Scalar& at4(int n, int c, int y, int x) { return data_[static_cast<size_t>(idx4(n, c, y, x))]; }
    Scalar at4(int n, int c, int y, int x) const { return data_[static_cast<size_t>(idx4(n, c, y, x))]; }

    void fill(Scalar v) { std::fill(data_.begin(), data_.end(), v); }
    void zero() { fill(Scalar(0)); }

    Tensor reshaped(std::vector<int> new_shape) const {
        RCSB_CHECK(numel_of(new_shape) == numel(), "reshape: element count mismatch");
        Tensor t = *this;
        t.shape_ = std::move(new_shape);
        return t;
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    Scalar sum() const {
        Scalar s = 0;
        for (Scalar v : data_) s += v;
        return s;
    }
    Scalar mean() const { return numel() == 0 ? Scalar(0) : sum() / static_cast<Scalar>(numel()); }
    Scalar abs_max() const {
        Scalar m = 0;
        for (Scalar v : data_) m = std::max(m, std::abs(v));
        return m;
    }
    bool all_finite() const {
        for (Scalar v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    static int64_t numel_of(const std::vector<int>& shape) {
        int64_t n = shape.empty() ? 0 : 1;
        for (int d : shape) {
            RCSB_CHECK(d >= 0, "negative tensor dimension");
            n *= d;
        }
        return n;
    }

    std::string shape_str() const {
        std::string s = "[";
        for (size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape_[i]);
        }
        return s + "]";
    }

  private:
    std::vector<int> shape_;
    std::vector<Scalar> data_;
};

inline bool operator==(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) return false;
    for (int64_t i = 0; i < a.numel(); ++i) {
        if (a[i] != b[i]) return false;
    }
    return true;
}

// Largest |a-b| over all elements; shapes must match.
inline Scalar max_abs_diff(const Tensor& a, const Tensor& b) {
    RCSB_CHECK(a.same_shape(b), "max_abs_diff: shape mismatch ", a.shape_str(), " vs ", b.shape_str());
    Scalar m = 0;
    for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Mixes a base seed with stream identifiers (epoch, sample index, ...) so every
// parallel work item owns an independent deterministic RNG stream.
inline uint64_t mix_seed(uint64_t base, uint64_t a, uint64_t b = 0) {
    uint64_t z = base + 0x9e3779b97f4a7c15ULL * (a + 1) + 0xbf58476d1ce4e5b9ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace rcsb

#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "rcsb/tensor.hpp"

// Single-file tensor archive:
//   magic "RCSBTA1\n"
//   u64 little-endian manifest length
//   manifest JSON: {"meta": {...}, "tensors": [{"name","shape","offset","numel"}]}
//   raw float64 little-endian payload
// Tensors are addressed by name; `meta` carries arbitrary JSON (config, epoch,
// optimizer step). The same container stores model checkpoints and imported
// backbone weights.
namespace rcsb::archive {

struct Archive {
    nlohmann::json meta;
    std::vector<std::pair<std::string, Tensor>> tensors;

    const Tensor* find(const std::string& name) const {
        for (const auto& [n, t] : tensors)
            if (n == name) return &t;
        return nullptr;
    }
};

void save(const std::string& path, const Archive& a);
Archive load(const std::string& path);

}  // namespace rcsb::archive

#include "rcsb/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "rcsb/errors.hpp"

namespace rcsb::archive {

namespace {
constexpr char kMagic[8] = {'R', 'C', 'S', 'B', 'T', 'A', '1', '\n'};

static_assert(sizeof(double) == 8, "archive format stores raw 8-byte doubles");
}  // namespace

void save(const std::string& path, const Archive& a) {
    nlohmann::json manifest;
    manifest["meta"] = a.meta;
    manifest["tensors"] = nlohmann::json::array();
    int64_t offset = 0;
    for (const auto& [name, t] : a.tensors) {
        manifest["tensors"].push_back({{"name", name},
                                       {"shape", t.shape()},
                                       {"offset", offset},
                                       {"numel", t.numel()}});
        offset += t.numel();
    }
    const std::string mjson = manifest.dump();

    std::ofstream out(path, std::ios::binary);
    RCSB_RUNTIME_CHECK(out.good(), "cannot open archive for writing: ", path);
    out.write(kMagic, sizeof(kMagic));
    const uint64_t mlen = mjson.size();
    out.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
    out.write(mjson.data(), static_cast<std::streamsize>(mjson.size()));
    for (const auto& [name, t] : a.tensors)
        out.write(reinterpret_cast<const char*>(t.data()),
                  static_cast<std::streamsize>(t.numel() * static_cast<int64_t>(sizeof(double))));
    RCSB_RUNTIME_CHECK(out.good(), "write failed for archive: ", path);
}

Archive load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    RCSB_CHECK(in.good(), "cannot open archive: ", path);
    char magic[8];
    in.read(magic, sizeof(magic));
    RCSB_CHECK(in.good() && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0,
               "not a tensor archive: ", path);
    uint64_t mlen = 0;
    in.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
    std::string mjson(mlen, '\0');
    in.read(mjson.data(), static_cast<std::streamsize>(mlen));
    RCSB_CHECK(in.good(), "truncated archive manifest: ", path);
    nlohmann::json manifest = nlohmann::json::parse(mjson, nullptr, false);
    RCSB_CHECK(!manifest.is_discarded(), "corrupt archive manifest: ", path);

    Archive a;
    a.meta = manifest.value("meta", nlohmann::json::object());
    for (const auto& entry : manifest.at("tensors")) {
        Tensor t(entry.at("shape").get<std::vector<int>>());
        RCSB_CHECK(t.numel() == entry.at("numel").get<int64_t>(),
                   "archive tensor '", entry.at("name").get<std::string>(), "' shape/numel mismatch");
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.numel() * static_cast<int64_t>(sizeof(double))));
        RCSB_CHECK(in.good(), "truncated archive payload: ", path);
        a.tensors.emplace_back(entry.at("name").get<std::string>(), std::move(t));
    }
    return a;
}

}  // namespace rcsb::archive

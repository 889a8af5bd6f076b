#include "adk/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace adk {

static_assert(std::endian::native == std::endian::little,
              "checkpoint container assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'A', 'D', 'K', 'T'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ofstream& f, uint32_t v) {
    f.write(reinterpret_cast<const char*>(&v), 4);
}

uint32_t read_u32(std::ifstream& f) {
    uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 4);
    ADK_CHECK(bool(f), "checkpoint: truncated file");
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor>>& tensors) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        ADK_CHECK(bool(f), "checkpoint: cannot open ", tmp, " for writing");
        f.write(kMagic, 4);
        write_u32(f, kVersion);
        for (const auto& [name, t] : tensors) {
            ADK_CHECK(t.defined(), "checkpoint: undefined tensor '", name, "'");
            write_u32(f, uint32_t(name.size()));
            f.write(name.data(), std::streamsize(name.size()));
            write_u32(f, uint32_t(t.ndim()));
            for (int i = 0; i < t.ndim(); ++i) write_u32(f, uint32_t(t.dim(i)));
            f.write(reinterpret_cast<const char*>(t.data()),
                    std::streamsize(t.size() * int64_t(sizeof(float))));
        }
        ADK_CHECK(bool(f), "checkpoint: write failed for ", tmp);
    }
    std::filesystem::rename(tmp, path);
}

std::map<std::string, Tensor> load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    ADK_CHECK(bool(f), "checkpoint: cannot open ", path);
    char magic[4];
    f.read(magic, 4);
    ADK_CHECK(bool(f) && std::equal(magic, magic + 4, kMagic), "checkpoint: ", path,
              " has bad magic (want ADKT)");
    const uint32_t version = read_u32(f);
    ADK_CHECK(version == kVersion, "checkpoint: ", path, " has version ", version, ", want ",
              kVersion);
    std::map<std::string, Tensor> out;
    while (true) {
        uint32_t name_len = 0;
        f.read(reinterpret_cast<char*>(&name_len), 4);
        if (f.eof()) break;
        ADK_CHECK(bool(f), "checkpoint: truncated name length");
        std::string name(name_len, '\0');
        f.read(name.data(), name_len);
        const uint32_t ndim = read_u32(f);
        Shape shape(ndim);
        for (uint32_t i = 0; i < ndim; ++i) shape[i] = int(read_u32(f));
        auto t = Tensor::zeros(shape);
        f.read(reinterpret_cast<char*>(t.data()),
               std::streamsize(t.size() * int64_t(sizeof(float))));
        ADK_CHECK(bool(f), "checkpoint: truncated data for '", name, "'");
        ADK_CHECK(!out.count(name), "checkpoint: duplicate tensor '", name, "'");
        out.emplace(std::move(name), std::move(t));
    }
    return out;
}

}  // namespace adk

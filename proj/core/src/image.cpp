#include "adk/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace adk {

namespace {

unsigned char to_byte(float v) {
    const float c = std::min(std::max(v, 0.0f), 1.0f);
    return static_cast<unsigned char>(std::lround(c * 255.0f));
}

void write_pnm(const std::string& path, const Tensor& img, int channels, const char* magic) {
    ADK_CHECK(img.ndim() == 3 && img.dim(0) == channels, "image: expected [", channels,
              ",H,W], got ", shape_str(img.shape()));
    const int H = img.dim(1), W = img.dim(2);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    ADK_CHECK(bool(f), "image: cannot open ", path, " for writing");
    f << magic << "\n" << W << " " << H << "\n255\n";
    const int64_t plane = int64_t(H) * W;
    std::vector<unsigned char> row(size_t(W) * size_t(channels));
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < channels; ++c)
                row[size_t(x * channels + c)] = to_byte(img.data()[c * plane + y * W + x]);
        f.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
    }
    ADK_CHECK(bool(f), "image: write failed for ", path);
}

Tensor read_pnm(const std::string& path, int channels, const char* magic) {
    std::ifstream f(path, std::ios::binary);
    ADK_CHECK(bool(f), "image: cannot open ", path);
    std::string m;
    int w, h, maxval;
    f >> m >> w >> h >> maxval;
    ADK_CHECK(m == magic, "image: ", path, " has magic ", m, ", want ", magic);
    ADK_CHECK(maxval == 255, "image: ", path, " must be 8-bit");
    f.get();  // single whitespace after header
    auto img = Tensor::zeros({channels, h, w});
    const int64_t plane = int64_t(h) * w;
    std::vector<unsigned char> row(size_t(w) * size_t(channels));
    for (int y = 0; y < h; ++y) {
        f.read(reinterpret_cast<char*>(row.data()), std::streamsize(row.size()));
        ADK_CHECK(bool(f), "image: truncated ", path);
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c)
                img.data()[c * plane + y * w + x] = float(row[size_t(x * channels + c)]) / 255.0f;
    }
    return img;
}

}  // namespace

void save_ppm(const std::string& path, const Tensor& img) { write_pnm(path, img, 3, "P6"); }
Tensor load_ppm(const std::string& path) { return read_pnm(path, 3, "P6"); }
void save_pgm(const std::string& path, const Tensor& img) { write_pnm(path, img, 1, "P5"); }
Tensor load_pgm(const std::string& path) { return read_pnm(path, 1, "P5"); }

void save_raw_f32(const std::string& path, const Tensor& t) {
    {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        ADK_CHECK(bool(f), "raw_f32: cannot open ", path);
        f.write(reinterpret_cast<const char*>(t.data()),
                std::streamsize(t.size() * int64_t(sizeof(float))));
    }
    std::ofstream meta(path + ".meta");
    ADK_CHECK(bool(meta), "raw_f32: cannot open ", path, ".meta");
    meta << "dtype f32\nshape";
    for (int i = 0; i < t.ndim(); ++i) meta << ' ' << t.dim(i);
    meta << '\n';
}

Tensor load_raw_f32(const std::string& path) {
    std::ifstream meta(path + ".meta");
    ADK_CHECK(bool(meta), "raw_f32: missing sidecar ", path, ".meta");
    std::string key, dtype;
    meta >> key >> dtype;
    ADK_CHECK(key == "dtype" && dtype == "f32", "raw_f32: unsupported sidecar ", path);
    meta >> key;
    ADK_CHECK(key == "shape", "raw_f32: malformed sidecar ", path);
    Shape shape;
    int d;
    while (meta >> d) shape.push_back(d);
    auto t = Tensor::zeros(shape);
    std::ifstream f(path, std::ios::binary);
    ADK_CHECK(bool(f), "raw_f32: cannot open ", path);
    f.read(reinterpret_cast<char*>(t.data()), std::streamsize(t.size() * int64_t(sizeof(float))));
    ADK_CHECK(bool(f), "raw_f32: truncated ", path);
    return t;
}

}  // namespace adk

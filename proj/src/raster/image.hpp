#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "util/errors.hpp"

namespace forager::raster {

// RGB image, row-major, values in [0,1].
struct Image {
    int width = 0;
    int height = 0;
    std::vector<float> data; // width*height*3

    Image() = default;
    Image(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h * 3, 0.0f) {}

    float& at(int x, int y, int c) {
        return data[(static_cast<size_t>(y) * width + x) * 3 + c];
    }
    float at(int x, int y, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * 3 + c];
    }

    size_t pixel_count() const { return static_cast<size_t>(width) * height; }
};

// Sprite texture: pixels plus a per-pixel opacity cutout.
struct Texture {
    Image pixels;
    std::vector<uint8_t> mask; // 1 = drawn, matches pixel grid

    bool opaque_at(int x, int y) const {
        return mask[static_cast<size_t>(y) * pixels.width + x] != 0;
    }
};

// Quantize to 8-bit levels. Procedural textures are built from libm
// transcendentals whose last ulp varies across platforms; snapping to the
// 255-level grid makes texture content platform-stable.
inline float quantize8(float v) {
    if (v < 0.0f) v = 0.0f;
    if (v > 1.0f) v = 1.0f;
    return static_cast<float>(static_cast<int>(v * 255.0f + 0.5f)) / 255.0f;
}

inline void quantize8_inplace(Image& img) {
    for (auto& v : img.data) v = quantize8(v);
}

void write_ppm(const Image& img, const std::string& path);
void write_pgm(const std::vector<float>& gray, int width, int height, const std::string& path);

} // namespace forager::raster

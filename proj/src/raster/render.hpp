#pragma once

#include "raster/image.hpp"
#include "raster/textures.hpp"
#include "world/world.hpp"

namespace forager::raster {

// First-person viewport: flat sky above the horizon, floor-cast grass below,
// objects as depth-sorted camera-facing billboards with nearest-neighbor
// texture sampling. Pure function of its arguments; 90 degree horizontal FOV.
Image render(const world::WorldState& state, const world::TaskSpec& task,
             const TextureSource& source, int width, int height);

// FNV-1a over the 8-bit quantized pixels; the golden-image test currency.
uint64_t image_hash(const Image& img);

} // namespace forager::raster

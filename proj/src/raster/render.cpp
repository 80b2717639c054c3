#include "raster/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "util/mathx.hpp"

namespace forager::raster {

namespace {

constexpr float kSkyR = 0.36f, kSkyG = 0.56f, kSkyB = 0.86f;
constexpr float kGrassR = 0.13f, kGrassG = 0.44f, kGrassB = 0.12f;
constexpr double kEyeHeight = 0.4;
constexpr double kSpriteWorldSize = 0.8; // square billboards, bottom on the ground
constexpr double kNearClip = 0.12;
constexpr double kGrassCellsPerUnit = 2.0;

// Per-cell grass brightness in [0.78, 1.0].
inline float grass_shade(int64_t cx, int64_t cy) {
    const uint64_t h = splitmix64(hash_combine(static_cast<uint64_t>(cx) * 2654435761ULL,
                                               static_cast<uint64_t>(cy)));
    return 0.78f + 0.22f * static_cast<float>(h & 0xffff) / 65535.0f;
}

struct SpriteView {
    double depth;   // forward distance
    double lateral; // signed distance along the camera plane
    const world::ObjectInstance* obj;
};

} // namespace

Image render(const world::WorldState& state, const world::TaskSpec& /*task*/,
             const TextureSource& source, int width, int height) {
    if (width < 8 || height < 8) throw usage_error("render: viewport must be at least 8x8");

    Image img(width, height);
    const int horizon = height / 2;

    // Sky: flat fill above the horizon.
    for (int y = 0; y < horizon; ++y)
        for (int x = 0; x < width; ++x) {
            img.at(x, y, 0) = kSkyR;
            img.at(x, y, 1) = kSkyG;
            img.at(x, y, 2) = kSkyB;
        }

    const double dirx = det_cos(state.heading), diry = det_sin(state.heading);
    // Camera plane spans the 90 degree FOV: |plane| = tan(45deg) = 1. The
    // plane points to the agent's right so a counterclockwise (left) turn
    // sweeps objects from screen-left toward the centre.
    const double plx = diry, ply = -dirx;
    const double proj = width / 2.0; // pixels per unit tangent

    // Ground: floor casting against the y=0 plane, grass shade per world cell.
    for (int y = horizon; y < height; ++y) {
        const double row_dist = kEyeHeight * proj / (y - horizon + 0.5);
        for (int x = 0; x < width; ++x) {
            const double cam_x = (2.0 * (x + 0.5) / width) - 1.0;
            const double wx = state.agent_x + (dirx + plx * cam_x) * row_dist;
            const double wy = state.agent_y + (diry + ply * cam_x) * row_dist;
            const auto cx = static_cast<int64_t>(std::floor(wx * kGrassCellsPerUnit));
            const auto cy = static_cast<int64_t>(std::floor(wy * kGrassCellsPerUnit));
            const float s = grass_shade(cx, cy);
            img.at(x, y, 0) = kGrassR * s;
            img.at(x, y, 1) = kGrassG * s;
            img.at(x, y, 2) = kGrassB * s;
        }
    }

    // Billboards: painter's algorithm, far to near; ties broken by object id
    // so the draw order is deterministic.
    std::vector<SpriteView> sprites;
    sprites.reserve(state.objects.size());
    for (const auto& o : state.objects) {
        const double rx = o.x - state.agent_x, ry = o.y - state.agent_y;
        const double depth = rx * dirx + ry * diry;
        if (depth < kNearClip) continue;
        const double lateral = rx * plx + ry * ply;
        if (std::abs(lateral) > depth + kSpriteWorldSize) continue; // outside frustum
        sprites.push_back({depth, lateral, &o});
    }
    std::sort(sprites.begin(), sprites.end(), [](const SpriteView& a, const SpriteView& b) {
        if (a.depth != b.depth) return a.depth > b.depth;
        return a.obj->id > b.obj->id;
    });

    for (const auto& s : sprites) {
        const Texture& tex = source.texture_for(s.obj->class_id, s.obj->instance_seed);
        const double size_px = kSpriteWorldSize * proj / s.depth;
        if (size_px < 1.0) continue;
        const double cx_px = width / 2.0 + proj * (s.lateral / s.depth);
        // Sprite center sits at eye height, so its vertical middle is the horizon.
        const double x_lo = cx_px - size_px / 2.0, y_lo = horizon - size_px / 2.0;
        const int px0 = std::max(0, static_cast<int>(std::floor(x_lo)));
        const int px1 = std::min(width, static_cast<int>(std::ceil(x_lo + size_px)));
        const int py0 = std::max(0, static_cast<int>(std::floor(y_lo)));
        const int py1 = std::min(height, static_cast<int>(std::ceil(y_lo + size_px)));
        const int tw = tex.pixels.width, th = tex.pixels.height;
        for (int py = py0; py < py1; ++py) {
            const int ty = std::clamp(static_cast<int>((py + 0.5 - y_lo) / size_px * th), 0, th - 1);
            for (int px = px0; px < px1; ++px) {
                const int tx =
                    std::clamp(static_cast<int>((px + 0.5 - x_lo) / size_px * tw), 0, tw - 1);
                if (!tex.opaque_at(tx, ty)) continue;
                img.at(px, py, 0) = tex.pixels.at(tx, ty, 0);
                img.at(px, py, 1) = tex.pixels.at(tx, ty, 1);
                img.at(px, py, 2) = tex.pixels.at(tx, ty, 2);
            }
        }
    }
    return img;
}

uint64_t image_hash(const Image& img) {
    uint64_t h = 0xcbf29ce484222325ULL;
    unsigned char dims[8];
    dims[0] = static_cast<unsigned char>(img.width & 0xff);
    dims[1] = static_cast<unsigned char>((img.width >> 8) & 0xff);
    dims[2] = static_cast<unsigned char>(img.height & 0xff);
    dims[3] = static_cast<unsigned char>((img.height >> 8) & 0xff);
    dims[4] = dims[5] = dims[6] = dims[7] = 0;
    h = fnv1a64(dims, 8, h);
    for (float v : img.data) {
        const auto q = static_cast<unsigned char>(std::clamp(v, 0.0f, 1.0f) * 255.0f + 0.5f);
        h = fnv1a64(&q, 1, h);
    }
    return h;
}

void write_ppm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw format_error(path + ": cannot open for writing");
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    for (float v : img.data) {
        const auto q = static_cast<unsigned char>(std::clamp(v, 0.0f, 1.0f) * 255.0f + 0.5f);
        out.put(static_cast<char>(q));
    }
}

void write_pgm(const std::vector<float>& gray, int width, int height, const std::string& path) {
    if (gray.size() != static_cast<size_t>(width) * height)
        throw usage_error("write_pgm: size mismatch");
    float lo = gray.empty() ? 0.0f : gray[0], hi = lo;
    for (float v : gray) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const float span = hi - lo > 1e-12f ? hi - lo : 1.0f;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw format_error(path + ": cannot open for writing");
    out << "P5\n" << width << " " << height << "\n255\n";
    for (float v : gray) {
        const auto q = static_cast<unsigned char>((v - lo) / span * 255.0f + 0.5f);
        out.put(static_cast<char>(q));
    }
}

} // namespace forager::raster

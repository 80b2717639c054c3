#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "world/world.hpp"

namespace forager::tlog {

// One agent decision (action-repeat frames of simulation).
struct StepRecord {
    uint32_t episode = 0;
    uint32_t frame = 0;       // episode-local frame count at decision time
    float satiety = 0;        // at decision time
    float value = 0;          // critic estimate, unscaled
    uint8_t act_h = 0, act_v = 0;
    std::array<float, 3> probs_h{}, probs_v{};
    float reward = 0;         // unscaled step reward
    std::array<uint8_t, world::kNumClasses> pickup_counts{};
    float wasted = 0;         // satiety lost to the cap this step
    float positive_delta = 0; // sum of nourishment deltas encountered, pre-clamp
    std::array<uint16_t, world::kNumClasses> object_counts{}; // live objects at decision time
    int32_t viewport = -1;    // index into the frames file, -1 if not stored
    uint8_t done = 0;
};

// Binary, little-endian, fixed-width records behind a JSON header line.
// Optional viewports live in a sibling "<path>.frames" file of raw float RGB.
struct TrajectoryLog {
    nlohmann::json header; // schema, fingerprint, seed, action_repeat, geometry
    std::vector<StepRecord> records;

    int action_repeat() const { return header.value("action_repeat", 4); }
    uint64_t base_seed() const { return header.value("seed", static_cast<uint64_t>(0)); }

    void save(const std::string& path) const;
    static TrajectoryLog load(const std::string& path);

    void save_csv(const std::string& path) const;
};

// Viewport sidecar: raw float32 RGB frames plus the recurrent latent that
// accompanied each stored frame (empty latents for feedforward brains).
struct ViewportFile {
    int width = 0, height = 0;
    int latent_dim = 0;
    std::vector<std::vector<float>> frames;
    std::vector<std::vector<float>> latents;

    void save(const std::string& path) const;
    static ViewportFile load(const std::string& path);
};

// Seed for the k-th episode of a recording session.
inline uint64_t episode_seed(uint64_t base, uint64_t index) {
    return derive_seed(base, 0x8ec04dULL, index);
}

} // namespace forager::tlog

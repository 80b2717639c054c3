#pragma once

#include <functional>
#include <memory>
#include <string>

#include "agent/checkpoint.hpp"
#include "raster/textures.hpp"
#include "trainer/ppo.hpp"
#include "trainer/rollout.hpp"

namespace forager::trainer {

struct TrainSetup {
    world::TaskSpec task;
    std::shared_ptr<const raster::TextureSource> textures;
    agent::ArchSpec arch;
    PPOHyper hyper;
    uint64_t seed = 1;
    int64_t frame_budget = 0;
    int64_t checkpoint_every = 1'000'000;
    std::string run_dir;        // history.csv, stats.csv, checkpoints
    int collector_threads = 1;
    bool resume = false;        // continue from run_dir/final.fgt when present
    std::string config_text;    // embedded in checkpoints for provenance
    uint64_t config_fingerprint = 0;
    std::function<void(int64_t frames, double recent_lifespan)> progress; // optional
};

struct TrainResult {
    std::string final_checkpoint;
    int64_t frames = 0;
    int64_t episodes = 0;
    int64_t updates = 0;
};

// Alternates collect / ppo_update until the frame budget, appending every
// finished episode to history.csv and checkpointing on the configured
// cadence. Fully resumable: checkpoints carry optimizer moments, worker
// environments, latents, and RNG streams.
TrainResult train(const TrainSetup& setup);

} // namespace forager::trainer

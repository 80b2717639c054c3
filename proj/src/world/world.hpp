#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "util/rng.hpp"

namespace forager::world {

// Heading axis: left / centre / right. Velocity axis: forward / stationary /
// backward. Index values are the categorical action ids used by the policy.
enum class Heading : int { left = 0, centre = 1, right = 2 };
enum class Velocity : int { forward = 0, stationary = 1, backward = 2 };

struct AgentAction {
    Heading heading = Heading::centre;
    Velocity velocity = Velocity::stationary;
};

struct ObjectClass {
    int id = 0;
    double satiety_delta = 0.0;
    std::string texture_key;

    bool nourishment() const { return satiety_delta > 0.0; }
};

inline constexpr int kNumClasses = 10;

// The ten class deltas, in class-id order (ids 0..4 poison, 5..9 nourishment).
inline constexpr std::array<double, kNumClasses> kClassDeltas = {
    -25, -20, -15, -10, -5, 10, 20, 30, 40, 50};

struct TaskSpec {
    std::vector<ObjectClass> classes;          // exactly the ten canonical classes
    std::array<int, kNumClasses> initial_counts{};
    int spawn_interval = 70;                   // frames; <= 0 disables spawning
    int per_class_cap = 12;
    double arena_side = 40.0;
    double decay_rate = 0.25;                  // satiety units per frame
    double initial_satiety = 50.0;
    double pickup_radius = 0.6;
    double move_speed = 0.35;                  // units per frame
    double turn_speed = 4.5 * kPi / 180.0;     // radians per frame
    int64_t episode_frame_cap = 30000;

    static TaskSpec defaults();
    void validate() const; // throws config_error
};

struct ObjectInstance {
    int class_id = 0;
    double x = 0.0, y = 0.0;
    uint64_t instance_seed = 0;
    uint64_t id = 0; // creation order; pickup resolution processes ascending
};

struct Pickup {
    int class_id = 0;
    int64_t frame = 0;   // frame on which the object was consumed
    double delta = 0.0;
    double wasted = 0.0; // satiety lost to the 100 cap (nourishment only)
};

struct StepOutcome {
    double reward = 0.0;               // per-frame: post-update satiety; per-step: summed
    std::vector<Pickup> pickups;
    double wasted = 0.0;
    bool terminated = false;           // satiety reached 0
    bool truncated = false;            // episode frame cap reached
    int64_t frames_advanced = 0;

    bool done() const { return terminated || truncated; }
};

struct WorldState {
    double agent_x = 0.0, agent_y = 0.0;
    double heading = 0.0; // radians, wrapped to (-pi, pi]
    double satiety = 0.0;
    std::vector<ObjectInstance> objects;
    int64_t frame = 0;    // completed simulation frames
    Rng rng;
    uint64_t next_object_id = 0;
    bool terminated = false;
    bool truncated = false;

    bool done() const { return terminated || truncated; }
    std::array<int, kNumClasses> class_counts() const;

    std::string serialize() const;
    static WorldState deserialize(const std::string& blob);
};

// Places initial objects uniformly at random outside the agent's pickup disc.
WorldState init_world(const TaskSpec& task, uint64_t seed);

// Advances exactly one simulation frame.
StepOutcome step_frame(WorldState& state, AgentAction action, const TaskSpec& task);

// Holds one action for `action_repeat` frames (early exit on episode end);
// reward is the frame-wise sum.
StepOutcome step_env(WorldState& state, AgentAction action, const TaskSpec& task,
                     int action_repeat = 4);

// Spawns one nourishment + one poison object when the frame count crosses a
// spawn boundary. Called from step_frame; exposed for direct testing.
void spawn_tick(WorldState& state, const TaskSpec& task);

} // namespace forager::world

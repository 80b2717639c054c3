#include "world/world.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "util/errors.hpp"
#include "util/mathx.hpp"

namespace forager::world {

namespace {

constexpr double kWallMargin = 0.5; // agent and objects keep this far from walls
constexpr int kSpawnAttempts = 64;

double wrap_angle(double a) {
    a = std::fmod(a, kTwoPi);
    if (a > kPi) a -= kTwoPi;
    if (a <= -kPi) a += kTwoPi;
    return a;
}

bool near_agent(const WorldState& s, double x, double y, double radius) {
    const double dx = x - s.agent_x, dy = y - s.agent_y;
    return dx * dx + dy * dy <= radius * radius;
}

// Uniform position in the walkable square, rejecting the agent's pickup disc.
bool random_free_position(WorldState& s, const TaskSpec& task, double& x, double& y) {
    const double lo = kWallMargin, hi = task.arena_side - kWallMargin;
    for (int i = 0; i < kSpawnAttempts; ++i) {
        x = s.rng.uniform(lo, hi);
        y = s.rng.uniform(lo, hi);
        if (!near_agent(s, x, y, task.pickup_radius)) return true;
    }
    return false;
}

void add_object(WorldState& s, const TaskSpec& /*task*/, int class_id, double x, double y) {
    ObjectInstance obj;
    obj.class_id = class_id;
    obj.x = x;
    obj.y = y;
    obj.instance_seed = s.rng.next_u64();
    obj.id = s.next_object_id++;
    s.objects.push_back(obj);
}

} // namespace

TaskSpec TaskSpec::defaults() {
    TaskSpec t;
    t.classes.reserve(kNumClasses);
    for (int i = 0; i < kNumClasses; ++i)
        t.classes.push_back({i, kClassDeltas[static_cast<size_t>(i)],
                             "class" + std::to_string(i)});
    for (int i = 0; i < kNumClasses; ++i)
        t.initial_counts[static_cast<size_t>(i)] = kClassDeltas[static_cast<size_t>(i)] > 0 ? 6 : 3;
    return t;
}

void TaskSpec::validate() const {
    if (classes.size() != kNumClasses)
        throw config_error("task: expected exactly 10 object classes, got " +
                           std::to_string(classes.size()));
    for (int i = 0; i < kNumClasses; ++i) {
        const auto& c = classes[static_cast<size_t>(i)];
        if (c.id != i)
            throw config_error("task: class ids must be 0..9 in order");
        if (c.satiety_delta != kClassDeltas[static_cast<size_t>(i)])
            throw config_error("task: class " + std::to_string(i) + " delta must be " +
                               std::to_string(kClassDeltas[static_cast<size_t>(i)]));
    }
    if (decay_rate <= 0.0) throw config_error("task: decay_rate must be > 0");
    if (initial_satiety <= 0.0 || initial_satiety > 100.0)
        throw config_error("task: initial_satiety must be in (0, 100]");
    // the no-action baseline is pinned at 200 frames
    if (std::abs(initial_satiety / decay_rate - 200.0) > 1e-9)
        throw config_error("task: initial_satiety / decay_rate must equal 200 frames (got " +
                           std::to_string(initial_satiety / decay_rate) + ")");
    if (arena_side < 4.0 * kWallMargin) throw config_error("task: arena_side too small");
    if (pickup_radius <= 0.0) throw config_error("task: pickup_radius must be > 0");
    if (move_speed < 0.0 || turn_speed < 0.0)
        throw config_error("task: speeds must be non-negative");
    if (episode_frame_cap < 1) throw config_error("task: episode_frame_cap must be >= 1");
    if (per_class_cap < 1) throw config_error("task: per_class_cap must be >= 1");
    int nourish = 0, poison = 0;
    for (int i = 0; i < kNumClasses; ++i) {
        if (initial_counts[static_cast<size_t>(i)] < 0)
            throw config_error("task: initial counts must be non-negative");
        (kClassDeltas[static_cast<size_t>(i)] > 0 ? nourish : poison) +=
            initial_counts[static_cast<size_t>(i)];
    }
    if (nourish <= poison)
        throw config_error("task: initial nourishment count must exceed poison count");
}

std::array<int, kNumClasses> WorldState::class_counts() const {
    std::array<int, kNumClasses> counts{};
    for (const auto& o : objects) counts[static_cast<size_t>(o.class_id)]++;
    return counts;
}

WorldState init_world(const TaskSpec& task, uint64_t seed) {
    task.validate();
    WorldState s;
    s.rng.seed(seed);
    s.agent_x = task.arena_side / 2.0;
    s.agent_y = task.arena_side / 2.0;
    s.heading = 0.0;
    s.satiety = task.initial_satiety;
    s.frame = 0;
    for (int c = 0; c < kNumClasses; ++c) {
        for (int k = 0; k < task.initial_counts[static_cast<size_t>(c)]; ++k) {
            double x, y;
            if (random_free_position(s, task, x, y)) add_object(s, task, c, x, y);
        }
    }
    return s;
}

void spawn_tick(WorldState& s, const TaskSpec& task) {
    if (task.spawn_interval <= 0) return;
    if (s.frame <= 0 || s.frame % task.spawn_interval != 0) return;
    const auto counts = s.class_counts();
    // One nourishment then one poison, class uniform within its group; the
    // spawn is skipped (not redrawn) when the drawn class is at cap.
    const int nourish_class = 5 + static_cast<int>(s.rng.uniform_int(5));
    double x, y;
    if (counts[static_cast<size_t>(nourish_class)] < task.per_class_cap &&
        random_free_position(s, task, x, y))
        add_object(s, task, nourish_class, x, y);
    const int poison_class = static_cast<int>(s.rng.uniform_int(5));
    if (counts[static_cast<size_t>(poison_class)] < task.per_class_cap &&
        random_free_position(s, task, x, y))
        add_object(s, task, poison_class, x, y);
}

StepOutcome step_frame(WorldState& s, AgentAction action, const TaskSpec& task) {
    if (s.done()) throw usage_error("step_frame: episode already ended");

    StepOutcome out;

    // Turn, then move along the new heading; wall clamping per axis makes the
    // agent slide along walls.
    if (action.heading == Heading::left)
        s.heading = wrap_angle(s.heading + task.turn_speed);
    else if (action.heading == Heading::right)
        s.heading = wrap_angle(s.heading - task.turn_speed);

    if (action.velocity != Velocity::stationary) {
        const double dir = action.velocity == Velocity::forward ? 1.0 : -1.0;
        const double lo = kWallMargin, hi = task.arena_side - kWallMargin;
        s.agent_x = std::clamp(s.agent_x + dir * task.move_speed * det_cos(s.heading), lo, hi);
        s.agent_y = std::clamp(s.agent_y + dir * task.move_speed * det_sin(s.heading), lo, hi);
    }

    s.satiety = std::max(0.0, s.satiety - task.decay_rate);

    const int64_t this_frame = s.frame + 1;

    // Consume everything in reach, ascending object id.
    const double r2 = task.pickup_radius * task.pickup_radius;
    std::vector<size_t> hits;
    for (size_t i = 0; i < s.objects.size(); ++i) {
        const auto& o = s.objects[i];
        const double dx = o.x - s.agent_x, dy = o.y - s.agent_y;
        if (dx * dx + dy * dy <= r2) hits.push_back(i);
    }
    if (!hits.empty()) {
        std::sort(hits.begin(), hits.end(), [&](size_t a, size_t b) {
            return s.objects[a].id < s.objects[b].id;
        });
        for (size_t idx : hits) {
            const auto& o = s.objects[idx];
            const double delta = task.classes[static_cast<size_t>(o.class_id)].satiety_delta;
            double wasted = 0.0;
            if (delta > 0.0) wasted = std::max(0.0, s.satiety + delta - 100.0);
            s.satiety = std::clamp(s.satiety + delta, 0.0, 100.0);
            out.pickups.push_back({o.class_id, this_frame, delta, wasted});
            out.wasted += wasted;
        }
        // Erase consumed objects, preserving relative order of the rest.
        std::vector<ObjectInstance> kept;
        kept.reserve(s.objects.size() - hits.size());
        size_t hi = 0;
        for (size_t i = 0; i < s.objects.size(); ++i) {
            if (hi < hits.size() && hits[hi] == i) {
                ++hi;
                continue;
            }
            kept.push_back(s.objects[i]);
        }
        s.objects.swap(kept);
    }

    out.reward = s.satiety;
    s.frame = this_frame;
    spawn_tick(s, task);

    if (s.satiety <= 0.0) {
        s.terminated = true;
    } else if (s.frame >= task.episode_frame_cap) {
        s.truncated = true;
    }
    out.terminated = s.terminated;
    out.truncated = s.truncated;
    out.frames_advanced = 1;
    return out;
}

StepOutcome step_env(WorldState& s, AgentAction action, const TaskSpec& task, int action_repeat) {
    if (action_repeat < 1) throw usage_error("step_env: action_repeat must be >= 1");
    StepOutcome acc;
    for (int i = 0; i < action_repeat; ++i) {
        StepOutcome f = step_frame(s, action, task);
        acc.reward += f.reward;
        acc.wasted += f.wasted;
        acc.frames_advanced += f.frames_advanced;
        for (auto& p : f.pickups) acc.pickups.push_back(p);
        acc.terminated = f.terminated;
        acc.truncated = f.truncated;
        if (f.done()) break;
    }
    return acc;
}

// --- State serialization (checkpoint resume) ---

std::string WorldState::serialize() const {
    std::ostringstream os;
    os.precision(17);
    os << agent_x << ' ' << agent_y << ' ' << heading << ' ' << satiety << ' ' << frame << ' '
       << next_object_id << ' ' << (terminated ? 1 : 0) << ' ' << (truncated ? 1 : 0) << ' '
       << objects.size() << '\n';
    for (const auto& o : objects)
        os << o.class_id << ' ' << o.x << ' ' << o.y << ' ' << o.instance_seed << ' ' << o.id
           << '\n';
    os << rng.save_state() << '\n';
    return os.str();
}

WorldState WorldState::deserialize(const std::string& blob) {
    std::istringstream is(blob);
    WorldState s;
    size_t n = 0;
    int term = 0, trunc = 0;
    is >> s.agent_x >> s.agent_y >> s.heading >> s.satiety >> s.frame >> s.next_object_id >>
        term >> trunc >> n;
    if (!is) throw format_error("world state: truncated header");
    s.terminated = term != 0;
    s.truncated = trunc != 0;
    s.objects.resize(n);
    for (auto& o : s.objects) {
        is >> o.class_id >> o.x >> o.y >> o.instance_seed >> o.id;
        if (!is) throw format_error("world state: truncated object table");
    }
    std::string rng_state, line;
    std::getline(is, line); // consume eol
    std::getline(is, rng_state);
    if (rng_state.empty()) throw format_error("world state: missing rng state");
    s.rng.load_state(rng_state);
    return s;
}

} // namespace forager::world

#include "forager.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include "harness/commands.hpp"
#include "harness/config.hpp"
#include "harness/manifest.hpp"
#include "raster/render.hpp"
#include "util/errors.hpp"
#include "world/world.hpp"

using namespace forager;

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

// Exceptions cross the C boundary as status codes.
template <typename F>
fg_status guarded(F&& f) {
    try {
        f();
        g_last_error.clear();
        return FG_OK;
    } catch (const config_error& e) {
        set_error(e.what());
        return FG_ERR_CONFIG;
    } catch (const usage_error& e) {
        set_error(e.what());
        return FG_ERR_USAGE;
    } catch (const std::exception& e) {
        set_error(e.what());
        return FG_ERR_RUNTIME;
    } catch (...) {
        set_error("unknown error");
        return FG_ERR_RUNTIME;
    }
}

} // namespace

struct fg_config {
    harness::Config cfg;
};

struct fg_env {
    world::TaskSpec task;
    std::shared_ptr<const raster::TextureSource> textures;
    world::WorldState state;
    int default_repeat = 4;
};

extern "C" {

const char* fg_version(void) {
    static const std::string v = harness::version_string();
    return v.c_str();
}

const char* fg_last_error(void) { return g_last_error.c_str(); }

fg_status fg_config_create(fg_config** out) {
    if (!out) return FG_ERR_USAGE;
    return guarded([&] { *out = new fg_config{harness::Config::defaults()}; });
}

fg_status fg_config_load(const char* path, fg_config** out) {
    if (!path || !out) return FG_ERR_USAGE;
    return guarded([&] { *out = new fg_config{harness::Config::from_file(path)}; });
}

fg_status fg_config_set(fg_config* cfg, const char* key, const char* value) {
    if (!cfg || !key || !value) return FG_ERR_USAGE;
    return guarded([&] { cfg->cfg.set(key, value); });
}

fg_status fg_config_get(const fg_config* cfg, const char* key, char* buf, size_t buflen) {
    if (!cfg || !key || !buf || buflen == 0) return FG_ERR_USAGE;
    return guarded([&] {
        const std::string& v = cfg->cfg.get(key);
        if (v.size() + 1 > buflen) throw usage_error("fg_config_get: buffer too small");
        std::memcpy(buf, v.c_str(), v.size() + 1);
    });
}

uint64_t fg_config_fingerprint(const fg_config* cfg) {
    return cfg ? cfg->cfg.fingerprint() : 0;
}

fg_status fg_config_save(const fg_config* cfg, const char* path) {
    if (!cfg || !path) return FG_ERR_USAGE;
    return guarded([&] {
        std::ofstream os(path);
        if (!os) throw format_error(std::string(path) + ": cannot open for writing");
        os << cfg->cfg.serialize();
    });
}

fg_status fg_config_apply_env(fg_config* cfg) {
    if (!cfg) return FG_ERR_USAGE;
    return guarded([&] { cfg->cfg.apply_env_overrides(); });
}

void fg_config_destroy(fg_config* cfg) { delete cfg; }

fg_status fg_env_create(const fg_config* cfg, uint64_t seed, fg_env** out) {
    if (!cfg || !out) return FG_ERR_USAGE;
    return guarded([&] {
        auto env = std::make_unique<fg_env>();
        env->task = cfg->cfg.task();
        env->textures = cfg->cfg.textures();
        env->state = world::init_world(env->task, seed);
        env->default_repeat = cfg->cfg.ppo().action_repeat;
        *out = env.release();
    });
}

fg_status fg_env_step(fg_env* env, int heading, int velocity, int action_repeat,
                      fg_step_result* out) {
    if (!env || !out) return FG_ERR_USAGE;
    if (heading < 0 || heading > 2 || velocity < 0 || velocity > 2) {
        set_error("fg_env_step: heading/velocity must be in 0..2");
        return FG_ERR_USAGE;
    }
    return guarded([&] {
        const world::AgentAction action{static_cast<world::Heading>(heading),
                                        static_cast<world::Velocity>(velocity)};
        const int repeat = action_repeat > 0 ? action_repeat : env->default_repeat;
        const world::StepOutcome o = world::step_env(env->state, action, env->task, repeat);
        out->reward = o.reward;
        out->satiety = env->state.satiety;
        out->frame = env->state.frame;
        out->frames_advanced = o.frames_advanced;
        out->terminated = o.terminated ? 1 : 0;
        out->truncated = o.truncated ? 1 : 0;
        out->pickups = static_cast<int>(o.pickups.size());
        out->wasted = o.wasted;
    });
}

fg_status fg_env_reset(fg_env* env, uint64_t seed) {
    if (!env) return FG_ERR_USAGE;
    return guarded([&] { env->state = world::init_world(env->task, seed); });
}

fg_status fg_env_render(fg_env* env, int width, int height, float* rgb_out) {
    if (!env || !rgb_out) return FG_ERR_USAGE;
    return guarded([&] {
        const raster::Image img =
            raster::render(env->state, env->task, *env->textures, width, height);
        std::memcpy(rgb_out, img.data.data(), img.data.size() * sizeof(float));
    });
}

fg_status fg_env_object_count(const fg_env* env, int* out) {
    if (!env || !out) return FG_ERR_USAGE;
    *out = static_cast<int>(env->state.objects.size());
    return FG_OK;
}

void fg_env_destroy(fg_env* env) { delete env; }

fg_status fg_train(const fg_config* cfg, int resume) {
    if (!cfg) return FG_ERR_USAGE;
    return guarded([&] { harness::cmd_train(cfg->cfg, resume != 0); });
}

fg_status fg_record(const char* checkpoint, int64_t frames, int stride, const char* out_log,
                    uint64_t seed) {
    if (!checkpoint || !out_log) return FG_ERR_USAGE;
    return guarded([&] { harness::cmd_record(checkpoint, frames, stride, out_log, seed); });
}

fg_status fg_analyze(const char* log_path, const char* analyses, const char* out_dir,
                     const char* checkpoint) {
    if (!log_path || !analyses || !out_dir) return FG_ERR_USAGE;
    return guarded([&] {
        harness::cmd_analyze(log_path, analyses, out_dir, checkpoint ? checkpoint : "");
    });
}

fg_status fg_bench(const fg_config* cfg) {
    if (!cfg) return FG_ERR_USAGE;
    return guarded([&] { harness::cmd_bench(cfg->cfg); });
}

fg_status fg_checkpoint_inspect(const char* path, char** json_out) {
    if (!path || !json_out) return FG_ERR_USAGE;
    return guarded([&] {
        const std::string j = harness::cmd_inspect(path);
        char* s = static_cast<char*>(std::malloc(j.size() + 1));
        if (!s) throw std::bad_alloc();
        std::memcpy(s, j.c_str(), j.size() + 1);
        *json_out = s;
    });
}

void fg_string_free(char* s) { std::free(s); }

} // extern "C"

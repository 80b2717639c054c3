#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "forager.h"

namespace {

namespace fs = std::filesystem;

std::string fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "forager_capi_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

} // namespace

TEST_CASE("c api: version and error text") {
    CHECK(std::string(fg_version()).find("forager") != std::string::npos);
    CHECK(fg_config_load("/nonexistent/path.cfg", nullptr) == FG_ERR_USAGE);
    fg_config* cfg = nullptr;
    CHECK(fg_config_load("/nonexistent/path.cfg", &cfg) == FG_ERR_CONFIG);
    CHECK(std::strlen(fg_last_error()) > 0);
}

TEST_CASE("c api: config create/set/get/fingerprint round trip") {
    fg_config* cfg = nullptr;
    REQUIRE(fg_config_create(&cfg) == FG_OK);
    char buf[64];
    REQUIRE(fg_config_get(cfg, "task.kind", buf, sizeof buf) == FG_OK);
    CHECK(std::string(buf) == "apples");

    const uint64_t fp0 = fg_config_fingerprint(cfg);
    REQUIRE(fg_config_set(cfg, "ppo.lr", "2e-3") == FG_OK);
    CHECK(fg_config_fingerprint(cfg) != fp0);

    CHECK(fg_config_set(cfg, "ppo.not_a_key", "1") == FG_ERR_CONFIG);
    CHECK(std::string(fg_last_error()).find("not_a_key") != std::string::npos);

    const std::string path = fresh_dir("cfg") + "/saved.cfg";
    REQUIRE(fg_config_save(cfg, path.c_str()) == FG_OK);
    fg_config* loaded = nullptr;
    REQUIRE(fg_config_load(path.c_str(), &loaded) == FG_OK);
    CHECK(fg_config_fingerprint(loaded) == fg_config_fingerprint(cfg));
    fg_config_destroy(loaded);
    fg_config_destroy(cfg);
}

TEST_CASE("c api: env stepping matches the documented contract") {
    fg_config* cfg = nullptr;
    REQUIRE(fg_config_create(&cfg) == FG_OK);
    fg_env* env = nullptr;
    REQUIRE(fg_env_create(cfg, 42, &env) == FG_OK);

    int objects = 0;
    REQUIRE(fg_env_object_count(env, &objects) == FG_OK);
    CHECK(objects == 45);

    // stationary agent dies at exactly frame 200
    fg_step_result r{};
    int64_t frames = 0;
    while (true) {
        REQUIRE(fg_env_step(env, 1, 1, 4, &r) == FG_OK);
        frames += r.frames_advanced;
        if (r.terminated || r.truncated) break;
        REQUIRE(frames < 10000);
    }
    CHECK(frames == 200);
    CHECK(r.terminated == 1);
    CHECK(r.satiety == 0.0);

    // stepping a dead env is a usage error
    CHECK(fg_env_step(env, 1, 1, 4, &r) == FG_ERR_USAGE);

    // reset revives it deterministically
    REQUIRE(fg_env_reset(env, 42) == FG_OK);
    REQUIRE(fg_env_object_count(env, &objects) == FG_OK);
    CHECK(objects == 45);

    // invalid action ids rejected
    CHECK(fg_env_step(env, 3, 0, 4, &r) == FG_ERR_USAGE);

    // render into a caller buffer
    std::vector<float> rgb(static_cast<size_t>(64) * 48 * 3, -1.0f);
    REQUIRE(fg_env_render(env, 64, 48, rgb.data()) == FG_OK);
    for (float v : rgb) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }

    fg_env_destroy(env);
    fg_config_destroy(cfg);
}

TEST_CASE("c api: train -> inspect -> record -> analyze pipeline") {
    const std::string dir = fresh_dir("pipeline");
    fg_config* cfg = nullptr;
    REQUIRE(fg_config_create(&cfg) == FG_OK);
    for (const auto& [k, v] : std::vector<std::pair<const char*, const char*>>{
             {"arch.n_bc", "1"},
             {"arch.n_lgn", "2"},
             {"arch.n_fc", "4"},
             {"arch.width", "36"},
             {"arch.height", "36"},
             {"ppo.workers", "1"},
             {"ppo.rollout_len", "8"},
             {"ppo.bptt_len", "4"},
             {"ppo.minibatches", "2"},
             {"run.repeats", "1"},
             {"run.frame_budget", "64"},
             {"run.checkpoint_every", "0"},
             {"run.deterministic", "true"},
             {"task.decay_rate", "0.05"},
             {"task.initial_satiety", "10"}})
        REQUIRE(fg_config_set(cfg, k, v) == FG_OK);
    REQUIRE(fg_config_set(cfg, "run.log_dir", (dir + "/train").c_str()) == FG_OK);

    REQUIRE(fg_train(cfg, 0) == FG_OK);
    const std::string ckpt = dir + "/train/r0/final.fgt";
    REQUIRE(fs::exists(ckpt));

    char* json = nullptr;
    REQUIRE(fg_checkpoint_inspect(ckpt.c_str(), &json) == FG_OK);
    CHECK(std::string(json).find("forager.checkpoint") != std::string::npos);
    fg_string_free(json);

    const std::string log = dir + "/run.fglog";
    REQUIRE(fg_record(ckpt.c_str(), 4000, 4, log.c_str(), 77) == FG_OK);
    REQUIRE(fg_analyze(log.c_str(), "frequencies,behavior,export", (dir + "/out").c_str(),
                       nullptr) == FG_OK);
    CHECK(fs::exists(dir + "/out/behavior.json"));
    CHECK(fs::exists(dir + "/out/log.csv"));

    fg_config_destroy(cfg);
}

#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "agent/arch.hpp"
#include "raster/textures.hpp"
#include "trainer/rollout.hpp"
#include "world/world.hpp"

namespace forager::harness {

// Flat section.key configuration with a closed schema: every key has a
// default, unknown keys are hard errors with their line number.
class Config {
  public:
    static Config defaults();
    static Config from_file(const std::string& path);
    static Config from_text(const std::string& text, const std::string& origin = "<inline>");

    // dotted = "section.key"; validates against the schema
    void set(const std::string& dotted, const std::string& value);
    const std::string& get(const std::string& dotted) const;
    int get_int(const std::string& dotted) const;
    double get_double(const std::string& dotted) const;
    bool get_bool(const std::string& dotted) const;
    std::vector<std::string> get_list(const std::string& dotted) const; // comma-separated

    // Canonical text form: schema order, normalized spacing. Fingerprints
    // hash this byte stream.
    std::string serialize() const;
    uint64_t fingerprint() const;

    // Hash over [task]/[arch]/[ppo] only: identifies the experiment a
    // checkpoint belongs to, ignoring orchestration keys (budget, log dir,
    // repeats), so extending a run's budget still resumes its checkpoints.
    uint64_t experiment_fingerprint() const;

    // FORAGER_LOG_DIR / FORAGER_WORKERS
    void apply_env_overrides();

    // typed views
    world::TaskSpec task() const;
    agent::ArchSpec arch() const;
    trainer::PPOHyper ppo() const;
    std::shared_ptr<const raster::TextureSource> textures() const;

    uint64_t run_seed() const { return static_cast<uint64_t>(get_int("run.seed")); }
    int64_t frame_budget() const { return static_cast<int64_t>(get_double("run.frame_budget")); }
    int repeats() const { return get_int("run.repeats"); }
    int64_t checkpoint_every() const {
        return static_cast<int64_t>(get_double("run.checkpoint_every"));
    }
    std::string log_dir() const { return get("run.log_dir"); }
    int collector_threads() const;

  private:
    std::map<std::string, std::string> values_; // dotted key -> raw value
};

} // namespace forager::harness

// forager command-line front end. Thin by design: argument parsing here,
// everything else behind the C API in libforager.

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "forager.h"

namespace {

int fail(fg_status st) {
    std::fprintf(stderr, "error: %s\n", fg_last_error());
    return static_cast<int>(st);
}

struct ConfigHandle {
    fg_config* cfg = nullptr;
    ~ConfigHandle() { fg_config_destroy(cfg); }
};

int load_config(const std::string& path, const std::vector<std::string>& sets,
                ConfigHandle& out) {
    fg_status st = path.empty() ? fg_config_create(&out.cfg) : fg_config_load(path.c_str(), &out.cfg);
    if (st != FG_OK) return fail(st);
    if ((st = fg_config_apply_env(out.cfg)) != FG_OK) return fail(st);
    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "error: --set expects section.key=value, got '%s'\n", kv.c_str());
            return FG_ERR_CONFIG;
        }
        st = fg_config_set(out.cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
        if (st != FG_OK) return fail(st);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(fg_version()) + " - survival foraging RL platform"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> sets;
    bool resume = false;

    auto* train = app.add_subcommand("train", "Train agents per the experiment config");
    train->add_option("-c,--config", config_path, "Experiment config file");
    train->add_option("--set", sets, "Override a config value (section.key=value)");
    train->add_flag("--resume", resume, "Continue finished/partial repeats in place");

    auto* bench = app.add_subcommand("bench", "Run the [bench] matrix and summarize");
    bench->add_option("-c,--config", config_path, "Experiment config file");
    bench->add_option("--set", sets, "Override a config value (section.key=value)");

    std::string checkpoint, out_path;
    int64_t frames = 1000;
    int stride = 1;
    uint64_t seed = 1234;
    auto* record = app.add_subcommand("record", "Run a frozen policy and log the trajectory");
    record->add_option("checkpoint", checkpoint, "Checkpoint to load")->required();
    record->add_option("-o,--out", out_path, "Output log path")->required();
    record->add_option("--frames", frames, "Simulation frames to record");
    record->add_option("--stride", stride, "Store a viewport every N steps (0 = none)");
    record->add_option("--seed", seed, "Recording seed");

    std::string log_path, analyses = "all", analyze_ckpt, out_dir = "analysis";
    auto* analyze = app.add_subcommand("analyze", "Produce reports from a trajectory log");
    analyze->add_option("log", log_path, "Trajectory log file")->required();
    analyze->add_option("-o,--out", out_dir, "Output directory");
    analyze->add_option("--analyses", analyses,
                        "Comma list: frequencies,regression,behavior,ig,export (or 'all')");
    analyze->add_option("--checkpoint", analyze_ckpt, "Checkpoint (enables ig)");

    std::string inspect_path;
    auto* inspect = app.add_subcommand("inspect-checkpoint", "Print checkpoint meta and tensors");
    inspect->add_option("checkpoint", inspect_path, "Checkpoint to inspect")->required();

    // exit-code contract: 0 success, 2 config error, 3 runtime error
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : FG_ERR_CONFIG;
    }

    if (train->parsed() || bench->parsed()) {
        ConfigHandle cfg;
        if (const int rc = load_config(config_path, sets, cfg); rc != 0) return rc;
        const fg_status st = train->parsed() ? fg_train(cfg.cfg, resume ? 1 : 0)
                                             : fg_bench(cfg.cfg);
        if (st != FG_OK) return fail(st);
        return 0;
    }

    if (record->parsed()) {
        const fg_status st =
            fg_record(checkpoint.c_str(), frames, stride, out_path.c_str(), seed);
        if (st != FG_OK) return fail(st);
        std::printf("recorded %lld frames -> %s\n", static_cast<long long>(frames),
                    out_path.c_str());
        return 0;
    }

    if (analyze->parsed()) {
        const fg_status st = fg_analyze(log_path.c_str(), analyses.c_str(), out_dir.c_str(),
                                        analyze_ckpt.empty() ? nullptr : analyze_ckpt.c_str());
        if (st != FG_OK) return fail(st);
        std::printf("analysis written to %s\n", out_dir.c_str());
        return 0;
    }

    if (inspect->parsed()) {
        char* json = nullptr;
        const fg_status st = fg_checkpoint_inspect(inspect_path.c_str(), &json);
        if (st != FG_OK) return fail(st);
        std::printf("%s\n", json);
        fg_string_free(json);
        return 0;
    }

    return 0;
}

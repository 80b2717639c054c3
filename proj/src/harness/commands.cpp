#include "harness/commands.hpp"

#include <algorithm>
#include <cinttypes>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "agent/checkpoint.hpp"
#include "analytics/analytics.hpp"
#include "harness/manifest.hpp"
#include "tlog/trajlog.hpp"
#include "trainer/trainer.hpp"
#include "util/errors.hpp"

namespace forager::harness {

namespace fs = std::filesystem;

std::pair<double, bool> history_lifespan_summary(const std::string& history_csv) {
    std::ifstream is(history_csv);
    if (!is) throw format_error(history_csv + ": cannot open");
    std::string line;
    std::getline(is, line); // header
    std::vector<double> lifespans;
    while (std::getline(is, line)) {
        const auto comma = line.find(',');
        if (comma == std::string::npos) continue;
        lifespans.push_back(std::stod(line.substr(comma + 1)));
    }
    const auto smoothed = analytics::smooth_history(lifespans, 51);
    const auto summary = analytics::lifespan_summary(smoothed.values, 500);
    return {summary.mean, summary.warned_short || smoothed.warned_short};
}

namespace {

double median_of(std::vector<double> xs) {
    if (xs.empty()) return 0;
    std::sort(xs.begin(), xs.end());
    const size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

} // namespace

TrainSummary cmd_train(const Config& cfg, bool resume) {
    // validate everything before any compute
    const world::TaskSpec task = cfg.task();
    const agent::ArchSpec arch = cfg.arch();
    const trainer::PPOHyper hyper = cfg.ppo();
    const auto textures = cfg.textures();
    const std::string base_dir = cfg.log_dir();
    const int n_repeats = cfg.repeats();
    if (n_repeats < 1) throw config_error("run.repeats must be >= 1");

    TrainSummary summary;
    for (int rep = 0; rep < n_repeats; ++rep) {
        RepeatResult r;
        r.run_dir = base_dir + "/r" + std::to_string(rep);
        r.seed = cfg.run_seed() + static_cast<uint64_t>(rep);
        r.checkpoint = r.run_dir + "/final.fgt";

        // a repeat counts as done only if it completed under this exact
        // config; a changed budget (or anything else) re-enters training,
        // resuming from the checkpoint when the experiment still matches
        bool done_before = false;
        if (resume && RunManifest::exists(r.run_dir) && fs::exists(r.checkpoint)) {
            const RunManifest m = RunManifest::open(r.run_dir);
            done_before = m.status() == "complete" &&
                          m.data().value("config_text", "") == cfg.serialize();
        }
        if (!done_before) {
            RunManifest manifest = RunManifest::create(r.run_dir, cfg, "train");
            trainer::TrainSetup setup;
            setup.task = task;
            setup.textures = textures;
            setup.arch = arch;
            setup.hyper = hyper;
            setup.seed = r.seed;
            setup.frame_budget = cfg.frame_budget();
            setup.checkpoint_every = cfg.checkpoint_every();
            setup.run_dir = r.run_dir;
            setup.collector_threads = cfg.collector_threads();
            setup.resume = resume;
            setup.config_text = cfg.serialize();
            setup.config_fingerprint = cfg.experiment_fingerprint();
            try {
                const trainer::TrainResult res = trainer::train(setup);
                manifest.add_artifact("final.fgt");
                manifest.add_artifact("history.csv");
                manifest.add_artifact("stats.csv");
                for (const auto& entry : fs::directory_iterator(r.run_dir)) {
                    const std::string name = entry.path().filename().string();
                    if (name.rfind("ckpt_", 0) == 0) manifest.add_artifact(name);
                }
                manifest.finalize("complete");
                (void)res;
            } catch (...) {
                manifest.finalize("failed");
                throw;
            }
        }

        if (fs::exists(r.run_dir + "/history.csv")) {
            const auto [mean, warned] = history_lifespan_summary(r.run_dir + "/history.csv");
            r.lifespan = mean;
            r.lifespan_warned = warned;
        } else {
            r.lifespan_warned = true;
        }
        summary.repeats.push_back(std::move(r));
    }

    std::vector<double> ls;
    for (const auto& r : summary.repeats) ls.push_back(r.lifespan);
    summary.median_lifespan = median_of(ls);
    summary.min_lifespan = *std::min_element(ls.begin(), ls.end());
    summary.max_lifespan = *std::max_element(ls.begin(), ls.end());
    return summary;
}

RecordResult cmd_record(const std::string& checkpoint_path, int64_t frames, int stride,
                        const std::string& out_path, uint64_t seed) {
    const agent::Checkpoint ckpt = agent::Checkpoint::load(checkpoint_path);
    const std::string config_text = ckpt.meta.value("config_text", "");
    if (config_text.empty())
        throw format_error(checkpoint_path + ": checkpoint carries no embedded config");
    Config cfg = Config::from_text(config_text, checkpoint_path + "#config");
    const world::TaskSpec task = cfg.task();
    const auto textures = cfg.textures();
    const trainer::PPOHyper hyper = cfg.ppo();
    const agent::ArchSpec& arch = ckpt.params.spec;
    const bool recurrent = agent::brain_recurrent(arch.brain);
    const float inv_scale = 1.0f / hyper.reward_scale;

    tlog::TrajectoryLog log;
    log.header["seed"] = seed;
    log.header["action_repeat"] = hyper.action_repeat;
    log.header["config_fingerprint"] = ckpt.meta.value("config_fingerprint", "");
    log.header["checkpoint"] = fs::path(checkpoint_path).filename().string();
    log.header["brain"] = agent::to_string(arch.brain);
    log.header["width"] = arch.width;
    log.header["height"] = arch.height;
    log.header["reward_scale"] = hyper.reward_scale;

    tlog::ViewportFile views;
    views.width = arch.width;
    views.height = arch.height;
    views.latent_dim = recurrent ? arch.resolved_n_fc() : 0;

    Rng act_rng(derive_seed(seed, 0xac7deedULL));
    uint32_t episode = 0;
    world::WorldState env = world::init_world(task, tlog::episode_seed(seed, episode));
    nn::Tensor latent({arch.resolved_n_fc()});

    int64_t frames_done = 0;
    while (frames_done < frames) {
        const raster::Image view = raster::render(env, task, *textures, arch.width, arch.height);
        const nn::Tensor obs = agent::obs_from_image<float>(view);

        tlog::StepRecord rec;
        rec.episode = episode;
        rec.frame = static_cast<uint32_t>(env.frame);
        rec.satiety = static_cast<float>(env.satiety);
        const auto counts = env.class_counts();
        for (int c = 0; c < world::kNumClasses; ++c)
            rec.object_counts[static_cast<size_t>(c)] =
                static_cast<uint16_t>(counts[static_cast<size_t>(c)]);

        if (stride > 0 && log.records.size() % static_cast<size_t>(stride) == 0) {
            rec.viewport = static_cast<int32_t>(views.frames.size());
            views.frames.push_back(view.data);
            if (recurrent)
                views.latents.emplace_back(latent.data(), latent.data() + latent.size());
        }

        const auto act = agent::act(ckpt.params, latent, obs, rec.satiety, act_rng);
        latent = act.next_latent;
        rec.act_h = static_cast<uint8_t>(act.action.heading);
        rec.act_v = static_cast<uint8_t>(act.action.velocity);
        rec.probs_h = act.probs_h;
        rec.probs_v = act.probs_v;
        rec.value = act.value * inv_scale;

        const int repeat =
            static_cast<int>(std::min<int64_t>(hyper.action_repeat, frames - frames_done));
        const world::StepOutcome out = world::step_env(env, act.action, task, repeat);
        frames_done += out.frames_advanced;
        rec.reward = static_cast<float>(out.reward);
        for (const auto& p : out.pickups) {
            rec.pickup_counts[static_cast<size_t>(p.class_id)]++;
            if (p.delta > 0) rec.positive_delta += static_cast<float>(p.delta);
        }
        rec.wasted = static_cast<float>(out.wasted);
        rec.done = out.done() ? 1 : 0;
        log.records.push_back(rec);

        if (out.done()) {
            ++episode;
            env = world::init_world(task, tlog::episode_seed(seed, episode));
            latent.fill(0.0f);
        }
    }

    RecordResult res;
    res.log_path = out_path;
    res.records = log.records.size();
    res.frames = frames_done;
    res.viewports = views.frames.size();
    log.save(out_path);
    if (stride > 0) {
        res.frames_path = out_path + ".frames";
        views.save(res.frames_path);
    }
    return res;
}

namespace {

bool wants(const std::string& analyses, const std::string& what) {
    if (analyses == "all") return true;
    std::istringstream is(analyses);
    std::string item;
    while (std::getline(is, item, ','))
        if (item == what) return true;
    return false;
}

void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream os(path);
    if (!os) throw format_error(path + ": cannot open for writing");
    os << j.dump(2) << '\n';
}

} // namespace

AnalyzeResult cmd_analyze(const std::string& log_path, const std::string& analyses,
                          const std::string& out_dir, const std::string& checkpoint_path) {
    const tlog::TrajectoryLog log = tlog::TrajectoryLog::load(log_path);
    fs::create_directories(out_dir);
    AnalyzeResult result;
    nlohmann::json summary = {{"log", log_path}, {"records", log.records.size()}};

    auto emit = [&](const std::string& name) {
        result.artifacts.push_back(name);
    };

    if (wants(analyses, "frequencies")) {
        const auto f = analytics::pickup_frequencies(log);
        std::ofstream os(out_dir + "/frequencies.csv");
        os << "class,delta,raw,availability,normalized\n";
        for (int c = 0; c < world::kNumClasses; ++c)
            os << c << ',' << world::kClassDeltas[static_cast<size_t>(c)] << ','
               << f.raw[static_cast<size_t>(c)] << ',' << f.availability[static_cast<size_t>(c)]
               << ',' << f.normalized[static_cast<size_t>(c)] << '\n';
        nlohmann::json j = {{"defined", f.defined}, {"total_pickups", f.total}};
        if (f.defined) {
            j["raw"] = f.raw;
            j["availability"] = f.availability;
            j["normalized"] = f.normalized;
            double nourish = 0;
            for (int c = 5; c < world::kNumClasses; ++c) nourish += f.raw[static_cast<size_t>(c)];
            j["nourishment_share"] = nourish;
        }
        write_json(out_dir + "/frequencies.json", j);
        summary["frequencies"] = j;
        emit("frequencies.csv");
        emit("frequencies.json");
    }

    if (wants(analyses, "regression")) {
        std::vector<double> value(log.records.size()), satiety(log.records.size());
        for (size_t i = 0; i < log.records.size(); ++i) {
            value[i] = log.records[i].value;
            satiety[i] = log.records[i].satiety;
        }
        const auto countdown = analytics::food_countdown(log);

        nlohmann::json jr = nlohmann::json::array();
        std::ofstream os(out_dir + "/regression.csv");
        os << "report,fold,r2\n";
        auto run_report = [&](const std::string& label,
                              const std::vector<std::pair<std::string, std::vector<double>>>& regs,
                              const std::vector<uint8_t>* mask) {
            const auto rep = analytics::regress_value(value, regs, 10, mask);
            for (size_t f = 0; f < rep.fold_r2.size(); ++f)
                os << label << ',' << f << ',' << rep.fold_r2[f] << '\n';
            nlohmann::json j = {{"report", label},
                                {"median_r2", rep.median_r2},
                                {"min_r2", rep.min_r2},
                                {"max_r2", rep.max_r2},
                                {"folds", rep.fold_r2},
                                {"noise_r2_max", rep.noise.defined ? rep.noise.r2_max : 0.0},
                                {"noise_defined", rep.noise.defined},
                                {"dropped", rep.dropped_columns}};
            jr.push_back(j);
        };
        run_report("satiety", {{"satiety", satiety}}, nullptr);
        run_report("countdown", {{"countdown", countdown.frames}}, &countdown.valid);
        run_report("satiety+countdown",
                   {{"satiety", satiety}, {"countdown", countdown.frames}}, &countdown.valid);
        write_json(out_dir + "/regression.json", jr);
        summary["regression"] = jr;
        emit("regression.csv");
        emit("regression.json");
    }

    if (wants(analyses, "behavior")) {
        const auto b = analytics::behavior_stats(log);
        std::ofstream os(out_dir + "/behavior.csv");
        os << "metric,forward,backward,stationary\n";
        os << "velocity_probs," << b.velocity_probs[0] << ',' << b.velocity_probs[2] << ','
           << b.velocity_probs[1] << '\n';
        os << "velocity_actions," << b.velocity_actions[0] << ',' << b.velocity_actions[2] << ','
           << b.velocity_actions[1] << '\n';
        nlohmann::json j = {{"velocity_probs",
                             {{"forward", b.velocity_probs[0]},
                              {"stationary", b.velocity_probs[1]},
                              {"backward", b.velocity_probs[2]}}},
                            {"velocity_actions",
                             {{"forward", b.velocity_actions[0]},
                              {"stationary", b.velocity_actions[1]},
                              {"backward", b.velocity_actions[2]}}},
                            {"waste_defined", b.waste_defined},
                            {"waste_percent", b.waste_percent},
                            {"total_wasted", b.total_wasted},
                            {"total_positive", b.total_positive}};
        write_json(out_dir + "/behavior.json", j);
        summary["behavior"] = j;
        emit("behavior.csv");
        emit("behavior.json");
    }

    if (wants(analyses, "ig") && !checkpoint_path.empty()) {
        const agent::Checkpoint ckpt = agent::Checkpoint::load(checkpoint_path);
        const std::string frames_path = log_path + ".frames";
        if (!fs::exists(frames_path))
            throw format_error(frames_path + ": ig analysis needs recorded viewports");
        const tlog::ViewportFile views = tlog::ViewportFile::load(frames_path);
        const auto params_d = ckpt.params.cast<double>();
        const int nfc = ckpt.params.spec.resolved_n_fc();
        const double inv_scale = 1.0 / log.header.value("reward_scale", 0.0025);

        nlohmann::json jig = nlohmann::json::array();
        const size_t n_maps = std::min<size_t>(views.frames.size(), 8);
        for (size_t k = 0; k < n_maps; ++k) {
            nn::TensorT<double> latent({nfc});
            if (views.latent_dim > 0)
                for (int i = 0; i < nfc; ++i)
                    latent[static_cast<size_t>(i)] = views.latents[k][static_cast<size_t>(i)];
            // satiety at the stored step
            double satiety = 50.0;
            for (const auto& r : log.records)
                if (r.viewport == static_cast<int32_t>(k)) satiety = r.satiety;

            const analytics::ValueGradFn fn = [&](const std::vector<double>& x) {
                nn::TensorT<double> obs({3, ckpt.params.spec.height, ckpt.params.spec.width});
                const size_t plane = x.size() / 3;
                for (size_t p = 0; p < plane; ++p) { // interleaved RGB -> planes
                    obs[p] = x[p * 3 + 0];
                    obs[plane + p] = x[p * 3 + 1];
                    obs[2 * plane + p] = x[p * 3 + 2];
                }
                double value = 0;
                auto grad = agent::value_input_gradient(params_d, latent, obs, satiety, &value);
                std::vector<double> g(x.size());
                for (size_t p = 0; p < plane; ++p) {
                    g[p * 3 + 0] = grad[p];
                    g[p * 3 + 1] = grad[plane + p];
                    g[p * 3 + 2] = grad[2 * plane + p];
                }
                return std::pair{value * inv_scale, g};
            };

            std::vector<double> image(views.frames[k].begin(), views.frames[k].end());
            const std::vector<double> baseline(image.size(), 0.0); // black
            const auto attr = analytics::integrated_gradients(fn, image, baseline, 64);

            // raw float grid + grayscale render (per-pixel channel sum)
            const std::string stem = out_dir + "/ig_" + std::to_string(k);
            {
                std::ofstream os(stem + ".bin", std::ios::binary);
                std::vector<float> raw(attr.map.begin(), attr.map.end());
                os.write(reinterpret_cast<const char*>(raw.data()),
                         static_cast<std::streamsize>(raw.size() * sizeof(float)));
            }
            std::vector<float> gray(static_cast<size_t>(views.width) * views.height);
            for (size_t p = 0; p < gray.size(); ++p)
                gray[p] = static_cast<float>(std::abs(attr.map[p * 3]) +
                                             std::abs(attr.map[p * 3 + 1]) +
                                             std::abs(attr.map[p * 3 + 2]));
            raster::write_pgm(gray, views.width, views.height, stem + ".pgm");
            raster::Image vp(views.width, views.height);
            vp.data = views.frames[k];
            raster::write_ppm(vp, out_dir + "/viewport_" + std::to_string(k) + ".ppm");

            jig.push_back({{"index", k},
                           {"value", attr.value_x},
                           {"value_baseline", attr.value_baseline},
                           {"residual", attr.residual},
                           {"relative_residual",
                            std::abs(attr.value_x - attr.value_baseline) > 1e-12
                                ? attr.residual / std::abs(attr.value_x - attr.value_baseline)
                                : 0.0}});
            emit("ig_" + std::to_string(k) + ".bin");
            emit("ig_" + std::to_string(k) + ".pgm");
            emit("viewport_" + std::to_string(k) + ".ppm");
        }
        write_json(out_dir + "/ig.json", jig);
        summary["ig"] = jig;
        emit("ig.json");
    }

    if (wants(analyses, "export")) {
        log.save_csv(out_dir + "/log.csv");
        emit("log.csv");
    }

    write_json(out_dir + "/summary.json", summary);
    emit("summary.json");

    Config cfg = Config::defaults();
    RunManifest manifest = RunManifest::create(out_dir, cfg, "analyze");
    for (const auto& a : result.artifacts) manifest.add_artifact(a);
    manifest.add_artifact("manifest.json");
    manifest.finalize("complete");
    result.artifacts.push_back("manifest.json");
    return result;
}

BenchResult cmd_bench(const Config& cfg) {
    auto list_or = [&](const std::string& key, const std::string& fallback) {
        auto v = cfg.get_list(key);
        if (v.empty()) v.push_back(cfg.get(fallback));
        return v;
    };
    const auto tasks = list_or("bench.tasks", "task.kind");
    const auto brains = list_or("bench.brains", "arch.brain");
    const auto nbcs = list_or("bench.n_bc", "arch.n_bc");
    const auto nlgns = list_or("bench.n_lgn", "arch.n_lgn");
    const auto nfcs = list_or("bench.n_fc", "arch.n_fc");

    const std::string base_dir = cfg.log_dir();
    fs::create_directories(base_dir);

    BenchResult result;
    for (const auto& task : tasks)
        for (const auto& brain : brains)
            for (const auto& nbc : nbcs)
                for (const auto& nlgn : nlgns)
                    for (const auto& nfc : nfcs) {
                        BenchCell cell;
                        cell.name = task + "-" + brain + "-bc" + nbc + "-lgn" + nlgn + "-fc" + nfc;
                        cell.cfg = cfg;
                        cell.cfg.set("task.kind", task);
                        cell.cfg.set("arch.brain", brain);
                        cell.cfg.set("arch.n_bc", nbc);
                        cell.cfg.set("arch.n_lgn", nlgn);
                        cell.cfg.set("arch.n_fc", nfc);
                        cell.cfg.set("run.log_dir", base_dir + "/" + cell.name);
                        cell.summary = cmd_train(cell.cfg, /*resume=*/true);
                        cell.complete = true;
                        for (const auto& r : cell.summary.repeats)
                            if (RunManifest::open(r.run_dir).status() != "complete")
                                cell.complete = false;
                        result.cells.push_back(std::move(cell));
                    }

    result.table_path = base_dir + "/bench_results.csv";
    std::ofstream os(result.table_path);
    os << "cell,task,brain,n_bc,n_lgn,n_fc,repeats,median_lifespan,min_lifespan,max_lifespan,"
          "complete\n";
    for (const auto& c : result.cells)
        os << c.name << ',' << c.cfg.get("task.kind") << ',' << c.cfg.get("arch.brain") << ','
           << c.cfg.get("arch.n_bc") << ',' << c.cfg.get("arch.n_lgn") << ','
           << c.cfg.get("arch.n_fc") << ',' << c.summary.repeats.size() << ','
           << c.summary.median_lifespan << ',' << c.summary.min_lifespan << ','
           << c.summary.max_lifespan << ',' << (c.complete ? "yes" : "INCOMPLETE") << '\n';
    return result;
}

std::string cmd_inspect(const std::string& checkpoint_path) {
    const nn::NamedTensorFile f = nn::NamedTensorFile::load(checkpoint_path);
    nlohmann::json j;
    j["meta"] = f.meta;
    j["meta"].erase("config_text"); // bulky; fingerprint identifies it
    nlohmann::json tensors = nlohmann::json::array();
    size_t total = 0;
    for (const auto& [name, t] : f.tensors) {
        tensors.push_back({{"name", name}, {"shape", t.shape()}, {"elements", t.size()}});
        total += t.size();
    }
    j["tensors"] = tensors;
    j["total_parameters"] = total;
    j["trainer_state_bytes"] = f.state_blob.size();
    return j.dump(2);
}

} // namespace forager::harness

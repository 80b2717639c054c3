#include "trainer/trainer.hpp"

#include <algorithm>
#include <cinttypes>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "util/errors.hpp"

namespace forager::trainer {

namespace fs = std::filesystem;

namespace {

struct TrainerState {
    int64_t frames = 0;
    int64_t updates = 0;
    int64_t episodes = 0;
    int64_t last_checkpoint_frames = 0;
    Rng update_rng;
    std::vector<EnvWorker> workers;

    std::string serialize() const {
        std::ostringstream os;
        os << "trainer1\n"
           << frames << ' ' << updates << ' ' << episodes << ' ' << last_checkpoint_frames
           << '\n';
        os << update_rng.save_state() << '\n';
        os << workers.size() << '\n';
        for (const auto& w : workers) {
            const std::string blob = w.serialize();
            os << blob.size() << '\n' << blob;
        }
        return os.str();
    }

    static TrainerState deserialize(const std::string& s, int n_fc) {
        std::istringstream is(s);
        std::string tag;
        std::getline(is, tag);
        if (tag != "trainer1") throw format_error("trainer state: bad tag");
        TrainerState st;
        is >> st.frames >> st.updates >> st.episodes >> st.last_checkpoint_frames;
        std::string line;
        std::getline(is, line);
        std::getline(is, line);
        st.update_rng.load_state(line);
        size_t n = 0;
        is >> n;
        std::getline(is, line);
        st.workers.reserve(n);
        for (size_t i = 0; i < n; ++i) {
            size_t len = 0;
            is >> len;
            std::getline(is, line);
            std::string blob(len, '\0');
            is.read(blob.data(), static_cast<std::streamsize>(len));
            if (!is) throw format_error("trainer state: truncated worker blob");
            st.workers.push_back(EnvWorker::deserialize(blob, n_fc));
        }
        return st;
    }
};

void append_lines(const std::string& path, const std::string& header,
                  const std::vector<std::string>& rows) {
    const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
    std::ofstream os(path, std::ios::app);
    if (!os) throw format_error(path + ": cannot open for append");
    if (fresh) os << header << '\n';
    for (const auto& r : rows) os << r << '\n';
}

// Drop history rows recorded after `frames` (a crash window between the last
// checkpoint and the last write); keeps resumed runs equal to uninterrupted
// ones.
void truncate_history(const std::string& path, int64_t frames) {
    if (!fs::exists(path)) return;
    std::ifstream is(path);
    std::vector<std::string> keep;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (first) {
            keep.push_back(line);
            first = false;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) continue;
        if (std::stoll(line.substr(0, comma)) <= frames) keep.push_back(line);
    }
    is.close();
    std::ofstream os(path, std::ios::trunc);
    for (const auto& l : keep) os << l << '\n';
}

std::string fingerprint_hex(uint64_t fp) {
    char buf[32];
    snprintf(buf, sizeof buf, "%016" PRIx64, fp);
    return buf;
}

} // namespace

TrainResult train(const TrainSetup& setup) {
    setup.task.validate();
    setup.arch.validate();
    setup.hyper.validate();
    if (!setup.textures) throw config_error("train: texture source is required");
    if (setup.run_dir.empty()) throw config_error("train: run_dir is required");
    fs::create_directories(setup.run_dir);

    const std::string history_path = setup.run_dir + "/history.csv";
    const std::string stats_path = setup.run_dir + "/stats.csv";
    const std::string final_path = setup.run_dir + "/final.fgt";

    agent::NetParams<float> params;
    agent::OptimState optim = agent::OptimState::sized(setup.arch);
    TrainerState st;

    if (setup.resume && fs::exists(final_path)) {
        agent::Checkpoint c = agent::Checkpoint::load(final_path, setup.config_fingerprint);
        params = std::move(c.params);
        optim = std::move(c.optim);
        st = TrainerState::deserialize(c.trainer_state, setup.arch.resolved_n_fc());
        truncate_history(history_path, st.frames);
        truncate_history(stats_path, st.frames);
    } else {
        params = agent::NetParams<float>::build(setup.arch, setup.seed);
        st.update_rng = Rng(derive_seed(setup.seed, 0x0bda7eULL));
        st.workers.reserve(static_cast<size_t>(setup.hyper.workers));
        for (int w = 0; w < setup.hyper.workers; ++w)
            st.workers.push_back(EnvWorker::fresh(setup.task, setup.arch, setup.seed, w));
    }

    auto save_checkpoint = [&](const std::string& path) {
        agent::Checkpoint c;
        c.params = params;
        c.optim = optim;
        c.meta["config_fingerprint"] = fingerprint_hex(setup.config_fingerprint);
        c.meta["config_text"] = setup.config_text;
        c.meta["frames"] = st.frames;
        c.meta["updates"] = st.updates;
        c.meta["episodes"] = st.episodes;
        c.meta["seed"] = setup.seed;
        c.trainer_state = st.serialize();
        c.save(path);
    };

    RolloutBuffer buffer;
    std::deque<int64_t> recent_lifespans;

    while (st.frames < setup.frame_budget) {
        const CollectResult col =
            collect(st.workers, params, setup.task, *setup.textures, setup.hyper, buffer,
                    st.frames, setup.collector_threads);
        st.frames += col.frames;

        compute_gae(buffer, setup.hyper);
        PPOHyper hyper = setup.hyper;
        if (hyper.lr_anneal && setup.frame_budget > 0) {
            const double frac = 1.0 - std::min(1.0, static_cast<double>(st.frames) /
                                                        static_cast<double>(setup.frame_budget));
            hyper.lr = static_cast<float>(hyper.lr * frac);
        }
        const PPOStats stats = ppo_update(params, optim, buffer, hyper, st.update_rng);
        st.updates += 1;

        if (!col.episodes.empty()) {
            std::vector<std::string> rows;
            rows.reserve(col.episodes.size());
            for (const auto& e : col.episodes) {
                rows.push_back(std::to_string(e.frames_at_end) + "," +
                               std::to_string(e.lifespan));
                recent_lifespans.push_back(e.lifespan);
                while (recent_lifespans.size() > 100) recent_lifespans.pop_front();
            }
            st.episodes += static_cast<int64_t>(col.episodes.size());
            append_lines(history_path, "frames,lifespan", rows);
        }
        {
            std::ostringstream row;
            row << st.frames << ',' << stats.policy_loss << ',' << stats.value_loss << ','
                << stats.entropy << ',' << stats.clip_fraction << ',' << stats.approx_kl << ','
                << stats.grad_norm << ',' << hyper.lr;
            append_lines(stats_path,
                         "frames,policy_loss,value_loss,entropy,clip_fraction,approx_kl,"
                         "grad_norm,lr",
                         {row.str()});
        }

        if (setup.progress) {
            double mean_life = 0;
            for (int64_t l : recent_lifespans) mean_life += static_cast<double>(l);
            if (!recent_lifespans.empty()) mean_life /= static_cast<double>(recent_lifespans.size());
            setup.progress(st.frames, mean_life);
        }

        if (setup.checkpoint_every > 0 &&
            st.frames - st.last_checkpoint_frames >= setup.checkpoint_every) {
            st.last_checkpoint_frames = st.frames;
            save_checkpoint(setup.run_dir + "/ckpt_" + std::to_string(st.frames) + ".fgt");
            save_checkpoint(final_path);
        }
    }

    save_checkpoint(final_path);

    TrainResult r;
    r.final_checkpoint = final_path;
    r.frames = st.frames;
    r.episodes = st.episodes;
    r.updates = st.updates;
    return r;
}

} // namespace forager::trainer

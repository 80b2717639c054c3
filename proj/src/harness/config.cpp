#include "harness/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "util/errors.hpp"
#include "util/mathx.hpp"

namespace forager::harness {

namespace {

struct SchemaEntry {
    const char* key;
    const char* def;
};

// Declaration order is the canonical serialization order.
const SchemaEntry kSchema[] = {
    {"task.kind", "apples"},
    {"task.arena_side", "40"},
    {"task.decay_rate", "0.25"},
    {"task.initial_satiety", "50"},
    {"task.pickup_radius", "0.6"},
    {"task.move_speed", "0.35"},
    {"task.turn_speed_deg", "4.5"},
    {"task.spawn_interval", "70"},
    {"task.per_class_cap", "12"},
    {"task.nourishment_initial", "6"},
    {"task.poison_initial", "3"},
    {"task.initial_counts", ""},
    {"task.episode_frame_cap", "30000"},
    {"task.texture_size", "32"},
    {"task.mnist_images", ""},
    {"task.mnist_labels", ""},
    {"task.cifar_batches", ""},
    {"arch.brain", "ff"},
    {"arch.n_bc", "16"},
    {"arch.n_lgn", "32"},
    {"arch.n_fc", "auto"},
    {"arch.width", "64"},
    {"arch.height", "48"},
    {"arch.satiety_raw", "false"},
    {"ppo.gamma", "0.995"},
    {"ppo.lambda", "0.95"},
    {"ppo.clip_eps", "0.2"},
    {"ppo.lr", "1e-3"},
    {"ppo.lr_anneal", "true"},
    {"ppo.entropy_coef", "0.003"},
    {"ppo.value_coef", "0.5"},
    {"ppo.epochs", "2"},
    {"ppo.minibatches", "8"},
    {"ppo.rollout_len", "128"},
    {"ppo.workers", "16"},
    {"ppo.bptt_len", "32"},
    {"ppo.grad_clip", "1.0"},
    {"ppo.reward_scale", "0.0025"},
    {"ppo.action_repeat", "4"},
    {"run.seed", "1"},
    {"run.frame_budget", "3000000"},
    {"run.repeats", "3"},
    {"run.checkpoint_every", "1000000"},
    {"run.log_dir", "runs/run"},
    {"run.collector_threads", "0"},
    {"run.deterministic", "false"},
    {"bench.tasks", ""},
    {"bench.brains", ""},
    {"bench.n_bc", ""},
    {"bench.n_lgn", ""},
    {"bench.n_fc", ""},
};

bool known_key(const std::string& dotted) {
    for (const auto& e : kSchema)
        if (dotted == e.key) return true;
    return false;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace

Config Config::defaults() {
    Config c;
    for (const auto& e : kSchema) c.values_[e.key] = e.def;
    return c;
}

Config Config::from_text(const std::string& text, const std::string& origin) {
    Config c = defaults();
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw config_error(origin + ":" + std::to_string(lineno) +
                                   ": malformed section header '" + line + "'");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error(origin + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty())
            throw config_error(origin + ":" + std::to_string(lineno) + ": key '" + key +
                               "' outside any [section]");
        const std::string dotted = section + "." + key;
        if (!known_key(dotted))
            throw config_error(origin + ":" + std::to_string(lineno) + ": unknown key '" + dotted +
                               "'");
        c.values_[dotted] = value;
    }
    return c;
}

Config Config::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw config_error(path + ": cannot open config file");
    std::stringstream ss;
    ss << is.rdbuf();
    return from_text(ss.str(), path);
}

void Config::set(const std::string& dotted, const std::string& value) {
    if (!known_key(dotted)) throw config_error("unknown config key '" + dotted + "'");
    values_[dotted] = value;
}

const std::string& Config::get(const std::string& dotted) const {
    const auto it = values_.find(dotted);
    if (it == values_.end()) throw config_error("unknown config key '" + dotted + "'");
    return it->second;
}

int Config::get_int(const std::string& dotted) const {
    const std::string& v = get(dotted);
    try {
        size_t used = 0;
        const long long x = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return static_cast<int>(x);
    } catch (const std::exception&) {
        throw config_error(dotted + ": '" + v + "' is not an integer");
    }
}

double Config::get_double(const std::string& dotted) const {
    const std::string& v = get(dotted);
    try {
        size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw config_error(dotted + ": '" + v + "' is not a number");
    }
}

bool Config::get_bool(const std::string& dotted) const {
    const std::string& v = get(dotted);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw config_error(dotted + ": '" + v + "' is not a boolean");
}

std::vector<std::string> Config::get_list(const std::string& dotted) const {
    std::vector<std::string> out;
    std::istringstream is(get(dotted));
    std::string item;
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string Config::serialize() const {
    std::string out;
    std::string section;
    for (const auto& e : kSchema) {
        const std::string dotted = e.key;
        const auto dot = dotted.find('.');
        const std::string sec = dotted.substr(0, dot);
        if (sec != section) {
            if (!out.empty()) out += "\n";
            out += "[" + sec + "]\n";
            section = sec;
        }
        out += dotted.substr(dot + 1) + " = " + values_.at(dotted) + "\n";
    }
    return out;
}

uint64_t Config::fingerprint() const {
    const std::string s = serialize();
    return fnv1a64(s.data(), s.size());
}

uint64_t Config::experiment_fingerprint() const {
    std::string s;
    for (const auto& e : kSchema) {
        const std::string dotted = e.key;
        if (dotted.rfind("run.", 0) == 0 || dotted.rfind("bench.", 0) == 0) continue;
        s += dotted + " = " + values_.at(dotted) + "\n";
    }
    return fnv1a64(s.data(), s.size());
}

void Config::apply_env_overrides() {
    if (const char* dir = std::getenv("FORAGER_LOG_DIR"); dir && *dir)
        values_["run.log_dir"] = dir;
    if (const char* workers = std::getenv("FORAGER_WORKERS"); workers && *workers)
        values_["ppo.workers"] = workers;
}

world::TaskSpec Config::task() const {
    world::TaskSpec t = world::TaskSpec::defaults();
    t.arena_side = get_double("task.arena_side");
    t.decay_rate = get_double("task.decay_rate");
    t.initial_satiety = get_double("task.initial_satiety");
    t.pickup_radius = get_double("task.pickup_radius");
    t.move_speed = get_double("task.move_speed");
    t.turn_speed = get_double("task.turn_speed_deg") * kPi / 180.0;
    t.spawn_interval = get_int("task.spawn_interval");
    t.per_class_cap = get_int("task.per_class_cap");
    t.episode_frame_cap = static_cast<int64_t>(get_double("task.episode_frame_cap"));
    const auto counts = get_list("task.initial_counts");
    if (!counts.empty()) {
        if (counts.size() != world::kNumClasses)
            throw config_error("task.initial_counts: expected 10 comma-separated integers");
        for (int i = 0; i < world::kNumClasses; ++i)
            t.initial_counts[static_cast<size_t>(i)] = std::stoi(counts[static_cast<size_t>(i)]);
    } else {
        const int nour = get_int("task.nourishment_initial");
        const int pois = get_int("task.poison_initial");
        for (int i = 0; i < world::kNumClasses; ++i)
            t.initial_counts[static_cast<size_t>(i)] =
                world::kClassDeltas[static_cast<size_t>(i)] > 0 ? nour : pois;
    }
    t.validate();
    return t;
}

agent::ArchSpec Config::arch() const {
    agent::ArchSpec a;
    a.brain = agent::brain_from_string(get("arch.brain"));
    a.n_bc = get_int("arch.n_bc");
    a.n_lgn = get_int("arch.n_lgn");
    const std::string nfc = get("arch.n_fc");
    a.n_fc = nfc == "auto" ? 0 : get_int("arch.n_fc");
    a.width = get_int("arch.width");
    a.height = get_int("arch.height");
    a.satiety_raw = get_bool("arch.satiety_raw");
    a.validate();
    return a;
}

trainer::PPOHyper Config::ppo() const {
    trainer::PPOHyper h;
    h.gamma = static_cast<float>(get_double("ppo.gamma"));
    h.lam = static_cast<float>(get_double("ppo.lambda"));
    h.clip_eps = static_cast<float>(get_double("ppo.clip_eps"));
    h.lr = static_cast<float>(get_double("ppo.lr"));
    h.lr_anneal = get_bool("ppo.lr_anneal");
    h.entropy_coef = static_cast<float>(get_double("ppo.entropy_coef"));
    h.value_coef = static_cast<float>(get_double("ppo.value_coef"));
    h.epochs = get_int("ppo.epochs");
    h.minibatches = get_int("ppo.minibatches");
    h.rollout_len = get_int("ppo.rollout_len");
    h.workers = get_int("ppo.workers");
    h.bptt_len = get_int("ppo.bptt_len");
    h.grad_clip = static_cast<float>(get_double("ppo.grad_clip"));
    h.reward_scale = static_cast<float>(get_double("ppo.reward_scale"));
    h.action_repeat = get_int("ppo.action_repeat");
    h.validate();
    return h;
}

std::shared_ptr<const raster::TextureSource> Config::textures() const {
    const auto kind = raster::task_kind_from_string(get("task.kind"));
    const int size = get_int("task.texture_size");
    switch (kind) {
        case raster::TaskKind::apples:
            return std::make_shared<raster::TextureSource>(raster::TextureSource::apples(size));
        case raster::TaskKind::gabors:
            return std::make_shared<raster::TextureSource>(raster::TextureSource::gabors(size));
        case raster::TaskKind::mnist: {
            const std::string imgs = get("task.mnist_images");
            const std::string labs = get("task.mnist_labels");
            if (imgs.empty() || labs.empty())
                throw config_error("mnist task requires task.mnist_images and task.mnist_labels");
            return std::make_shared<raster::TextureSource>(
                raster::TextureSource::mnist(raster::load_idx(imgs, labs)));
        }
        default: {
            const auto batches = get_list("task.cifar_batches");
            if (batches.empty())
                throw config_error("cifar10 task requires task.cifar_batches");
            raster::LabeledPool pool;
            for (const auto& b : batches) {
                raster::LabeledPool p = raster::load_cifar(b);
                pool.width = p.width;
                pool.height = p.height;
                for (int l = 0; l < 10; ++l)
                    for (auto& img : p.by_label[static_cast<size_t>(l)])
                        pool.by_label[static_cast<size_t>(l)].push_back(std::move(img));
            }
            return std::make_shared<raster::TextureSource>(
                raster::TextureSource::cifar10(std::move(pool)));
        }
    }
}

int Config::collector_threads() const {
    if (get_bool("run.deterministic")) return 1;
    const int n = get_int("run.collector_threads");
    if (n > 0) return n;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

} // namespace forager::harness

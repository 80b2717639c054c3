#include "agent/checkpoint.hpp"

#include <cinttypes>

#include "util/errors.hpp"

namespace forager::agent {

nlohmann::json arch_to_json(const ArchSpec& spec) {
    return {{"brain", to_string(spec.brain)}, {"n_bc", spec.n_bc},
            {"n_lgn", spec.n_lgn},            {"n_fc", spec.n_fc},
            {"width", spec.width},            {"height", spec.height},
            {"satiety_raw", spec.satiety_raw}};
}

ArchSpec arch_from_json(const nlohmann::json& j) {
    ArchSpec spec;
    spec.brain = brain_from_string(j.at("brain").get<std::string>());
    spec.n_bc = j.at("n_bc").get<int>();
    spec.n_lgn = j.at("n_lgn").get<int>();
    spec.n_fc = j.at("n_fc").get<int>();
    spec.width = j.at("width").get<int>();
    spec.height = j.at("height").get<int>();
    spec.satiety_raw = j.value("satiety_raw", false);
    spec.validate();
    return spec;
}

void Checkpoint::save(const std::string& path) const {
    nn::NamedTensorFile f;
    f.meta = meta;
    f.meta["schema"] = "forager.checkpoint";
    f.meta["arch"] = arch_to_json(params.spec);
    f.meta["adam_t"] = optim.t;
    for (const auto& [name, t] : params.named()) f.tensors.emplace_back(name, *t);
    if (optim.t > 0) {
        for (const auto& [name, t] : optim.m.named()) f.tensors.emplace_back("adam.m." + name, *t);
        for (const auto& [name, t] : optim.v.named()) f.tensors.emplace_back("adam.v." + name, *t);
    }
    f.state_blob = trainer_state;
    f.save(path);
}

Checkpoint Checkpoint::load(const std::string& path, uint64_t expected_fingerprint) {
    const nn::NamedTensorFile f = nn::NamedTensorFile::load(path);
    if (f.meta.value("schema", "") != "forager.checkpoint")
        throw format_error(path + ": not a forager checkpoint");
    if (expected_fingerprint != 0) {
        char want[32];
        snprintf(want, sizeof want, "%016" PRIx64, expected_fingerprint);
        const std::string have = f.meta.value("config_fingerprint", "");
        if (have != want)
            throw format_error(path + ": config fingerprint mismatch (checkpoint " + have +
                               ", expected " + want + ")");
    }

    Checkpoint c;
    c.meta = f.meta;
    const ArchSpec spec = arch_from_json(f.meta.at("arch"));
    c.params = NetParams<float>::zeros_like(spec);
    for (auto& [name, t] : c.params.named()) {
        const nn::Tensor* src = f.find(name);
        if (!src) throw format_error(path + ": missing tensor '" + name + "'");
        if (src->shape() != t->shape())
            throw format_error(path + ": tensor '" + name + "' has shape " + src->shape_str() +
                               ", expected " + t->shape_str());
        *t = *src;
    }
    c.optim = OptimState::sized(spec);
    c.optim.t = f.meta.value("adam_t", static_cast<int64_t>(0));
    if (c.optim.t > 0) {
        for (auto& [name, t] : c.optim.m.named()) {
            const nn::Tensor* src = f.find("adam.m." + name);
            if (!src) throw format_error(path + ": missing optimizer tensor adam.m." + name);
            *t = *src;
        }
        for (auto& [name, t] : c.optim.v.named()) {
            const nn::Tensor* src = f.find("adam.v." + name);
            if (!src) throw format_error(path + ": missing optimizer tensor adam.v." + name);
            *t = *src;
        }
    }
    c.trainer_state = f.state_blob;
    return c;
}

} // namespace forager::agent

#pragma once

#include <string>

#include <json.hpp>

#include "agent/net.hpp"
#include "nn/adam.hpp"
#include "nn/container.hpp"

namespace forager::agent {

nlohmann::json arch_to_json(const ArchSpec& spec);
ArchSpec arch_from_json(const nlohmann::json& j);

// Per-parameter Adam moments, keyed by the NetParams naming scheme.
struct OptimState {
    NetParams<float> m, v;
    int64_t t = 0;

    static OptimState sized(const ArchSpec& spec) {
        return {NetParams<float>::zeros_like(spec), NetParams<float>::zeros_like(spec), 0};
    }
};

struct Checkpoint {
    NetParams<float> params;
    OptimState optim;
    nlohmann::json meta;      // arch, config text + fingerprint, frame counters
    std::string trainer_state; // opaque resume blob

    void save(const std::string& path) const;

    // expected_fingerprint 0 skips the check; a mismatch refuses to load.
    static Checkpoint load(const std::string& path, uint64_t expected_fingerprint = 0);
};

} // namespace forager::agent

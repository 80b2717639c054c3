#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nn/tensor.hpp"

namespace forager::nn {

// Versioned binary container of named float32 tensors with a JSON meta block
// and an opaque state blob (trainer resume data). Little-endian on disk.
struct NamedTensorFile {
    nlohmann::json meta;
    std::vector<std::pair<std::string, Tensor>> tensors;
    std::string state_blob;

    void save(const std::string& path) const;
    static NamedTensorFile load(const std::string& path);

    const Tensor* find(const std::string& name) const {
        for (const auto& [n, t] : tensors)
            if (n == name) return &t;
        return nullptr;
    }
};

} // namespace forager::nn

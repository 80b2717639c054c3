#pragma once

#include <string>

#include <json.hpp>

#include "harness/config.hpp"

namespace forager::harness {

// Every run directory carries exactly one manifest tying artifacts to the
// config fingerprint that produced them. Writes are atomic (tmp + rename).
class RunManifest {
  public:
    static RunManifest create(const std::string& dir, const Config& cfg,
                              const std::string& command);
    static bool exists(const std::string& dir);
    static RunManifest open(const std::string& dir);

    void add_artifact(const std::string& relative_path);
    void finalize(const std::string& status); // "complete" or "failed"

    const nlohmann::json& data() const { return data_; }
    std::string status() const { return data_.value("status", "unknown"); }
    uint64_t fingerprint() const;

  private:
    void write() const;

    std::string dir_;
    nlohmann::json data_;
};

std::string version_string();

} // namespace forager::harness

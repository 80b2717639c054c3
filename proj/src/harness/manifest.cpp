#include "harness/manifest.hpp"

#include <chrono>
#include <cinttypes>
#include <filesystem>
#include <fstream>

#include "util/errors.hpp"

namespace forager::harness {

namespace fs = std::filesystem;

namespace {

std::string now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

std::string manifest_path(const std::string& dir) { return dir + "/manifest.json"; }

} // namespace

std::string version_string() { return "forager 0.1.0"; }

RunManifest RunManifest::create(const std::string& dir, const Config& cfg,
                                const std::string& command) {
    fs::create_directories(dir);
    RunManifest m;
    m.dir_ = dir;
    char fp[32];
    snprintf(fp, sizeof fp, "%016" PRIx64, cfg.fingerprint());
    m.data_ = {{"schema", "forager.manifest"},
               {"command", command},
               {"config_fingerprint", fp},
               {"config_text", cfg.serialize()},
               {"code_version", version_string()},
               {"started", now_iso8601()},
               {"status", "running"},
               {"artifacts", nlohmann::json::array()}};
    m.write();
    return m;
}

bool RunManifest::exists(const std::string& dir) { return fs::exists(manifest_path(dir)); }

RunManifest RunManifest::open(const std::string& dir) {
    std::ifstream is(manifest_path(dir));
    if (!is) throw format_error(manifest_path(dir) + ": cannot open");
    RunManifest m;
    m.dir_ = dir;
    is >> m.data_;
    if (m.data_.value("schema", "") != "forager.manifest")
        throw format_error(manifest_path(dir) + ": not a forager manifest");
    return m;
}

void RunManifest::add_artifact(const std::string& relative_path) {
    for (const auto& a : data_["artifacts"])
        if (a.get<std::string>() == relative_path) return;
    data_["artifacts"].push_back(relative_path);
    write();
}

void RunManifest::finalize(const std::string& status) {
    data_["status"] = status;
    data_["finished"] = now_iso8601();
    write();
}

uint64_t RunManifest::fingerprint() const {
    return std::stoull(data_.value("config_fingerprint", "0"), nullptr, 16);
}

void RunManifest::write() const {
    const std::string tmp = manifest_path(dir_) + ".tmp";
    {
        std::ofstream os(tmp);
        if (!os) throw format_error(tmp + ": cannot open for writing");
        os << data_.dump(2) << '\n';
    }
    fs::rename(tmp, manifest_path(dir_));
}

} // namespace forager::harness

#include "tlog/trajlog.hpp"

#include <cstring>
#include <fstream>

#include "util/errors.hpp"

namespace forager::tlog {

namespace {

constexpr uint32_t kRecordSize = 90;

template <typename T>
void put(std::string& out, T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    out.append(b, sizeof(T));
}

template <typename T>
T get(const char*& p, const char* end) {
    if (p + sizeof(T) > end) throw format_error("trajectory log: truncated record");
    T v;
    std::memcpy(&v, p, sizeof(T));
    p += sizeof(T);
    return v;
}

} // namespace

void TrajectoryLog::save(const std::string& path) const {
    nlohmann::json h = header;
    h["schema"] = "forager.trajlog";
    h["version"] = 1;
    h["record_size"] = kRecordSize;
    h["count"] = records.size();

    std::ofstream os(path, std::ios::binary);
    if (!os) throw format_error(path + ": cannot open for writing");
    os << h.dump() << '\n';

    std::string buf;
    buf.reserve(records.size() * kRecordSize);
    for (const auto& r : records) {
        put(buf, r.episode);
        put(buf, r.frame);
        put(buf, r.satiety);
        put(buf, r.value);
        buf.push_back(static_cast<char>(r.act_h));
        buf.push_back(static_cast<char>(r.act_v));
        for (float p : r.probs_h) put(buf, p);
        for (float p : r.probs_v) put(buf, p);
        put(buf, r.reward);
        for (uint8_t c : r.pickup_counts) buf.push_back(static_cast<char>(c));
        put(buf, r.wasted);
        put(buf, r.positive_delta);
        for (uint16_t c : r.object_counts) put(buf, c);
        put(buf, r.viewport);
        buf.push_back(static_cast<char>(r.done));
        buf.push_back('\0');
    }
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!os) throw format_error(path + ": write failed");
}

TrajectoryLog TrajectoryLog::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw format_error(path + ": cannot open");
    std::string header_line;
    if (!std::getline(is, header_line)) throw format_error(path + ": missing header");

    TrajectoryLog log;
    log.header = nlohmann::json::parse(header_line, nullptr, false);
    if (log.header.is_discarded() || log.header.value("schema", "") != "forager.trajlog")
        throw format_error(path + ": not a forager trajectory log");
    if (log.header.value("record_size", 0u) != kRecordSize)
        throw format_error(path + ": unsupported record size");

    std::string body((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    const size_t count = log.header.value("count", static_cast<size_t>(0));
    if (body.size() != count * kRecordSize)
        throw format_error(path + ": body has " + std::to_string(body.size()) +
                           " bytes, expected " + std::to_string(count * kRecordSize));

    log.records.resize(count);
    const char* p = body.data();
    const char* end = body.data() + body.size();
    for (auto& r : log.records) {
        r.episode = get<uint32_t>(p, end);
        r.frame = get<uint32_t>(p, end);
        r.satiety = get<float>(p, end);
        r.value = get<float>(p, end);
        r.act_h = static_cast<uint8_t>(get<char>(p, end));
        r.act_v = static_cast<uint8_t>(get<char>(p, end));
        for (auto& q : r.probs_h) q = get<float>(p, end);
        for (auto& q : r.probs_v) q = get<float>(p, end);
        r.reward = get<float>(p, end);
        for (auto& c : r.pickup_counts) c = static_cast<uint8_t>(get<char>(p, end));
        r.wasted = get<float>(p, end);
        r.positive_delta = get<float>(p, end);
        for (auto& c : r.object_counts) c = get<uint16_t>(p, end);
        r.viewport = get<int32_t>(p, end);
        r.done = static_cast<uint8_t>(get<char>(p, end));
        (void)get<char>(p, end); // pad
    }
    return log;
}

void TrajectoryLog::save_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw format_error(path + ": cannot open for writing");
    os << "episode,frame,satiety,value,act_h,act_v";
    for (int i = 0; i < 3; ++i) os << ",prob_h" << i;
    for (int i = 0; i < 3; ++i) os << ",prob_v" << i;
    os << ",reward";
    for (int i = 0; i < world::kNumClasses; ++i) os << ",pickups_c" << i;
    os << ",wasted,positive_delta";
    for (int i = 0; i < world::kNumClasses; ++i) os << ",objects_c" << i;
    os << ",viewport,done\n";
    for (const auto& r : records) {
        os << r.episode << ',' << r.frame << ',' << r.satiety << ',' << r.value << ','
           << static_cast<int>(r.act_h) << ',' << static_cast<int>(r.act_v);
        for (float p : r.probs_h) os << ',' << p;
        for (float p : r.probs_v) os << ',' << p;
        os << ',' << r.reward;
        for (uint8_t c : r.pickup_counts) os << ',' << static_cast<int>(c);
        os << ',' << r.wasted << ',' << r.positive_delta;
        for (uint16_t c : r.object_counts) os << ',' << c;
        os << ',' << r.viewport << ',' << static_cast<int>(r.done) << '\n';
    }
}

void ViewportFile::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw format_error(path + ": cannot open for writing");
    nlohmann::json h = {{"schema", "forager.viewports"},
                        {"width", width},
                        {"height", height},
                        {"latent_dim", latent_dim},
                        {"count", frames.size()}};
    os << h.dump() << '\n';
    for (size_t i = 0; i < frames.size(); ++i) {
        os.write(reinterpret_cast<const char*>(frames[i].data()),
                 static_cast<std::streamsize>(frames[i].size() * sizeof(float)));
        if (latent_dim > 0)
            os.write(reinterpret_cast<const char*>(latents[i].data()),
                     static_cast<std::streamsize>(latents[i].size() * sizeof(float)));
    }
}

ViewportFile ViewportFile::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw format_error(path + ": cannot open");
    std::string header_line;
    std::getline(is, header_line);
    const auto h = nlohmann::json::parse(header_line, nullptr, false);
    if (h.is_discarded() || h.value("schema", "") != "forager.viewports")
        throw format_error(path + ": not a forager viewport file");
    ViewportFile v;
    v.width = h.at("width").get<int>();
    v.height = h.at("height").get<int>();
    v.latent_dim = h.value("latent_dim", 0);
    const size_t count = h.at("count").get<size_t>();
    const size_t frame_floats = static_cast<size_t>(v.width) * v.height * 3;
    v.frames.assign(count, std::vector<float>(frame_floats));
    v.latents.assign(count, std::vector<float>(static_cast<size_t>(v.latent_dim)));
    for (size_t i = 0; i < count; ++i) {
        is.read(reinterpret_cast<char*>(v.frames[i].data()),
                static_cast<std::streamsize>(frame_floats * sizeof(float)));
        if (v.latent_dim > 0)
            is.read(reinterpret_cast<char*>(v.latents[i].data()),
                    static_cast<std::streamsize>(v.latents[i].size() * sizeof(float)));
        if (!is) throw format_error(path + ": truncated frame data");
    }
    return v;
}

} // namespace forager::tlog

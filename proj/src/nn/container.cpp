#include "nn/container.hpp"

#include <cstring>
#include <fstream>

#include "util/errors.hpp"

namespace forager::nn {

namespace {

constexpr char kMagic[8] = {'F', 'G', 'T', 'E', 'N', 'S', 'R', '1'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
    unsigned char b[sizeof(T)];
    for (size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::string& path) {
    unsigned char b[sizeof(T)];
    is.read(reinterpret_cast<char*>(b), sizeof(T));
    if (!is) throw format_error(path + ": truncated container");
    T v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(b[i]) << (8 * i);
    return v;
}

} // namespace

void NamedTensorFile::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw format_error(path + ": cannot open for writing");
    os.write(kMagic, 8);
    put<uint32_t>(os, kVersion);
    const std::string meta_s = meta.dump();
    put<uint64_t>(os, meta_s.size());
    os.write(meta_s.data(), static_cast<std::streamsize>(meta_s.size()));
    put<uint32_t>(os, static_cast<uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        put<uint16_t>(os, static_cast<uint16_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        put<uint8_t>(os, 0); // dtype f32
        put<uint8_t>(os, static_cast<uint8_t>(t.rank()));
        for (int d = 0; d < t.rank(); ++d) put<uint32_t>(os, static_cast<uint32_t>(t.dim(d)));
        put<uint64_t>(os, t.size() * sizeof(float));
        static_assert(sizeof(float) == 4);
        os.write(reinterpret_cast<const char*>(t.data()),
                 static_cast<std::streamsize>(t.size() * sizeof(float)));
    }
    put<uint64_t>(os, state_blob.size());
    os.write(state_blob.data(), static_cast<std::streamsize>(state_blob.size()));
    if (!os) throw format_error(path + ": write failed");
}

NamedTensorFile NamedTensorFile::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw format_error(path + ": cannot open");
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw format_error(path + ": not a forager tensor container (bad magic)");
    const auto version = get<uint32_t>(is, path);
    if (version != kVersion)
        throw format_error(path + ": unsupported container version " + std::to_string(version));

    NamedTensorFile f;
    const auto meta_len = get<uint64_t>(is, path);
    std::string meta_s(meta_len, '\0');
    is.read(meta_s.data(), static_cast<std::streamsize>(meta_len));
    if (!is) throw format_error(path + ": truncated meta block");
    f.meta = nlohmann::json::parse(meta_s, nullptr, false);
    if (f.meta.is_discarded()) throw format_error(path + ": meta block is not valid JSON");

    const auto n = get<uint32_t>(is, path);
    f.tensors.reserve(n);
    for (uint32_t i = 0; i < n; ++i) {
        const auto name_len = get<uint16_t>(is, path);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        const auto dtype = get<uint8_t>(is, path);
        if (dtype != 0) throw format_error(path + ": unsupported dtype " + std::to_string(dtype));
        const auto rank = get<uint8_t>(is, path);
        std::vector<int> dims(rank);
        for (auto& d : dims) d = static_cast<int>(get<uint32_t>(is, path));
        const auto bytes = get<uint64_t>(is, path);
        Tensor t(dims);
        if (bytes != t.size() * sizeof(float))
            throw format_error(path + ": tensor '" + name + "' size mismatch");
        is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(bytes));
        if (!is) throw format_error(path + ": truncated tensor '" + name + "'");
        f.tensors.emplace_back(std::move(name), std::move(t));
    }
    const auto state_len = get<uint64_t>(is, path);
    f.state_blob.resize(state_len);
    is.read(f.state_blob.data(), static_cast<std::streamsize>(state_len));
    if (!is) throw format_error(path + ": truncated state blob");
    return f;
}

} // namespace forager::nn

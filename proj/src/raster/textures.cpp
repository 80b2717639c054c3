#include "raster/textures.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "util/mathx.hpp"

namespace forager::raster {

TaskKind task_kind_from_string(const std::string& s) {
    if (s == "apples") return TaskKind::apples;
    if (s == "gabors") return TaskKind::gabors;
    if (s == "mnist") return TaskKind::mnist;
    if (s == "cifar10") return TaskKind::cifar10;
    throw config_error("unknown task kind '" + s + "' (apples|gabors|mnist|cifar10)");
}

std::string to_string(TaskKind k) {
    switch (k) {
        case TaskKind::apples: return "apples";
        case TaskKind::gabors: return "gabors";
        case TaskKind::mnist: return "mnist";
        default: return "cifar10";
    }
}

// --- Gabor patches ---

Texture make_gabor(double orientation, double wavelength, double phase, double sigma, int size) {
    if (size < 8) throw config_error("make_gabor: size must be >= 8");
    if (wavelength <= 0.0) throw config_error("make_gabor: wavelength must be > 0");

    Texture t;
    t.pixels = Image(size, size);
    t.mask.assign(static_cast<size_t>(size) * size, 1);
    const double c = std::cos(orientation), s = std::sin(orientation);
    const double mid = (size - 1) / 2.0;
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double xr = x - mid, yr = y - mid;
            const double xp = xr * c + yr * s;
            const double yp = -xr * s + yr * c;
            const double env = std::exp(-(xp * xp + yp * yp) / (2.0 * sigma * sigma));
            const double g = env * std::cos(2.0 * kPi * xp / wavelength + phase);
            const float v = quantize8(static_cast<float>(0.5 + 0.5 * g));
            t.pixels.at(x, y, 0) = v;
            t.pixels.at(x, y, 1) = v;
            t.pixels.at(x, y, 2) = v;
        }
    }
    return t;
}

// --- Procedural apples ---

namespace {

Texture make_apple(bool nourishing, int size) {
    Texture t;
    t.pixels = Image(size, size);
    t.mask.assign(static_cast<size_t>(size) * size, 0);
    const double mid = (size - 1) / 2.0;
    const double radius = 0.46 * size;
    const float base_r = nourishing ? 0.78f : 0.10f;
    const float base_g = nourishing ? 0.09f : 0.16f;
    const float base_b = nourishing ? 0.07f : 0.80f;
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double dx = x - mid, dy = y - mid;
            const double r = std::sqrt(dx * dx + dy * dy);
            if (r > radius) continue;
            t.mask[static_cast<size_t>(y) * size + x] = 1;
            // darker toward the rim, light glint upper-left
            const float shade = static_cast<float>(1.0 - 0.45 * (r / radius) * (r / radius));
            const double gx = dx + 0.35 * radius, gy = dy + 0.35 * radius;
            const double glint = std::max(0.0, 1.0 - std::sqrt(gx * gx + gy * gy) / (0.3 * radius));
            const float w = static_cast<float>(0.55 * glint * glint);
            t.pixels.at(x, y, 0) = quantize8(base_r * shade + w);
            t.pixels.at(x, y, 1) = quantize8(base_g * shade + w);
            t.pixels.at(x, y, 2) = quantize8(base_b * shade + w);
        }
    }
    return t;
}

Texture texture_from_gray(const Image& gray) {
    Texture t;
    t.pixels = gray;
    t.mask.assign(gray.pixel_count(), 1);
    return t;
}

} // namespace

// --- Dataset files ---

namespace {

uint32_t read_be32(std::istream& in, const std::string& path, size_t offset) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in)
        throw format_error(path + ": truncated at byte " + std::to_string(offset));
    return (static_cast<uint32_t>(b[0]) << 24) | (static_cast<uint32_t>(b[1]) << 16) |
           (static_cast<uint32_t>(b[2]) << 8) | static_cast<uint32_t>(b[3]);
}

} // namespace

LabeledPool load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw format_error(images_path + ": cannot open");
    const uint32_t img_magic = read_be32(imgs, images_path, 0);
    if (img_magic != 0x00000803u)
        throw format_error(images_path + ": bad magic at byte 0 (want 0x00000803, got 0x" +
                           [&] { char b[16]; snprintf(b, sizeof b, "%08x", img_magic); return std::string(b); }() + ")");
    const uint32_t n = read_be32(imgs, images_path, 4);
    const uint32_t rows = read_be32(imgs, images_path, 8);
    const uint32_t cols = read_be32(imgs, images_path, 12);

    std::ifstream labs(labels_path, std::ios::binary);
    if (!labs) throw format_error(labels_path + ": cannot open");
    const uint32_t lab_magic = read_be32(labs, labels_path, 0);
    if (lab_magic != 0x00000801u)
        throw format_error(labels_path + ": bad magic at byte 0 (want 0x00000801)");
    const uint32_t n_labels = read_be32(labs, labels_path, 4);
    if (n_labels != n)
        throw format_error(labels_path + ": label count " + std::to_string(n_labels) +
                           " does not match image count " + std::to_string(n));

    std::vector<unsigned char> labels(n);
    labs.read(reinterpret_cast<char*>(labels.data()), n);
    if (!labs) throw format_error(labels_path + ": truncated at byte 8");

    LabeledPool pool;
    pool.width = static_cast<int>(cols);
    pool.height = static_cast<int>(rows);
    const size_t img_bytes = static_cast<size_t>(rows) * cols;
    std::vector<unsigned char> buf(img_bytes);
    for (uint32_t i = 0; i < n; ++i) {
        imgs.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(img_bytes));
        if (!imgs)
            throw format_error(images_path + ": truncated at byte " +
                               std::to_string(16 + static_cast<size_t>(i) * img_bytes));
        if (labels[i] > 9)
            throw format_error(labels_path + ": label " + std::to_string(labels[i]) +
                               " out of range at record " + std::to_string(i));
        Image img(static_cast<int>(cols), static_cast<int>(rows));
        for (size_t p = 0; p < img_bytes; ++p) {
            const float v = static_cast<float>(buf[p]) / 255.0f;
            img.data[p * 3 + 0] = v;
            img.data[p * 3 + 1] = v;
            img.data[p * 3 + 2] = v;
        }
        pool.by_label[labels[i]].push_back(std::move(img));
    }
    return pool;
}

LabeledPool load_cifar(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw format_error(path + ": cannot open");
    const auto len = static_cast<size_t>(in.tellg());
    constexpr size_t kRecord = 3073;
    if (len == 0 || len % kRecord != 0)
        throw format_error(path + ": length " + std::to_string(len) +
                           " is not a positive multiple of 3073");
    in.seekg(0);

    LabeledPool pool;
    pool.width = 32;
    pool.height = 32;
    std::vector<unsigned char> rec(kRecord);
    const size_t n = len / kRecord;
    for (size_t i = 0; i < n; ++i) {
        in.read(reinterpret_cast<char*>(rec.data()), kRecord);
        if (!in)
            throw format_error(path + ": truncated at byte " + std::to_string(i * kRecord));
        const int label = rec[0];
        if (label > 9)
            throw format_error(path + ": label " + std::to_string(label) +
                               " out of range at record " + std::to_string(i));
        Image img(32, 32);
        for (int p = 0; p < 1024; ++p) {
            img.data[static_cast<size_t>(p) * 3 + 0] = static_cast<float>(rec[1 + p]) / 255.0f;
            img.data[static_cast<size_t>(p) * 3 + 1] =
                static_cast<float>(rec[1 + 1024 + p]) / 255.0f;
            img.data[static_cast<size_t>(p) * 3 + 2] =
                static_cast<float>(rec[1 + 2048 + p]) / 255.0f;
        }
        pool.by_label[static_cast<size_t>(label)].push_back(std::move(img));
    }
    return pool;
}

int class_for_label(int label) {
    if (label < 0 || label > 9) throw usage_error("label out of range");
    return label < 5 ? 4 - label : label;
}

int label_for_class(int class_id) {
    if (class_id < 0 || class_id > 9) throw usage_error("class id out of range");
    return class_id < 5 ? 4 - class_id : class_id;
}

// --- TextureSource ---

TextureSource TextureSource::apples(int texture_size) {
    TextureSource src;
    src.kind_ = TaskKind::apples;
    const Texture red = make_apple(true, texture_size);
    const Texture blue = make_apple(false, texture_size);
    for (int c = 0; c < world::kNumClasses; ++c)
        src.per_class_[static_cast<size_t>(c)].push_back(c >= 5 ? red : blue);
    return src;
}

TextureSource TextureSource::gabors(int texture_size) {
    TextureSource src;
    src.kind_ = TaskKind::gabors;
    // Eight patches at 22.5 degree steps; lambda = size/4, sigma = size/5.
    std::array<Texture, 8> patches;
    for (int i = 0; i < 8; ++i)
        patches[static_cast<size_t>(i)] =
            make_gabor(i * kPi / 8.0, texture_size / 4.0, 0.0, texture_size / 5.0, texture_size);
    // Classes -10 (id 3) and -5 (id 4) share a patch, as do +10 (id 5) and
    // +20 (id 6); the remaining six classes get unique patches.
    const std::array<int, world::kNumClasses> patch_of = {0, 1, 2, 3, 3, 4, 4, 5, 6, 7};
    for (int c = 0; c < world::kNumClasses; ++c)
        src.per_class_[static_cast<size_t>(c)].push_back(
            patches[static_cast<size_t>(patch_of[static_cast<size_t>(c)])]);
    return src;
}

TextureSource TextureSource::mnist(LabeledPool pool) {
    TextureSource src;
    src.kind_ = TaskKind::mnist;
    for (int c = 0; c < world::kNumClasses; ++c) {
        const int label = label_for_class(c);
        auto& group = pool.by_label[static_cast<size_t>(label)];
        if (group.empty())
            throw config_error("mnist pool has no images for label " + std::to_string(label));
        for (auto& img : group)
            src.per_class_[static_cast<size_t>(c)].push_back(texture_from_gray(img));
    }
    return src;
}

TextureSource TextureSource::cifar10(LabeledPool pool) {
    TextureSource src;
    src.kind_ = TaskKind::cifar10;
    for (int c = 0; c < world::kNumClasses; ++c) {
        const int label = label_for_class(c);
        auto& group = pool.by_label[static_cast<size_t>(label)];
        if (group.empty())
            throw config_error("cifar10 pool has no images for label " + std::to_string(label));
        for (auto& img : group)
            src.per_class_[static_cast<size_t>(c)].push_back(texture_from_gray(img));
    }
    return src;
}

const Texture& TextureSource::texture_for(int class_id, uint64_t instance_seed) const {
    if (class_id < 0 || class_id >= world::kNumClasses)
        throw usage_error("texture_for: class id " + std::to_string(class_id) + " out of range");
    const auto& group = per_class_[static_cast<size_t>(class_id)];
    if (group.size() == 1) return group[0];
    const uint64_t h = splitmix64(hash_combine(instance_seed, static_cast<uint64_t>(class_id)));
    return group[h % group.size()];
}

size_t TextureSource::pool_size(int class_id) const {
    return per_class_[static_cast<size_t>(class_id)].size();
}

} // namespace forager::raster

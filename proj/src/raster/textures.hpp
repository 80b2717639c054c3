#pragma once

#include <array>
#include <string>
#include <vector>

#include "raster/image.hpp"
#include "world/world.hpp"

namespace forager::raster {

enum class TaskKind { apples, gabors, mnist, cifar10 };

TaskKind task_kind_from_string(const std::string& s);
std::string to_string(TaskKind k);

// Images grouped by dataset label 0..9.
struct LabeledPool {
    int width = 0, height = 0;
    std::array<std::vector<Image>, 10> by_label;

    size_t total() const {
        size_t n = 0;
        for (const auto& g : by_label) n += g.size();
        return n;
    }
};

// G(x,y) = exp(-(x'^2 + y'^2) / (2 sigma^2)) * cos(2 pi x' / lambda + phase),
// coordinates rotated by `orientation`, remapped to [0,1].
Texture make_gabor(double orientation, double wavelength, double phase, double sigma, int size);

// IDX-format images + labels (big-endian, magics 0x803 / 0x801).
LabeledPool load_idx(const std::string& images_path, const std::string& labels_path);

// CIFAR-10 binary batches: 1 label byte + 3072 channel-planar bytes per record.
LabeledPool load_cifar(const std::string& path);

// Dataset label -> object class id. Labels 0-4 map to poison classes by
// ascending |delta| (class ids 4,3,2,1,0); labels 5-9 to nourishment by
// ascending delta (class ids 5..9).
int class_for_label(int label);
int label_for_class(int class_id);

// Immutable per-task texture table; safe for concurrent reads.
class TextureSource {
  public:
    static TextureSource apples(int texture_size = 32);
    static TextureSource gabors(int texture_size = 32);
    static TextureSource mnist(LabeledPool pool);
    static TextureSource cifar10(LabeledPool pool);

    TaskKind kind() const { return kind_; }

    // Deterministic in (class_id, instance_seed).
    const Texture& texture_for(int class_id, uint64_t instance_seed) const;

    size_t pool_size(int class_id) const;

  private:
    TaskKind kind_ = TaskKind::apples;
    std::array<std::vector<Texture>, world::kNumClasses> per_class_;
};

} // namespace forager::raster

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "raster/render.hpp"
#include "raster/textures.hpp"
#include "util/errors.hpp"

using namespace forager;
using namespace forager::raster;

namespace {

namespace fs = std::filesystem;

fs::path tmp_dir() {
    const fs::path p = fs::temp_directory_path() / "forager_raster_tests";
    fs::create_directories(p);
    return p;
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

void push_be32(std::vector<unsigned char>& v, uint32_t x) {
    v.push_back(static_cast<unsigned char>(x >> 24));
    v.push_back(static_cast<unsigned char>(x >> 16));
    v.push_back(static_cast<unsigned char>(x >> 8));
    v.push_back(static_cast<unsigned char>(x));
}

double l2_distance(const Texture& a, const Texture& b) {
    double s = 0;
    for (size_t i = 0; i < a.pixels.data.size(); ++i) {
        const double d = a.pixels.data[i] - b.pixels.data[i];
        s += d * d;
    }
    return std::sqrt(s);
}

world::WorldState empty_scene(const world::TaskSpec& task) {
    world::WorldState s = world::init_world(task, 1);
    s.objects.clear();
    s.agent_x = task.arena_side / 2;
    s.agent_y = task.arena_side / 2;
    s.heading = 0.0;
    return s;
}

void place(world::WorldState& s, int class_id, double x, double y, uint64_t seed = 1) {
    s.objects.push_back({class_id, x, y, seed, s.next_object_id++});
}

// Rows whose pixels differ from the reference anywhere.
int differing_row_span(const Image& img, const Image& ref) {
    int lo = img.height, hi = -1;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c)
                if (img.at(x, y, c) != ref.at(x, y, c)) {
                    lo = std::min(lo, y);
                    hi = std::max(hi, y);
                }
    return hi < lo ? 0 : hi - lo + 1;
}

} // namespace

TEST_CASE("gabor: cosine symmetry, center peak, parameter validation") {
    const Texture a = make_gabor(0.0, 8.0, 0.0, 6.0, 32);
    const Texture b = make_gabor(kPi, 8.0, 0.0, 6.0, 32);
    CHECK(a.pixels.data == b.pixels.data); // cos is even: orientation 0 == pi

    // phase 0: the center pixel is the patch maximum
    float mx = 0;
    for (float v : a.pixels.data) mx = std::max(mx, v);
    const int mid = 15; // (32-1)/2 rounds down; center of the even grid
    const float center = std::max(a.pixels.at(mid, mid, 0), a.pixels.at(mid + 1, mid + 1, 0));
    CHECK(center == mx);

    CHECK_THROWS_AS((void)make_gabor(0.0, 0.0, 0.0, 6.0, 32), config_error);
    CHECK_THROWS_AS((void)make_gabor(0.0, 8.0, 0.0, 6.0, 4), config_error);
}

TEST_CASE("the eight task patches are pairwise distinct") {
    const TextureSource src = TextureSource::gabors(32);
    // collect the distinct per-class textures
    std::vector<const Texture*> unique_patches;
    for (int c = 0; c < 10; ++c) {
        const Texture& t = src.texture_for(c, 0);
        bool seen = false;
        for (const auto* u : unique_patches)
            if (u->pixels.data == t.pixels.data) seen = true;
        if (!seen) unique_patches.push_back(&t);
    }
    REQUIRE(unique_patches.size() == 8);
    for (size_t i = 0; i < unique_patches.size(); ++i)
        for (size_t j = i + 1; j < unique_patches.size(); ++j)
            CHECK(l2_distance(*unique_patches[i], *unique_patches[j]) > 0.0);
}

TEST_CASE("texture sharing rules per task") {
    SUBCASE("apples: one texture per sign") {
        const TextureSource src = TextureSource::apples(32);
        for (int a = 5; a < 10; ++a)
            for (int b = 5; b < 10; ++b)
                CHECK(src.texture_for(a, 7).pixels.data == src.texture_for(b, 99).pixels.data);
        for (int a = 0; a < 5; ++a)
            CHECK(src.texture_for(a, 1).pixels.data == src.texture_for(0, 2).pixels.data);
        CHECK(src.texture_for(0, 1).pixels.data != src.texture_for(9, 1).pixels.data);
    }

    SUBCASE("gabors: -5/-10 share, +10/+20 share, rest unique") {
        const TextureSource src = TextureSource::gabors(32);
        CHECK(src.texture_for(3, 1).pixels.data == src.texture_for(4, 2).pixels.data);
        CHECK(src.texture_for(5, 1).pixels.data == src.texture_for(6, 2).pixels.data);
        CHECK(src.texture_for(0, 1).pixels.data != src.texture_for(1, 1).pixels.data);
        CHECK(src.texture_for(7, 1).pixels.data != src.texture_for(8, 1).pixels.data);
        CHECK(src.texture_for(3, 1).pixels.data != src.texture_for(5, 1).pixels.data);
    }

    SUBCASE("unknown class id raises") {
        const TextureSource src = TextureSource::apples(32);
        CHECK_THROWS_AS((void)src.texture_for(10, 0), usage_error);
        CHECK_THROWS_AS((void)src.texture_for(-1, 0), usage_error);
    }
}

TEST_CASE("idx loader: fabricated file decodes, truncation fails closed") {
    const auto dir = tmp_dir();

    SUBCASE("single all-zero image decodes to one black texture") {
        std::vector<unsigned char> imgs;
        push_be32(imgs, 0x00000803);
        push_be32(imgs, 1);
        push_be32(imgs, 28);
        push_be32(imgs, 28);
        imgs.insert(imgs.end(), 28 * 28, 0);
        std::vector<unsigned char> labs;
        push_be32(labs, 0x00000801);
        push_be32(labs, 1);
        labs.push_back(7);
        write_bytes(dir / "imgs.idx", imgs);
        write_bytes(dir / "labs.idx", labs);

        const LabeledPool pool = load_idx((dir / "imgs.idx").string(), (dir / "labs.idx").string());
        CHECK(pool.total() == 1);
        REQUIRE(pool.by_label[7].size() == 1);
        CHECK(pool.by_label[7][0].width == 28);
        for (float v : pool.by_label[7][0].data) CHECK(v == 0.0f);
    }

    SUBCASE("bad magic names the offset") {
        std::vector<unsigned char> imgs;
        push_be32(imgs, 0xdeadbeef);
        push_be32(imgs, 0);
        push_be32(imgs, 28);
        push_be32(imgs, 28);
        write_bytes(dir / "bad.idx", imgs);
        std::vector<unsigned char> labs;
        push_be32(labs, 0x00000801);
        push_be32(labs, 0);
        write_bytes(dir / "labs0.idx", labs);
        CHECK_THROWS_WITH_AS(
            (void)load_idx((dir / "bad.idx").string(), (dir / "labs0.idx").string()),
            doctest::Contains("byte 0"), format_error);
    }

    SUBCASE("truncated image data yields no partial pool") {
        std::vector<unsigned char> imgs;
        push_be32(imgs, 0x00000803);
        push_be32(imgs, 2);
        push_be32(imgs, 28);
        push_be32(imgs, 28);
        imgs.insert(imgs.end(), 28 * 28 + 100, 3); // second image cut short
        std::vector<unsigned char> labs;
        push_be32(labs, 0x00000801);
        push_be32(labs, 2);
        labs.push_back(0);
        labs.push_back(1);
        write_bytes(dir / "trunc.idx", imgs);
        write_bytes(dir / "labs2.idx", labs);
        CHECK_THROWS_AS((void)load_idx((dir / "trunc.idx").string(), (dir / "labs2.idx").string()),
                        format_error);
    }
}

TEST_CASE("cifar loader: fabricated record, empty file, bad length") {
    const auto dir = tmp_dir();

    SUBCASE("single white record under label 3") {
        std::vector<unsigned char> rec(3073, 255);
        rec[0] = 3;
        write_bytes(dir / "one.bin", rec);
        const LabeledPool pool = load_cifar((dir / "one.bin").string());
        CHECK(pool.total() == 1);
        REQUIRE(pool.by_label[3].size() == 1);
        for (float v : pool.by_label[3][0].data) CHECK(v == 1.0f);
    }

    SUBCASE("empty file fails loudly") {
        write_bytes(dir / "empty.bin", {});
        CHECK_THROWS_AS((void)load_cifar((dir / "empty.bin").string()), format_error);
    }

    SUBCASE("length not a multiple of 3073") {
        write_bytes(dir / "odd.bin", std::vector<unsigned char>(3072, 0));
        CHECK_THROWS_AS((void)load_cifar((dir / "odd.bin").string()), format_error);
    }
}

TEST_CASE("pool-backed sources are deterministic in (class, seed)") {
    LabeledPool pool;
    pool.width = 4;
    pool.height = 4;
    for (int lab = 0; lab < 10; ++lab)
        for (int k = 0; k < 3; ++k) {
            Image img(4, 4);
            img.data.assign(img.data.size(), static_cast<float>(lab * 10 + k) / 255.0f);
            pool.by_label[static_cast<size_t>(lab)].push_back(img);
        }
    const TextureSource src = TextureSource::mnist(std::move(pool));
    for (int c = 0; c < 10; ++c) {
        const Texture& a = src.texture_for(c, 12345);
        const Texture& b = src.texture_for(c, 12345);
        CHECK(a.pixels.data == b.pixels.data);
        CHECK(src.pool_size(c) == 3);
    }
    // label->class mapping: label 0 is the mildest poison (class 4)
    CHECK(class_for_label(0) == 4);
    CHECK(class_for_label(4) == 0);
    CHECK(class_for_label(5) == 5);
    CHECK(class_for_label(9) == 9);
    for (int c = 0; c < 10; ++c) CHECK(class_for_label(label_for_class(c)) == c);
}

TEST_CASE("render: empty arena is exactly the sky/ground background") {
    const world::TaskSpec task = world::TaskSpec::defaults();
    const TextureSource src = TextureSource::apples(32);
    world::WorldState s = empty_scene(task);
    const Image img = render(s, task, src, 64, 48);
    CHECK(img.width == 64);
    CHECK(img.height == 48);
    // upper half: flat sky
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 64; ++x) {
            CHECK(img.at(x, y, 2) > img.at(x, y, 0)); // blue dominant
            CHECK(img.at(x, y, 0) == img.at(0, 0, 0));
        }
    // lower half: green dominant grass
    for (int y = 24; y < 48; ++y)
        for (int x = 0; x < 64; ++x) CHECK(img.at(x, y, 1) > img.at(x, y, 2));
    for (float v : img.data) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("render: sprite height halves when distance doubles") {
    const world::TaskSpec task = world::TaskSpec::defaults();
    const TextureSource src = TextureSource::apples(64);
    world::WorldState s = empty_scene(task);
    const Image ref = render(s, task, src, 160, 120);

    world::WorldState near = empty_scene(task);
    place(near, 9, near.agent_x + 2.5, near.agent_y);
    const int h_near = differing_row_span(render(near, task, src, 160, 120), ref);

    world::WorldState far = empty_scene(task);
    place(far, 9, far.agent_x + 5.0, far.agent_y);
    const int h_far = differing_row_span(render(far, task, src, 160, 120), ref);

    REQUIRE(h_near > 10);
    REQUIRE(h_far > 5);
    const double ratio = static_cast<double>(h_far) / h_near;
    CHECK(ratio > 0.42);
    CHECK(ratio < 0.58);
}

TEST_CASE("render: occlusion draws only the nearer object on a shared ray") {
    const world::TaskSpec task = world::TaskSpec::defaults();
    const TextureSource src = TextureSource::apples(32);
    world::WorldState s = empty_scene(task);
    const Image ref = render(s, task, src, 64, 48);

    // far poison (blue) exactly behind near nourishment (red)
    place(s, 0, s.agent_x + 6.0, s.agent_y); // blue, id 0
    place(s, 9, s.agent_x + 3.0, s.agent_y); // red, id 1
    const Image img = render(s, task, src, 64, 48);

    int changed = 0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            bool diff = false;
            for (int c = 0; c < 3; ++c)
                if (img.at(x, y, c) != ref.at(x, y, c)) diff = true;
            if (!diff) continue;
            ++changed;
            // every visible sprite pixel must be the red apple, never the blue one
            CHECK(img.at(x, y, 0) > img.at(x, y, 2));
        }
    CHECK(changed > 4);
}

TEST_CASE("render is a pure function and hashes are stable within a run") {
    const world::TaskSpec task = world::TaskSpec::defaults();
    const TextureSource src = TextureSource::gabors(32);
    world::WorldState s = world::init_world(task, 4242);
    const Image a = render(s, task, src, 64, 48);
    const Image b = render(s, task, src, 64, 48);
    CHECK(a.data == b.data);
    CHECK(image_hash(a) == image_hash(b));
    // state untouched by rendering
    const std::string before = s.serialize();
    (void)render(s, task, src, 64, 48);
    CHECK(s.serialize() == before);
}

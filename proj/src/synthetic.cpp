#include "pcd/synthetic.hpp"

#include <array>
#include <cmath>
#include <random>

#include "pcd/image_io.hpp"

namespace pcd {

namespace {

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Single-octave value noise: random lattice values, smoothstep-interpolated.
struct ValueNoise {
    int cell;
    int gw, gh;
    std::vector<double> grid;

    ValueNoise(std::mt19937_64& rng, int size, int cell_size) : cell(cell_size) {
        gw = size / cell + 2;
        gh = size / cell + 2;
        grid.resize(static_cast<std::size_t>(gw) * gh);
        for (auto& v : grid) v = unit(rng);
    }

    double sample(double y, double x) const {
        const double gy = y / cell, gx = x / cell;
        const int y0 = static_cast<int>(gy), x0 = static_cast<int>(gx);
        const double ty = smoothstep(gy - y0), tx = smoothstep(gx - x0);
        const auto at = [&](int yy, int xx) { return grid[static_cast<std::size_t>(yy) * gw + xx]; };
        const double top = at(y0, x0) * (1 - tx) + at(y0, x0 + 1) * tx;
        const double bot = at(y0 + 1, x0) * (1 - tx) + at(y0 + 1, x0 + 1) * tx;
        return top * (1 - ty) + bot * ty;
    }
};

struct Texture {
    ValueNoise coarse, fine;
    std::array<std::uint8_t, 3> lo, hi;
    int brightness;

    Texture(std::mt19937_64& rng, int size, std::array<std::uint8_t, 3> lo_c, std::array<std::uint8_t, 3> hi_c,
            int bright)
        : coarse(rng, size, std::max(4, size / 6)), fine(rng, size, std::max(2, size / 20)), lo(lo_c), hi(hi_c),
          brightness(bright) {}

    void shade(int y, int x, std::uint8_t* out) const {
        const double n = 0.65 * coarse.sample(y, x) + 0.35 * fine.sample(y, x);
        for (int c = 0; c < 3; ++c) {
            const double v = lo[c] + (hi[c] - lo[c]) * n + brightness;
            out[c] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
        }
    }
};

struct CategoryDef {
    const char* name;
    StrategyAttr strategy;
};

constexpr std::array<CategoryDef, 7> kCategories = {{
    {"pebble_masquerade", StrategyAttr::MQ},
    {"stone_succulent", StrategyAttr::MQ},
    {"moss_carpet", StrategyAttr::BM},
    {"bark_lichen", StrategyAttr::BM},
    {"dune_grass", StrategyAttr::BM},
    {"mottled_bromeliad", StrategyAttr::DC},
    {"sand_crusted_rosette", StrategyAttr::DR},
}};

constexpr std::array<std::array<std::array<std::uint8_t, 3>, 2>, 4> kPalettes = {{
    {{{34, 62, 24}, {116, 142, 66}}},   // mossy greens
    {{{72, 58, 40}, {158, 134, 96}}},   // bark browns
    {{{96, 92, 80}, {180, 176, 160}}},  // stones
    {{{140, 120, 84}, {214, 194, 150}}} // sand
}};

// Smooth closed blob: radial wobble around (cy,cx).
struct Blob {
    double cy, cx, r0;
    std::array<double, 3> amp, phase;
    static constexpr std::array<int, 3> freq = {2, 3, 5};

    double radius_at(double theta) const {
        double r = 1.0;
        for (int i = 0; i < 3; ++i) r += amp[i] * std::sin(freq[i] * theta + phase[i]);
        return r0 * r;
    }
};

std::vector<std::uint8_t> rasterize(const Blob& blob, int size) {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(size) * size, 0);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double dy = y - blob.cy, dx = x - blob.cx;
            const double d = std::sqrt(dy * dy + dx * dx);
            const double theta = std::atan2(dy, dx);
            if (d <= blob.radius_at(theta)) mask[static_cast<std::size_t>(y) * size + x] = 1;
        }
    return mask;
}

} // namespace

Difficulty difficulty_from_string(const std::string& s) {
    if (s == "easy") return Difficulty::easy;
    if (s == "hard") return Difficulty::hard;
    throw std::invalid_argument("unknown difficulty: " + s + " (expected easy|hard)");
}

DatasetManifest generate_synthetic(const std::filesystem::path& root, std::uint64_t seed, int count,
                                   int size, Difficulty difficulty) {
    if (count < 1) throw std::invalid_argument("generate_synthetic: count must be >= 1");
    if (size < 32) throw std::invalid_argument("generate_synthetic: size must be >= 32");

    std::vector<std::string> categories;
    for (const auto& c : kCategories) categories.emplace_back(c.name);

    std::vector<SampleRecord> records;
    for (int index = 0; index < count; ++index) {
        std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(index) + 1);

        char id_buf[32];
        std::snprintf(id_buf, sizeof(id_buf), "syn_%06d", index);
        const std::string id = id_buf;

        const auto& cat = kCategories[rng() % kCategories.size()];
        const std::size_t bg_idx = rng() % kPalettes.size();
        const auto& bg_palette = kPalettes[bg_idx];
        Texture background(rng, size, bg_palette[0], bg_palette[1], 0);

        // hard: same palette and octave structure, independent phase; easy: a
        // different palette plus a brightness shift
        Texture foreground = [&] {
            if (difficulty == Difficulty::hard)
                return Texture(rng, size, bg_palette[0], bg_palette[1], 0);
            const auto& other = kPalettes[(bg_idx + 1 + rng() % (kPalettes.size() - 1)) % kPalettes.size()];
            const int shift = unit(rng) < 0.5 ? -55 : 55;
            return Texture(rng, size, other[0], other[1], shift);
        }();

        const int n_instances = 1 + static_cast<int>(rng() % 3);
        const bool big = n_instances == 1 && unit(rng) < 0.15;

        std::vector<std::vector<std::uint8_t>> instances;
        for (int k = 0; k < n_instances; ++k) {
            Blob blob;
            const bool near_border = unit(rng) < 0.25;
            const double lo = near_border ? 0.02 : 0.2, hi = near_border ? 0.12 : 0.8;
            blob.cy = std::clamp((lo + unit(rng) * (hi - lo)) * size, 1.0, size - 2.0);
            blob.cx = std::clamp((0.2 + unit(rng) * 0.6) * size, 1.0, size - 2.0);
            if (unit(rng) < 0.5) std::swap(blob.cy, blob.cx);
            const double frac = big ? 0.42 + unit(rng) * 0.13
                                    : (0.10 + unit(rng) * 0.18) / std::sqrt(static_cast<double>(n_instances));
            blob.r0 = std::max(3.5, frac * size);
            for (int i = 0; i < 3; ++i) {
                blob.amp[i] = 0.20 * unit(rng) / (i + 1);
                blob.phase[i] = 2.0 * M_PI * unit(rng);
            }
            instances.push_back(rasterize(blob, size));
        }

        std::vector<std::uint8_t> object(static_cast<std::size_t>(size) * size, 0);
        for (const auto& inst : instances)
            for (std::size_t i = 0; i < object.size(); ++i) object[i] |= inst[i];

        RgbImage image;
        image.height = size;
        image.width = size;
        image.pixels.resize(static_cast<std::size_t>(size) * size * 3);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                std::uint8_t px[3];
                if (object[static_cast<std::size_t>(y) * size + x])
                    foreground.shade(y, x, px);
                else
                    background.shade(y, x, px);
                for (int c = 0; c < 3; ++c) image.at(y, x, c) = px[c];
            }

        SampleRecord rec;
        rec.id = id;
        rec.category = cat.name;
        rec.membership = index % 4 == 3 ? Split::test : Split::train;
        rec.attributes.strategy = {cat.strategy};
        const BinaryMask object_mask(size, size, object);
        rec.attributes.vision = derive_vision_attributes(object_mask, instances.size());
        rec.image_path = root / "Image" / (id + ".jpg");
        rec.object_mask_path = root / "GT" / (id + ".png");

        save_image_jpg(rec.image_path, image);
        save_mask_png(rec.object_mask_path, object_mask);
        for (std::size_t k = 0; k < instances.size(); ++k) {
            const BinaryMask inst(size, size, instances[k]);
            int min_x = size, min_y = size, max_x = -1, max_y = -1;
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x)
                    if (inst.at(y, x)) {
                        min_x = std::min(min_x, x);
                        min_y = std::min(min_y, y);
                        max_x = std::max(max_x, x);
                        max_y = std::max(max_y, y);
                    }
            rec.boxes.push_back(BoundingBox{min_x, min_y, max_x + 1, max_y + 1});
            const auto inst_path = root / "Instance" / (id + "_" + std::to_string(k + 1) + ".png");
            save_mask_png(inst_path, inst);
            rec.instance_mask_paths.push_back(inst_path);
        }
        records.push_back(std::move(rec));
    }

    save_annotations(root, categories, records);
    return load_manifest(root, Split::full);
}

} // namespace pcd

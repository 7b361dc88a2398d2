#include "pcd/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>

#include "pcd/image_io.hpp"

namespace pcd {

using nlohmann::json;

Split split_from_string(const std::string& s) {
    if (s == "full") return Split::full;
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    throw std::invalid_argument("unknown split: " + s + " (expected full|train|test)");
}

const char* to_string(Split s) {
    switch (s) {
    case Split::full: return "full";
    case Split::train: return "train";
    case Split::test: return "test";
    }
    return "?";
}

namespace {

constexpr int kSchemaVersion = 1;

void validate_record(const SampleRecord& rec) {
    rec.attributes.validate();
    if (rec.instance_mask_paths.empty())
        throw std::invalid_argument("record " + rec.id + " has no instance masks");
    if (rec.boxes.size() != rec.instance_mask_paths.size())
        throw std::invalid_argument("record " + rec.id + " has " + std::to_string(rec.boxes.size()) +
                                    " boxes for " + std::to_string(rec.instance_mask_paths.size()) +
                                    " instances");
    if (!std::filesystem::exists(rec.image_path))
        throw std::invalid_argument("record " + rec.id + ": missing file: " + rec.image_path.string());

    const BinaryMask object = load_mask_png(rec.object_mask_path);
    std::vector<std::uint8_t> unioned(object.size(), 0);
    for (std::size_t k = 0; k < rec.instance_mask_paths.size(); ++k) {
        const BinaryMask inst = load_mask_png(rec.instance_mask_paths[k]);
        if (inst.height() != object.height() || inst.width() != object.width())
            throw std::invalid_argument("record " + rec.id + ": instance mask " + std::to_string(k) +
                                        " shape differs from the object mask");
        if (inst.foreground_count() == 0)
            throw std::invalid_argument("record " + rec.id + ": instance mask " + std::to_string(k) +
                                        " is empty");
        int min_x = inst.width(), min_y = inst.height(), max_x = -1, max_y = -1;
        for (int y = 0; y < inst.height(); ++y)
            for (int x = 0; x < inst.width(); ++x)
                if (inst.at(y, x)) {
                    unioned[static_cast<std::size_t>(y) * inst.width() + x] = 1;
                    min_x = std::min(min_x, x);
                    min_y = std::min(min_y, y);
                    max_x = std::max(max_x, x);
                    max_y = std::max(max_y, y);
                }
        const BoundingBox tight{min_x, min_y, max_x + 1, max_y + 1};
        rec.boxes[k].validate(inst.width(), inst.height());
        if (!(rec.boxes[k] == tight))
            throw std::invalid_argument("record " + rec.id + ": box " + std::to_string(k) +
                                        " does not tightly bound its instance mask");
    }
    if (unioned != object.values())
        throw std::invalid_argument("record " + rec.id +
                                    ": union of instance masks differs from the object mask");
}

json load_annotations_json(const std::filesystem::path& root) {
    const auto path = root / "annotations.json";
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("missing file: " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("could not parse " + path.string() + ": " + e.what());
    }
    if (!doc.contains("schema_version") || doc["schema_version"].get<int>() != kSchemaVersion)
        throw std::invalid_argument(path.string() + ": unsupported schema_version");
    return doc;
}

} // namespace

DatasetManifest load_manifest(const std::filesystem::path& root, Split split) {
    const json doc = load_annotations_json(root);

    DatasetManifest manifest;
    manifest.root = root;
    manifest.split = split;
    manifest.categories = doc.at("categories").get<std::vector<std::string>>();
    const std::set<std::string> known(manifest.categories.begin(), manifest.categories.end());

    std::set<std::string> seen_ids;
    for (const auto& item : doc.at("samples")) {
        SampleRecord rec;
        rec.id = item.at("id").get<std::string>();
        if (!seen_ids.insert(rec.id).second)
            throw std::invalid_argument("duplicate sample id: " + rec.id);
        rec.category = item.at("category").get<std::string>();
        if (!known.count(rec.category))
            throw std::invalid_argument("record " + rec.id + ": unknown category: " + rec.category);
        rec.membership = split_from_string(item.at("split").get<std::string>());
        if (rec.membership == Split::full)
            throw std::invalid_argument("record " + rec.id + ": split must be train or test");
        for (const auto& code : item.at("strategy").get<std::vector<std::string>>())
            rec.attributes.strategy.insert(strategy_from_code(code));
        for (const auto& code : item.at("vision").get<std::vector<std::string>>())
            rec.attributes.vision.insert(vision_from_code(code));
        for (const auto& b : item.at("boxes")) {
            if (!b.is_array() || b.size() != 4)
                throw std::invalid_argument("record " + rec.id + ": box must be [x_min,y_min,x_max,y_max]");
            rec.boxes.push_back(BoundingBox{b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()});
        }
        rec.image_path = root / "Image" / (rec.id + ".jpg");
        rec.object_mask_path = root / "GT" / (rec.id + ".png");
        for (std::size_t k = 1; k <= rec.boxes.size(); ++k)
            rec.instance_mask_paths.push_back(root / "Instance" / (rec.id + "_" + std::to_string(k) + ".png"));

        if (split == Split::full || rec.membership == split) {
            validate_record(rec);
            manifest.records.push_back(std::move(rec));
        }
    }

    std::sort(manifest.records.begin(), manifest.records.end(),
              [](const SampleRecord& a, const SampleRecord& b) { return a.id < b.id; });
    for (const auto& rec : manifest.records)
        manifest.category_index[rec.category].push_back(rec.id);
    return manifest;
}

void save_annotations(const std::filesystem::path& root, const std::vector<std::string>& categories,
                      const std::vector<SampleRecord>& records) {
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["categories"] = categories;
    json samples = json::array();
    for (const auto& rec : records) {
        json item;
        item["id"] = rec.id;
        item["category"] = rec.category;
        item["split"] = to_string(rec.membership);
        std::vector<std::string> strategy, vision;
        for (auto s : rec.attributes.strategy) strategy.emplace_back(to_code(s));
        for (auto v : rec.attributes.vision) vision.emplace_back(to_code(v));
        item["strategy"] = strategy;
        item["vision"] = vision;
        json boxes = json::array();
        for (const auto& b : rec.boxes) boxes.push_back({b.x_min, b.y_min, b.x_max, b.y_max});
        item["boxes"] = boxes;
        samples.push_back(std::move(item));
    }
    doc["samples"] = std::move(samples);

    std::filesystem::create_directories(root);
    std::ofstream out(root / "annotations.json");
    out << doc.dump(2) << "\n";
    if (!out)
        throw std::runtime_error("could not write " + (root / "annotations.json").string());
}

std::string aspect_bucket(int width, int height) {
    const double r = static_cast<double>(width) / static_cast<double>(height);
    if (r > 0.3 && r <= 0.7) return "0.3<w/h<=0.7";
    if (r > 0.7 && r <= 1.1) return "0.7<w/h<=1.1";
    if (r > 1.1 && r <= 1.5) return "1.1<w/h<=1.5";
    if (r > 1.5 && r <= 1.9) return "1.5<w/h<=1.9";
    return "other";
}

DatasetStats compute_stats(const DatasetManifest& manifest) {
    if (manifest.records.empty())
        throw std::invalid_argument("compute_stats: empty manifest");

    DatasetStats stats;
    std::size_t strategy_tags = 0;
    std::map<std::string, std::size_t> strategy_counts;
    for (const auto& rec : manifest.records) {
        ++stats.category_histogram[rec.category];
        for (auto s : rec.attributes.strategy) {
            ++strategy_counts[to_code(s)];
            ++strategy_tags;
        }
        for (auto v : rec.attributes.vision) ++stats.vision_attribute_counts[to_code(v)];

        std::vector<int> present;
        for (std::size_t i = 0; i < kVisionOrder.size(); ++i)
            if (rec.attributes.vision.count(vision_from_code(kVisionOrder[i]))) present.push_back(int(i));
        for (int a : present)
            for (int b : present) ++stats.attribute_cooccurrence[a][b];

        const auto [w, h] = image_size(rec.object_mask_path);
        stats.resolution_points.push_back({w, h, aspect_bucket(w, h)});
    }
    for (const auto& [code, count] : strategy_counts)
        stats.strategy_distribution[code] = static_cast<double>(count) / static_cast<double>(strategy_tags);
    return stats;
}

void write_stats_csv(const DatasetStats& stats, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream out(out_dir / "category_histogram.csv");
        out << "category,count\n";
        for (const auto& [cat, n] : stats.category_histogram) out << cat << "," << n << "\n";
    }
    {
        std::ofstream out(out_dir / "strategy_distribution.csv");
        out << "strategy,fraction\n";
        for (const auto& [code, f] : stats.strategy_distribution) out << code << "," << f << "\n";
    }
    {
        std::ofstream out(out_dir / "attribute_counts.csv");
        out << "attribute,count\n";
        for (const auto& [code, n] : stats.vision_attribute_counts) out << code << "," << n << "\n";
    }
    {
        std::ofstream out(out_dir / "attribute_cooccurrence.csv");
        out << "attribute";
        for (const char* code : kVisionOrder) out << "," << code;
        out << "\n";
        for (std::size_t i = 0; i < kVisionOrder.size(); ++i) {
            out << kVisionOrder[i];
            for (std::size_t j = 0; j < kVisionOrder.size(); ++j) out << "," << stats.attribute_cooccurrence[i][j];
            out << "\n";
        }
    }
    {
        std::ofstream out(out_dir / "resolution_scatter.csv");
        out << "width,height,aspect_bucket\n";
        for (const auto& p : stats.resolution_points)
            out << p.width << "," << p.height << "," << p.aspect_bucket << "\n";
    }
}

std::set<VisionAttr> derive_vision_attributes(const BinaryMask& object_mask, std::size_t instance_count) {
    std::set<VisionAttr> attrs;
    if (instance_count > 1) attrs.insert(VisionAttr::MO);
    const double ratio =
        static_cast<double>(object_mask.foreground_count()) / static_cast<double>(object_mask.size());
    if (ratio >= 0.5) attrs.insert(VisionAttr::BO);
    if (ratio <= 0.1) attrs.insert(VisionAttr::SO);
    bool touches = false;
    const int h = object_mask.height(), w = object_mask.width();
    for (int x = 0; x < w && !touches; ++x)
        touches = object_mask.at(0, x) || object_mask.at(h - 1, x);
    for (int y = 0; y < h && !touches; ++y)
        touches = object_mask.at(y, 0) || object_mask.at(y, w - 1);
    if (touches) attrs.insert(VisionAttr::OV);
    return attrs;
}

} // namespace pcd

#ifndef PCD_DATASET_HPP
#define PCD_DATASET_HPP

#include <array>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pcd/mask.hpp"

namespace pcd {

enum class Split { full, train, test };

Split split_from_string(const std::string& s);
const char* to_string(Split s);

/// One dataset item. Paths are absolute (root-prefixed) so records from the
/// same root compare equal across save/load round trips.
struct SampleRecord {
    std::string id;
    std::filesystem::path image_path;
    std::string category;
    AttributeSet attributes;
    std::vector<BoundingBox> boxes;
    std::filesystem::path object_mask_path;
    std::vector<std::filesystem::path> instance_mask_paths;
    Split membership = Split::train; // train/test assignment from the annotations

    bool operator==(const SampleRecord&) const = default;
};

struct DatasetManifest {
    std::filesystem::path root;
    Split split = Split::full;
    std::vector<std::string> categories; // declared vocabulary
    std::vector<SampleRecord> records;   // ordered by id
    std::map<std::string, std::vector<std::string>> category_index;
};

/// Reads `annotations.json` under root, validates every record (mask/box
/// consistency, attribute codes, categories), and returns the requested split.
DatasetManifest load_manifest(const std::filesystem::path& root, Split split);

/// Writes `annotations.json` for the given records (masks/images must already
/// be on disk). Reloading yields an equal manifest.
void save_annotations(const std::filesystem::path& root, const std::vector<std::string>& categories,
                      const std::vector<SampleRecord>& records);

struct ResolutionPoint {
    int width = 0;
    int height = 0;
    std::string aspect_bucket;
};

struct DatasetStats {
    std::map<std::string, std::size_t> category_histogram;
    std::map<std::string, double> strategy_distribution;       // fractions over strategy tags, sum to 1
    std::map<std::string, std::size_t> vision_attribute_counts;
    /// Symmetric over the six vision codes (MO,SC,OC,BO,SO,OV order);
    /// diagonal holds the attribute's own count.
    std::array<std::array<std::size_t, 6>, 6> attribute_cooccurrence{};
    std::vector<ResolutionPoint> resolution_points;
};

DatasetStats compute_stats(const DatasetManifest& manifest);

/// Fig. 5-style aspect buckets over w/h.
std::string aspect_bucket(int width, int height);

/// One CSV per figure: category histogram, strategy distribution, attribute
/// counts, co-occurrence matrix, resolution scatter.
void write_stats_csv(const DatasetStats& stats, const std::filesystem::path& out_dir);

/// Rule-based vision attributes of a mask: MO (instances > 1),
/// BO (area ratio >= 0.5), SO (ratio <= 0.1), OV (mask touches the border).
std::set<VisionAttr> derive_vision_attributes(const BinaryMask& object_mask, std::size_t instance_count);

inline const std::array<const char*, 6> kVisionOrder = {"MO", "SC", "OC", "BO", "SO", "OV"};

} // namespace pcd

#endif

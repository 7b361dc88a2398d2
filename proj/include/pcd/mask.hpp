#ifndef PCD_MASK_HPP
#define PCD_MASK_HPP

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcd {

/// Continuous-valued prediction map, per-pixel confidence in [0,1].
/// Row-major (y,x), origin at top-left. Immutable after construction.
class ScoreMap {
public:
    ScoreMap(int height, int width, std::vector<double> values);

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return values_.size(); }
    double at(int y, int x) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }
    const std::vector<double>& values() const { return values_; }

    double mean() const;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<double> values_;
};

/// Ground-truth mask, values strictly {0,1}. Same layout contract as ScoreMap.
class BinaryMask {
public:
    BinaryMask(int height, int width, std::vector<std::uint8_t> values);

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return values_.size(); }
    std::uint8_t at(int y, int x) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }
    const std::vector<std::uint8_t>& values() const { return values_; }

    std::size_t foreground_count() const;
    bool operator==(const BinaryMask& other) const = default;

    /// View as a ScoreMap (values 0.0/1.0), e.g. for GT-as-prediction self tests.
    ScoreMap to_score_map() const;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<std::uint8_t> values_;
};

/// Axis-aligned box, inclusive min / exclusive max pixel coordinates.
struct BoundingBox {
    int x_min = 0;
    int y_min = 0;
    int x_max = 0;
    int y_max = 0;

    bool operator==(const BoundingBox&) const = default;
    void validate(int image_width, int image_height) const;
};

enum class StrategyAttr { BM, DC, MQ, DR };
enum class VisionAttr { MO, SC, OC, BO, SO, OV };

const char* to_code(StrategyAttr a);
const char* to_code(VisionAttr a);
StrategyAttr strategy_from_code(const std::string& code);
VisionAttr vision_from_code(const std::string& code);

/// Per-image attribute annotation: camouflage-strategy codes plus vision-challenge codes.
struct AttributeSet {
    std::set<StrategyAttr> strategy;
    std::set<VisionAttr> vision;

    bool operator==(const AttributeSet&) const = default;
    /// Strategy subset must be non-empty for every annotated sample.
    void validate() const;
    bool has(const std::string& code) const;
};

/// Per-image binarization threshold: twice the prediction mean, capped at 1.
double adaptive_threshold(const ScoreMap& map);

/// Pixel -> 1 iff value > t (strict), so threshold 1.0 yields an empty mask.
BinaryMask binarize(const ScoreMap& map, double t);

/// Bilinear resize with half-pixel centers and edge clamp; output clamped to [0,1].
ScoreMap resize_bilinear(const ScoreMap& map, int height, int width);

/// Nearest-neighbor resize; the only mode defined for binary masks.
BinaryMask resize_nearest(const BinaryMask& mask, int height, int width);

enum class ResizeMode { bilinear, nearest };

/// Mode-checked dispatcher matching the CLI/bindings surface.
ScoreMap resize_map(const ScoreMap& map, int height, int width, ResizeMode mode);
BinaryMask resize_map(const BinaryMask& mask, int height, int width, ResizeMode mode);

} // namespace pcd

#endif

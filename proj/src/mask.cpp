#include "pcd/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pcd {

namespace {

void check_shape(int height, int width, std::size_t n) {
    if (height < 1 || width < 1)
        throw std::invalid_argument("map shape must be at least 1x1, got " + std::to_string(height) +
                                    "x" + std::to_string(width));
    if (n != static_cast<std::size_t>(height) * static_cast<std::size_t>(width))
        throw std::invalid_argument("value buffer size does not match shape");
}

} // namespace

ScoreMap::ScoreMap(int height, int width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
    check_shape(height_, width_, values_.size());
    for (double v : values_) {
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument("ScoreMap value out of [0,1]: " + std::to_string(v));
    }
}

double ScoreMap::mean() const {
    double s = std::accumulate(values_.begin(), values_.end(), 0.0);
    return s / static_cast<double>(values_.size());
}

BinaryMask::BinaryMask(int height, int width, std::vector<std::uint8_t> values)
    : height_(height), width_(width), values_(std::move(values)) {
    check_shape(height_, width_, values_.size());
    for (std::uint8_t v : values_) {
        if (v > 1)
            throw std::invalid_argument("BinaryMask value not in {0,1}: " + std::to_string(int(v)));
    }
}

std::size_t BinaryMask::foreground_count() const {
    return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::uint8_t{1}));
}

ScoreMap BinaryMask::to_score_map() const {
    std::vector<double> v(values_.begin(), values_.end());
    return ScoreMap(height_, width_, std::move(v));
}

void BoundingBox::validate(int image_width, int image_height) const {
    if (!(0 <= x_min && x_min < x_max && x_max <= image_width) ||
        !(0 <= y_min && y_min < y_max && y_max <= image_height))
        throw std::invalid_argument("bounding box [" + std::to_string(x_min) + "," + std::to_string(y_min) +
                                    "," + std::to_string(x_max) + "," + std::to_string(y_max) +
                                    ") out of bounds for " + std::to_string(image_width) + "x" +
                                    std::to_string(image_height));
}

const char* to_code(StrategyAttr a) {
    switch (a) {
    case StrategyAttr::BM: return "BM";
    case StrategyAttr::DC: return "DC";
    case StrategyAttr::MQ: return "MQ";
    case StrategyAttr::DR: return "DR";
    }
    return "?";
}

const char* to_code(VisionAttr a) {
    switch (a) {
    case VisionAttr::MO: return "MO";
    case VisionAttr::SC: return "SC";
    case VisionAttr::OC: return "OC";
    case VisionAttr::BO: return "BO";
    case VisionAttr::SO: return "SO";
    case VisionAttr::OV: return "OV";
    }
    return "?";
}

StrategyAttr strategy_from_code(const std::string& code) {
    if (code == "BM") return StrategyAttr::BM;
    if (code == "DC") return StrategyAttr::DC;
    if (code == "MQ") return StrategyAttr::MQ;
    if (code == "DR") return StrategyAttr::DR;
    throw std::invalid_argument("unknown strategy attribute code: " + code);
}

VisionAttr vision_from_code(const std::string& code) {
    if (code == "MO") return VisionAttr::MO;
    if (code == "SC") return VisionAttr::SC;
    if (code == "OC") return VisionAttr::OC;
    if (code == "BO") return VisionAttr::BO;
    if (code == "SO") return VisionAttr::SO;
    if (code == "OV") return VisionAttr::OV;
    throw std::invalid_argument("unknown vision attribute code: " + code);
}

void AttributeSet::validate() const {
    if (strategy.empty())
        throw std::invalid_argument("attribute set has no camouflage-strategy code");
}

bool AttributeSet::has(const std::string& code) const {
    for (auto s : strategy)
        if (code == to_code(s)) return true;
    for (auto v : vision)
        if (code == to_code(v)) return true;
    return false;
}

double adaptive_threshold(const ScoreMap& map) {
    return std::min(2.0 * map.mean(), 1.0);
}

BinaryMask binarize(const ScoreMap& map, double t) {
    if (!(t >= 0.0 && t <= 1.0))
        throw std::invalid_argument("binarize threshold out of [0,1]: " + std::to_string(t));
    std::vector<std::uint8_t> out(map.size());
    const auto& v = map.values();
    for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = v[i] > t ? 1 : 0;
    return BinaryMask(map.height(), map.width(), std::move(out));
}

namespace {

// Half-pixel-center source coordinate for a destination index.
inline double src_coord(int dst, int src_size, int dst_size) {
    return (dst + 0.5) * static_cast<double>(src_size) / static_cast<double>(dst_size) - 0.5;
}

} // namespace

ScoreMap resize_bilinear(const ScoreMap& map, int height, int width) {
    if (height < 1 || width < 1)
        throw std::invalid_argument("resize target must be at least 1x1");
    if (height == map.height() && width == map.width()) return map;

    std::vector<double> out(static_cast<std::size_t>(height) * width);
    for (int y = 0; y < height; ++y) {
        double sy = src_coord(y, map.height(), height);
        int y0 = static_cast<int>(std::floor(sy));
        double ty = sy - y0;
        int ya = std::clamp(y0, 0, map.height() - 1);
        int yb = std::clamp(y0 + 1, 0, map.height() - 1);
        for (int x = 0; x < width; ++x) {
            double sx = src_coord(x, map.width(), width);
            int x0 = static_cast<int>(std::floor(sx));
            double tx = sx - x0;
            int xa = std::clamp(x0, 0, map.width() - 1);
            int xb = std::clamp(x0 + 1, 0, map.width() - 1);
            double top = map.at(ya, xa) * (1.0 - tx) + map.at(ya, xb) * tx;
            double bot = map.at(yb, xa) * (1.0 - tx) + map.at(yb, xb) * tx;
            double v = top * (1.0 - ty) + bot * ty;
            out[static_cast<std::size_t>(y) * width + x] = std::clamp(v, 0.0, 1.0);
        }
    }
    return ScoreMap(height, width, std::move(out));
}

BinaryMask resize_nearest(const BinaryMask& mask, int height, int width) {
    if (height < 1 || width < 1)
        throw std::invalid_argument("resize target must be at least 1x1");
    if (height == mask.height() && width == mask.width()) return mask;

    std::vector<std::uint8_t> out(static_cast<std::size_t>(height) * width);
    for (int y = 0; y < height; ++y) {
        int sy = std::clamp(static_cast<int>(std::floor((y + 0.5) * mask.height() / static_cast<double>(height))),
                            0, mask.height() - 1);
        for (int x = 0; x < width; ++x) {
            int sx = std::clamp(static_cast<int>(std::floor((x + 0.5) * mask.width() / static_cast<double>(width))),
                                0, mask.width() - 1);
            out[static_cast<std::size_t>(y) * width + x] = mask.at(sy, sx);
        }
    }
    return BinaryMask(height, width, std::move(out));
}

ScoreMap resize_map(const ScoreMap& map, int height, int width, ResizeMode mode) {
    if (mode == ResizeMode::bilinear) return resize_bilinear(map, height, width);
    // Nearest on a ScoreMap keeps exact values; reuse the mask kernel via rounding is wrong,
    // so sample directly.
    if (height < 1 || width < 1)
        throw std::invalid_argument("resize target must be at least 1x1");
    std::vector<double> out(static_cast<std::size_t>(height) * width);
    for (int y = 0; y < height; ++y) {
        int sy = std::clamp(static_cast<int>(std::floor((y + 0.5) * map.height() / static_cast<double>(height))),
                            0, map.height() - 1);
        for (int x = 0; x < width; ++x) {
            int sx = std::clamp(static_cast<int>(std::floor((x + 0.5) * map.width() / static_cast<double>(width))),
                                0, map.width() - 1);
            out[static_cast<std::size_t>(y) * width + x] = map.at(sy, sx);
        }
    }
    return ScoreMap(height, width, std::move(out));
}

BinaryMask resize_map(const BinaryMask& mask, int height, int width, ResizeMode mode) {
    if (mode == ResizeMode::bilinear)
        throw std::invalid_argument("bilinear resize is not defined for binary masks; use nearest");
    return resize_nearest(mask, height, width);
}

} // namespace pcd

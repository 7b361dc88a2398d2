#ifndef PCD_IMAGE_IO_HPP
#define PCD_IMAGE_IO_HPP

#include <filesystem>
#include <utility>

#include "pcd/mask.hpp"

namespace pcd {

/// Interleaved 8-bit RGB, row-major from the top-left.
struct RgbImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pixels; // height*width*3

    std::uint8_t& at(int y, int x, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    std::uint8_t at(int y, int x, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
};

/// Loads a {0,255} PNG and normalizes to {0,1}; any other pixel value is an
/// error (guards against anti-aliased GT).
BinaryMask load_mask_png(const std::filesystem::path& path);
void save_mask_png(const std::filesystem::path& path, const BinaryMask& mask);

/// 8-bit grayscale prediction map, value/255.
ScoreMap load_score_map_png(const std::filesystem::path& path);
void save_score_map_png(const std::filesystem::path& path, const ScoreMap& map);

RgbImage load_image(const std::filesystem::path& path);
void save_image_jpg(const std::filesystem::path& path, const RgbImage& image);

/// (width, height) without keeping the pixels around.
std::pair<int, int> image_size(const std::filesystem::path& path);

} // namespace pcd

#endif

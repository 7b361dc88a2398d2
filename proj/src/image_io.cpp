#include "pcd/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace pcd {

namespace {

cv::Mat read_or_throw(const std::filesystem::path& path, int flags) {
    if (!std::filesystem::exists(path))
        throw std::invalid_argument("missing file: " + path.string());
    cv::Mat m = cv::imread(path.string(), flags);
    if (m.empty())
        throw std::invalid_argument("could not decode image: " + path.string());
    return m;
}

} // namespace

BinaryMask load_mask_png(const std::filesystem::path& path) {
    cv::Mat m = read_or_throw(path, cv::IMREAD_GRAYSCALE);
    std::vector<std::uint8_t> values(static_cast<std::size_t>(m.rows) * m.cols);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) {
            const std::uint8_t v = m.at<std::uint8_t>(y, x);
            if (v != 0 && v != 255)
                throw std::invalid_argument("mask " + path.string() + " has non-binary pixel value " +
                                            std::to_string(int(v)) + " at (" + std::to_string(y) + "," +
                                            std::to_string(x) + ")");
            values[static_cast<std::size_t>(y) * m.cols + x] = v == 255 ? 1 : 0;
        }
    return BinaryMask(m.rows, m.cols, std::move(values));
}

void save_mask_png(const std::filesystem::path& path, const BinaryMask& mask) {
    cv::Mat m(mask.height(), mask.width(), CV_8UC1);
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) m.at<std::uint8_t>(y, x) = mask.at(y, x) ? 255 : 0;
    std::filesystem::create_directories(path.parent_path());
    if (!cv::imwrite(path.string(), m))
        throw std::runtime_error("could not write mask: " + path.string());
}

ScoreMap load_score_map_png(const std::filesystem::path& path) {
    cv::Mat m = read_or_throw(path, cv::IMREAD_GRAYSCALE);
    std::vector<double> values(static_cast<std::size_t>(m.rows) * m.cols);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x)
            values[static_cast<std::size_t>(y) * m.cols + x] = m.at<std::uint8_t>(y, x) / 255.0;
    return ScoreMap(m.rows, m.cols, std::move(values));
}

void save_score_map_png(const std::filesystem::path& path, const ScoreMap& map) {
    cv::Mat m(map.height(), map.width(), CV_8UC1);
    for (int y = 0; y < map.height(); ++y)
        for (int x = 0; x < map.width(); ++x)
            m.at<std::uint8_t>(y, x) = static_cast<std::uint8_t>(std::lround(map.at(y, x) * 255.0));
    std::filesystem::create_directories(path.parent_path());
    if (!cv::imwrite(path.string(), m))
        throw std::runtime_error("could not write score map: " + path.string());
}

RgbImage load_image(const std::filesystem::path& path) {
    cv::Mat m = read_or_throw(path, cv::IMREAD_COLOR); // BGR
    RgbImage img;
    img.height = m.rows;
    img.width = m.cols;
    img.pixels.resize(static_cast<std::size_t>(m.rows) * m.cols * 3);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) {
            const cv::Vec3b bgr = m.at<cv::Vec3b>(y, x);
            img.at(y, x, 0) = bgr[2];
            img.at(y, x, 1) = bgr[1];
            img.at(y, x, 2) = bgr[0];
        }
    return img;
}

void save_image_jpg(const std::filesystem::path& path, const RgbImage& image) {
    cv::Mat m(image.height, image.width, CV_8UC3);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            m.at<cv::Vec3b>(y, x) = cv::Vec3b(image.at(y, x, 2), image.at(y, x, 1), image.at(y, x, 0));
    std::filesystem::create_directories(path.parent_path());
    if (!cv::imwrite(path.string(), m, {cv::IMWRITE_JPEG_QUALITY, 95}))
        throw std::runtime_error("could not write image: " + path.string());
}

std::pair<int, int> image_size(const std::filesystem::path& path) {
    cv::Mat m = read_or_throw(path, cv::IMREAD_UNCHANGED);
    return {m.cols, m.rows};
}

} // namespace pcd

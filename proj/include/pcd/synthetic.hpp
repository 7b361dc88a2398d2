#ifndef PCD_SYNTHETIC_HPP
#define PCD_SYNTHETIC_HPP

#include <cstdint>
#include <filesystem>

#include "pcd/dataset.hpp"

namespace pcd {

enum class Difficulty { easy, hard };

Difficulty difficulty_from_string(const std::string& s);

/// Materializes `count` procedurally textured camouflage samples under root
/// (Image/, GT/, Instance/, annotations.json) and returns the validated
/// manifest. Deterministic for a fixed seed: identical bytes on disk.
/// `hard` draws the foreground from the same texture distribution as the
/// background; `easy` gives it contrasting color statistics.
DatasetManifest generate_synthetic(const std::filesystem::path& root, std::uint64_t seed, int count,
                                   int size, Difficulty difficulty);

} // namespace pcd

#endif

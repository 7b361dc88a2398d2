// Deterministic data generation shared by tests. Raw mt19937_64 bits are used
// directly so fixtures stay stable across standard libraries.
#ifndef PCD_TEST_SUPPORT_HPP
#define PCD_TEST_SUPPORT_HPP

#include <random>
#include <vector>

#include "pcd/mask.hpp"

namespace pcd::testing {

inline double unit_double(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline ScoreMap random_score_map(std::mt19937_64& rng, int h, int w) {
    std::vector<double> v(static_cast<std::size_t>(h) * w);
    for (auto& x : v) x = unit_double(rng);
    return ScoreMap(h, w, std::move(v));
}

inline BinaryMask random_mask(std::mt19937_64& rng, int h, int w, double p_fg = 0.5) {
    std::vector<std::uint8_t> v(static_cast<std::size_t>(h) * w);
    for (auto& x : v) x = unit_double(rng) < p_fg ? 1 : 0;
    return BinaryMask(h, w, std::move(v));
}

// Random mask guaranteed to have at least one foreground pixel.
inline BinaryMask random_nonempty_mask(std::mt19937_64& rng, int h, int w, double p_fg = 0.5) {
    for (;;) {
        BinaryMask m = random_mask(rng, h, w, p_fg);
        if (m.foreground_count() > 0) return m;
    }
}

} // namespace pcd::testing

#endif

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "pcd/mask.hpp"
#include "support.hpp"

using namespace pcd;

TEST_CASE("score map construction validates range and shape") {
    CHECK_THROWS_AS(ScoreMap(2, 2, {0.0, 0.5, 1.1, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(ScoreMap(2, 2, {0.0, 0.5, -0.1, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(ScoreMap(0, 2, {}), std::invalid_argument);
    CHECK_THROWS_AS(ScoreMap(2, 2, {0.0, 0.5}), std::invalid_argument);
    const ScoreMap ok(1, 3, {0.0, 0.5, 1.0});
    CHECK(ok.at(0, 1) == 0.5);
}

TEST_CASE("binary mask construction rejects non-binary values") {
    CHECK_THROWS_AS(BinaryMask(1, 2, {0, 2}), std::invalid_argument);
    const BinaryMask ok(2, 1, {1, 0});
    CHECK(ok.foreground_count() == 1);
}

TEST_CASE("bounding box invariants") {
    BoundingBox box{1, 1, 4, 3};
    CHECK_NOTHROW(box.validate(4, 3));
    CHECK_THROWS_AS((BoundingBox{2, 0, 2, 3}.validate(4, 4)), std::invalid_argument);
    CHECK_THROWS_AS((BoundingBox{0, 0, 5, 3}.validate(4, 4)), std::invalid_argument);
}

TEST_CASE("attribute codes round-trip and validation") {
    CHECK(strategy_from_code("BM") == StrategyAttr::BM);
    CHECK(vision_from_code("OV") == VisionAttr::OV);
    CHECK_THROWS_AS(strategy_from_code("XX"), std::invalid_argument);
    CHECK_THROWS_AS(vision_from_code("BM"), std::invalid_argument);
    AttributeSet empty;
    CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
    AttributeSet a{{StrategyAttr::MQ}, {VisionAttr::SO}};
    CHECK_NOTHROW(a.validate());
    CHECK(a.has("MQ"));
    CHECK(a.has("SO"));
    CHECK_FALSE(a.has("BM"));
}

TEST_CASE("adaptive threshold") {
    CHECK(adaptive_threshold(ScoreMap(2, 2, {0, 0, 0, 0})) == 0.0);
    CHECK(adaptive_threshold(ScoreMap(2, 2, {0.5, 0.5, 0.5, 0.5})) == 1.0);
    // 4x4 map with mean 0.2
    std::vector<double> v(16, 0.2);
    CHECK(adaptive_threshold(ScoreMap(4, 4, v)) == doctest::Approx(0.4).epsilon(1e-12));

    // scale consistency: mean <= 0.5 gives exactly twice the mean
    std::mt19937_64 rng(11);
    for (int i = 0; i < 50; ++i) {
        ScoreMap m = pcd::testing::random_score_map(rng, 5, 7);
        if (m.mean() <= 0.5) CHECK(adaptive_threshold(m) == 2.0 * m.mean());
    }
}

TEST_CASE("binarize uses a strict threshold") {
    const ScoreMap uniform(2, 2, {0.5, 0.5, 0.5, 0.5});
    CHECK(binarize(uniform, 0.5).foreground_count() == 0);
    CHECK(binarize(uniform, 0.49).foreground_count() == 4);
    CHECK_THROWS_AS(binarize(uniform, 1.5), std::invalid_argument);

    // GT-as-scoremap at 0.5 reproduces the GT
    const BinaryMask gt(2, 3, {1, 0, 1, 0, 0, 1});
    CHECK(binarize(gt.to_score_map(), 0.5) == gt);
}

TEST_CASE("binarize is monotone in the threshold") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 25; ++trial) {
        const ScoreMap m = pcd::testing::random_score_map(rng, 6, 6);
        const double t1 = pcd::testing::unit_double(rng);
        const double t2 = pcd::testing::unit_double(rng);
        const double lo = std::min(t1, t2), hi = std::max(t1, t2);
        const BinaryMask a = binarize(m, lo), b = binarize(m, hi);
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (b.values()[i]) CHECK(a.values()[i]); // raising t never turns 0 into 1
        }
    }
}

TEST_CASE("resize is identity at the same resolution") {
    std::mt19937_64 rng(5);
    const ScoreMap m = pcd::testing::random_score_map(rng, 4, 6);
    const ScoreMap r = resize_bilinear(m, 4, 6);
    CHECK(r.values() == m.values());
    const BinaryMask mask = pcd::testing::random_mask(rng, 4, 6);
    CHECK(resize_nearest(mask, 4, 6) == mask);
}

TEST_CASE("bilinear 2x2 checkerboard upsample matches hand-computed weights") {
    const ScoreMap board(2, 2, {0.0, 1.0, 1.0, 0.0});
    const ScoreMap up = resize_bilinear(board, 4, 4);
    // Half-pixel-center convention: outer samples clamp to the source corners,
    // interior samples mix with weights 0.75/0.25.
    CHECK(up.at(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(up.at(0, 1) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(up.at(0, 2) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(up.at(0, 3) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(up.at(1, 1) == doctest::Approx(0.25 * 0.75 + 0.75 * 0.25).epsilon(1e-12)); // 0.375
    CHECK(up.at(1, 2) == doctest::Approx(0.75 * 0.75 + 0.25 * 0.25).epsilon(1e-12)); // 0.625
    CHECK(up.at(3, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(up.at(3, 3) == doctest::Approx(0.0).epsilon(1e-12));

    // full-map agreement with the independent closed-form oracle
    const auto expect = pcd::oracle::resize_bilinear(board.values(), 2, 2, 4, 4);
    for (std::size_t i = 0; i < expect.size(); ++i)
        CHECK(up.values()[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("nearest 2x2 to 4x4 block-replicates") {
    const BinaryMask m(2, 2, {1, 0, 0, 1});
    const BinaryMask up = resize_nearest(m, 4, 4);
    const auto expect = pcd::oracle::resize_nearest(m.values(), 2, 2, 4, 4);
    CHECK(up.values() == expect);
    CHECK(up.at(0, 0) == 1);
    CHECK(up.at(1, 1) == 1);
    CHECK(up.at(0, 2) == 0);
    CHECK(up.at(3, 3) == 1);
}

TEST_CASE("resize agrees with the oracle on random shapes") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const int sh = 1 + int(rng() % 8), sw = 1 + int(rng() % 8);
        const int dh = 1 + int(rng() % 12), dw = 1 + int(rng() % 12);
        const ScoreMap m = pcd::testing::random_score_map(rng, sh, sw);
        const auto got = resize_bilinear(m, dh, dw);
        const auto expect = pcd::oracle::resize_bilinear(m.values(), sh, sw, dh, dw);
        for (std::size_t i = 0; i < expect.size(); ++i)
            CHECK(got.values()[i] == doctest::Approx(expect[i]).epsilon(1e-12));

        const BinaryMask mask = pcd::testing::random_mask(rng, sh, sw);
        CHECK(resize_nearest(mask, dh, dw).values() == pcd::oracle::resize_nearest(mask.values(), sh, sw, dh, dw));
    }
}

TEST_CASE("resize_map dispatch enforces the mask mode rule") {
    const BinaryMask mask(2, 2, {1, 0, 0, 1});
    CHECK_THROWS_AS(resize_map(mask, 4, 4, ResizeMode::bilinear), std::invalid_argument);
    CHECK(resize_map(mask, 4, 4, ResizeMode::nearest) == resize_nearest(mask, 4, 4));
}

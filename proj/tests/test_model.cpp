#include "pcd/model/pcnet.hpp"

// torch's logging macros collide with doctest's assertion names
#ifdef CHECK
#undef CHECK
#endif
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>


using namespace pcd;
using namespace pcd::net;

namespace {

PCNetConfig tiny_config(int input_size = 64) {
    PCNetConfig cfg;
    cfg.backbone = BackboneSpec::tiny_test();
    cfg.decoder_channels = 16;
    cfg.input_size = input_size;
    return cfg;
}

} // namespace

TEST_CASE("config validation") {
    PCNetConfig cfg = tiny_config();
    CHECK_NOTHROW(cfg.validate());
    cfg.iterations = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = tiny_config();
    cfg.input_size = 100; // not a multiple of 32
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = tiny_config();
    cfg.backbone.name = "resnet";
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    // json round-trip and stable hash
    cfg = tiny_config();
    const PCNetConfig back = PCNetConfig::from_json_string(cfg.to_json_string());
    CHECK(back == cfg);
    CHECK(back.hash() == cfg.hash());
    PCNetConfig other = cfg;
    other.enhance_block = false;
    CHECK(other.hash() != cfg.hash());
}

TEST_CASE("backbone pyramid strides") {
    torch::manual_seed(1);
    Backbone tiny(BackboneSpec::tiny_test());
    tiny->eval();
    const auto pyr = tiny->forward(torch::rand({1, 3, 64, 64}));
    CHECK(pyr.levels[0].sizes() == torch::IntArrayRef({1, 16, 16, 16}));
    CHECK(pyr.levels[1].sizes() == torch::IntArrayRef({1, 24, 8, 8}));
    CHECK(pyr.levels[2].sizes() == torch::IntArrayRef({1, 40, 4, 4}));
    CHECK(pyr.levels[3].sizes() == torch::IntArrayRef({1, 64, 2, 2}));

    // PVT-contract strides at the paper input size
    Backbone pvt(BackboneSpec::pvt_class());
    pvt->eval();
    const auto big = pvt->forward(torch::rand({1, 3, 704, 704}));
    CHECK(big.levels[0].sizes() == torch::IntArrayRef({1, 64, 176, 176}));
    CHECK(big.levels[1].sizes() == torch::IntArrayRef({1, 128, 88, 88}));
    CHECK(big.levels[2].sizes() == torch::IntArrayRef({1, 320, 44, 44}));
    CHECK(big.levels[3].sizes() == torch::IntArrayRef({1, 512, 22, 22}));

    // determinism with fixed weights
    const auto again = tiny->forward(torch::ones({1, 3, 64, 64}));
    const auto once = tiny->forward(torch::ones({1, 3, 64, 64}));
    for (int i = 0; i < 4; ++i) CHECK(torch::equal(again.levels[i], once.levels[i]));
}

TEST_CASE("enhance block: forced-identity attention reduces to ASPP") {
    torch::manual_seed(2);
    EnhanceBlock block(8, true);
    block->eval();
    const auto x = torch::rand({1, 8, 8, 8});
    const auto with_attention = block->forward(x);
    block->attention()->force_identity(true);
    const auto without = block->forward(x);
    // with all-ones attention the block is exactly the ASPP output
    CHECK_FALSE(torch::allclose(with_attention, without));
    block->attention()->force_identity(false);
    CHECK(torch::allclose(block->forward(x), with_attention));

    // disabled block is the identity
    EnhanceBlock off(8, false);
    CHECK(torch::equal(off->forward(x), x));
}

TEST_CASE("attention map lies in (0,1)") {
    torch::manual_seed(3);
    Attention att(16);
    att->eval();
    const auto m = att->forward(torch::randn({2, 16, 6, 6}));
    CHECK(m.min().item<double>() > 0.0);
    CHECK(m.max().item<double>() < 1.0);
    CHECK(m.sizes() == torch::IntArrayRef({2, 16, 6, 6}));
}

TEST_CASE("fr block doubles spatial size for inter-level steps") {
    torch::manual_seed(4);
    FRBlock up(8, true, true);
    up->eval();
    CHECK(up->forward(torch::rand({1, 8, 4, 4})).sizes() == torch::IntArrayRef({1, 8, 8, 8}));
    FRBlock flat(8, true, false);
    flat->eval();
    CHECK(flat->forward(torch::rand({1, 8, 4, 4})).sizes() == torch::IntArrayRef({1, 8, 4, 4}));
    // disabled: identity + upsample
    FRBlock off(8, false, true);
    const auto x = torch::rand({1, 8, 4, 4});
    const auto y = off->forward(x);
    CHECK(y.sizes() == torch::IntArrayRef({1, 8, 8, 8}));
}

TEST_CASE("forward shape contract and per-iteration outputs") {
    torch::manual_seed(5);
    PCNetConfig cfg = tiny_config();
    cfg.iterations = 2;
    PCNet model(cfg);
    model->eval();
    torch::NoGradGuard guard;

    const auto out = model->forward(torch::rand({1, 3, 64, 64}));
    REQUIRE(out.iterations.size() == 2);
    for (const auto& step : out.iterations) {
        CHECK(step.p_en.sizes() == torch::IntArrayRef({1, 1, 64, 64}));
        CHECK(step.p_ref.sizes() == torch::IntArrayRef({1, 1, 64, 64}));
        CHECK(step.p_en.isfinite().all().item<bool>());
        CHECK(step.p_ref.isfinite().all().item<bool>());
    }
    // E' sits at the coarsest (stride-32) level
    CHECK(out.iterations[0].e_prime.sizes() == torch::IntArrayRef({1, 16, 2, 2}));
    // R_1 matches F_1
    CHECK(out.iterations[0].refined[0].sizes() == torch::IntArrayRef({1, 16, 16, 16}));

    // iteration-2 enhancement differs once feedback flows
    CHECK_FALSE(torch::allclose(out.iterations[0].enhanced[0], out.iterations[1].enhanced[0]));

    CHECK_THROWS_AS(model->forward(torch::rand({1, 3, 60, 60})), std::invalid_argument);
}

TEST_CASE("feedback identity: iteration 1 matches the feedback-off model") {
    torch::manual_seed(6);
    PCNetConfig cfg = tiny_config();
    cfg.iterations = 2;
    cfg.feedback = true;
    PCNet with_fb(cfg);
    with_fb->eval();

    PCNetConfig cfg_off = cfg;
    cfg_off.feedback = false;
    PCNet without_fb(cfg_off);
    without_fb->eval();

    // same weights on both models
    torch::NoGradGuard guard;
    auto src = with_fb->named_parameters();
    for (auto& p : without_fb->named_parameters()) p.value().copy_(*src.find(p.key()));
    auto src_buf = with_fb->named_buffers();
    for (auto& b : without_fb->named_buffers()) b.value().copy_(*src_buf.find(b.key()));

    const auto x = torch::rand({1, 3, 64, 64});
    const auto a = with_fb->forward(x);
    const auto b = without_fb->forward(x);
    CHECK(torch::allclose(a.iterations[0].p_en, b.iterations[0].p_en, 1e-6, 1e-6));
    CHECK(torch::allclose(a.iterations[0].p_ref, b.iterations[0].p_ref, 1e-6, 1e-6));

    // FB off: both iterations repeat the j=1 computation
    CHECK(torch::allclose(b.iterations[0].p_ref, b.iterations[1].p_ref, 1e-6, 1e-6));
    // FB on: they differ
    CHECK_FALSE(torch::allclose(a.iterations[0].p_ref, a.iterations[1].p_ref));

    // j=1 runs a single pair
    const auto single = with_fb->forward(x, 1);
    CHECK(single.iterations.size() == 1);
    CHECK(torch::allclose(single.iterations[0].p_ref, a.iterations[0].p_ref, 1e-6, 1e-6));
}

TEST_CASE("all eight toggle combinations produce finite outputs") {
    torch::NoGradGuard guard;
    for (int bits = 0; bits < 8; ++bits) {
        torch::manual_seed(100 + bits);
        PCNetConfig cfg = tiny_config();
        cfg.enhance_block = bits & 4;
        cfg.fr_block = bits & 2;
        cfg.feedback = bits & 1;
        PCNet model(cfg);
        model->eval();
        const auto out = model->forward(torch::rand({1, 3, 64, 64}));
        REQUIRE(out.iterations.size() == 2);
        for (const auto& step : out.iterations) {
            CHECK(step.p_en.isfinite().all().item<bool>());
            CHECK(step.p_ref.isfinite().all().item<bool>());
            CHECK(step.p_en.sizes() == torch::IntArrayRef({1, 1, 64, 64}));
        }
    }
}

TEST_CASE("fr-off refinement chain is the plain upsample-add trace") {
    torch::manual_seed(7);
    PCNetConfig cfg = tiny_config();
    cfg.fr_block = false;
    cfg.iterations = 1;
    PCNet model(cfg);
    model->eval();
    torch::NoGradGuard guard;

    const auto x = torch::rand({1, 3, 64, 64});
    const auto out = model->forward(x);
    const auto& it = out.iterations[0];

    // symbolic trace over the exposed internals:
    // R_1 = Up(Up(Up(E'+F_4)+F_3)+F_2)+F_1 on the channel-unified pyramid
    namespace F = torch::nn::functional;
    const auto up2 = [](const torch::Tensor& t) {
        return F::interpolate(t, F::InterpolateFuncOptions()
                                     .size(std::vector<std::int64_t>{t.size(2) * 2, t.size(3) * 2})
                                     .mode(torch::kBilinear)
                                     .align_corners(false));
    };
    const auto& p = it.projected;
    const auto expected_r1 = up2(up2(up2(it.e_prime + p[3]) + p[2]) + p[1]) + p[0];
    CHECK(torch::allclose(it.refined[0], expected_r1, 1e-6, 1e-6));
    CHECK(it.refined[3].size(2) == out.pyramid.levels[2].size(2)); // R_4 at F_3 scale
    CHECK(it.refined[2].size(2) == out.pyramid.levels[1].size(2)); // R_3 at F_2 scale
    CHECK(it.refined[1].size(2) == out.pyramid.levels[0].size(2)); // R_2 at F_1 scale
    CHECK(it.refined[0].size(2) == out.pyramid.levels[0].size(2)); // R_1 at F_1 scale
}

TEST_CASE("checkpoint round-trip restores outputs bit-for-bit") {
    torch::manual_seed(8);
    PCNetConfig cfg = tiny_config();
    PCNet model(cfg);
    model->eval();
    torch::NoGradGuard guard;
    const auto x = torch::rand({1, 3, 64, 64});
    const auto before = model->forward(x);

    const auto path = std::filesystem::temp_directory_path() / "pcd_ckpt_test.pcnet";
    save_checkpoint(path, model);
    PCNet restored = load_checkpoint(path);
    const auto after = restored->forward(x);
    CHECK(torch::equal(before.iterations.back().p_ref, after.iterations.back().p_ref));
    CHECK(torch::equal(before.iterations.back().p_en, after.iterations.back().p_en));
    CHECK(restored->config() == cfg);
    std::filesystem::remove(path);
}

TEST_CASE("missing pretrained weights degrade to random init with a warning") {
    torch::manual_seed(9);
    PCNetConfig cfg = tiny_config();
    PCNet model(cfg);
    CHECK(load_pretrained_backbone(model, "/nonexistent/pvt_weights.pth") == 0);
}

TEST_CASE("to_score_map squashes logits into a valid map") {
    auto logits = torch::tensor({{-100.0f, 0.0f}, {100.0f, 3.0f}}).reshape({1, 1, 2, 2});
    const ScoreMap m = to_score_map(logits);
    CHECK(m.height() == 2);
    CHECK(m.at(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(m.at(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.at(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

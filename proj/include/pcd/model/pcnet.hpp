#ifndef PCD_MODEL_PCNET_HPP
#define PCD_MODEL_PCNET_HPP

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "pcd/image_io.hpp"
#include "pcd/mask.hpp"

namespace pcd::net {

struct BackboneSpec {
    std::string name = "pvt_class"; // pvt_class | tiny_test
    std::array<std::int64_t, 4> channels{64, 128, 320, 512};
    bool pretrained = false;
    std::string pretrained_path;

    static BackboneSpec pvt_class();
    static BackboneSpec tiny_test();
    void validate() const;
    bool operator==(const BackboneSpec&) const = default;
};

struct PCNetConfig {
    BackboneSpec backbone;
    std::int64_t decoder_channels = 64;
    int iterations = 2; // j
    double mu = 0.2;    // iteration weight parameter (mirrors the loss default)
    bool enhance_block = true; // EB
    bool fr_block = true;      // FR
    bool feedback = true;      // FB
    int input_size = 704;

    void validate() const;
    std::string to_json_string() const;
    static PCNetConfig from_json_string(const std::string& s);
    /// Stable digest of the architecture-relevant fields; distinct per ablation row.
    std::string hash() const;
    bool operator==(const PCNetConfig&) const = default;
};

/// Multi-scale features at strides 4, 8, 16, 32 relative to the input.
struct FeaturePyramid {
    std::array<torch::Tensor, 4> levels;
};

struct IterationOutput {
    torch::Tensor p_en;  // enhancement-stream logits at input resolution
    torch::Tensor p_ref; // refinement-stream logits at input resolution
    std::array<torch::Tensor, 4> enhanced;  // E_1..E_4
    std::array<torch::Tensor, 4> refined;   // R_1..R_4 (index 0 holds R_1)
    std::array<torch::Tensor, 4> projected; // channel-unified F_1..F_4 feeding both streams
    torch::Tensor e_prime;
};

struct ForwardOutputs {
    std::vector<IterationOutput> iterations;
    FeaturePyramid pyramid;
};

class ConvBNReLUImpl : public torch::nn::Module {
public:
    ConvBNReLUImpl(std::int64_t in, std::int64_t out, int kernel, int stride = 1, int dilation = 1);
    torch::Tensor forward(torch::Tensor x);

private:
    torch::nn::Conv2d conv_{nullptr};
    torch::nn::BatchNorm2d bn_{nullptr};
};
TORCH_MODULE(ConvBNReLU);

/// Parallel atrous context: rate-1 pointwise branch, 3x3 branches at rates
/// 6/12/18, and a global-pooling branch, concatenated and projected back.
class AsppImpl : public torch::nn::Module {
public:
    explicit AsppImpl(std::int64_t channels);
    torch::Tensor forward(torch::Tensor x);

private:
    ConvBNReLU branch1_{nullptr}, branch6_{nullptr}, branch12_{nullptr}, branch18_{nullptr};
    ConvBNReLU global_{nullptr}, project_{nullptr};
};
TORCH_MODULE(Aspp);

/// Channel attention followed by spatial attention, combined into one
/// multiplicative map in (0,1).
class AttentionImpl : public torch::nn::Module {
public:
    explicit AttentionImpl(std::int64_t channels, std::int64_t reduction = 8);
    torch::Tensor forward(torch::Tensor x);

    /// Test hook: make the attention map all-ones.
    void force_identity(bool on) { identity_ = on; }

private:
    torch::nn::Conv2d mlp1_{nullptr}, mlp2_{nullptr};
    torch::nn::Conv2d spatial_{nullptr};
    bool identity_ = false;
};
TORCH_MODULE(Attention);

/// e = ASPP(f) * Att(ASPP(f)); degenerates to identity when disabled.
class EnhanceBlockImpl : public torch::nn::Module {
public:
    EnhanceBlockImpl(std::int64_t channels, bool enabled);
    torch::Tensor forward(torch::Tensor x);
    bool enabled() const { return enabled_; }
    Attention attention() { return attention_; }

private:
    bool enabled_;
    Aspp aspp_{nullptr};
    Attention attention_{nullptr};
};
TORCH_MODULE(EnhanceBlock);

/// Two CBR layers, then an optional x2 bilinear upsample toward the next finer
/// level; a disabled block degenerates to identity (+upsample).
class FRBlockImpl : public torch::nn::Module {
public:
    FRBlockImpl(std::int64_t channels, bool enabled, bool upsample);
    torch::Tensor forward(torch::Tensor x);

private:
    bool enabled_;
    bool upsample_;
    ConvBNReLU cbr1_{nullptr}, cbr2_{nullptr};
};
TORCH_MODULE(FRBlock);

class BackboneImpl : public torch::nn::Module {
public:
    explicit BackboneImpl(const BackboneSpec& spec);
    FeaturePyramid forward(torch::Tensor image);

private:
    torch::nn::Sequential stem_{nullptr};
    torch::nn::Sequential stage2_{nullptr}, stage3_{nullptr}, stage4_{nullptr};
};
TORCH_MODULE(Backbone);

class PCNetImpl : public torch::nn::Module {
public:
    explicit PCNetImpl(PCNetConfig config);

    /// Backbone runs once; the requested number of iterations reuses the
    /// pyramid, wiring R_1 back into the finest level between passes.
    ForwardOutputs forward(torch::Tensor image, std::optional<int> iterations_override = {});

    const PCNetConfig& config() const { return config_; }
    Backbone backbone() { return backbone_; }
    std::array<EnhanceBlock, 4> enhance_blocks() { return enhance_; }

private:
    PCNetConfig config_;
    Backbone backbone_{nullptr};
    std::array<torch::nn::Conv2d, 4> proj_{nullptr, nullptr, nullptr, nullptr};
    std::array<EnhanceBlock, 4> enhance_{nullptr, nullptr, nullptr, nullptr};
    ConvBNReLU fuse_{nullptr};        // E' = CBR(E_4)
    torch::nn::Conv2d en_head_{nullptr};  // 7x7 head on E'
    std::array<FRBlock, 4> fr_{nullptr, nullptr, nullptr, nullptr}; // index 0 = FR_4 (top)
    torch::nn::Conv2d ref_head_{nullptr}; // 3x3 head on R_1
    torch::nn::Conv2d fb_proj_{nullptr};  // decoder width -> raw F_1 channels
};
TORCH_MODULE(PCNet);

/// Logistic squashing at the API boundary; logits tensor [1,1,H,W] or [H,W].
ScoreMap to_score_map(const torch::Tensor& logits);

/// [0,1] float CHW tensor from an RGB image, optionally resized (bilinear).
torch::Tensor image_to_tensor(const RgbImage& image, int size = 0);
torch::Tensor mask_to_tensor(const BinaryMask& mask, int size = 0);

/// Single-file checkpoint archive: versioned header, embedded config, raw
/// tensors sorted by name. Byte-identical for identical weights.
void save_checkpoint(const std::filesystem::path& path, PCNet& model);
PCNet load_checkpoint(const std::filesystem::path& path);

/// Copies any name/shape-matching tensors from a torch-zip state-dict archive
/// into the backbone. A missing file degrades to random init with a warning.
/// Returns the number of matched tensors.
int load_pretrained_backbone(PCNet& model, const std::filesystem::path& path);

} // namespace pcd::net

#endif

#include "pcd/model/pcnet.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include <json.hpp>

namespace pcd::net {

using nlohmann::json;
namespace F = torch::nn::functional;

namespace {

torch::Tensor upsample_to(const torch::Tensor& x, std::int64_t h, std::int64_t w) {
    return F::interpolate(x, F::InterpolateFuncOptions()
                                 .size(std::vector<std::int64_t>{h, w})
                                 .mode(torch::kBilinear)
                                 .align_corners(false));
}

} // namespace

BackboneSpec BackboneSpec::pvt_class() {
    BackboneSpec s;
    s.name = "pvt_class";
    s.channels = {64, 128, 320, 512};
    return s;
}

BackboneSpec BackboneSpec::tiny_test() {
    BackboneSpec s;
    s.name = "tiny_test";
    s.channels = {16, 24, 40, 64};
    return s;
}

void BackboneSpec::validate() const {
    if (name != "pvt_class" && name != "tiny_test")
        throw std::invalid_argument("unknown backbone: " + name + " (expected pvt_class|tiny_test)");
    for (auto c : channels)
        if (c < 1) throw std::invalid_argument("backbone channel counts must be positive");
}

void PCNetConfig::validate() const {
    backbone.validate();
    if (iterations < 1) throw std::invalid_argument("pcnet.iterations must be >= 1");
    if (mu < 0.0) throw std::invalid_argument("pcnet.mu must be >= 0");
    if (decoder_channels < 1) throw std::invalid_argument("pcnet.decoder_channels must be >= 1");
    if (input_size < 32 || input_size % 32 != 0)
        throw std::invalid_argument("pcnet.input_size must be a positive multiple of 32, got " +
                                    std::to_string(input_size));
}

std::string PCNetConfig::to_json_string() const {
    json j;
    j["backbone"] = backbone.name;
    j["channels"] = backbone.channels;
    j["pretrained"] = backbone.pretrained;
    j["pretrained_path"] = backbone.pretrained_path;
    j["decoder_channels"] = decoder_channels;
    j["iterations"] = iterations;
    j["mu"] = mu;
    j["enhance_block"] = enhance_block;
    j["fr_block"] = fr_block;
    j["feedback"] = feedback;
    j["input_size"] = input_size;
    return j.dump();
}

PCNetConfig PCNetConfig::from_json_string(const std::string& s) {
    const json j = json::parse(s);
    PCNetConfig c;
    c.backbone.name = j.at("backbone").get<std::string>();
    const auto ch = j.at("channels").get<std::vector<std::int64_t>>();
    if (ch.size() != 4) throw std::invalid_argument("backbone channels must list 4 levels");
    std::copy(ch.begin(), ch.end(), c.backbone.channels.begin());
    c.backbone.pretrained = j.at("pretrained").get<bool>();
    c.backbone.pretrained_path = j.at("pretrained_path").get<std::string>();
    c.decoder_channels = j.at("decoder_channels").get<std::int64_t>();
    c.iterations = j.at("iterations").get<int>();
    c.mu = j.at("mu").get<double>();
    c.enhance_block = j.at("enhance_block").get<bool>();
    c.fr_block = j.at("fr_block").get<bool>();
    c.feedback = j.at("feedback").get<bool>();
    c.input_size = j.at("input_size").get<int>();
    c.validate();
    return c;
}

std::string PCNetConfig::hash() const {
    // FNV-1a over the canonical json; stable across runs and platforms
    const std::string repr = to_json_string();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : repr) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---- blocks ----

ConvBNReLUImpl::ConvBNReLUImpl(std::int64_t in, std::int64_t out, int kernel, int stride, int dilation) {
    const int pad = dilation * (kernel - 1) / 2;
    conv_ = register_module(
        "conv", torch::nn::Conv2d(
                    torch::nn::Conv2dOptions(in, out, kernel).stride(stride).padding(pad).dilation(dilation).bias(false)));
    bn_ = register_module("bn", torch::nn::BatchNorm2d(out));
}

torch::Tensor ConvBNReLUImpl::forward(torch::Tensor x) { return torch::relu(bn_(conv_(x))); }

AsppImpl::AsppImpl(std::int64_t channels) {
    branch1_ = register_module("branch1", ConvBNReLU(channels, channels, 1));
    branch6_ = register_module("branch6", ConvBNReLU(channels, channels, 3, 1, 6));
    branch12_ = register_module("branch12", ConvBNReLU(channels, channels, 3, 1, 12));
    branch18_ = register_module("branch18", ConvBNReLU(channels, channels, 3, 1, 18));
    global_ = register_module("global", ConvBNReLU(channels, channels, 1));
    project_ = register_module("project", ConvBNReLU(5 * channels, channels, 1));
}

torch::Tensor AsppImpl::forward(torch::Tensor x) {
    const auto h = x.size(2), w = x.size(3);
    auto pooled = F::adaptive_avg_pool2d(x, F::AdaptiveAvgPool2dFuncOptions(1));
    auto global = upsample_to(global_(pooled), h, w);
    auto cat = torch::cat({branch1_(x), branch6_(x), branch12_(x), branch18_(x), global}, 1);
    return project_(cat);
}

AttentionImpl::AttentionImpl(std::int64_t channels, std::int64_t reduction) {
    const std::int64_t hidden = std::max<std::int64_t>(1, channels / reduction);
    mlp1_ = register_module("mlp1", torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, hidden, 1)));
    mlp2_ = register_module("mlp2", torch::nn::Conv2d(torch::nn::Conv2dOptions(hidden, channels, 1)));
    spatial_ = register_module("spatial", torch::nn::Conv2d(torch::nn::Conv2dOptions(2, 1, 7).padding(3)));
}

torch::Tensor AttentionImpl::forward(torch::Tensor x) {
    if (identity_) return torch::ones_like(x);
    auto avg = F::adaptive_avg_pool2d(x, F::AdaptiveAvgPool2dFuncOptions(1));
    auto max = std::get<0>(x.flatten(2).max(2)).unsqueeze(-1).unsqueeze(-1);
    auto channel = torch::sigmoid(mlp2_(torch::relu(mlp1_(avg))) + mlp2_(torch::relu(mlp1_(max))));
    auto weighted = x * channel;
    auto mean_map = weighted.mean(1, /*keepdim=*/true);
    auto max_map = std::get<0>(weighted.max(1, /*keepdim=*/true));
    auto spatial = torch::sigmoid(spatial_(torch::cat({mean_map, max_map}, 1)));
    return channel * spatial; // broadcast product, in (0,1)
}

EnhanceBlockImpl::EnhanceBlockImpl(std::int64_t channels, bool enabled) : enabled_(enabled) {
    if (enabled_) {
        aspp_ = register_module("aspp", Aspp(channels));
        attention_ = register_module("attention", Attention(channels));
    }
}

torch::Tensor EnhanceBlockImpl::forward(torch::Tensor x) {
    if (!enabled_) return x;
    auto a = aspp_(x);
    return a * attention_(a);
}

FRBlockImpl::FRBlockImpl(std::int64_t channels, bool enabled, bool upsample)
    : enabled_(enabled), upsample_(upsample) {
    if (enabled_) {
        cbr1_ = register_module("cbr1", ConvBNReLU(channels, channels, 3));
        cbr2_ = register_module("cbr2", ConvBNReLU(channels, channels, 3));
    }
}

torch::Tensor FRBlockImpl::forward(torch::Tensor x) {
    auto r = enabled_ ? cbr2_(cbr1_(x)) : x;
    if (upsample_) r = upsample_to(r, r.size(2) * 2, r.size(3) * 2);
    return r;
}

// ---- backbone ----

BackboneImpl::BackboneImpl(const BackboneSpec& spec) {
    spec.validate();
    const auto& c = spec.channels;
    if (spec.name == "tiny_test") {
        stem_ = torch::nn::Sequential(ConvBNReLU(3, c[0], 3, 2), ConvBNReLU(c[0], c[0], 3, 2));
        stage2_ = torch::nn::Sequential(ConvBNReLU(c[0], c[1], 3, 2), ConvBNReLU(c[1], c[1], 3));
        stage3_ = torch::nn::Sequential(ConvBNReLU(c[1], c[2], 3, 2), ConvBNReLU(c[2], c[2], 3));
        stage4_ = torch::nn::Sequential(ConvBNReLU(c[2], c[3], 3, 2), ConvBNReLU(c[3], c[3], 3));
    } else {
        stem_ = torch::nn::Sequential(ConvBNReLU(3, c[0] / 2, 3, 2), ConvBNReLU(c[0] / 2, c[0], 3, 2),
                                      ConvBNReLU(c[0], c[0], 3));
        const auto stage = [](std::int64_t in, std::int64_t out) {
            return torch::nn::Sequential(ConvBNReLU(in, out, 3, 2), ConvBNReLU(out, out, 3),
                                         ConvBNReLU(out, out, 3));
        };
        stage2_ = stage(c[0], c[1]);
        stage3_ = stage(c[1], c[2]);
        stage4_ = stage(c[2], c[3]);
    }
    register_module("stem", stem_);
    register_module("stage2", stage2_);
    register_module("stage3", stage3_);
    register_module("stage4", stage4_);
}

FeaturePyramid BackboneImpl::forward(torch::Tensor image) {
    FeaturePyramid pyr;
    pyr.levels[0] = stem_->forward(image);
    pyr.levels[1] = stage2_->forward(pyr.levels[0]);
    pyr.levels[2] = stage3_->forward(pyr.levels[1]);
    pyr.levels[3] = stage4_->forward(pyr.levels[2]);
    return pyr;
}

// ---- PCNet ----

PCNetImpl::PCNetImpl(PCNetConfig config) : config_(std::move(config)) {
    config_.validate();
    backbone_ = register_module("backbone", Backbone(config_.backbone));
    const auto dec = config_.decoder_channels;
    for (int i = 0; i < 4; ++i) {
        proj_[i] = register_module(
            "proj" + std::to_string(i + 1),
            torch::nn::Conv2d(torch::nn::Conv2dOptions(config_.backbone.channels[i], dec, 1)));
        enhance_[i] =
            register_module("enhance" + std::to_string(i + 1), EnhanceBlock(dec, config_.enhance_block));
    }
    fuse_ = register_module("fuse", ConvBNReLU(dec, dec, 3));
    en_head_ = register_module("en_head", torch::nn::Conv2d(torch::nn::Conv2dOptions(dec, 1, 7).padding(3)));
    // fr_[0] refines the coarsest level; the final block keeps F_1 resolution
    for (int i = 0; i < 4; ++i)
        fr_[i] = register_module("fr" + std::to_string(4 - i),
                                 FRBlock(dec, config_.fr_block, /*upsample=*/i < 3));
    ref_head_ = register_module("ref_head", torch::nn::Conv2d(torch::nn::Conv2dOptions(dec, 1, 3).padding(1)));
    fb_proj_ = register_module(
        "fb_proj", torch::nn::Conv2d(torch::nn::Conv2dOptions(dec, config_.backbone.channels[0], 1)));
}

ForwardOutputs PCNetImpl::forward(torch::Tensor image, std::optional<int> iterations_override) {
    if (image.dim() == 3) image = image.unsqueeze(0);
    if (image.size(2) % 32 != 0 || image.size(3) % 32 != 0)
        throw std::invalid_argument("input spatial size must be divisible by 32, got " +
                                    std::to_string(image.size(2)) + "x" + std::to_string(image.size(3)));
    const int j = iterations_override.value_or(config_.iterations);
    if (j < 1) throw std::invalid_argument("iterations override must be >= 1");

    ForwardOutputs out;
    out.pyramid = backbone_->forward(image);
    const auto& f = out.pyramid.levels;
    const auto in_h = image.size(2), in_w = image.size(3);

    std::array<torch::Tensor, 4> projected;
    for (int i = 1; i < 4; ++i) projected[i] = proj_[i](f[i]);

    torch::Tensor feedback; // B_j, zero on the first pass
    for (int iter = 0; iter < j; ++iter) {
        IterationOutput step;

        auto f1 = feedback.defined() ? f[0] + feedback : f[0];
        projected[0] = proj_[0](f1);

        // bottom-up enhancement: fuse each level into the next by
        // downsample-and-add, enhancing as we go
        step.enhanced[0] = enhance_[0](projected[0]);
        for (int i = 1; i < 4; ++i) {
            auto down = F::interpolate(step.enhanced[i - 1],
                                       F::InterpolateFuncOptions()
                                           .size(std::vector<std::int64_t>{f[i].size(2), f[i].size(3)})
                                           .mode(torch::kBilinear)
                                           .align_corners(false));
            step.enhanced[i] = enhance_[i](projected[i] + down);
        }
        step.projected = projected;
        step.e_prime = fuse_(step.enhanced[3]);
        step.p_en = upsample_to(en_head_(step.e_prime), in_h, in_w);

        // top-down refinement
        auto r = fr_[0](step.e_prime + projected[3]); // R_4, delivered at F_3 scale
        step.refined[3] = r;
        r = fr_[1](r + projected[2]); // R_3 at F_2 scale
        step.refined[2] = r;
        r = fr_[2](r + projected[1]); // R_2 at F_1 scale
        step.refined[1] = r;
        r = fr_[3](r + projected[0]); // R_1 at F_1 scale
        step.refined[0] = r;
        step.p_ref = upsample_to(ref_head_(r), in_h, in_w);

        if (config_.feedback && iter + 1 < j) feedback = fb_proj_(r);
        out.iterations.push_back(std::move(step));
    }
    return out;
}

// ---- tensor/domain conversions ----

ScoreMap to_score_map(const torch::Tensor& logits) {
    auto t = logits;
    while (t.dim() > 2) {
        if (t.size(0) != 1)
            throw std::invalid_argument("to_score_map expects a single map, got batch of " +
                                        std::to_string(t.size(0)));
        t = t.squeeze(0);
    }
    t = torch::sigmoid(t).clamp(0.0, 1.0).to(torch::kFloat64).contiguous();
    const int h = static_cast<int>(t.size(0)), w = static_cast<int>(t.size(1));
    std::vector<double> values(t.data_ptr<double>(), t.data_ptr<double>() + t.numel());
    return ScoreMap(h, w, std::move(values));
}

torch::Tensor image_to_tensor(const RgbImage& image, int size) {
    auto t = torch::empty({3, image.height, image.width}, torch::kFloat32);
    auto acc = t.accessor<float, 3>();
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            for (int c = 0; c < 3; ++c) acc[c][y][x] = image.at(y, x, c) / 255.0f;
    t = t.unsqueeze(0);
    if (size > 0 && (image.height != size || image.width != size))
        t = upsample_to(t, size, size);
    return t;
}

torch::Tensor mask_to_tensor(const BinaryMask& mask, int size) {
    auto t = torch::empty({1, 1, mask.height(), mask.width()}, torch::kFloat32);
    auto acc = t.accessor<float, 4>();
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) acc[0][0][y][x] = static_cast<float>(mask.at(y, x));
    if (size > 0 && (mask.height() != size || mask.width() != size))
        t = F::interpolate(t, F::InterpolateFuncOptions()
                                  .size(std::vector<std::int64_t>{size, size})
                                  .mode(torch::kNearest));
    return t;
}

// ---- checkpoint archive ----

namespace {

constexpr char kMagic[8] = {'P', 'C', 'D', 'C', 'K', 'P', 'T', '1'};

void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }

std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

std::map<std::string, torch::Tensor> all_state(PCNet& model) {
    std::map<std::string, torch::Tensor> state;
    for (const auto& p : model->named_parameters()) state.emplace(p.key(), p.value());
    for (const auto& b : model->named_buffers()) state.emplace(b.key(), b.value());
    return state;
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, PCNet& model) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("could not open checkpoint for writing: " + path.string());
    out.write(kMagic, sizeof(kMagic));

    const std::string config_json = model->config().to_json_string();
    write_u64(out, config_json.size());
    out.write(config_json.data(), static_cast<std::streamsize>(config_json.size()));

    const auto state = all_state(model);
    write_u64(out, state.size());
    for (const auto& [name, tensor] : state) {
        auto t = tensor.detach().to(torch::kCPU).contiguous();
        write_u64(out, name.size());
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u64(out, static_cast<std::uint64_t>(t.scalar_type() == torch::kFloat32 ? 0 : 1));
        write_u64(out, static_cast<std::uint64_t>(t.dim()));
        for (int d = 0; d < t.dim(); ++d) write_u64(out, static_cast<std::uint64_t>(t.size(d)));
        const std::uint64_t bytes = t.numel() * t.element_size();
        write_u64(out, bytes);
        out.write(static_cast<const char*>(t.data_ptr()), static_cast<std::streamsize>(bytes));
    }
    if (!out) throw std::runtime_error("short write on checkpoint: " + path.string());
}

PCNet load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("missing checkpoint: " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw std::invalid_argument("not a checkpoint archive: " + path.string());

    std::string config_json(read_u64(in), '\0');
    in.read(config_json.data(), static_cast<std::streamsize>(config_json.size()));
    PCNet model(PCNetConfig::from_json_string(config_json));

    auto state = all_state(model);
    const std::uint64_t count = read_u64(in);
    torch::NoGradGuard guard;
    std::size_t applied = 0;
    for (std::uint64_t i = 0; i < count; ++i) {
        std::string name(read_u64(in), '\0');
        in.read(name.data(), static_cast<std::streamsize>(name.size()));
        const std::uint64_t dtype = read_u64(in);
        const std::uint64_t ndim = read_u64(in);
        std::vector<std::int64_t> sizes(ndim);
        for (auto& s : sizes) s = static_cast<std::int64_t>(read_u64(in));
        const std::uint64_t bytes = read_u64(in);
        auto t = torch::empty(sizes, dtype == 0 ? torch::kFloat32 : torch::kInt64);
        if (static_cast<std::uint64_t>(t.numel() * t.element_size()) != bytes)
            throw std::invalid_argument("checkpoint tensor size mismatch for " + name);
        in.read(static_cast<char*>(t.data_ptr()), static_cast<std::streamsize>(bytes));
        auto it = state.find(name);
        if (it == state.end())
            throw std::invalid_argument("checkpoint tensor " + name + " has no destination in the model");
        if (!it->second.sizes().equals(t.sizes()))
            throw std::invalid_argument("checkpoint shape mismatch for " + name);
        it->second.copy_(t);
        ++applied;
    }
    if (!in || applied != state.size())
        throw std::invalid_argument("checkpoint is incomplete: " + path.string());
    model->eval();
    return model;
}

int load_pretrained_backbone(PCNet& model, const std::filesystem::path& path) {
    if (path.empty() || !std::filesystem::exists(path)) {
        TORCH_WARN("pretrained backbone weights not found at '", path.string(),
                   "'; continuing with random initialization");
        return 0;
    }
    std::ifstream in(path, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), {});
    torch::IValue ivalue;
    try {
        ivalue = torch::pickle_load(bytes);
    } catch (const std::exception& e) {
        TORCH_WARN("could not read state-dict archive '", path.string(), "' (", e.what(),
                   "); continuing with random initialization");
        return 0;
    }
    if (!ivalue.isGenericDict()) {
        TORCH_WARN("archive '", path.string(), "' does not hold a state dict; ignoring");
        return 0;
    }

    std::map<std::string, torch::Tensor> state;
    for (const auto& p : model->backbone()->named_parameters()) state.emplace(p.key(), p.value());
    for (const auto& b : model->backbone()->named_buffers()) state.emplace(b.key(), b.value());

    torch::NoGradGuard guard;
    int matched = 0;
    for (const auto& entry : ivalue.toGenericDict()) {
        if (!entry.key().isString() || !entry.value().isTensor()) continue;
        std::string name = entry.key().toStringRef();
        if (name.rfind("backbone.", 0) == 0) name = name.substr(9);
        auto it = state.find(name);
        if (it == state.end()) continue;
        const auto src = entry.value().toTensor();
        if (!it->second.sizes().equals(src.sizes())) continue;
        it->second.copy_(src.to(it->second.scalar_type()));
        ++matched;
    }
    if (matched == 0)
        TORCH_WARN("no tensors in '", path.string(), "' matched the backbone; using random initialization");
    return matched;
}

} // namespace pcd::net

#include "pcd/model/train.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

namespace pcd::net {

using nlohmann::json;

namespace {

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <typename T>
void take(json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) {
        out = it->get<T>();
        j.erase(it);
    }
}

void reject_unknown(const json& j, const std::string& prefix) {
    if (!j.empty())
        throw std::invalid_argument("unknown config key: " + prefix + j.begin().key());
}

} // namespace

void TrainConfig::validate() const {
    if (scale != "paper" && scale != "desk")
        throw std::invalid_argument("scale must be paper or desk, got " + scale);
    if (optimizer != "adamw") throw std::invalid_argument("optimizer must be adamw, got " + optimizer);
    if (lr <= 0.0) throw std::invalid_argument("lr must be positive");
    if (lr_decay <= 0.0 || lr_decay > 1.0) throw std::invalid_argument("lr_decay must be in (0,1]");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (max_steps < 0) throw std::invalid_argument("max_steps must be >= 0");
    if (input_size < 32 || input_size % 32 != 0)
        throw std::invalid_argument("input_size must be a positive multiple of 32");
    if (augmentation != "flip" && augmentation != "none")
        throw std::invalid_argument("augmentation must be flip or none, got " + augmentation);
    if (scale == "desk" && max_steps == 0 && epochs > 5)
        throw std::invalid_argument("desk scale runs at most 5 epochs (use max_steps for longer runs)");
    if (pcnet.input_size != input_size)
        throw std::invalid_argument("pcnet.input_size must match input_size");
    pcnet.validate();
    loss.validate();
}

TrainConfig TrainConfig::paper_defaults() {
    TrainConfig c;
    c.scale = "paper";
    c.lr = 1e-4;
    c.lr_decay = 0.1;
    c.decay_epoch = 100;
    c.weight_decay = 0.01;
    c.batch_size = 8;
    c.epochs = 150;
    c.input_size = 704;
    c.augmentation = "flip";
    c.deterministic = false;
    c.pcnet.backbone = BackboneSpec::pvt_class();
    c.pcnet.decoder_channels = 64;
    c.pcnet.input_size = 704;
    return c;
}

TrainConfig TrainConfig::desk_defaults() {
    TrainConfig c;
    c.scale = "desk";
    c.lr = 2e-3;
    c.lr_decay = 0.1;
    c.decay_epoch = 100;
    c.batch_size = 8;
    c.epochs = 5;
    c.input_size = 64;
    c.augmentation = "none";
    c.deterministic = true;
    c.pcnet.backbone = BackboneSpec::tiny_test();
    c.pcnet.decoder_channels = 32;
    c.pcnet.input_size = 64;
    return c;
}

std::string TrainConfig::to_json_string() const {
    json j;
    j["scale"] = scale;
    j["seed"] = seed;
    j["deterministic"] = deterministic;
    j["optimizer"] = optimizer;
    j["lr"] = lr;
    j["lr_decay"] = lr_decay;
    j["decay_epoch"] = decay_epoch;
    j["weight_decay"] = weight_decay;
    j["batch_size"] = batch_size;
    j["epochs"] = epochs;
    j["max_steps"] = max_steps;
    j["input_size"] = input_size;
    j["augmentation"] = augmentation;
    j["eval_every"] = eval_every;
    j["pcnet"] = {{"backbone", pcnet.backbone.name},
                  {"pretrained", pcnet.backbone.pretrained},
                  {"pretrained_path", pcnet.backbone.pretrained_path},
                  {"decoder_channels", pcnet.decoder_channels},
                  {"iterations", pcnet.iterations},
                  {"mu", pcnet.mu},
                  {"enhance_block", pcnet.enhance_block},
                  {"fr_block", pcnet.fr_block},
                  {"feedback", pcnet.feedback}};
    j["loss"] = {{"mu", loss.mu},
                 {"iteration_weighting", LossConfig::to_string(loss.weighting)},
                 {"edge_weight_window", loss.edge_weight_window}};
    j["data"] = {{"root", data_root},
                 {"train_split", train_split},
                 {"eval_root", eval_root},
                 {"eval_split", eval_split}};
    j["out_dir"] = out_dir;
    return j.dump(2);
}

TrainConfig TrainConfig::from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("could not parse config: ") + e.what());
    }

    std::string scale = "desk";
    if (j.contains("scale")) scale = j.at("scale").get<std::string>();
    TrainConfig c = scale == "paper" ? paper_defaults() : desk_defaults();
    j.erase("scale");
    c.scale = scale;

    take(j, "seed", c.seed);
    take(j, "deterministic", c.deterministic);
    take(j, "optimizer", c.optimizer);
    take(j, "lr", c.lr);
    take(j, "lr_decay", c.lr_decay);
    take(j, "decay_epoch", c.decay_epoch);
    take(j, "weight_decay", c.weight_decay);
    take(j, "batch_size", c.batch_size);
    take(j, "epochs", c.epochs);
    take(j, "max_steps", c.max_steps);
    take(j, "input_size", c.input_size);
    take(j, "augmentation", c.augmentation);
    take(j, "eval_every", c.eval_every);
    take(j, "out_dir", c.out_dir);

    if (auto it = j.find("pcnet"); it != j.end()) {
        json p = *it;
        std::string backbone = c.pcnet.backbone.name;
        take(p, "backbone", backbone);
        c.pcnet.backbone = backbone == "pvt_class" ? BackboneSpec::pvt_class() : BackboneSpec::tiny_test();
        c.pcnet.backbone.name = backbone; // validate() rejects unknown names
        take(p, "pretrained", c.pcnet.backbone.pretrained);
        take(p, "pretrained_path", c.pcnet.backbone.pretrained_path);
        take(p, "decoder_channels", c.pcnet.decoder_channels);
        take(p, "iterations", c.pcnet.iterations);
        take(p, "mu", c.pcnet.mu);
        take(p, "enhance_block", c.pcnet.enhance_block);
        take(p, "fr_block", c.pcnet.fr_block);
        take(p, "feedback", c.pcnet.feedback);
        reject_unknown(p, "pcnet.");
        j.erase(it);
    }
    if (auto it = j.find("loss"); it != j.end()) {
        json l = *it;
        take(l, "mu", c.loss.mu);
        if (auto w = l.find("iteration_weighting"); w != l.end()) {
            c.loss.weighting = LossConfig::weighting_from_string(w->get<std::string>());
            l.erase(w);
        }
        take(l, "edge_weight_window", c.loss.edge_weight_window);
        reject_unknown(l, "loss.");
        j.erase(it);
    }
    if (auto it = j.find("data"); it != j.end()) {
        json d = *it;
        take(d, "root", c.data_root);
        take(d, "train_split", c.train_split);
        take(d, "eval_root", c.eval_root);
        take(d, "eval_split", c.eval_split);
        reject_unknown(d, "data.");
        j.erase(it);
    }
    reject_unknown(j, "");

    c.pcnet.input_size = c.input_size;
    c.validate();
    return c;
}

TrainConfig TrainConfig::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("missing config file: " + path.string());
    std::string text(std::istreambuf_iterator<char>(in), {});
    return from_json_string(text);
}

void TrainConfig::apply_override(const std::string& key_eq_value) {
    const auto eq = key_eq_value.find('=');
    if (eq == std::string::npos || eq == 0)
        throw std::invalid_argument("override must look like key=value, got: " + key_eq_value);
    std::string key = key_eq_value.substr(0, eq);
    const std::string value = key_eq_value.substr(eq + 1);

    json doc = json::parse(to_json_string());
    std::string pointer = "/";
    for (char ch : key) pointer += ch == '.' ? '/' : ch;
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::parse_error&) {
        parsed = value; // bare strings stay strings
    }
    doc[json::json_pointer(pointer)] = parsed;
    *this = from_json_string(doc.dump());
}

// ---- data plumbing ----

namespace {

struct Sample {
    std::string id;
    AttributeSet attributes;
    torch::Tensor image; // [1,3,S,S]
    torch::Tensor gt;    // [1,1,S,S]
};

Sample load_sample(const SampleRecord& rec, int input_size) {
    Sample s;
    s.id = rec.id;
    s.attributes = rec.attributes;
    s.image = image_to_tensor(load_image(rec.image_path), input_size);
    s.gt = mask_to_tensor(load_mask_png(rec.object_mask_path), input_size);
    return s;
}

// Training batches skip empty-GT samples: the edge weighting degenerates.
std::vector<const SampleRecord*> trainable_records(const DatasetManifest& manifest) {
    std::vector<const SampleRecord*> out;
    for (const auto& rec : manifest.records) {
        if (load_mask_png(rec.object_mask_path).foreground_count() == 0) continue;
        out.push_back(&rec);
    }
    if (out.empty()) throw std::invalid_argument("no trainable samples (all ground truths empty)");
    return out;
}

AggregateReport evaluate_model(PCNet& model, const std::vector<const SampleRecord*>& records,
                               int input_size, std::optional<int> iterations_override, bool slices) {
    torch::NoGradGuard guard;
    const bool was_training = model->is_training();
    model->eval();
    std::vector<std::pair<AttributeSet, MetricReport>> reports;
    for (const SampleRecord* rec : records) {
        const auto image = image_to_tensor(load_image(rec->image_path), input_size);
        const BinaryMask gt = load_mask_png(rec->object_mask_path);
        const ForwardOutputs out = model->forward(image, iterations_override);
        const ScoreMap pred = to_score_map(out.iterations.back().p_ref);
        const ScoreMap restored = resize_bilinear(pred, gt.height(), gt.width());
        reports.emplace_back(rec->attributes, evaluate_image(restored, gt));
    }
    if (was_training) model->train();
    return aggregate(reports, slices);
}

} // namespace

RunArtifacts train(const DatasetManifest& manifest, const TrainConfig& cfg) {
    cfg.validate();
    torch::manual_seed(cfg.seed);
    if (cfg.deterministic) torch::set_num_threads(1);

    const auto records = trainable_records(manifest);
    const int n = static_cast<int>(records.size());
    const int steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    const int total_steps = cfg.max_steps > 0 ? cfg.max_steps : cfg.epochs * steps_per_epoch;
    const int eval_stride = cfg.eval_every > 0
                                ? cfg.eval_every
                                : (cfg.max_steps > 0 ? std::max(1, total_steps / 10) : steps_per_epoch);

    PCNet model(cfg.pcnet);
    if (cfg.pcnet.backbone.pretrained)
        load_pretrained_backbone(model, cfg.pcnet.backbone.pretrained_path);
    model->train();
    torch::optim::AdamW optimizer(model->parameters(),
                                  torch::optim::AdamWOptions(cfg.lr).weight_decay(cfg.weight_decay));

    // cache decoded samples when they comfortably fit in memory
    const bool cache = static_cast<std::int64_t>(n) * cfg.input_size * cfg.input_size <= 32'000'000;
    std::vector<Sample> cached;
    if (cache)
        for (const auto* rec : records) cached.push_back(load_sample(*rec, cfg.input_size));
    const auto sample_at = [&](int idx) {
        return cache ? cached[idx] : load_sample(*records[idx], cfg.input_size);
    };

    const std::filesystem::path out_dir(cfg.out_dir);
    std::filesystem::create_directories(out_dir);
    std::ofstream curve(out_dir / "training_curve.csv");
    curve << "step,total_loss,l_e,l_r\n";

    RunArtifacts artifacts;
    artifacts.curve_csv = out_dir / "training_curve.csv";
    artifacts.checkpoint_path = out_dir / "checkpoint_final.pcnet";
    artifacts.best_checkpoint_path = out_dir / "checkpoint_best.pcnet";

    double best_s_alpha = -1.0;
    int step = 0;
    for (int epoch = 0; step < total_steps; ++epoch) {
        if (epoch == cfg.decay_epoch)
            for (auto& group : optimizer.param_groups())
                group.options().set_lr(group.options().get_lr() * cfg.lr_decay);

        std::mt19937_64 epoch_rng(cfg.seed * 0x100000001b3ull + static_cast<std::uint64_t>(epoch));
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        for (int i = n - 1; i > 0; --i) std::swap(order[i], order[epoch_rng() % (i + 1)]);

        for (int start = 0; start < n && step < total_steps; start += cfg.batch_size) {
            const int end = std::min(n, start + cfg.batch_size);
            std::vector<torch::Tensor> images, gts;
            std::vector<std::string> batch_ids;
            for (int b = start; b < end; ++b) {
                Sample s = sample_at(order[b]);
                if (cfg.augmentation == "flip" && unit(epoch_rng) < 0.5) {
                    s.image = torch::flip(s.image, {3});
                    s.gt = torch::flip(s.gt, {3});
                }
                images.push_back(s.image);
                gts.push_back(s.gt);
                batch_ids.push_back(s.id);
            }
            const auto image_batch = torch::cat(images, 0);
            const auto gt_batch = torch::cat(gts, 0);

            const ForwardOutputs outputs = model->forward(image_batch);
            const LossTerms loss = total_loss(outputs, gt_batch, cfg.loss);
            const double total = loss.total.item<double>();
            if (!std::isfinite(total)) {
                std::string ids;
                for (const auto& id : batch_ids) ids += (ids.empty() ? "" : ",") + id;
                throw std::runtime_error("non-finite loss at step " + std::to_string(step) +
                                         "; offending batch ids: " + ids);
            }
            optimizer.zero_grad();
            loss.total.backward();
            optimizer.step();

            char line[160];
            std::snprintf(line, sizeof(line), "%d,%.9g,%.9g,%.9g\n", step, total,
                          loss.enhancement.item<double>(), loss.refinement.item<double>());
            curve << line;
            ++step;

            if (step % eval_stride == 0 || step == total_steps) {
                const AggregateReport r = evaluate_model(model, records, cfg.input_size, {}, false);
                if (r.means.s_alpha > best_s_alpha) {
                    best_s_alpha = r.means.s_alpha;
                    save_checkpoint(artifacts.best_checkpoint_path, model);
                }
            }
        }
    }
    curve.close();
    save_checkpoint(artifacts.checkpoint_path, model);

    std::vector<const SampleRecord*> eval_records = records;
    DatasetManifest eval_manifest;
    if (!cfg.eval_root.empty()) {
        eval_manifest = load_manifest(cfg.eval_root, split_from_string(cfg.eval_split));
        eval_records.clear();
        for (const auto& rec : eval_manifest.records) eval_records.push_back(&rec);
    }
    artifacts.final_eval = evaluate_model(model, eval_records, cfg.input_size, {}, true);
    return artifacts;
}

AggregateReport evaluate(const DatasetManifest& manifest, const std::filesystem::path& checkpoint,
                         const TrainConfig& cfg, std::optional<int> iterations_override) {
    PCNet model = load_checkpoint(checkpoint);
    const PCNetConfig& have = model->config();
    const PCNetConfig& want = cfg.pcnet;
    if (have.backbone.name != want.backbone.name || have.backbone.channels != want.backbone.channels ||
        have.decoder_channels != want.decoder_channels || have.enhance_block != want.enhance_block ||
        have.fr_block != want.fr_block || have.feedback != want.feedback)
        throw std::invalid_argument("checkpoint/config mismatch: checkpoint " + have.to_json_string() +
                                    " vs config " + want.to_json_string());
    if (cfg.deterministic) torch::set_num_threads(1);
    std::vector<const SampleRecord*> records;
    for (const auto& rec : manifest.records) records.push_back(&rec);
    if (records.empty()) throw std::invalid_argument("evaluate: empty manifest");
    return evaluate_model(model, records, cfg.input_size, iterations_override, true);
}

AggregateReport evaluate_gt_self(const DatasetManifest& manifest) {
    std::vector<std::pair<AttributeSet, MetricReport>> reports;
    for (const auto& rec : manifest.records) {
        const BinaryMask gt = load_mask_png(rec.object_mask_path);
        reports.emplace_back(rec.attributes, evaluate_image(gt.to_score_map(), gt));
    }
    if (reports.empty()) throw std::invalid_argument("evaluate_gt_self: empty manifest");
    return aggregate(reports, true);
}

AblationAxis ablation_axis_from_string(const std::string& s) {
    if (s == "components") return AblationAxis::components;
    if (s == "iterations") return AblationAxis::iterations;
    if (s == "resolution") return AblationAxis::resolution;
    throw std::invalid_argument("unknown ablation axis: " + s +
                                " (expected components|iterations|resolution)");
}

std::vector<AblationRow> ablation_suite(const DatasetManifest& manifest, const TrainConfig& base_cfg,
                                        AblationAxis axis, const std::vector<int>& resolutions) {
    std::vector<AblationRow> rows;
    const auto run = [&](const TrainConfig& cfg, const std::string& label) {
        const RunArtifacts artifacts = train(manifest, cfg);
        rows.push_back(AblationRow{label, cfg.pcnet.hash(), artifacts.final_eval});
    };

    switch (axis) {
    case AblationAxis::components:
        for (int bits = 0; bits < 8; ++bits) {
            TrainConfig cfg = base_cfg;
            cfg.pcnet.enhance_block = bits & 4;
            cfg.pcnet.fr_block = bits & 2;
            cfg.pcnet.feedback = bits & 1;
            const auto mark = [](bool on) { return on ? "on" : "off"; };
            const std::string label = std::string("EB=") + mark(cfg.pcnet.enhance_block) +
                                      ",FR=" + mark(cfg.pcnet.fr_block) + ",FB=" + mark(cfg.pcnet.feedback);
            cfg.out_dir = base_cfg.out_dir + "/components_" + std::to_string(bits);
            run(cfg, label);
        }
        break;
    case AblationAxis::iterations:
        for (int j = 1; j <= 5; ++j) {
            TrainConfig cfg = base_cfg;
            cfg.pcnet.iterations = j;
            cfg.out_dir = base_cfg.out_dir + "/iter_" + std::to_string(j);
            run(cfg, "iter = " + std::to_string(j));
        }
        break;
    case AblationAxis::resolution: {
        std::vector<int> sizes = resolutions;
        if (sizes.empty()) sizes = base_cfg.scale == "paper" ? std::vector<int>{352, 384} : std::vector<int>{64, 96};
        for (int s : sizes) {
            TrainConfig cfg = base_cfg;
            cfg.input_size = s;
            cfg.pcnet.input_size = s;
            cfg.out_dir = base_cfg.out_dir + "/res_" + std::to_string(s);
            run(cfg, std::to_string(s) + "x" + std::to_string(s));
        }
        break;
    }
    }
    return rows;
}

} // namespace pcd::net

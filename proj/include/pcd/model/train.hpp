#ifndef PCD_MODEL_TRAIN_HPP
#define PCD_MODEL_TRAIN_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pcd/dataset.hpp"
#include "pcd/metrics.hpp"
#include "pcd/model/losses.hpp"
#include "pcd/model/pcnet.hpp"

namespace pcd::net {

struct TrainConfig {
    std::string scale = "desk"; // paper | desk
    std::uint64_t seed = 7;
    bool deterministic = true;

    std::string optimizer = "adamw";
    double lr = 2e-3;
    double lr_decay = 0.1;
    int decay_epoch = 100;
    double weight_decay = 0.01;
    int batch_size = 8;
    int epochs = 5;
    int max_steps = 0; // when > 0, run exactly this many optimization steps
    int input_size = 64;
    std::string augmentation = "none"; // flip | none
    int eval_every = 0;                // epochs (or steps in max_steps mode); 0 = auto

    PCNetConfig pcnet;
    LossConfig loss;

    std::string data_root;
    std::string train_split = "train";
    std::string eval_root;  // empty: evaluate on the training manifest
    std::string eval_split = "test";
    std::string out_dir = "runs/latest";

    void validate() const;
    std::string to_json_string() const;

    static TrainConfig paper_defaults();
    static TrainConfig desk_defaults();
    /// Strict parse: any unknown key is an error naming the key path.
    static TrainConfig from_json_file(const std::filesystem::path& path);
    static TrainConfig from_json_string(const std::string& text);
    /// Dotted-path override, e.g. "pcnet.iterations=3" or "lr=1e-4".
    void apply_override(const std::string& key_eq_value);
};

struct RunArtifacts {
    std::filesystem::path checkpoint_path;
    std::filesystem::path best_checkpoint_path;
    std::filesystem::path curve_csv;
    AggregateReport final_eval;
};

/// Full training loop: seeded, step-decayed AdamW over the manifest with
/// iteration-weighted supervision; logs per-step losses, checkpoints the last
/// and the best-S_alpha state, and evaluates at the end.
RunArtifacts train(const DatasetManifest& manifest, const TrainConfig& cfg);

/// Inference at cfg.input_size, final-iteration refinement map squashed to
/// [0,1], restored to each image's native resolution, scored per image with
/// attribute slices. `iterations_override` selects an earlier iteration.
AggregateReport evaluate(const DatasetManifest& manifest, const std::filesystem::path& checkpoint,
                         const TrainConfig& cfg, std::optional<int> iterations_override = {});

/// Harness self-test: scores each GT against itself.
AggregateReport evaluate_gt_self(const DatasetManifest& manifest);

enum class AblationAxis { components, iterations, resolution };

AblationAxis ablation_axis_from_string(const std::string& s);

struct AblationRow {
    std::string label;
    std::string config_hash;
    AggregateReport report;
};

/// Runs train+evaluate per row: the 8 EB/FR/FB combinations, iteration counts
/// 1..5, or the given input resolutions.
std::vector<AblationRow> ablation_suite(const DatasetManifest& manifest, const TrainConfig& base_cfg,
                                        AblationAxis axis, const std::vector<int>& resolutions = {});

} // namespace pcd::net

#endif

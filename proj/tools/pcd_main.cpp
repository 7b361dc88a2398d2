// pcd — PlantCamo-style benchmark harness: dataset statistics, prediction-map
// benchmarking, PCNet training/evaluation, and ablation tables.
#include <CLI11.hpp>

#include <iostream>

#include "pcd/dataset.hpp"
#include "pcd/leaderboard.hpp"
#include "pcd/model/train.hpp"
#include "pcd/synthetic.hpp"

namespace {

using namespace pcd;
using namespace pcd::net;
namespace fs = std::filesystem;

struct CommonTrainArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool deterministic = false;
};

TrainConfig resolved_config(const CommonTrainArgs& args) {
    TrainConfig cfg = TrainConfig::from_json_file(args.config_path);
    for (const auto& kv : args.overrides) cfg.apply_override(kv);
    if (!args.out.empty()) cfg.out_dir = args.out;
    if (args.seed) cfg.seed = *args.seed;
    if (args.deterministic) cfg.deterministic = true;
    cfg.validate();
    return cfg;
}

void print_tab3_row(const AggregateReport& report) {
    // four key indicators first, then the full nine-metric row
    std::printf("S_alpha↑,F_w_beta↑,M↓,E_ad_phi↑\n");
    std::printf("%.4f,%.4f,%.4f,%.4f\n", report.means.s_alpha, report.means.f_w, report.means.mae,
                report.means.e_adaptive);
    std::printf("\n");
    const auto fields = report.scalar_fields();
    for (std::size_t i = 0; i < fields.size(); ++i)
        std::printf("%s%s", fields[i].first.c_str(), i + 1 < fields.size() ? "," : "\n");
    for (std::size_t i = 0; i < fields.size(); ++i)
        std::printf("%.4f%s", fields[i].second, i + 1 < fields.size() ? "," : "\n");
}

void write_report_csv(const AggregateReport& report, const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    out << "slice";
    for (const auto& [name, _] : report.scalar_fields()) out << "," << name;
    out << ",images,f_excluded\n";
    const auto row = [&out](const std::string& label, const AggregateReport& r) {
        out << label;
        for (const auto& [_, value] : r.scalar_fields()) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), ",%.4f", value);
            out << buf;
        }
        out << "," << r.image_count << "," << r.f_excluded_count << "\n";
    };
    row("all", report);
    for (const auto& [code, sub] : report.per_attribute) row(code, sub);
}

int cmd_stats(const std::string& root, const std::string& split, const std::string& out) {
    const DatasetManifest manifest = load_manifest(root, split_from_string(split));
    const DatasetStats stats = compute_stats(manifest);
    write_stats_csv(stats, out);
    std::printf("stats: %zu records, %zu categories -> %s\n", manifest.records.size(),
                stats.category_histogram.size(), out.c_str());
    return 0;
}

int cmd_synth(const std::string& out, std::uint64_t seed, int count, int size,
              const std::string& difficulty) {
    const DatasetManifest manifest =
        generate_synthetic(out, seed, count, size, difficulty_from_string(difficulty));
    std::printf("synthesized %zu records under %s\n", manifest.records.size(), out.c_str());
    return 0;
}

int cmd_eval_maps(const std::string& root, const std::string& split,
                  const std::vector<std::string>& pred_specs, const std::string& scores_file,
                  const std::string& out, bool allow_partial) {
    const DatasetManifest manifest = load_manifest(root, split_from_string(split));
    std::vector<LeaderboardRow> rows;

    for (const auto& spec : pred_specs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--pred expects name=dir, got: " + spec);
        const std::string name = spec.substr(0, eq);
        const fs::path dir = spec.substr(eq + 1);
        const MapEvaluation eval = evaluate_prediction_dir(name, dir, manifest, allow_partial);
        for (const auto& id : eval.missing)
            std::fprintf(stderr, "missing map: method %s, id %s\n", name.c_str(), id.c_str());
        if (!eval.evaluated) {
            std::fprintf(stderr, "method %s excluded (%zu missing maps; use --allow-partial to keep it)\n",
                         name.c_str(), eval.missing.size());
            continue;
        }
        rows.push_back(eval.row);
        write_curves_csv(eval.row.mean_curves, fs::path(out) / (name + "_curve.csv"));
    }
    if (!scores_file.empty()) {
        auto published = load_scores_file(scores_file);
        rows.insert(rows.end(), published.begin(), published.end());
    }
    if (rows.empty()) throw std::invalid_argument("eval-maps: no methods to rank");

    rank_rows(rows);
    write_leaderboard_csv(rows, fs::path(out) / "leaderboard.csv");
    write_leaderboard_markdown(rows, fs::path(out) / "leaderboard.md");
    std::printf("ranked %zu methods -> %s\n", rows.size(), (fs::path(out) / "leaderboard.csv").c_str());
    return 0;
}

int cmd_train(const CommonTrainArgs& args, const std::string& root_flag, const std::string& split_flag) {
    TrainConfig cfg = resolved_config(args);
    const std::string root = root_flag.empty() ? cfg.data_root : root_flag;
    if (root.empty()) throw std::invalid_argument("no dataset root (set --root or data.root)");
    const std::string split = split_flag.empty() ? cfg.train_split : split_flag;
    const DatasetManifest manifest = load_manifest(root, split_from_string(split));

    const RunArtifacts artifacts = train(manifest, cfg);
    std::printf("checkpoint: %s\n", artifacts.checkpoint_path.c_str());
    std::printf("best checkpoint: %s\n", artifacts.best_checkpoint_path.c_str());
    std::printf("training curve: %s\n", artifacts.curve_csv.c_str());
    write_report_csv(artifacts.final_eval, fs::path(cfg.out_dir) / "eval_report.csv");
    print_tab3_row(artifacts.final_eval);
    return 0;
}

int cmd_test(const CommonTrainArgs& args, const std::string& checkpoint, const std::string& root_flag,
             const std::string& split_flag, int iterations_override, bool self_test) {
    TrainConfig cfg = resolved_config(args);
    const std::string root = root_flag.empty() ? cfg.data_root : root_flag;
    if (root.empty()) throw std::invalid_argument("no dataset root (set --root or data.root)");
    const std::string split = split_flag.empty() ? cfg.eval_split : split_flag;
    const DatasetManifest manifest = load_manifest(root, split_from_string(split));

    AggregateReport report;
    if (self_test) {
        report = evaluate_gt_self(manifest);
    } else {
        if (checkpoint.empty()) throw std::invalid_argument("--checkpoint is required unless --self-test");
        report = evaluate(manifest, checkpoint, cfg,
                          iterations_override > 0 ? std::optional<int>(iterations_override) : std::nullopt);
    }
    print_tab3_row(report);
    if (!args.out.empty()) write_report_csv(report, fs::path(args.out) / "eval_report.csv");
    return 0;
}

int cmd_ablate(const CommonTrainArgs& args, const std::string& axis_name, std::vector<int> sizes,
               const std::string& root_flag) {
    TrainConfig cfg = resolved_config(args);
    const std::string root = root_flag.empty() ? cfg.data_root : root_flag;
    if (root.empty()) throw std::invalid_argument("no dataset root (set --root or data.root)");
    const DatasetManifest manifest = load_manifest(root, split_from_string(cfg.train_split));

    const AblationAxis axis = ablation_axis_from_string(axis_name);
    const auto rows = ablation_suite(manifest, cfg, axis, sizes);

    const fs::path out_dir = args.out.empty() ? fs::path(cfg.out_dir) : fs::path(args.out);
    fs::create_directories(out_dir);
    const fs::path table_path = out_dir / ("ablation_" + axis_name + ".csv");
    std::ofstream out(table_path);

    // per-axis column layout of the report tables
    std::vector<std::pair<std::string, int>> columns; // name -> scalar_fields index
    if (axis == AblationAxis::components)
        columns = {{"S_alpha", 0}, {"F_w_beta", 1}, {"MAE", 2}, {"E_mean", 4}, {"F_mean", 7}};
    else if (axis == AblationAxis::iterations)
        columns = {{"S_alpha", 0}, {"F_w_beta", 1}, {"MAE", 2}, {"E_adaptive", 3}, {"F_mean", 7}};
    else
        for (int i = 0; i < 9; ++i) columns.emplace_back(kLeaderboardColumns[i], i);

    out << (axis == AblationAxis::components ? "EB,FR,FB"
            : axis == AblationAxis::iterations ? "iterations"
                                               : "resolution");
    out << ",config_hash";
    for (const auto& [name, _] : columns) out << "," << name;
    out << "\n";
    for (const auto& row : rows) {
        std::string label = row.label;
        if (axis == AblationAxis::components) {
            // "EB=on,FR=off,FB=on" -> "on,off,on"
            std::string flat;
            for (const auto& part : {0, 1, 2}) {
                const auto start = label.find('=', part == 0 ? 0 : label.find('=', flat.size()));
                (void)start;
            }
            flat = label;
            for (const char* key : {"EB=", "FR=", "FB="}) {
                const auto pos = flat.find(key);
                if (pos != std::string::npos) flat.erase(pos, 3);
            }
            label = flat;
        }
        out << label << "," << row.config_hash;
        const auto fields = row.report.scalar_fields();
        for (const auto& [_, idx] : columns) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), ",%.4f", fields[idx].second);
            out << buf;
        }
        out << "\n";
    }
    std::printf("ablation table: %s (%zu rows)\n", table_path.c_str(), rows.size());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"camouflaged-plant segmentation benchmark harness"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic camouflage dataset");
    std::string synth_out, synth_difficulty = "easy";
    std::uint64_t synth_seed = 0;
    int synth_count = 8, synth_size = 64;
    synth->add_option("--out", synth_out, "output dataset root")->required();
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--count", synth_count, "number of samples");
    synth->add_option("--size", synth_size, "image side length (>= 32)");
    synth->add_option("--difficulty", synth_difficulty, "easy|hard");

    // stats
    auto* stats = app.add_subcommand("stats", "dataset statistics CSVs");
    std::string stats_root, stats_split = "full", stats_out;
    stats->add_option("--root", stats_root, "dataset root")->required();
    stats->add_option("--split", stats_split, "full|train|test");
    stats->add_option("--out", stats_out, "output directory")->required();

    // eval-maps
    auto* eval_maps = app.add_subcommand("eval-maps", "score saved prediction maps into a leaderboard");
    std::string em_root, em_split = "full", em_scores, em_out;
    std::vector<std::string> em_preds;
    bool em_partial = false;
    eval_maps->add_option("--root", em_root, "dataset root with GT masks")->required();
    eval_maps->add_option("--split", em_split, "full|train|test");
    eval_maps->add_option("--pred", em_preds, "method spec name=dir (repeatable)");
    eval_maps->add_option("--scores-file", em_scores, "published scalar scores CSV");
    eval_maps->add_option("--out", em_out, "output directory")->required();
    eval_maps->add_flag("--allow-partial", em_partial, "keep methods with missing maps");

    const auto add_common = [](CLI::App* cmd, CommonTrainArgs& args) {
        cmd->add_option("--config", args.config_path, "training config json")->required();
        cmd->add_option("--set", args.overrides, "dotted-key override key=value (repeatable)");
        cmd->add_option("--out", args.out, "output directory override");
        cmd->add_option("--seed", args.seed, "seed override");
        cmd->add_flag("--deterministic", args.deterministic, "single-threaded deterministic mode");
    };

    // train
    auto* train_cmd = app.add_subcommand("train", "train PCNet");
    CommonTrainArgs train_args;
    std::string train_root, train_split;
    add_common(train_cmd, train_args);
    train_cmd->add_option("--root", train_root, "dataset root (overrides data.root)");
    train_cmd->add_option("--split", train_split, "training split (overrides data.train_split)");

    // test
    auto* test_cmd = app.add_subcommand("test", "evaluate a checkpoint");
    CommonTrainArgs test_args;
    std::string test_ckpt, test_root, test_split;
    int test_iterations = 0;
    bool test_self = false;
    add_common(test_cmd, test_args);
    test_cmd->add_option("--checkpoint", test_ckpt, "checkpoint archive");
    test_cmd->add_option("--root", test_root, "dataset root (overrides data.root)");
    test_cmd->add_option("--split", test_split, "eval split (overrides data.eval_split)");
    test_cmd->add_option("--iterations", test_iterations, "evaluate an earlier feedback iteration");
    test_cmd->add_flag("--self-test", test_self, "score each GT against itself");

    // ablate
    auto* ablate_cmd = app.add_subcommand("ablate", "component/iteration/resolution ablation tables");
    CommonTrainArgs ablate_args;
    std::string ablate_axis = "components", ablate_root;
    std::vector<int> ablate_sizes;
    add_common(ablate_cmd, ablate_args);
    ablate_cmd->add_option("--axis", ablate_axis, "components|iterations|resolution");
    ablate_cmd->add_option("--sizes", ablate_sizes, "input sizes for the resolution axis");
    ablate_cmd->add_option("--root", ablate_root, "dataset root (overrides data.root)");

    try {
        app.parse(argc, argv);
        if (*synth) return cmd_synth(synth_out, synth_seed, synth_count, synth_size, synth_difficulty);
        if (*stats) return cmd_stats(stats_root, stats_split, stats_out);
        if (*eval_maps) return cmd_eval_maps(em_root, em_split, em_preds, em_scores, em_out, em_partial);
        if (*train_cmd) return cmd_train(train_args, train_root, train_split);
        if (*test_cmd) return cmd_test(test_args, test_ckpt, test_root, test_split, test_iterations, test_self);
        if (*ablate_cmd) return cmd_ablate(ablate_args, ablate_axis, ablate_sizes, ablate_root);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

#ifndef PCD_LEADERBOARD_HPP
#define PCD_LEADERBOARD_HPP

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pcd/dataset.hpp"
#include "pcd/metrics.hpp"

namespace pcd {

/// Column order of the nine-metric benchmark tables.
/// MAE ranks ascending, everything else descending.
inline const std::array<const char*, 9> kLeaderboardColumns = {
    "S_alpha", "F_w_beta", "MAE", "E_adaptive", "E_mean", "E_max", "F_adaptive", "F_mean", "F_max"};

struct LeaderboardRow {
    std::string method;
    std::string backbone;
    std::array<double, 9> values{};
    std::array<int, 9> rank{}; // 1-based per column; top-3 are the report markers
    bool has_curves = false;
    MetricReport mean_curves; // precision/recall/f curves averaged over images

    static LeaderboardRow from_report(std::string method, std::string backbone, const AggregateReport& r);
};

/// Fills per-column ranks; ties broken lexicographically by method name.
void rank_rows(std::vector<LeaderboardRow>& rows);

/// Scores one prediction directory (one 8-bit map per GT id) against the
/// manifest. Missing ids are listed in `missing`; with allow_partial the
/// method is scored over the present ids, otherwise the row is not produced.
struct MapEvaluation {
    bool evaluated = false;
    LeaderboardRow row;
    std::vector<std::string> missing;
};
MapEvaluation evaluate_prediction_dir(const std::string& method, const std::filesystem::path& dir,
                                      const DatasetManifest& manifest, bool allow_partial);

/// Rows from a published-scores CSV
/// (method,backbone,s_alpha,f_w_beta,mae,e_adaptive,e_mean,e_max,f_adaptive,f_mean,f_max).
std::vector<LeaderboardRow> load_scores_file(const std::filesystem::path& path);

void write_leaderboard_csv(const std::vector<LeaderboardRow>& rows, const std::filesystem::path& path);
void write_leaderboard_markdown(const std::vector<LeaderboardRow>& rows, const std::filesystem::path& path);

/// 256-row curve export: threshold,precision,recall,f_beta.
void write_curves_csv(const MetricReport& curves, const std::filesystem::path& path);

} // namespace pcd

#endif

#include "pcd/leaderboard.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include "pcd/image_io.hpp"

namespace pcd {

LeaderboardRow LeaderboardRow::from_report(std::string method, std::string backbone,
                                           const AggregateReport& r) {
    LeaderboardRow row;
    row.method = std::move(method);
    row.backbone = std::move(backbone);
    const auto fields = r.scalar_fields();
    for (std::size_t i = 0; i < row.values.size(); ++i) row.values[i] = fields[i].second;
    row.has_curves = true;
    row.mean_curves = r.means;
    return row;
}

void rank_rows(std::vector<LeaderboardRow>& rows) {
    for (std::size_t col = 0; col < kLeaderboardColumns.size(); ++col) {
        const bool ascending = std::string(kLeaderboardColumns[col]) == "MAE";
        std::vector<std::size_t> order(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (rows[a].values[col] != rows[b].values[col])
                return ascending ? rows[a].values[col] < rows[b].values[col]
                                 : rows[a].values[col] > rows[b].values[col];
            return rows[a].method < rows[b].method;
        });
        for (std::size_t pos = 0; pos < order.size(); ++pos)
            rows[order[pos]].rank[col] = static_cast<int>(pos) + 1;
    }
}

MapEvaluation evaluate_prediction_dir(const std::string& method, const std::filesystem::path& dir,
                                      const DatasetManifest& manifest, bool allow_partial) {
    MapEvaluation result;
    std::vector<const SampleRecord*> present;
    for (const auto& rec : manifest.records) {
        if (std::filesystem::exists(dir / (rec.id + ".png")))
            present.push_back(&rec);
        else
            result.missing.push_back(rec.id);
    }
    if (!result.missing.empty() && !allow_partial) return result;
    if (present.empty()) return result;

    // fan out across images; each evaluation is pure
    const std::size_t workers =
        std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), present.size());
    std::vector<std::pair<AttributeSet, MetricReport>> reports(present.size());
    std::vector<std::future<void>> futures;
    std::atomic<std::size_t> next{0};
    for (std::size_t t = 0; t < workers; ++t)
        futures.push_back(std::async(std::launch::async, [&] {
            for (std::size_t i = next.fetch_add(1); i < present.size(); i = next.fetch_add(1)) {
                const SampleRecord* rec = present[i];
                const ScoreMap pred = load_score_map_png(dir / (rec->id + ".png"));
                const BinaryMask gt = load_mask_png(rec->object_mask_path);
                reports[i] = {rec->attributes, evaluate_image(pred, gt)};
            }
        }));
    for (auto& f : futures) f.get();

    result.row = LeaderboardRow::from_report(method, "-", aggregate(reports, false));
    result.evaluated = true;
    return result;
}

std::vector<LeaderboardRow> load_scores_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("missing scores file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty scores file: " + path.string());

    const std::string expected = "method,backbone,s_alpha,f_w_beta,mae,e_adaptive,e_mean,e_max,"
                                 "f_adaptive,f_mean,f_max";
    auto strip = [](std::string s) {
        while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
        return s;
    };
    if (strip(line) != expected)
        throw std::invalid_argument("scores file header must be: " + expected);

    std::vector<LeaderboardRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (strip(line).empty()) continue;
        std::stringstream ss(line);
        std::string field;
        LeaderboardRow row;
        std::getline(ss, row.method, ',');
        std::getline(ss, row.backbone, ',');
        for (std::size_t i = 0; i < row.values.size(); ++i) {
            if (!std::getline(ss, field, ','))
                throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) +
                                            ": expected 11 fields");
            row.values[i] = std::stod(field);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_leaderboard_csv(const std::vector<LeaderboardRow>& rows, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    out << "method,backbone";
    for (const char* col : kLeaderboardColumns) {
        std::string name = col;
        std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
        out << "," << name << "," << name << "_rank";
    }
    out << "\n";
    for (const auto& row : rows) {
        out << row.method << "," << row.backbone;
        for (std::size_t i = 0; i < row.values.size(); ++i) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.4f", row.values[i]);
            out << "," << buf << "," << row.rank[i];
        }
        out << "\n";
    }
}

void write_leaderboard_markdown(const std::vector<LeaderboardRow>& rows,
                                const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    out << "| Method | Backbone |";
    for (const char* col : kLeaderboardColumns)
        out << " " << col << (std::string(col) == "MAE" ? "↓" : "↑") << " |";
    out << "\n|---|---|";
    for (std::size_t i = 0; i < kLeaderboardColumns.size(); ++i) out << "---|";
    out << "\n";
    for (const auto& row : rows) {
        out << "| " << row.method << " | " << row.backbone << " |";
        for (std::size_t i = 0; i < row.values.size(); ++i) {
            char buf[48];
            if (row.rank[i] <= 3)
                std::snprintf(buf, sizeof(buf), " **%.3f** (%d) |", row.values[i], row.rank[i]);
            else
                std::snprintf(buf, sizeof(buf), " %.3f |", row.values[i]);
            out << buf;
        }
        out << "\n";
    }
}

void write_curves_csv(const MetricReport& curves, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    out << "threshold,precision,recall,f_beta\n";
    for (int t = 0; t < kThresholdSteps; ++t) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f\n", t, curves.precision_curve[t],
                      curves.recall_curve[t], curves.f_curve[t]);
        out << buf;
    }
}

} // namespace pcd

#ifndef PCD_METRICS_HPP
#define PCD_METRICS_HPP

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pcd/mask.hpp"

namespace pcd {

inline constexpr int kThresholdSteps = 256; // t = 0..255 applied as t/255
inline constexpr double kFBetaSq = 0.3;     // plain F-measure
inline constexpr double kSAlpha = 0.5;      // S-measure object/region mix

enum class Variant { adaptive, mean, max };

Variant variant_from_string(const std::string& s);

/// Per-image values for the nine-metric protocol plus the threshold curves.
struct MetricReport {
    double s_alpha = 0.0;
    double f_w = 0.0;
    double mae = 0.0;
    double e_adaptive = 0.0, e_mean = 0.0, e_max = 0.0;
    double f_adaptive = 0.0, f_mean = 0.0, f_max = 0.0;
    std::array<double, kThresholdSteps> precision_curve{};
    std::array<double, kThresholdSteps> recall_curve{};
    std::array<double, kThresholdSteps> f_curve{};
    /// Empty-GT images are excluded from F-family aggregation and flagged here.
    bool gt_empty = false;
};

/// Mean absolute per-pixel error.
double mae(const ScoreMap& pred, const BinaryMask& gt);

/// Plain F-measure (beta^2 = 0.3). Throws on empty GT; evaluate_image flags instead.
double f_measure(const ScoreMap& pred, const BinaryMask& gt, Variant variant);

/// Weighted F-measure (beta^2 = 1) with dependency-weighted errors and
/// distance-decayed importance. Throws on empty GT.
double weighted_f(const ScoreMap& pred, const BinaryMask& gt);

/// Structure-measure: alpha-blend of object- and region-aware similarity, clamped to [0,1].
/// Degenerate GT: all-background -> 1 - mean(pred); all-foreground -> mean(pred).
double s_measure(const ScoreMap& pred, const BinaryMask& gt);

/// Enhanced-alignment measure over mean-biased maps.
double e_measure(const ScoreMap& pred, const BinaryMask& gt, Variant variant);

/// All nine scalars plus curves in one pass over thresholds.
/// Pred is resized (bilinear) to the GT resolution when shapes differ.
MetricReport evaluate_image(const ScoreMap& pred, const BinaryMask& gt);

/// Dataset-level aggregate: arithmetic means per metric, optional per-attribute slices.
struct AggregateReport {
    std::size_t image_count = 0;
    std::size_t f_excluded_count = 0; // empty-GT images skipped in F-family means
    MetricReport means;
    std::map<std::string, AggregateReport> per_attribute;

    std::vector<std::pair<std::string, double>> scalar_fields() const;
};

AggregateReport aggregate(const std::vector<std::pair<AttributeSet, MetricReport>>& reports,
                          bool slice_by_attribute);
AggregateReport aggregate(const std::vector<MetricReport>& reports);

} // namespace pcd

#endif

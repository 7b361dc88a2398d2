#include "pcd/metrics.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <numeric>

namespace pcd {

namespace {

constexpr double kEps = DBL_EPSILON;

void check_same_shape(const ScoreMap& pred, const BinaryMask& gt) {
    if (pred.height() != gt.height() || pred.width() != gt.width())
        throw std::invalid_argument("prediction/GT shape mismatch: " + std::to_string(pred.height()) + "x" +
                                    std::to_string(pred.width()) + " vs " + std::to_string(gt.height()) + "x" +
                                    std::to_string(gt.width()));
}

// Metric-internal thresholding: strict everywhere except at tau = 1.0, where
// saturated pixels are kept. Keeps empty predictions at score 0 across the
// grid and perfect predictions at score 1 at the top threshold.
inline bool exceeds(double p, double tau) {
    return tau >= 1.0 ? p >= 1.0 : p > tau;
}

// Number of grid thresholds t in [0,255] with exceeds(p, t/255).
int satisfied_thresholds(double p) {
    int lo = 0, hi = kThresholdSteps - 1;
    while (lo < hi) {
        int mid = (lo + hi) / 2;
        if (p > mid / 255.0)
            lo = mid + 1;
        else
            hi = mid;
    }
    return lo + (p >= 1.0 ? 1 : 0);
}

struct ThresholdCounts {
    std::array<double, kThresholdSteps> tp{}; // foreground pixels above t/255
    std::array<double, kThresholdSteps> pp{}; // all pixels above t/255 (predicted positive)
    double fg = 0.0;
    double n = 0.0;
    // counts at the per-image adaptive threshold
    double tp_adaptive = 0.0;
    double pp_adaptive = 0.0;
};

ThresholdCounts count_thresholds(const ScoreMap& pred, const BinaryMask& gt) {
    ThresholdCounts c;
    const std::size_t n = pred.size();
    c.n = static_cast<double>(n);

    std::array<std::int64_t, kThresholdSteps + 1> hist_fg{};
    std::array<std::int64_t, kThresholdSteps + 1> hist_all{};
    const double tau = adaptive_threshold(pred);
    const auto& pv = pred.values();
    const auto& gv = gt.values();
    for (std::size_t i = 0; i < n; ++i) {
        const int k = satisfied_thresholds(pv[i]);
        ++hist_all[k];
        const bool fg = gv[i] != 0;
        if (fg) ++hist_fg[k];
        if (exceeds(pv[i], tau)) {
            ++c.pp_adaptive;
            if (fg) ++c.tp_adaptive;
        }
    }
    std::int64_t fg_suffix = 0, all_suffix = 0;
    for (int t = kThresholdSteps; t-- > 0;) {
        fg_suffix += hist_fg[t + 1];
        all_suffix += hist_all[t + 1];
        c.tp[t] = static_cast<double>(fg_suffix);
        c.pp[t] = static_cast<double>(all_suffix);
    }
    c.fg = static_cast<double>(gt.foreground_count());
    return c;
}

double f_beta(double tp, double pred_pos, double fg_total) {
    const double p = pred_pos > 0.0 ? tp / pred_pos : 0.0;
    const double r = fg_total > 0.0 ? tp / fg_total : 0.0;
    const double denom = kFBetaSq * p + r;
    if (denom == 0.0) return 0.0;
    return (1.0 + kFBetaSq) * p * r / denom;
}

// Mean enhanced alignment given the four confusion counts of a binarized map.
// Degenerate GT follows the reference convention: all-background -> mean(1-FM),
// all-foreground -> mean(FM).
double e_from_counts(double tp, double pp, double fg, double n) {
    if (fg == 0.0) return (n - pp) / n;
    if (fg == n) return pp / n;
    const double mu_f = pp / n;
    const double mu_g = fg / n;
    const auto enhanced = [](double phi_f, double phi_g) {
        const double xi = 2.0 * phi_f * phi_g / (phi_f * phi_f + phi_g * phi_g + kEps);
        return (1.0 + xi) * (1.0 + xi) / 4.0;
    };
    const double fp = pp - tp;
    const double fn = fg - tp;
    const double tn = n - fg - fp;
    const double sum = tp * enhanced(1.0 - mu_f, 1.0 - mu_g) + fp * enhanced(1.0 - mu_f, -mu_g) +
                       fn * enhanced(-mu_f, 1.0 - mu_g) + tn * enhanced(-mu_f, -mu_g);
    return sum / n;
}

// ---- S-measure helpers ----

double object_similarity(const ScoreMap& pred, const BinaryMask& gt, bool foreground) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if ((gt.values()[i] != 0) == foreground) {
            sum += foreground ? pred.values()[i] : 1.0 - pred.values()[i];
            ++count;
        }
    }
    if (count == 0) return 0.0;
    const double mean = sum / static_cast<double>(count);
    double var = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if ((gt.values()[i] != 0) == foreground) {
            const double v = (foreground ? pred.values()[i] : 1.0 - pred.values()[i]) - mean;
            var += v * v;
        }
    }
    const double sd = count > 1 ? std::sqrt(var / static_cast<double>(count - 1)) : 0.0;
    return 2.0 * mean / (mean * mean + 1.0 + sd + kEps);
}

double region_ssim(const ScoreMap& pred, const BinaryMask& gt, int y0, int y1, int x0, int x1) {
    const std::int64_t n = static_cast<std::int64_t>(y1 - y0) * (x1 - x0);
    if (n <= 0) return 0.0; // weight is zero for degenerate blocks
    double sum_p = 0.0, sum_g = 0.0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            sum_p += pred.at(y, x);
            sum_g += gt.at(y, x);
        }
    const double mp = sum_p / n, mg = sum_g / n;
    double var_p = 0.0, var_g = 0.0, cov = 0.0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            const double dp = pred.at(y, x) - mp;
            const double dg = gt.at(y, x) - mg;
            var_p += dp * dp;
            var_g += dg * dg;
            cov += dp * dg;
        }
    if (n > 1) {
        var_p /= n - 1;
        var_g /= n - 1;
        cov /= n - 1;
    } else {
        var_p = var_g = cov = 0.0;
    }
    const double alpha = 4.0 * mp * mg * cov;
    const double beta = (mp * mp + mg * mg) * (var_p + var_g);
    if (alpha != 0.0) return alpha / (beta + kEps);
    return beta == 0.0 ? 1.0 : 0.0;
}

double region_similarity(const ScoreMap& pred, const BinaryMask& gt) {
    const int h = gt.height(), w = gt.width();
    double total = 0.0, sum_x = 0.0, sum_y = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (gt.at(y, x)) {
                total += 1.0;
                sum_x += x + 1.0;
                sum_y += y + 1.0;
            }
    // 1-based split counts: left/top blocks span cx columns / cy rows
    const int cx = static_cast<int>(std::llround(sum_x / total));
    const int cy = static_cast<int>(std::llround(sum_y / total));
    const double area = static_cast<double>(h) * w;
    const double w1 = (static_cast<double>(cx) * cy) / area;
    const double w2 = (static_cast<double>(w - cx) * cy) / area;
    const double w3 = (static_cast<double>(cx) * (h - cy)) / area;
    const double w4 = 1.0 - w1 - w2 - w3;
    return w1 * region_ssim(pred, gt, 0, cy, 0, cx) + w2 * region_ssim(pred, gt, 0, cy, cx, w) +
           w3 * region_ssim(pred, gt, cy, h, 0, cx) + w4 * region_ssim(pred, gt, cy, h, cx, w);
}

// ---- weighted F helpers ----

// Exact squared Euclidean distance to the closest GT pixel (two-phase
// lower-envelope transform; distances are exact integers).
std::vector<std::int64_t> squared_distance_to_foreground(const BinaryMask& gt) {
    const int h = gt.height(), w = gt.width();
    const std::size_t n = gt.size();
    constexpr double kInf = 1e15;

    std::vector<double> col_d2(n, kInf);
    for (int x = 0; x < w; ++x) {
        int last = -1;
        for (int y = 0; y < h; ++y) {
            if (gt.at(y, x)) last = y;
            if (last >= 0)
                col_d2[static_cast<std::size_t>(y) * w + x] = static_cast<double>(y - last) * (y - last);
        }
        int next = -1;
        for (int y = h - 1; y >= 0; --y) {
            if (gt.at(y, x)) next = y;
            if (next >= 0) {
                const double d2 = static_cast<double>(next - y) * (next - y);
                auto& cur = col_d2[static_cast<std::size_t>(y) * w + x];
                if (d2 < cur) cur = d2;
            }
        }
    }

    std::vector<std::int64_t> out(n);
    std::vector<int> v(w);
    std::vector<double> z(static_cast<std::size_t>(w) + 1);
    std::vector<double> f(w);
    for (int y = 0; y < h; ++y) {
        const std::size_t row = static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) f[x] = col_d2[row + x];
        int k = 0;
        v[0] = 0;
        z[0] = -kInf;
        z[1] = kInf;
        for (int q = 1; q < w; ++q) {
            double s = ((f[q] + static_cast<double>(q) * q) - (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
                       (2.0 * q - 2.0 * v[k]);
            while (s <= z[k]) {
                --k;
                s = ((f[q] + static_cast<double>(q) * q) - (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
                    (2.0 * q - 2.0 * v[k]);
            }
            ++k;
            v[k] = q;
            z[k] = s;
            z[k + 1] = kInf;
        }
        k = 0;
        for (int x = 0; x < w; ++x) {
            while (z[k + 1] < x) ++k;
            const int xq = v[k];
            out[row + x] = static_cast<std::int64_t>(x - xq) * (x - xq) + static_cast<std::int64_t>(f[xq]);
        }
    }
    return out;
}

// Dependency fill for the weighted-F error map: minimum error over all
// foreground pixels at the exact nearest distance. Symmetric under
// transposition and flips, unlike a single arbitrarily tie-broken site.
double min_error_at_nearest(const BinaryMask& gt, const std::vector<double>& err, int y, int x,
                            std::int64_t d2) {
    const int h = gt.height(), w = gt.width();
    double best = std::numeric_limits<double>::infinity();
    const auto consider = [&](int yy, int xx) {
        if (yy < 0 || yy >= h || xx < 0 || xx >= w) return;
        const std::size_t i = static_cast<std::size_t>(yy) * w + xx;
        if (gt.values()[i] && err[i] < best) best = err[i];
    };
    for (std::int64_t a = 0; a * a <= d2; ++a) {
        const std::int64_t b2 = d2 - a * a;
        const auto b = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(b2))));
        if (b * b != b2 || b < a) continue;
        const int ai = static_cast<int>(a), bi = static_cast<int>(b);
        consider(y - ai, x - bi);
        consider(y - ai, x + bi);
        consider(y + ai, x - bi);
        consider(y + ai, x + bi);
        consider(y - bi, x - ai);
        consider(y - bi, x + ai);
        consider(y + bi, x - ai);
        consider(y + bi, x + ai);
    }
    return best;
}

// 7x7 Gaussian (sigma=5) normalized over its support; zero-padded correlation.
std::vector<double> gaussian7x7(const std::vector<double>& in, int h, int w) {
    constexpr int kRadius = 3;
    constexpr double kSigma = 5.0;
    std::array<std::array<double, 7>, 7> kern{};
    double ksum = 0.0;
    for (int dy = -kRadius; dy <= kRadius; ++dy)
        for (int dx = -kRadius; dx <= kRadius; ++dx) {
            const double v = std::exp(-(dy * dy + dx * dx) / (2.0 * kSigma * kSigma));
            kern[dy + kRadius][dx + kRadius] = v;
            ksum += v;
        }
    for (auto& r : kern)
        for (auto& v : r) v /= ksum;

    std::vector<double> out(in.size(), 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int dy = -kRadius; dy <= kRadius; ++dy) {
                const int yy = y + dy;
                if (yy < 0 || yy >= h) continue;
                for (int dx = -kRadius; dx <= kRadius; ++dx) {
                    const int xx = x + dx;
                    if (xx < 0 || xx >= w) continue;
                    acc += in[static_cast<std::size_t>(yy) * w + xx] * kern[dy + kRadius][dx + kRadius];
                }
            }
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    return out;
}

struct FMeasures {
    double adaptive = 0.0, mean = 0.0, max = 0.0;
};

FMeasures f_from_counts(const ThresholdCounts& c) {
    FMeasures m;
    double sum = 0.0, best = 0.0;
    for (int t = 0; t < kThresholdSteps; ++t) {
        const double f = f_beta(c.tp[t], c.pp[t], c.fg);
        sum += f;
        best = std::max(best, f);
    }
    m.mean = sum / kThresholdSteps;
    m.max = best;
    m.adaptive = f_beta(c.tp_adaptive, c.pp_adaptive, c.fg);
    return m;
}

struct EMeasures {
    double adaptive = 0.0, mean = 0.0, max = 0.0;
};

EMeasures e_from_counts_all(const ThresholdCounts& c) {
    EMeasures m;
    double sum = 0.0, best = 0.0;
    for (int t = 0; t < kThresholdSteps; ++t) {
        const double e = e_from_counts(c.tp[t], c.pp[t], c.fg, c.n);
        sum += e;
        best = std::max(best, e);
    }
    m.mean = sum / kThresholdSteps;
    m.max = best;
    m.adaptive = e_from_counts(c.tp_adaptive, c.pp_adaptive, c.fg, c.n);
    return m;
}

} // namespace

Variant variant_from_string(const std::string& s) {
    if (s == "adaptive") return Variant::adaptive;
    if (s == "mean") return Variant::mean;
    if (s == "max") return Variant::max;
    throw std::invalid_argument("unknown metric variant: " + s);
}

double mae(const ScoreMap& pred, const BinaryMask& gt) {
    check_same_shape(pred, gt);
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        sum += std::abs(pred.values()[i] - static_cast<double>(gt.values()[i]));
    return sum / static_cast<double>(pred.size());
}

double f_measure(const ScoreMap& pred, const BinaryMask& gt, Variant variant) {
    check_same_shape(pred, gt);
    if (gt.foreground_count() == 0)
        throw std::invalid_argument("f_measure: empty ground truth (excluded from F aggregation)");
    const ThresholdCounts c = count_thresholds(pred, gt);
    const FMeasures m = f_from_counts(c);
    switch (variant) {
    case Variant::adaptive: return m.adaptive;
    case Variant::mean: return m.mean;
    case Variant::max: return m.max;
    }
    return 0.0;
}

double weighted_f(const ScoreMap& pred, const BinaryMask& gt) {
    check_same_shape(pred, gt);
    if (gt.foreground_count() == 0)
        throw std::invalid_argument("weighted_f: empty ground truth (excluded from F aggregation)");
    const int h = gt.height(), w = gt.width();
    const std::size_t n = gt.size();

    std::vector<double> err(n);
    for (std::size_t i = 0; i < n; ++i)
        err[i] = std::abs(pred.values()[i] - static_cast<double>(gt.values()[i]));

    const std::vector<std::int64_t> d2 = squared_distance_to_foreground(gt);
    std::vector<double> filled = err;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            if (gt.values()[i] == 0) filled[i] = min_error_at_nearest(gt, err, y, x, d2[i]);
        }
    const std::vector<double> blurred = gaussian7x7(filled, h, w);

    const double decay = std::log(0.5) / 5.0;
    double sum_fg = 0.0, tp_w, fp_w = 0.0, sum_ew_fg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double min_e = err[i];
        if (gt.values()[i] != 0) {
            if (blurred[i] < min_e) min_e = blurred[i];
            sum_fg += 1.0;
            sum_ew_fg += min_e; // importance weight is 1 on foreground
        } else {
            const double importance = 2.0 - std::exp(decay * std::sqrt(static_cast<double>(d2[i])));
            fp_w += min_e * importance;
        }
    }
    tp_w = sum_fg - sum_ew_fg;
    const double recall = 1.0 - sum_ew_fg / sum_fg;
    const double precision = tp_w / (kEps + tp_w + fp_w);
    return 2.0 * recall * precision / (kEps + recall + precision);
}

double s_measure(const ScoreMap& pred, const BinaryMask& gt) {
    check_same_shape(pred, gt);
    const double fg = static_cast<double>(gt.foreground_count());
    const double n = static_cast<double>(gt.size());
    double s;
    if (fg == 0.0) {
        s = 1.0 - pred.mean();
    } else if (fg == n) {
        s = pred.mean();
    } else {
        const double y = fg / n;
        const double object = y * object_similarity(pred, gt, true) + (1.0 - y) * object_similarity(pred, gt, false);
        const double region = region_similarity(pred, gt);
        s = kSAlpha * object + (1.0 - kSAlpha) * region;
    }
    return std::clamp(s, 0.0, 1.0);
}

double e_measure(const ScoreMap& pred, const BinaryMask& gt, Variant variant) {
    check_same_shape(pred, gt);
    const ThresholdCounts c = count_thresholds(pred, gt);
    const EMeasures m = e_from_counts_all(c);
    switch (variant) {
    case Variant::adaptive: return m.adaptive;
    case Variant::mean: return m.mean;
    case Variant::max: return m.max;
    }
    return 0.0;
}

MetricReport evaluate_image(const ScoreMap& pred, const BinaryMask& gt) {
    const ScoreMap resized =
        (pred.height() == gt.height() && pred.width() == gt.width())
            ? pred
            : resize_bilinear(pred, gt.height(), gt.width());

    MetricReport r;
    r.mae = mae(resized, gt);
    r.s_alpha = s_measure(resized, gt);

    const ThresholdCounts c = count_thresholds(resized, gt);
    const EMeasures em = e_from_counts_all(c);
    r.e_adaptive = em.adaptive;
    r.e_mean = em.mean;
    r.e_max = em.max;

    r.gt_empty = gt.foreground_count() == 0;
    for (int t = 0; t < kThresholdSteps; ++t) {
        r.precision_curve[t] = c.pp[t] > 0.0 ? c.tp[t] / c.pp[t] : 0.0;
        r.recall_curve[t] = c.fg > 0.0 ? c.tp[t] / c.fg : 0.0;
        r.f_curve[t] = f_beta(c.tp[t], c.pp[t], c.fg);
    }
    if (!r.gt_empty) {
        const FMeasures fm = f_from_counts(c);
        r.f_adaptive = fm.adaptive;
        r.f_mean = fm.mean;
        r.f_max = fm.max;
        r.f_w = weighted_f(resized, gt);
    }
    return r;
}

namespace {

const std::vector<std::string>& all_attribute_codes() {
    static const std::vector<std::string> codes = {"BM", "DC", "MQ", "DR", "MO", "SC", "OC", "BO", "SO", "OV"};
    return codes;
}

} // namespace

AggregateReport aggregate(const std::vector<std::pair<AttributeSet, MetricReport>>& reports,
                          bool slice_by_attribute) {
    if (reports.empty()) throw std::invalid_argument("aggregate: empty report list");

    AggregateReport agg;
    agg.image_count = reports.size();
    double n_f = 0.0;
    for (const auto& [attrs, rep] : reports) {
        (void)attrs;
        agg.means.mae += rep.mae;
        agg.means.s_alpha += rep.s_alpha;
        agg.means.e_adaptive += rep.e_adaptive;
        agg.means.e_mean += rep.e_mean;
        agg.means.e_max += rep.e_max;
        if (rep.gt_empty) {
            ++agg.f_excluded_count;
            continue;
        }
        n_f += 1.0;
        agg.means.f_adaptive += rep.f_adaptive;
        agg.means.f_mean += rep.f_mean;
        agg.means.f_max += rep.f_max;
        agg.means.f_w += rep.f_w;
        for (int t = 0; t < kThresholdSteps; ++t) {
            agg.means.precision_curve[t] += rep.precision_curve[t];
            agg.means.recall_curve[t] += rep.recall_curve[t];
            agg.means.f_curve[t] += rep.f_curve[t];
        }
    }
    const double n = static_cast<double>(reports.size());
    agg.means.mae /= n;
    agg.means.s_alpha /= n;
    agg.means.e_adaptive /= n;
    agg.means.e_mean /= n;
    agg.means.e_max /= n;
    if (n_f > 0.0) {
        agg.means.f_adaptive /= n_f;
        agg.means.f_mean /= n_f;
        agg.means.f_max /= n_f;
        agg.means.f_w /= n_f;
        for (int t = 0; t < kThresholdSteps; ++t) {
            agg.means.precision_curve[t] /= n_f;
            agg.means.recall_curve[t] /= n_f;
            agg.means.f_curve[t] /= n_f;
        }
    }

    if (slice_by_attribute) {
        for (const auto& code : all_attribute_codes()) {
            std::vector<std::pair<AttributeSet, MetricReport>> subset;
            for (const auto& item : reports)
                if (item.first.has(code)) subset.push_back(item);
            if (!subset.empty()) agg.per_attribute.emplace(code, aggregate(subset, false));
        }
    }
    return agg;
}

AggregateReport aggregate(const std::vector<MetricReport>& reports) {
    std::vector<std::pair<AttributeSet, MetricReport>> pairs;
    pairs.reserve(reports.size());
    for (const auto& r : reports) pairs.emplace_back(AttributeSet{}, r);
    return aggregate(pairs, false);
}

std::vector<std::pair<std::string, double>> AggregateReport::scalar_fields() const {
    return {
        {"S_alpha", means.s_alpha},   {"F_w_beta", means.f_w},     {"MAE", means.mae},
        {"E_adaptive", means.e_adaptive}, {"E_mean", means.e_mean}, {"E_max", means.e_max},
        {"F_adaptive", means.f_adaptive}, {"F_mean", means.f_mean}, {"F_max", means.f_max},
    };
}

} // namespace pcd

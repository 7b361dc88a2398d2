#include "oracles.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>

namespace pcd::oracle {

namespace {
constexpr double EPS = DBL_EPSILON;

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}
} // namespace

double mae(const ScoreMap& pred, const BinaryMask& gt) {
    double s = 0.0;
    for (int y = 0; y < gt.height(); ++y)
        for (int x = 0; x < gt.width(); ++x) s += std::fabs(pred.at(y, x) - gt.at(y, x));
    return s / (static_cast<double>(gt.height()) * gt.width());
}

namespace {
// Shared metric convention: strict threshold below 1.0, saturated pixels kept at 1.0.
bool above_threshold(double p, double t) {
    if (t >= 1.0) return p >= 1.0;
    return p > t;
}
} // namespace

Confusion confusion_at(const ScoreMap& pred, const BinaryMask& gt, double t) {
    Confusion c;
    for (int y = 0; y < gt.height(); ++y)
        for (int x = 0; x < gt.width(); ++x) {
            const bool p = above_threshold(pred.at(y, x), t);
            const bool g = gt.at(y, x) != 0;
            if (p && g) ++c.tp;
            else if (p && !g) ++c.fp;
            else if (!p && g) ++c.fn;
            else ++c.tn;
        }
    return c;
}

double precision_at(const ScoreMap& pred, const BinaryMask& gt, double t) {
    const Confusion c = confusion_at(pred, gt, t);
    return (c.tp + c.fp) == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

double recall_at(const ScoreMap& pred, const BinaryMask& gt, double t) {
    const Confusion c = confusion_at(pred, gt, t);
    return (c.tp + c.fn) == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

double f_beta_at(const ScoreMap& pred, const BinaryMask& gt, double t) {
    const double beta2 = 0.3;
    const double p = precision_at(pred, gt, t);
    const double r = recall_at(pred, gt, t);
    if (beta2 * p + r == 0.0) return 0.0;
    return (1.0 + beta2) * p * r / (beta2 * p + r);
}

double f_adaptive(const ScoreMap& pred, const BinaryMask& gt) {
    double m = 0.0;
    for (int y = 0; y < pred.height(); ++y)
        for (int x = 0; x < pred.width(); ++x) m += pred.at(y, x);
    m /= static_cast<double>(pred.height()) * pred.width();
    return f_beta_at(pred, gt, std::min(2.0 * m, 1.0));
}

double f_mean(const ScoreMap& pred, const BinaryMask& gt) {
    double s = 0.0;
    for (int t = 0; t <= 255; ++t) s += f_beta_at(pred, gt, t / 255.0);
    return s / 256.0;
}

double f_max(const ScoreMap& pred, const BinaryMask& gt) {
    double best = 0.0;
    for (int t = 0; t <= 255; ++t) best = std::max(best, f_beta_at(pred, gt, t / 255.0));
    return best;
}

double e_at(const ScoreMap& pred, const BinaryMask& gt, double t) {
    const int h = gt.height(), w = gt.width();
    const double n = static_cast<double>(h) * w;

    std::vector<double> fm(static_cast<std::size_t>(h) * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            fm[static_cast<std::size_t>(y) * w + x] = above_threshold(pred.at(y, x), t) ? 1.0 : 0.0;

    double gt_sum = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) gt_sum += gt.at(y, x);

    std::vector<double> enhanced(static_cast<std::size_t>(h) * w);
    if (gt_sum == 0.0) {
        for (std::size_t i = 0; i < fm.size(); ++i) enhanced[i] = 1.0 - fm[i];
    } else if (gt_sum == n) {
        enhanced = fm;
    } else {
        const double mu_fm = mean_of(fm);
        const double mu_gt = gt_sum / n;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double a = gt.at(y, x) - mu_gt;
                const double b = fm[static_cast<std::size_t>(y) * w + x] - mu_fm;
                const double xi = 2.0 * a * b / (a * a + b * b + EPS);
                enhanced[static_cast<std::size_t>(y) * w + x] = (1.0 + xi) * (1.0 + xi) / 4.0;
            }
    }
    return mean_of(enhanced);
}

double e_adaptive(const ScoreMap& pred, const BinaryMask& gt) {
    double m = 0.0;
    for (int y = 0; y < pred.height(); ++y)
        for (int x = 0; x < pred.width(); ++x) m += pred.at(y, x);
    m /= static_cast<double>(pred.height()) * pred.width();
    return e_at(pred, gt, std::min(2.0 * m, 1.0));
}

double e_mean(const ScoreMap& pred, const BinaryMask& gt) {
    double s = 0.0;
    for (int t = 0; t <= 255; ++t) s += e_at(pred, gt, t / 255.0);
    return s / 256.0;
}

double e_max(const ScoreMap& pred, const BinaryMask& gt) {
    double best = 0.0;
    for (int t = 0; t <= 255; ++t) best = std::max(best, e_at(pred, gt, t / 255.0));
    return best;
}

namespace {

double object_term(const std::vector<double>& region_values) {
    if (region_values.empty()) return 0.0;
    const double m = mean_of(region_values);
    const double sd = sample_std(region_values);
    return 2.0 * m / (m * m + 1.0 + sd + EPS);
}

double ssim_term(const std::vector<double>& p, const std::vector<double>& g) {
    const double n = static_cast<double>(p.size());
    if (p.empty()) return 0.0;
    const double mp = mean_of(p);
    const double mg = mean_of(g);
    double vp = 0.0, vg = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        vp += (p[i] - mp) * (p[i] - mp);
        vg += (g[i] - mg) * (g[i] - mg);
        cov += (p[i] - mp) * (g[i] - mg);
    }
    if (p.size() > 1) {
        vp /= n - 1.0;
        vg /= n - 1.0;
        cov /= n - 1.0;
    } else {
        vp = vg = cov = 0.0;
    }
    const double alpha = 4.0 * mp * mg * cov;
    const double beta = (mp * mp + mg * mg) * (vp + vg);
    if (alpha != 0.0) return alpha / (beta + EPS);
    return beta == 0.0 ? 1.0 : 0.0;
}

void collect_block(const ScoreMap& pred, const BinaryMask& gt, int y0, int y1, int x0, int x1,
                   std::vector<double>& p, std::vector<double>& g) {
    p.clear();
    g.clear();
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            p.push_back(pred.at(y, x));
            g.push_back(static_cast<double>(gt.at(y, x)));
        }
}

} // namespace

double s_measure(const ScoreMap& pred, const BinaryMask& gt) {
    const int h = gt.height(), w = gt.width();
    const double n = static_cast<double>(h) * w;
    double fg = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) fg += gt.at(y, x);

    double predsum = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) predsum += pred.at(y, x);
    const double pred_mean = predsum / n;

    double s;
    if (fg == 0.0) {
        s = 1.0 - pred_mean;
    } else if (fg == n) {
        s = pred_mean;
    } else {
        // object-aware term
        std::vector<double> fg_vals, bg_vals;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                if (gt.at(y, x))
                    fg_vals.push_back(pred.at(y, x));
                else
                    bg_vals.push_back(1.0 - pred.at(y, x));
            }
        const double u = fg / n;
        const double s_obj = u * object_term(fg_vals) + (1.0 - u) * object_term(bg_vals);

        // region-aware term: split at the (1-based, rounded) GT centroid
        double sx = 0.0, sy = 0.0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (gt.at(y, x)) {
                    sx += x + 1.0;
                    sy += y + 1.0;
                }
        const int cx = static_cast<int>(std::llround(sx / fg));
        const int cy = static_cast<int>(std::llround(sy / fg));

        std::vector<double> bp, bg;
        double s_reg = 0.0;
        const double area = n;
        collect_block(pred, gt, 0, cy, 0, cx, bp, bg);
        s_reg += (static_cast<double>(cx) * cy / area) * ssim_term(bp, bg);
        collect_block(pred, gt, 0, cy, cx, w, bp, bg);
        s_reg += (static_cast<double>(w - cx) * cy / area) * ssim_term(bp, bg);
        collect_block(pred, gt, cy, h, 0, cx, bp, bg);
        s_reg += (static_cast<double>(cx) * (h - cy) / area) * ssim_term(bp, bg);
        collect_block(pred, gt, cy, h, cx, w, bp, bg);
        s_reg += (1.0 - static_cast<double>(cx) * cy / area - static_cast<double>(w - cx) * cy / area -
                  static_cast<double>(cx) * (h - cy) / area) *
                 ssim_term(bp, bg);

        s = 0.5 * s_obj + 0.5 * s_reg;
    }
    return std::clamp(s, 0.0, 1.0);
}

double weighted_f(const ScoreMap& pred, const BinaryMask& gt) {
    const int h = gt.height(), w = gt.width();

    std::vector<double> err(static_cast<std::size_t>(h) * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            err[static_cast<std::size_t>(y) * w + x] = std::fabs(pred.at(y, x) - gt.at(y, x));

    // brute-force nearest foreground distance; the fill takes the minimum error
    // over every site at exactly that distance
    std::vector<double> dist(static_cast<std::size_t>(h) * w, 0.0);
    std::vector<double> filled = err;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (gt.at(y, x)) continue;
            long long best = -1;
            for (int ys = 0; ys < h; ++ys)
                for (int xs = 0; xs < w; ++xs) {
                    if (!gt.at(ys, xs)) continue;
                    const long long d2 =
                        static_cast<long long>(ys - y) * (ys - y) + static_cast<long long>(xs - x) * (xs - x);
                    if (best < 0 || d2 < best) best = d2;
                }
            double fill = 2.0; // larger than any |pred-gt|
            for (int ys = 0; ys < h; ++ys)
                for (int xs = 0; xs < w; ++xs) {
                    if (!gt.at(ys, xs)) continue;
                    const long long d2 =
                        static_cast<long long>(ys - y) * (ys - y) + static_cast<long long>(xs - x) * (xs - x);
                    if (d2 == best) fill = std::min(fill, err[static_cast<std::size_t>(ys) * w + xs]);
                }
            dist[static_cast<std::size_t>(y) * w + x] = std::sqrt(static_cast<double>(best));
            filled[static_cast<std::size_t>(y) * w + x] = fill;
        }

    // literal 7x7 sigma=5 Gaussian, zero padding
    double kernel[7][7];
    double ksum = 0.0;
    for (int a = 0; a < 7; ++a)
        for (int b = 0; b < 7; ++b) {
            kernel[a][b] = std::exp(-((a - 3) * (a - 3) + (b - 3) * (b - 3)) / 50.0);
            ksum += kernel[a][b];
        }
    std::vector<double> ea(static_cast<std::size_t>(h) * w, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int a = 0; a < 7; ++a)
                for (int b = 0; b < 7; ++b) {
                    const int yy = y + a - 3, xx = x + b - 3;
                    if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                    acc += filled[static_cast<std::size_t>(yy) * w + xx] * kernel[a][b] / ksum;
                }
            ea[static_cast<std::size_t>(y) * w + x] = acc;
        }

    std::vector<double> min_e_ea = err;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            if (gt.at(y, x) && ea[i] < err[i]) min_e_ea[i] = ea[i];
        }

    double tp_w = 0.0, fp_w = 0.0, fg_total = 0.0, ew_fg = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            if (gt.at(y, x)) {
                fg_total += 1.0;
                ew_fg += min_e_ea[i] * 1.0;
            } else {
                const double importance = 2.0 - 1.0 * std::exp(std::log(1.0 - 0.5) / 5.0 * dist[i]);
                fp_w += min_e_ea[i] * importance;
            }
        }
    tp_w = fg_total - ew_fg;
    const double recall = 1.0 - ew_fg / fg_total;
    const double precision = tp_w / (EPS + tp_w + fp_w);
    return 2.0 * recall * precision / (EPS + recall + precision);
}

std::vector<double> resize_bilinear(const std::vector<double>& src, int sh, int sw, int dh, int dw) {
    std::vector<double> out(static_cast<std::size_t>(dh) * dw);
    for (int y = 0; y < dh; ++y)
        for (int x = 0; x < dw; ++x) {
            const double sy = (y + 0.5) * sh / static_cast<double>(dh) - 0.5;
            const double sx = (x + 0.5) * sw / static_cast<double>(dw) - 0.5;
            const int y0 = static_cast<int>(std::floor(sy)), x0 = static_cast<int>(std::floor(sx));
            const double fy = sy - y0, fx = sx - x0;
            auto sample = [&](int yy, int xx) {
                yy = std::clamp(yy, 0, sh - 1);
                xx = std::clamp(xx, 0, sw - 1);
                return src[static_cast<std::size_t>(yy) * sw + xx];
            };
            const double v = sample(y0, x0) * (1 - fy) * (1 - fx) + sample(y0, x0 + 1) * (1 - fy) * fx +
                             sample(y0 + 1, x0) * fy * (1 - fx) + sample(y0 + 1, x0 + 1) * fy * fx;
            out[static_cast<std::size_t>(y) * dw + x] = std::clamp(v, 0.0, 1.0);
        }
    return out;
}

std::vector<std::uint8_t> resize_nearest(const std::vector<std::uint8_t>& src, int sh, int sw, int dh, int dw) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(dh) * dw);
    for (int y = 0; y < dh; ++y)
        for (int x = 0; x < dw; ++x) {
            const int sy = std::min(sh - 1, static_cast<int>(std::floor((y + 0.5) * sh / static_cast<double>(dh))));
            const int sx = std::min(sw - 1, static_cast<int>(std::floor((x + 0.5) * sw / static_cast<double>(dw))));
            out[static_cast<std::size_t>(y) * dw + x] = src[static_cast<std::size_t>(sy) * sw + sx];
        }
    return out;
}

} // namespace pcd::oracle

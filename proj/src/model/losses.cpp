#include "pcd/model/losses.hpp"

namespace pcd::net {

namespace F = torch::nn::functional;

void LossConfig::validate() const {
    if (mu < 0.0) throw std::invalid_argument("loss.mu must be >= 0");
    if (edge_weight_window < 3 || edge_weight_window % 2 == 0)
        throw std::invalid_argument("loss.edge_weight_window must be odd and >= 3, got " +
                                    std::to_string(edge_weight_window));
}

LossConfig::Weighting LossConfig::weighting_from_string(const std::string& s) {
    if (s == "literal") return Weighting::literal;
    if (s == "offset") return Weighting::offset;
    throw std::invalid_argument("unknown iteration_weighting: " + s + " (expected literal|offset)");
}

const char* LossConfig::to_string(Weighting w) {
    return w == Weighting::literal ? "literal" : "offset";
}

torch::Tensor edge_weights(const torch::Tensor& gt, int window) {
    auto pooled = F::avg_pool2d(
        gt, F::AvgPool2dFuncOptions(window).stride(1).padding(window / 2));
    return 1.0 + 5.0 * (pooled - gt).abs();
}

namespace {

void check_loss_shapes(const torch::Tensor& logits, const torch::Tensor& gt) {
    if (logits.sizes() != gt.sizes())
        throw std::invalid_argument("loss shape mismatch: logits " +
                                    c10::str(logits.sizes()) + " vs gt " + c10::str(gt.sizes()));
}

} // namespace

torch::Tensor weighted_bce(const torch::Tensor& logits, const torch::Tensor& gt, int window) {
    check_loss_shapes(logits, gt);
    const auto w = edge_weights(gt, window);
    auto bce = F::binary_cross_entropy_with_logits(
        logits, gt, F::BinaryCrossEntropyWithLogitsFuncOptions().reduction(torch::kNone));
    auto per_image = (w * bce).sum({1, 2, 3}) / w.sum({1, 2, 3});
    return per_image.mean();
}

torch::Tensor weighted_iou(const torch::Tensor& logits, const torch::Tensor& gt, int window) {
    check_loss_shapes(logits, gt);
    const auto w = edge_weights(gt, window);
    const auto p = torch::sigmoid(logits);
    auto inter = (w * p * gt).sum({1, 2, 3});
    auto unions = (w * (p + gt - p * gt)).sum({1, 2, 3});
    auto per_image = 1.0 - (inter + 1.0) / (unions + 1.0);
    return per_image.mean();
}

std::vector<double> iteration_weights(int iterations, const LossConfig& cfg) {
    if (iterations < 1) throw std::invalid_argument("iteration_weights: iterations must be >= 1");
    std::vector<double> weights(iterations);
    for (int i = 1; i <= iterations; ++i) {
        const double scaled = (i - 1) * cfg.mu;
        weights[i - 1] = cfg.weighting == LossConfig::Weighting::literal ? scaled : 1.0 + scaled;
    }
    return weights;
}

LossTerms total_loss(const ForwardOutputs& outputs, const torch::Tensor& gt, const LossConfig& cfg) {
    cfg.validate();
    if (outputs.iterations.empty()) throw std::invalid_argument("total_loss: no iterations in outputs");
    const auto weights = iteration_weights(static_cast<int>(outputs.iterations.size()), cfg);

    const auto base = [&](const torch::Tensor& logits) {
        return weighted_bce(logits, gt, cfg.edge_weight_window) +
               weighted_iou(logits, gt, cfg.edge_weight_window);
    };

    auto l_e = torch::zeros({}, gt.options());
    auto l_r = torch::zeros({}, gt.options());
    for (std::size_t i = 0; i < outputs.iterations.size(); ++i) {
        l_e = l_e + weights[i] * base(outputs.iterations[i].p_en);
        l_r = l_r + weights[i] * base(outputs.iterations[i].p_ref);
    }
    return LossTerms{l_e + l_r, l_e, l_r};
}

} // namespace pcd::net

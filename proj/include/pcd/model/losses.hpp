#ifndef PCD_MODEL_LOSSES_HPP
#define PCD_MODEL_LOSSES_HPP

#include <string>
#include <vector>

#include <torch/torch.h>

#include "pcd/model/pcnet.hpp"

namespace pcd::net {

struct LossConfig {
    enum class Weighting { literal, offset };

    double mu = 0.2;
    Weighting weighting = Weighting::offset;
    int edge_weight_window = 31;

    void validate() const;
    static Weighting weighting_from_string(const std::string& s);
    static const char* to_string(Weighting w);
};

/// Edge-emphasizing pixel weights: 1 + 5*|avgpool_k(gt) - gt|.
torch::Tensor edge_weights(const torch::Tensor& gt, int window);

/// Weight-normalized binary cross-entropy on logits; per-image normalization
/// by the total weight, averaged over the batch.
torch::Tensor weighted_bce(const torch::Tensor& logits, const torch::Tensor& gt, int window);

/// 1 - (sum w*p*g + 1) / (sum w*(p+g-p*g) + 1), p = sigmoid(logits).
torch::Tensor weighted_iou(const torch::Tensor& logits, const torch::Tensor& gt, int window);

/// Per-iteration supervision weights: (i-1)*mu in literal mode,
/// 1+(i-1)*mu in offset mode (i starts at 1).
std::vector<double> iteration_weights(int iterations, const LossConfig& cfg);

struct LossTerms {
    torch::Tensor total;
    torch::Tensor enhancement; // L_e over the P_en maps
    torch::Tensor refinement;  // L_r over the P_ref maps
};

/// Iteration-weighted deep supervision over both prediction streams.
LossTerms total_loss(const ForwardOutputs& outputs, const torch::Tensor& gt, const LossConfig& cfg);

} // namespace pcd::net

#endif

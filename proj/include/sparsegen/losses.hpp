#pragma once

#include "sparsegen/transforms.hpp"

namespace sparsegen {

// Loss of one position together with its gradient in the scores.
// grad = p - e_target, so its entries sum to zero.
struct loss_value {
    double value = 0.0;
    std::vector<double> grad;
};

// alpha-entmax loss: (p - e_target)' z + H_alpha(p) with p = entmax(z, alpha).
// Recovers negative log-likelihood at alpha=1 and the sparsemax loss at
// alpha=2. Zero exactly when the target score clears every other score by
// the margin 1/(alpha-1).
loss_value entmax_loss(const score_vector & z, int32_t target, double alpha,
                       const entmax_params & params = {});

// sum of per-position entmax losses
double corpus_loss(const std::vector<score_vector> & scores,
                   const std::vector<int32_t> & targets, double alpha);

} // namespace sparsegen

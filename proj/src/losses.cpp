#include "sparsegen/losses.hpp"

#include <stdexcept>

namespace sparsegen {

loss_value entmax_loss(const score_vector & z, int32_t target, double alpha,
                       const entmax_params & params) {
    check_scores(z);
    if (target < 0 || static_cast<size_t>(target) >= z.size()) {
        throw std::invalid_argument("entmax_loss: target out of range");
    }

    entmax_params ep = params;
    ep.alpha = alpha;
    const distribution p = entmax(z, ep);

    double pz = 0.0;
    for (size_t i = 0; i < p.support.size(); i++) {
        pz += p.probs[i] * z[static_cast<size_t>(p.support[i])];
    }

    loss_value out;
    out.value = pz - z[static_cast<size_t>(target)] + tsallis_entropy(p, alpha);
    out.grad  = to_dense(p);
    out.grad[static_cast<size_t>(target)] -= 1.0;
    return out;
}

double corpus_loss(const std::vector<score_vector> & scores,
                   const std::vector<int32_t> & targets, double alpha) {
    if (scores.size() != targets.size()) {
        throw std::invalid_argument("corpus_loss: scores/targets length mismatch");
    }
    double total = 0.0;
    for (size_t i = 0; i < scores.size(); i++) {
        total += entmax_loss(scores[i], targets[i], alpha).value;
    }
    return total;
}

} // namespace sparsegen

#pragma once

#include <cstdint>
#include <vector>

namespace sparsegen {

// raw model scores (logits) over the vocabulary
using score_vector = std::vector<double>;

// Categorical distribution with explicit support. Tokens absent from the
// support have exactly zero probability; every kept probability is
// strictly positive and the kept probabilities sum to 1. Support ids are
// unique and strictly increasing.
struct distribution {
    std::vector<int32_t> support;
    std::vector<double>  probs;
    int32_t vocab_size = 0;

    size_t support_size() const { return support.size(); }
    bool   dense() const { return static_cast<int32_t>(support.size()) == vocab_size; }

    // 0 when the token is outside the support
    double prob_of(int32_t token) const;
};

struct entmax_params {
    double alpha     = 1.5;
    double tol       = 1e-8; // tolerance on the normalization residual
    int    max_iters = 100;
};

// probabilities at or below this are treated as exact zeros and dropped
inline constexpr double k_support_floor = 1e-12;

// throws std::invalid_argument on non-finite entries or empty input
void check_scores(const score_vector & z);

// throws std::logic_error if any distribution invariant is broken
void check_distribution(const distribution & p);

std::vector<double> to_dense(const distribution & p);

distribution make_dense(std::vector<double> probs);

// exp((z - max z)/temperature), normalized; always dense
distribution softmax(const score_vector & z, double temperature = 1.0);

// Tsallis alpha-entropy: Shannon at alpha=1, Gini at alpha=2
double tsallis_entropy(const distribution & p, double alpha);

// exact Euclidean projection onto the simplex (sort-and-threshold)
distribution sparsemax(const score_vector & z);

// alpha-entmax via bisection on the threshold; alpha=1 delegates to softmax
distribution entmax(const score_vector & z, const entmax_params & params);

// keep the k most probable tokens (ties to the lower id), renormalize
distribution topk_truncate(const distribution & p, int64_t k);

// keep the smallest prefix of descending-probability tokens whose
// cumulative mass reaches top_p (the crossing token included), renormalize
distribution nucleus_truncate(const distribution & p, double top_p);

// one-hot at the argmax, ties to the lower id
distribution argmax_onehot(const score_vector & z);

} // namespace sparsegen

#pragma once

#include "sparsegen/transforms.hpp"

#include <map>

namespace sparsegen {

// one evaluation position: the ground-truth token and the model's
// (possibly truncated) next-token distribution there
struct token_eval_record {
    int32_t      gold = 0;
    distribution dist;
};

std::vector<double> gold_probabilities(const std::vector<token_eval_record> & records);

// exp of the mean negative log gold-probability; +infinity as soon as any
// gold token has zero probability
double perplexity(const std::vector<double> & gold_probs);
double perplexity(const std::vector<token_eval_record> & records);

// perplexity of the additively smoothed, renormalized probabilities
// (p + eps) / (1 + eps * V)
double epsilon_perplexity(const std::vector<double> & gold_probs, int64_t vocab_size, double epsilon);
double epsilon_perplexity(const std::vector<token_eval_record> & records, double epsilon);

// Smoothing that minimizes epsilon-perplexity, found by projected gradient
// on the reparametrization lambda = eps*V / (1 + eps*V) in [0, 1].
// lambda_star = 1 means unbounded eps; eps_star is +infinity there and
// eps_ppl degrades to the uniform value V.
struct epsilon_solution {
    double eps_star    = 0.0;
    double lambda_star = 0.0;
    double objective   = 0.0; // F(lambda_star), mean negative log smoothed prob
    double eps_ppl     = 1.0; // exp(objective)
};

epsilon_solution optimal_epsilon(const std::vector<double> & gold_probs, int64_t vocab_size);
epsilon_solution optimal_epsilon(const std::vector<token_eval_record> & records);

// objective of the smoothing problem at a given lambda (used by the
// solver and exposed for the grid-search cross-checks)
double epsilon_objective(const std::vector<double> & gold_probs, int64_t vocab_size, double lambda);

// mean over positions of p(gold) + Gini entropy of the prediction; in [0, 1]
double sparsemax_score(const std::vector<token_eval_record> & records);
double sparsemax_score_term(const distribution & dist, int32_t gold);

// 1 - 0.5 * squared Euclidean distance between dist and the one-hot at
// gold; identical to the per-position sparsemax score
double patrick_fischer_score(const distribution & dist, int32_t gold);

// Jensen-Shannon divergence between a distribution and a one-hot, in nats;
// depends on the distribution only through the gold probability
double js_to_onehot(double p_gold);

// mean JS of records via the closed form over gold probabilities
double js_score(const std::vector<token_eval_record> & records);

// (1/K) sum KL(p^k || mean of all); zero iff all equal, permutation-symmetric
double generalized_js(const std::vector<distribution> & dists);

struct repetition_result {
    std::map<int64_t, double> rep;  // window -> fraction
    std::map<int64_t, double> wrep;
    double rep_mean  = 0.0;
    double wrep_mean = 0.0;
};

// rep_l: fraction of positions whose predicted token occurs among the l
// preceding gold tokens; wrep_l drops positions where the gold token
// itself occurs in that window
repetition_result repetition_metrics(const std::vector<int32_t> & gold,
                                     const std::vector<int32_t> & predicted,
                                     const std::vector<int64_t> & windows);

// distinct n-grams divided by the total token count; 0 when fewer than n tokens
double distinct_n(const std::vector<int32_t> & tokens, int n);

struct support_stats {
    double  mean   = 0.0;
    double  median = 0.0;
    double  sd     = 0.0; // population convention
    int64_t min    = 0;
    int64_t max    = 0;
};

support_stats support_statistics(const std::vector<int64_t> & sizes);
support_stats support_statistics(const std::vector<token_eval_record> & records);

// one row of the single-token metric comparison curves
struct curve_row {
    double p_gold = 0.0;
    std::vector<double> eps_ppl; // one per requested epsilon; +inf sentinel possible
    double sp = 0.0;
    double js = 0.0;
};

// Single-token metric values as a function of the gold probability, for a
// model of the form (1-t, t/(V-1), ..., t/(V-1)) with p_gold = 1-t.
std::vector<curve_row> metric_curves(const std::vector<double> & p_grid,
                                     const std::vector<double> & epsilons,
                                     int64_t vocab_size);

} // namespace sparsegen

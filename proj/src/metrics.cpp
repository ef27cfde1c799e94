#include "sparsegen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <unordered_set>

namespace sparsegen {

namespace {

constexpr double k_inf = std::numeric_limits<double>::infinity();

void require_nonempty(size_t n, const char * what) {
    if (n == 0) {
        throw std::invalid_argument(std::string(what) + ": empty input");
    }
}

} // namespace

std::vector<double> gold_probabilities(const std::vector<token_eval_record> & records) {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto & r : records) {
        if (r.gold < 0 || r.gold >= r.dist.vocab_size) {
            throw std::invalid_argument("eval record: gold token out of range");
        }
        out.push_back(r.dist.prob_of(r.gold));
    }
    return out;
}

double perplexity(const std::vector<double> & gold_probs) {
    require_nonempty(gold_probs.size(), "perplexity");
    double acc = 0.0;
    for (const double p : gold_probs) {
        if (p <= 0.0) {
            return k_inf;
        }
        acc -= std::log(p);
    }
    return std::exp(acc / static_cast<double>(gold_probs.size()));
}

double perplexity(const std::vector<token_eval_record> & records) {
    return perplexity(gold_probabilities(records));
}

double epsilon_perplexity(const std::vector<double> & gold_probs, int64_t vocab_size, double epsilon) {
    require_nonempty(gold_probs.size(), "epsilon_perplexity");
    if (epsilon < 0.0) {
        throw std::invalid_argument("epsilon_perplexity: epsilon must be >= 0");
    }
    if (epsilon == 0.0) {
        return perplexity(gold_probs);
    }
    const double denom = 1.0 + epsilon * static_cast<double>(vocab_size);
    double acc = 0.0;
    for (const double p : gold_probs) {
        acc -= std::log((p + epsilon) / denom);
    }
    return std::exp(acc / static_cast<double>(gold_probs.size()));
}

double epsilon_perplexity(const std::vector<token_eval_record> & records, double epsilon) {
    require_nonempty(records.size(), "epsilon_perplexity");
    return epsilon_perplexity(gold_probabilities(records), records[0].dist.vocab_size, epsilon);
}

double epsilon_objective(const std::vector<double> & gold_probs, int64_t vocab_size, double lambda) {
    const double v = static_cast<double>(vocab_size);
    double acc = 0.0;
    for (const double p : gold_probs) {
        const double smoothed = (1.0 / v - p) * lambda + p;
        acc -= smoothed > 0.0 ? std::log(smoothed) : -k_inf;
    }
    return acc / static_cast<double>(gold_probs.size());
}

epsilon_solution optimal_epsilon(const std::vector<double> & gold_probs, int64_t vocab_size) {
    require_nonempty(gold_probs.size(), "optimal_epsilon");
    const double v = static_cast<double>(vocab_size);
    const double t = static_cast<double>(gold_probs.size());

    // projected gradient on F(lambda) = -(1/T) sum log(a_t lambda + b_t),
    // a_t = 1/V - p_t, b_t = p_t
    const double step      = 0.1;
    const int    max_iters = 10000;
    double lambda = 0.5;
    for (int i = 0; i < max_iters; i++) {
        double grad = 0.0;
        for (const double p : gold_probs) {
            const double a = 1.0 / v - p;
            grad -= a / (a * lambda + p);
        }
        grad /= t;
        const double next = std::clamp(lambda - step * grad, 0.0, 1.0);
        const double update = std::fabs(next - lambda);
        lambda = next;
        if (update < 1e-10) {
            break;
        }
    }

    // the iteration approaches a boundary optimum asymptotically; report
    // the boundary itself when it is at least as good
    for (const double edge : {0.0, 1.0}) {
        if (epsilon_objective(gold_probs, vocab_size, edge) <=
            epsilon_objective(gold_probs, vocab_size, lambda)) {
            lambda = edge;
        }
    }

    epsilon_solution out;
    out.lambda_star = lambda;
    out.eps_star    = lambda >= 1.0 ? k_inf : lambda / (v * (1.0 - lambda));
    out.objective   = epsilon_objective(gold_probs, vocab_size, lambda);
    out.eps_ppl     = std::exp(out.objective);
    return out;
}

epsilon_solution optimal_epsilon(const std::vector<token_eval_record> & records) {
    require_nonempty(records.size(), "optimal_epsilon");
    return optimal_epsilon(gold_probabilities(records), records[0].dist.vocab_size);
}

double sparsemax_score_term(const distribution & dist, int32_t gold) {
    return dist.prob_of(gold) + tsallis_entropy(dist, 2.0);
}

double sparsemax_score(const std::vector<token_eval_record> & records) {
    require_nonempty(records.size(), "sparsemax_score");
    double acc = 0.0;
    for (const auto & r : records) {
        acc += sparsemax_score_term(r.dist, r.gold);
    }
    return acc / static_cast<double>(records.size());
}

double patrick_fischer_score(const distribution & dist, int32_t gold) {
    double sq = 0.0;
    bool gold_in_support = false;
    for (size_t i = 0; i < dist.support.size(); i++) {
        if (dist.support[i] == gold) {
            const double d = dist.probs[i] - 1.0;
            sq += d * d;
            gold_in_support = true;
        } else {
            sq += dist.probs[i] * dist.probs[i];
        }
    }
    if (!gold_in_support) {
        sq += 1.0;
    }
    return 1.0 - 0.5 * sq;
}

namespace {

// entropy of a Bernoulli variable, nats
double bernoulli_entropy(double p) {
    double h = 0.0;
    if (p > 0.0) {
        h -= p * std::log(p);
    }
    if (p < 1.0) {
        h -= (1.0 - p) * std::log1p(-p);
    }
    return h;
}

} // namespace

double js_to_onehot(double p_gold) {
    if (p_gold < 0.0 || p_gold > 1.0) {
        throw std::invalid_argument("js_to_onehot: probability outside [0, 1]");
    }
    return bernoulli_entropy(0.5 * (1.0 + p_gold)) - 0.5 * bernoulli_entropy(p_gold);
}

double js_score(const std::vector<token_eval_record> & records) {
    require_nonempty(records.size(), "js_score");
    double acc = 0.0;
    for (const double p : gold_probabilities(records)) {
        acc += js_to_onehot(p);
    }
    return acc / static_cast<double>(records.size());
}

double generalized_js(const std::vector<distribution> & dists) {
    if (dists.size() < 2) {
        throw std::invalid_argument("generalized_js: needs at least two distributions");
    }
    const int32_t v = dists[0].vocab_size;
    for (const auto & d : dists) {
        if (d.vocab_size != v) {
            throw std::invalid_argument("generalized_js: vocabulary size mismatch");
        }
    }

    const double k = static_cast<double>(dists.size());
    std::vector<double> mixture(static_cast<size_t>(v), 0.0);
    for (const auto & d : dists) {
        for (size_t i = 0; i < d.support.size(); i++) {
            mixture[static_cast<size_t>(d.support[i])] += d.probs[i] / k;
        }
    }

    double acc = 0.0;
    for (const auto & d : dists) {
        for (size_t i = 0; i < d.support.size(); i++) {
            const double p = d.probs[i];
            acc += p * std::log(p / mixture[static_cast<size_t>(d.support[i])]);
        }
    }
    return acc / k;
}

repetition_result repetition_metrics(const std::vector<int32_t> & gold,
                                     const std::vector<int32_t> & predicted,
                                     const std::vector<int64_t> & windows) {
    if (gold.size() != predicted.size()) {
        throw std::invalid_argument("repetition_metrics: gold/predicted length mismatch");
    }
    require_nonempty(gold.size(), "repetition_metrics");
    for (const int64_t l : windows) {
        if (l < 1) {
            throw std::invalid_argument("repetition_metrics: window must be positive");
        }
    }

    repetition_result out;
    const int64_t n = static_cast<int64_t>(gold.size());
    for (const int64_t l : windows) {
        int64_t rep_hits  = 0;
        int64_t wrep_hits = 0;
        for (int64_t t = 0; t < n; t++) {
            const int64_t begin = std::max<int64_t>(0, t - l);
            bool pred_in_window = false;
            bool gold_in_window = false;
            for (int64_t j = begin; j < t; j++) {
                pred_in_window |= gold[static_cast<size_t>(j)] == predicted[static_cast<size_t>(t)];
                gold_in_window |= gold[static_cast<size_t>(j)] == gold[static_cast<size_t>(t)];
            }
            if (pred_in_window) {
                rep_hits++;
                if (!gold_in_window) {
                    wrep_hits++;
                }
            }
        }
        out.rep[l]  = static_cast<double>(rep_hits) / static_cast<double>(n);
        out.wrep[l] = static_cast<double>(wrep_hits) / static_cast<double>(n);
    }
    for (const auto & [l, v] : out.rep) {
        (void)l;
        out.rep_mean += v;
    }
    for (const auto & [l, v] : out.wrep) {
        (void)l;
        out.wrep_mean += v;
    }
    out.rep_mean  /= static_cast<double>(out.rep.size());
    out.wrep_mean /= static_cast<double>(out.wrep.size());
    return out;
}

double distinct_n(const std::vector<int32_t> & tokens, int n) {
    if (n < 1) {
        throw std::invalid_argument("distinct_n: n must be >= 1");
    }
    if (tokens.size() < static_cast<size_t>(n)) {
        return 0.0;
    }
    std::set<std::vector<int32_t>> grams;
    for (size_t i = 0; i + static_cast<size_t>(n) <= tokens.size(); i++) {
        grams.insert(std::vector<int32_t>(tokens.begin() + static_cast<ptrdiff_t>(i),
                                          tokens.begin() + static_cast<ptrdiff_t>(i) + n));
    }
    return static_cast<double>(grams.size()) / static_cast<double>(tokens.size());
}

support_stats support_statistics(const std::vector<int64_t> & sizes) {
    require_nonempty(sizes.size(), "support_statistics");
    std::vector<int64_t> sorted(sizes);
    std::sort(sorted.begin(), sorted.end());

    support_stats out;
    out.min = sorted.front();
    out.max = sorted.back();

    const size_t n = sorted.size();
    double mean = 0.0;
    for (const int64_t s : sorted) {
        mean += static_cast<double>(s);
    }
    mean /= static_cast<double>(n);
    out.mean = mean;

    out.median = n % 2 == 1
        ? static_cast<double>(sorted[n / 2])
        : 0.5 * (static_cast<double>(sorted[n / 2 - 1]) + static_cast<double>(sorted[n / 2]));

    double var = 0.0;
    for (const int64_t s : sorted) {
        const double d = static_cast<double>(s) - mean;
        var += d * d;
    }
    out.sd = std::sqrt(var / static_cast<double>(n));
    return out;
}

support_stats support_statistics(const std::vector<token_eval_record> & records) {
    std::vector<int64_t> sizes;
    sizes.reserve(records.size());
    for (const auto & r : records) {
        sizes.push_back(static_cast<int64_t>(r.dist.support_size()));
    }
    return support_statistics(sizes);
}

std::vector<curve_row> metric_curves(const std::vector<double> & p_grid,
                                     const std::vector<double> & epsilons,
                                     int64_t vocab_size) {
    if (vocab_size < 2) {
        throw std::invalid_argument("metric_curves: vocab_size must be >= 2");
    }
    const double v = static_cast<double>(vocab_size);
    std::vector<curve_row> rows;
    rows.reserve(p_grid.size());
    for (const double p : p_grid) {
        if (p < 0.0 || p > 1.0) {
            throw std::invalid_argument("metric_curves: grid point outside [0, 1]");
        }
        curve_row row;
        row.p_gold = p;
        for (const double eps : epsilons) {
            row.eps_ppl.push_back(p + eps > 0.0 ? (1.0 + eps * v) / (p + eps) : k_inf);
        }
        const double t = 1.0 - p;
        row.sp = p + 0.5 * (1.0 - p * p - t * t / (v - 1.0));
        row.js = js_to_onehot(p);
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace sparsegen

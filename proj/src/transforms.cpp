#include "sparsegen/transforms.hpp"
#include "sparsegen/kernels.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sparsegen {

double distribution::prob_of(int32_t token) const {
    const auto it = std::lower_bound(support.begin(), support.end(), token);
    if (it == support.end() || *it != token) {
        return 0.0;
    }
    return probs[static_cast<size_t>(it - support.begin())];
}

void check_scores(const score_vector & z) {
    if (z.empty()) {
        throw std::invalid_argument("score vector must have length >= 1");
    }
    for (const double v : z) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("score vector has a non-finite entry");
        }
    }
}

void check_distribution(const distribution & p) {
    if (p.vocab_size < 1) {
        throw std::logic_error("distribution: vocab_size must be >= 1");
    }
    if (p.support.size() != p.probs.size()) {
        throw std::logic_error("distribution: support/probs size mismatch");
    }
    if (p.support.empty()) {
        throw std::logic_error("distribution: empty support");
    }
    double sum = 0.0;
    for (size_t i = 0; i < p.support.size(); i++) {
        if (p.support[i] < 0 || p.support[i] >= p.vocab_size) {
            throw std::logic_error("distribution: support id out of range");
        }
        if (i > 0 && p.support[i] <= p.support[i - 1]) {
            throw std::logic_error("distribution: support ids not strictly increasing");
        }
        if (!(p.probs[i] > 0.0) || !std::isfinite(p.probs[i])) {
            throw std::logic_error("distribution: probability not strictly positive");
        }
        sum += p.probs[i];
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
        throw std::logic_error("distribution: probabilities sum to " + std::to_string(sum));
    }
}

std::vector<double> to_dense(const distribution & p) {
    std::vector<double> dense(static_cast<size_t>(p.vocab_size), 0.0);
    for (size_t i = 0; i < p.support.size(); i++) {
        dense[static_cast<size_t>(p.support[i])] = p.probs[i];
    }
    return dense;
}

distribution make_dense(std::vector<double> probs) {
    distribution out;
    out.vocab_size = static_cast<int32_t>(probs.size());
    out.support.resize(probs.size());
    std::iota(out.support.begin(), out.support.end(), 0);
    out.probs = std::move(probs);
    return out;
}

namespace {

// drop entries at or below the support floor, renormalize the rest
distribution finalize_sparse(const std::vector<double> & raw, int32_t vocab_size) {
    distribution out;
    out.vocab_size = vocab_size;
    double sum = 0.0;
    for (int32_t i = 0; i < vocab_size; i++) {
        const double v = raw[static_cast<size_t>(i)];
        if (v > k_support_floor) {
            out.support.push_back(i);
            out.probs.push_back(v);
            sum += v;
        }
    }
    if (out.support.empty()) {
        throw std::runtime_error("transform produced an empty support");
    }
    for (double & v : out.probs) {
        v /= sum;
    }
    return out;
}

} // namespace

distribution softmax(const score_vector & z, double temperature) {
    check_scores(z);
    if (!(temperature > 0.0)) {
        throw std::invalid_argument("softmax temperature must be > 0");
    }
    const size_t n = z.size();
    const double m = kernels::reduce_max(z.data(), n);

    distribution out;
    out.vocab_size = static_cast<int32_t>(n);
    out.support.resize(n);
    std::iota(out.support.begin(), out.support.end(), 0);
    out.probs.resize(n);

    double sum = 0.0;
    for (size_t i = 0; i < n; i++) {
        // floor at the smallest positive double so the output stays dense
        // even when (z - max)/temperature underflows exp
        const double e = std::max(std::exp((z[i] - m) / temperature), DBL_TRUE_MIN);
        out.probs[i] = e;
        sum += e;
    }
    for (double & v : out.probs) {
        v /= sum;
    }
    return out;
}

double tsallis_entropy(const distribution & p, double alpha) {
    if (alpha < 1.0) {
        throw std::invalid_argument("tsallis_entropy requires alpha >= 1");
    }
    if (alpha == 1.0) {
        double h = 0.0;
        for (const double v : p.probs) {
            h -= v * std::log(v);
        }
        return h;
    }
    double acc = 0.0;
    for (const double v : p.probs) {
        acc += v - std::pow(v, alpha);
    }
    return acc / (alpha * (alpha - 1.0));
}

distribution sparsemax(const score_vector & z) {
    check_scores(z);
    const size_t n = z.size();

    std::vector<double> sorted(z);
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());

    // largest k with 1 + k*z_(k) > sum of the top k entries
    double cumsum = 0.0;
    double tau    = sorted[0] - 1.0;
    for (size_t i = 0; i < n; i++) {
        cumsum += sorted[i];
        const double kk = static_cast<double>(i + 1);
        if (1.0 + kk * sorted[i] > cumsum) {
            tau = (cumsum - 1.0) / kk;
        } else {
            break;
        }
    }

    std::vector<double> raw(n);
    for (size_t i = 0; i < n; i++) {
        raw[i] = std::max(z[i] - tau, 0.0);
    }
    return finalize_sparse(raw, static_cast<int32_t>(n));
}

namespace {

// sum over i of max(w_i - tau, 0)^exponent
double threshold_mass(const std::vector<double> & w, double tau, double exponent) {
    if (exponent == 1.0) {
        return kernels::clamped_sum(w.data(), w.size(), tau);
    }
    if (exponent == 2.0) {
        return kernels::clamped_sq_sum(w.data(), w.size(), tau);
    }
    double acc = 0.0;
    for (const double v : w) {
        const double t = v - tau;
        if (t > 0.0) {
            acc += std::pow(t, exponent);
        }
    }
    return acc;
}

} // namespace

distribution entmax(const score_vector & z, const entmax_params & params) {
    check_scores(z);
    if (params.alpha < 1.0) {
        throw std::invalid_argument("entmax requires alpha >= 1");
    }
    if (!(params.tol > 0.0) || params.max_iters < 1) {
        throw std::invalid_argument("entmax: tol must be > 0 and max_iters >= 1");
    }
    if (params.alpha == 1.0) {
        return softmax(z, 1.0);
    }

    const size_t n        = z.size();
    const double exponent = 1.0 / (params.alpha - 1.0);

    // shift by the max first: w_i = (alpha-1) * (z_i - max z), so the
    // threshold is bracketed by [-1, 0] regardless of the input scale
    const double m = kernels::reduce_max(z.data(), n);
    std::vector<double> w(n);
    for (size_t i = 0; i < n; i++) {
        w[i] = (params.alpha - 1.0) * (z[i] - m);
    }

    // mass(tau) - 1 is >= 0 at tau = -1 and -1 at tau = 0
    double lo = -1.0;
    double hi = 0.0;
    double tau = lo;
    double residual = threshold_mass(w, lo, exponent) - 1.0;
    bool converged = std::fabs(residual) <= params.tol;
    int iters = 0;
    while (!converged && iters < params.max_iters) {
        iters++;
        tau = 0.5 * (lo + hi);
        residual = threshold_mass(w, tau, exponent) - 1.0;
        if (std::fabs(residual) <= params.tol) {
            converged = true;
        } else if (hi - lo <= 1e-15) {
            // The threshold is pinned to machine resolution but the mass
            // still jumps across one ulp: for alpha > 2 a coordinate right
            // at the support boundary has unbounded slope. The final
            // renormalization absorbs the leftover residual.
            converged = true;
        } else if (residual > 0.0) {
            lo = tau;
        } else {
            hi = tau;
        }
    }
    if (!converged) {
        throw std::runtime_error("entmax bisection did not converge: " + std::to_string(iters) +
                                 " iterations, residual " + std::to_string(residual));
    }

    std::vector<double> raw(n);
    for (size_t i = 0; i < n; i++) {
        const double t = w[i] - tau;
        raw[i] = t > 0.0 ? std::pow(t, exponent) : 0.0;
    }
    return finalize_sparse(raw, static_cast<int32_t>(n));
}

namespace {

// ids ordered by descending probability, ties to the lower id
std::vector<size_t> order_by_prob(const distribution & p) {
    std::vector<size_t> order(p.support.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return p.probs[a] > p.probs[b];
    });
    return order;
}

distribution keep_entries(const distribution & p, const std::vector<size_t> & kept) {
    std::vector<size_t> sorted_kept(kept);
    std::sort(sorted_kept.begin(), sorted_kept.end());
    distribution out;
    out.vocab_size = p.vocab_size;
    double sum = 0.0;
    for (const size_t idx : sorted_kept) {
        out.support.push_back(p.support[idx]);
        out.probs.push_back(p.probs[idx]);
        sum += p.probs[idx];
    }
    for (double & v : out.probs) {
        v /= sum;
    }
    return out;
}

} // namespace

distribution topk_truncate(const distribution & p, int64_t k) {
    if (k < 1) {
        throw std::invalid_argument("topk_truncate requires k >= 1");
    }
    if (static_cast<size_t>(k) >= p.support.size()) {
        return p;
    }
    const auto order = order_by_prob(p);
    return keep_entries(p, {order.begin(), order.begin() + static_cast<size_t>(k)});
}

distribution nucleus_truncate(const distribution & p, double top_p) {
    if (!(top_p > 0.0) || top_p > 1.0) {
        throw std::invalid_argument("nucleus_truncate requires top_p in (0, 1]");
    }
    const auto order = order_by_prob(p);
    std::vector<size_t> kept;
    double cum = 0.0;
    for (const size_t idx : order) {
        kept.push_back(idx);
        cum += p.probs[idx];
        if (cum >= top_p) {
            break;
        }
    }
    if (kept.size() == p.support.size()) {
        return p;
    }
    return keep_entries(p, kept);
}

distribution argmax_onehot(const score_vector & z) {
    check_scores(z);
    size_t best = 0;
    for (size_t i = 1; i < z.size(); i++) {
        if (z[i] > z[best]) {
            best = i;
        }
    }
    distribution out;
    out.vocab_size = static_cast<int32_t>(z.size());
    out.support    = {static_cast<int32_t>(best)};
    out.probs      = {1.0};
    return out;
}

} // namespace sparsegen

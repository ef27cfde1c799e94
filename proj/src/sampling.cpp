#include "sparsegen/sampling.hpp"

#include <cmath>
#include <stdexcept>

namespace sparsegen {

const char * strategy_name(decode_strategy s) {
    switch (s) {
        case decode_strategy::greedy:      return "greedy";
        case decode_strategy::softmax:     return "softmax";
        case decode_strategy::temperature: return "temperature";
        case decode_strategy::topk:        return "topk";
        case decode_strategy::nucleus:     return "nucleus";
        case decode_strategy::entmax:      return "entmax";
    }
    return "unknown";
}

decode_strategy strategy_from_name(const std::string & name) {
    if (name == "greedy")      return decode_strategy::greedy;
    if (name == "softmax")     return decode_strategy::softmax;
    if (name == "temperature") return decode_strategy::temperature;
    if (name == "topk")        return decode_strategy::topk;
    if (name == "nucleus")     return decode_strategy::nucleus;
    if (name == "entmax")      return decode_strategy::entmax;
    throw std::invalid_argument("unknown decoding strategy: " + name);
}

void check_decoder_config(const decoder_config & cfg) {
    if (cfg.max_len < 1) {
        throw std::invalid_argument("decoder: max_len must be >= 1");
    }
    switch (cfg.strategy) {
        case decode_strategy::greedy:
        case decode_strategy::softmax:
            break;
        case decode_strategy::temperature:
            if (!(cfg.param > 0.0)) {
                throw std::invalid_argument("decoder: temperature must be > 0");
            }
            break;
        case decode_strategy::topk:
            if (cfg.param < 1.0 || cfg.param != std::floor(cfg.param)) {
                throw std::invalid_argument("decoder: k must be an integer >= 1");
            }
            break;
        case decode_strategy::nucleus:
            if (!(cfg.param > 0.0) || cfg.param > 1.0) {
                throw std::invalid_argument("decoder: P must be in (0, 1]");
            }
            break;
        case decode_strategy::entmax:
            if (cfg.param < 1.0) {
                throw std::invalid_argument("decoder: alpha must be >= 1");
            }
            break;
    }
}

distribution next_token_distribution(const score_vector & z, const decoder_config & cfg) {
    check_decoder_config(cfg);
    switch (cfg.strategy) {
        case decode_strategy::greedy:
            return argmax_onehot(z);
        case decode_strategy::softmax:
            return softmax(z, 1.0);
        case decode_strategy::temperature:
            return softmax(z, cfg.param);
        case decode_strategy::topk:
            return topk_truncate(softmax(z, 1.0), static_cast<int64_t>(cfg.param));
        case decode_strategy::nucleus:
            return nucleus_truncate(softmax(z, 1.0), cfg.param);
        case decode_strategy::entmax: {
            entmax_params params;
            params.alpha = cfg.param;
            return entmax(z, params);
        }
    }
    throw std::logic_error("unreachable strategy");
}

int32_t sample(const distribution & p, rng64 & rng) {
    const double u = rng.uniform01();
    double cum = 0.0;
    for (size_t i = 0; i < p.support.size(); i++) {
        cum += p.probs[i];
        if (u < cum) {
            return p.support[i];
        }
    }
    // u landed in the rounding slack past the last cumulative step
    return p.support.back();
}

generated_sequence generate(const lm_interface & model, const std::vector<int32_t> & context,
                            const decoder_config & cfg) {
    check_decoder_config(cfg);
    rng64 rng(cfg.seed);

    generated_sequence out;
    std::vector<int32_t> full(context);
    for (int step = 0; step < cfg.max_len; step++) {
        const score_vector z = model.next_scores(full);
        const distribution p = next_token_distribution(z, cfg);
        const int32_t tok = sample(p, rng);
        out.tokens.push_back(tok);
        out.support_sizes.push_back(static_cast<int64_t>(p.support_size()));
        full.push_back(tok);
        if (tok == model.stop_token()) {
            break;
        }
    }
    return out;
}

} // namespace sparsegen

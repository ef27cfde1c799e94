#pragma once

#include "sparsegen/rng.hpp"
#include "sparsegen/transforms.hpp"

#include <string>

namespace sparsegen {

enum class decode_strategy {
    greedy,
    softmax,
    temperature,
    topk,
    nucleus,
    entmax,
};

const char *    strategy_name(decode_strategy s);
decode_strategy strategy_from_name(const std::string & name); // throws on unknown

struct decoder_config {
    decode_strategy strategy = decode_strategy::softmax;
    // tau for temperature, k for topk, P for nucleus, alpha for entmax;
    // ignored by greedy and plain softmax
    double   param   = 0.0;
    int      max_len = 128;
    uint64_t seed    = 0;
};

// throws std::invalid_argument when param is outside the legal range
void check_decoder_config(const decoder_config & cfg);

// the per-step transform of each decoding strategy; top-k and nucleus
// truncate softmax(z, 1), entmax transforms the raw scores
distribution next_token_distribution(const score_vector & z, const decoder_config & cfg);

// inverse-CDF draw over the support in token-id order
int32_t sample(const distribution & p, rng64 & rng);

// what generate() needs from a language model
struct lm_interface {
    virtual ~lm_interface() = default;
    virtual int32_t      vocab_size() const = 0;
    virtual int32_t      stop_token() const = 0;
    virtual score_vector next_scores(const std::vector<int32_t> & context) const = 0;
};

struct generated_sequence {
    std::vector<int32_t> tokens;
    std::vector<int64_t> support_sizes; // one per emitted token
};

// autoregressive sampling until the stop token or max_len; deterministic
// given (model, context, cfg.seed)
generated_sequence generate(const lm_interface & model, const std::vector<int32_t> & context,
                            const decoder_config & cfg);

} // namespace sparsegen

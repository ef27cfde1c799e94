#pragma once

#include "sparsegen/sampling.hpp"

#include <string>
#include <unordered_map>

namespace sparsegen::tinylm {

enum class tokenizer_mode {
    whitespace,
    character,
};

const char *   tokenizer_name(tokenizer_mode m);
tokenizer_mode tokenizer_from_name(const std::string & name);

// Token table with reserved start/stop/unk entries. Ids are assigned in
// first-appearance order over the corpus, so the table is a pure function
// of the text and the tokenizer mode.
struct vocab {
    static constexpr int32_t start_id = 0;
    static constexpr int32_t stop_id  = 1;
    static constexpr int32_t unk_id   = 2;

    tokenizer_mode mode = tokenizer_mode::whitespace;
    std::vector<std::string> tokens;
    std::unordered_map<std::string, int32_t> index;

    int32_t size() const { return static_cast<int32_t>(tokens.size()); }
    int32_t id_of(const std::string & token) const;
};

std::vector<std::string> tokenize_line(const std::string & line, tokenizer_mode mode);

vocab build_vocab(const std::string & text, tokenizer_mode mode);

// token ids per non-empty line; unknown tokens map to unk
std::vector<std::vector<int32_t>> encode_lines(const vocab & v, const std::string & text);

// Feedforward autoregressive model: the last C token embeddings are
// concatenated, passed through one tanh layer, and projected to scores
// over the vocabulary.
struct model_params {
    vocab   vocabulary;
    int32_t context_window = 0;
    int32_t embed_dim      = 0;
    int32_t hidden_dim     = 0;

    std::vector<double> embed; // V x d, row per token
    std::vector<double> w1;    // h rows of length C*d
    std::vector<double> b1;    // h
    std::vector<double> w2;    // V rows of length h
    std::vector<double> b2;    // V

    int32_t vocab_size() const { return vocabulary.size(); }
    size_t  parameter_count() const;
};

model_params init_model(const vocab & v, int32_t context_window, int32_t embed_dim,
                        int32_t hidden_dim, uint64_t seed);

// left-pad with start tokens / truncate from the left to exactly C entries
std::vector<int32_t> pad_context(const std::vector<int32_t> & context, int32_t context_window);

// scores over the vocabulary for a padded context of exactly C tokens
score_vector forward(const model_params & m, const std::vector<int32_t> & padded_context);

struct train_example {
    std::vector<int32_t> context; // padded, length C
    int32_t target = 0;
};

// per line: predict every token plus the closing stop token
std::vector<train_example> make_examples(const std::vector<std::vector<int32_t>> & lines,
                                         int32_t context_window);

struct train_config {
    double   alpha         = 1.5;
    double   learning_rate = 0.05;
    int      epochs        = 20;
    uint64_t seed          = 1;
    int      batch_size    = 16;
};

struct train_stats {
    std::vector<double> epoch_mean_loss;
};

// mini-batch gradient descent on the entmax loss; deterministic given the
// config seed
train_stats train(model_params & m, const std::vector<train_example> & examples,
                  const train_config & cfg);

// max relative error between backpropagated gradients and central finite
// differences on n_probes randomly chosen parameters
double finite_diff_check(const model_params & m, const std::vector<int32_t> & context,
                         int32_t gold, double alpha, int n_probes, uint64_t seed);

// adapter so generate() can drive the model
struct lm_adapter : lm_interface {
    const model_params * model;

    explicit lm_adapter(const model_params & m) : model(&m) {}

    int32_t vocab_size() const override { return model->vocab_size(); }
    int32_t stop_token() const override { return vocab::stop_id; }
    score_vector next_scores(const std::vector<int32_t> & context) const override {
        return forward(*model, pad_context(context, model->context_window));
    }
};

} // namespace sparsegen::tinylm

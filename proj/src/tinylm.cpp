#include "sparsegen/tinylm.hpp"

#include "sparsegen/kernels.hpp"
#include "sparsegen/losses.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sparsegen::tinylm {

const char * tokenizer_name(tokenizer_mode m) {
    return m == tokenizer_mode::whitespace ? "whitespace" : "char";
}

tokenizer_mode tokenizer_from_name(const std::string & name) {
    if (name == "whitespace") return tokenizer_mode::whitespace;
    if (name == "char")       return tokenizer_mode::character;
    throw std::invalid_argument("unknown tokenizer mode: " + name);
}

int32_t vocab::id_of(const std::string & token) const {
    const auto it = index.find(token);
    return it == index.end() ? unk_id : it->second;
}

std::vector<std::string> tokenize_line(const std::string & line, tokenizer_mode mode) {
    std::vector<std::string> out;
    if (mode == tokenizer_mode::whitespace) {
        std::istringstream ss(line);
        std::string tok;
        while (ss >> tok) {
            out.push_back(tok);
        }
    } else {
        for (const char c : line) {
            if (c != '\n' && c != '\r') {
                out.emplace_back(1, c);
            }
        }
    }
    return out;
}

vocab build_vocab(const std::string & text, tokenizer_mode mode) {
    vocab v;
    v.mode   = mode;
    v.tokens = {"<s>", "</s>", "<unk>"};
    for (int32_t i = 0; i < v.size(); i++) {
        v.index[v.tokens[static_cast<size_t>(i)]] = i;
    }
    std::istringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        for (const auto & tok : tokenize_line(line, mode)) {
            if (v.index.emplace(tok, v.size()).second) {
                v.tokens.push_back(tok);
            }
        }
    }
    return v;
}

std::vector<std::vector<int32_t>> encode_lines(const vocab & v, const std::string & text) {
    std::vector<std::vector<int32_t>> out;
    std::istringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        std::vector<int32_t> ids;
        for (const auto & tok : tokenize_line(line, v.mode)) {
            ids.push_back(v.id_of(tok));
        }
        if (!ids.empty()) {
            out.push_back(std::move(ids));
        }
    }
    return out;
}

size_t model_params::parameter_count() const {
    return embed.size() + w1.size() + b1.size() + w2.size() + b2.size();
}

model_params init_model(const vocab & v, int32_t context_window, int32_t embed_dim,
                        int32_t hidden_dim, uint64_t seed) {
    if (context_window < 1 || embed_dim < 1 || hidden_dim < 1) {
        throw std::invalid_argument("init_model: dimensions must be >= 1");
    }
    model_params m;
    m.vocabulary     = v;
    m.context_window = context_window;
    m.embed_dim      = embed_dim;
    m.hidden_dim     = hidden_dim;

    const size_t vs = static_cast<size_t>(v.size());
    m.embed.resize(vs * static_cast<size_t>(embed_dim));
    m.w1.resize(static_cast<size_t>(hidden_dim) * static_cast<size_t>(context_window * embed_dim));
    m.b1.resize(static_cast<size_t>(hidden_dim));
    m.w2.resize(vs * static_cast<size_t>(hidden_dim));
    m.b2.resize(vs);

    rng64 rng(seed);
    for (auto * block : {&m.embed, &m.w1, &m.b1, &m.w2, &m.b2}) {
        for (double & w : *block) {
            w = rng.uniform(-0.05, 0.05);
        }
    }
    return m;
}

std::vector<int32_t> pad_context(const std::vector<int32_t> & context, int32_t context_window) {
    const size_t c = static_cast<size_t>(context_window);
    std::vector<int32_t> out(c, vocab::start_id);
    const size_t take = std::min(context.size(), c);
    for (size_t i = 0; i < take; i++) {
        out[c - take + i] = context[context.size() - take + i];
    }
    return out;
}

namespace {

struct forward_cache {
    std::vector<int32_t> context; // padded token ids
    std::vector<double>  x;       // C*d concatenated embeddings
    std::vector<double>  hidden;  // tanh activations
    score_vector         z;
};

forward_cache run_forward(const model_params & m, const std::vector<int32_t> & padded_context) {
    const size_t c = static_cast<size_t>(m.context_window);
    const size_t d = static_cast<size_t>(m.embed_dim);
    const size_t h = static_cast<size_t>(m.hidden_dim);
    const size_t v = static_cast<size_t>(m.vocab_size());

    if (padded_context.size() != c) {
        throw std::invalid_argument("forward: context must have exactly context_window tokens");
    }

    forward_cache fc;
    fc.context = padded_context;
    fc.x.resize(c * d);
    for (size_t i = 0; i < c; i++) {
        const int32_t tok = padded_context[i];
        if (tok < 0 || static_cast<size_t>(tok) >= v) {
            throw std::invalid_argument("forward: token id out of vocabulary");
        }
        const double * row = m.embed.data() + static_cast<size_t>(tok) * d;
        std::copy(row, row + d, fc.x.data() + i * d);
    }

    fc.hidden.resize(h);
    const size_t in = c * d;
    for (size_t j = 0; j < h; j++) {
        fc.hidden[j] = std::tanh(kernels::dot(m.w1.data() + j * in, fc.x.data(), in) + m.b1[j]);
    }

    fc.z.resize(v);
    for (size_t k = 0; k < v; k++) {
        fc.z[k] = kernels::dot(m.w2.data() + k * h, fc.hidden.data(), h) + m.b2[k];
    }
    return fc;
}

struct gradients {
    std::vector<double> embed, w1, b1, w2, b2;

    explicit gradients(const model_params & m)
        : embed(m.embed.size(), 0.0),
          w1(m.w1.size(), 0.0),
          b1(m.b1.size(), 0.0),
          w2(m.w2.size(), 0.0),
          b2(m.b2.size(), 0.0) {}

    void clear() {
        for (auto * block : {&embed, &w1, &b1, &w2, &b2}) {
            std::fill(block->begin(), block->end(), 0.0);
        }
    }
};

// accumulate parameter gradients for one example; dz is the loss gradient
// in the scores (p - e_target)
void backward(const model_params & m, const forward_cache & fc,
              const std::vector<double> & dz, gradients & g) {
    const size_t c  = static_cast<size_t>(m.context_window);
    const size_t d  = static_cast<size_t>(m.embed_dim);
    const size_t h  = static_cast<size_t>(m.hidden_dim);
    const size_t v  = static_cast<size_t>(m.vocab_size());
    const size_t in = c * d;

    std::vector<double> dhidden(h, 0.0);
    for (size_t k = 0; k < v; k++) {
        const double gk = dz[k];
        if (gk == 0.0) {
            continue; // entmax gradients are sparse for alpha > 1
        }
        g.b2[k] += gk;
        kernels::axpy(gk, fc.hidden.data(), g.w2.data() + k * h, h);
        kernels::axpy(gk, m.w2.data() + k * h, dhidden.data(), h);
    }

    std::vector<double> dx(in, 0.0);
    for (size_t j = 0; j < h; j++) {
        const double dpre = dhidden[j] * (1.0 - fc.hidden[j] * fc.hidden[j]);
        if (dpre == 0.0) {
            continue;
        }
        g.b1[j] += dpre;
        kernels::axpy(dpre, fc.x.data(), g.w1.data() + j * in, in);
        kernels::axpy(dpre, m.w1.data() + j * in, dx.data(), in);
    }

    for (size_t i = 0; i < c; i++) {
        const size_t tok = static_cast<size_t>(fc.context[i]);
        kernels::axpy(1.0, dx.data() + i * d, g.embed.data() + tok * d, d);
    }
}

} // namespace

score_vector forward(const model_params & m, const std::vector<int32_t> & padded_context) {
    return run_forward(m, padded_context).z;
}

std::vector<train_example> make_examples(const std::vector<std::vector<int32_t>> & lines,
                                         int32_t context_window) {
    std::vector<train_example> out;
    for (const auto & line : lines) {
        std::vector<int32_t> history;
        for (size_t i = 0; i <= line.size(); i++) {
            train_example ex;
            ex.context = pad_context(history, context_window);
            ex.target  = i < line.size() ? line[i] : vocab::stop_id;
            out.push_back(std::move(ex));
            if (i < line.size()) {
                history.push_back(line[i]);
            }
        }
    }
    return out;
}

train_stats train(model_params & m, const std::vector<train_example> & examples,
                  const train_config & cfg) {
    if (examples.empty()) {
        throw std::invalid_argument("train: corpus too short, no training examples");
    }
    if (cfg.alpha < 1.0 || !(cfg.learning_rate >= 0.0) || cfg.epochs < 1 || cfg.batch_size < 1) {
        throw std::invalid_argument("train: invalid training configuration");
    }
    for (const auto & ex : examples) {
        if (ex.target < 0 || ex.target >= m.vocab_size()) {
            throw std::invalid_argument("train: target token out of vocabulary");
        }
    }

    rng64 rng(cfg.seed);
    std::vector<size_t> order(examples.size());
    for (size_t i = 0; i < order.size(); i++) {
        order[i] = i;
    }

    gradients g(m);
    train_stats stats;
    for (int epoch = 0; epoch < cfg.epochs; epoch++) {
        // Fisher-Yates with the explicit generator for reproducibility
        for (size_t i = order.size(); i > 1; i--) {
            std::swap(order[i - 1], order[static_cast<size_t>(rng.below(i))]);
        }

        double epoch_loss = 0.0;
        size_t batch_index = 0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
            g.clear();
            for (size_t i = start; i < end; i++) {
                const auto & ex = examples[order[i]];
                const forward_cache fc = run_forward(m, ex.context);
                const loss_value lv = entmax_loss(fc.z, ex.target, cfg.alpha);
                if (!std::isfinite(lv.value)) {
                    throw std::runtime_error("train: non-finite loss in batch " +
                                             std::to_string(batch_index));
                }
                epoch_loss += lv.value;
                backward(m, fc, lv.grad, g);
            }
            const double step = cfg.learning_rate / static_cast<double>(end - start);
            kernels::axpy(-step, g.embed.data(), m.embed.data(), m.embed.size());
            kernels::axpy(-step, g.w1.data(), m.w1.data(), m.w1.size());
            kernels::axpy(-step, g.b1.data(), m.b1.data(), m.b1.size());
            kernels::axpy(-step, g.w2.data(), m.w2.data(), m.w2.size());
            kernels::axpy(-step, g.b2.data(), m.b2.data(), m.b2.size());
            batch_index++;
        }
        stats.epoch_mean_loss.push_back(epoch_loss / static_cast<double>(examples.size()));
    }
    return stats;
}

namespace {

double loss_at(const model_params & m, const std::vector<int32_t> & context, int32_t gold,
               double alpha) {
    return entmax_loss(forward(m, context), gold, alpha).value;
}

} // namespace

double finite_diff_check(const model_params & m, const std::vector<int32_t> & context,
                         int32_t gold, double alpha, int n_probes, uint64_t seed) {
    const forward_cache fc = run_forward(m, context);
    const loss_value lv = entmax_loss(fc.z, gold, alpha);
    gradients g(m);
    backward(m, fc, lv.grad, g);

    model_params probe = m;
    std::vector<std::pair<std::vector<double> *, std::vector<double> *>> blocks = {
        {&probe.embed, &g.embed}, {&probe.w1, &g.w1}, {&probe.b1, &g.b1},
        {&probe.w2, &g.w2},       {&probe.b2, &g.b2},
    };

    const double h = 1e-5;
    rng64 rng(seed);
    double worst = 0.0;
    for (int probe_i = 0; probe_i < n_probes; probe_i++) {
        const size_t flat = static_cast<size_t>(rng.below(m.parameter_count()));
        size_t offset = flat;
        for (auto & [params, grads] : blocks) {
            if (offset < params->size()) {
                double & w = (*params)[offset];
                const double saved = w;
                w = saved + h;
                const double up = loss_at(probe, context, gold, alpha);
                w = saved - h;
                const double down = loss_at(probe, context, gold, alpha);
                w = saved;
                const double fd = (up - down) / (2.0 * h);
                const double bp = (*grads)[offset];
                const double scale = std::max({std::fabs(fd), std::fabs(bp), 1e-4});
                worst = std::max(worst, std::fabs(fd - bp) / scale);
                break;
            }
            offset -= params->size();
        }
    }
    return worst;
}

} // namespace sparsegen::tinylm

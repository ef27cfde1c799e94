#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sparsegen/losses.hpp"
#include "sparsegen/tinylm.hpp"
#include "test_util.hpp"

#include <cmath>
#include <string>

using namespace sparsegen;
using namespace sparsegen::tinylm;

namespace {

std::string repeated_lines(const std::string & line, int count) {
    std::string text;
    for (int i = 0; i < count; i++) {
        text += line;
        text.push_back('\n');
    }
    return text;
}

// Full-batch NLL trainer written independently of tinylm::train: dense
// softmax gradient and hand-rolled backprop with plain loops.
struct nll_oracle {
    model_params m;
    double lr;

    double step(const std::vector<train_example> & examples) {
        const size_t c = static_cast<size_t>(m.context_window);
        const size_t d = static_cast<size_t>(m.embed_dim);
        const size_t h = static_cast<size_t>(m.hidden_dim);
        const size_t v = static_cast<size_t>(m.vocab_size());
        const size_t in = c * d;

        std::vector<double> g_embed(m.embed.size(), 0.0), g_w1(m.w1.size(), 0.0),
            g_b1(m.b1.size(), 0.0), g_w2(m.w2.size(), 0.0), g_b2(m.b2.size(), 0.0);
        double total_loss = 0.0;

        for (const auto & ex : examples) {
            std::vector<double> x(in);
            for (size_t i = 0; i < c; i++) {
                for (size_t j = 0; j < d; j++) {
                    x[i * d + j] = m.embed[static_cast<size_t>(ex.context[i]) * d + j];
                }
            }
            std::vector<double> hid(h);
            for (size_t j = 0; j < h; j++) {
                double acc = m.b1[j];
                for (size_t i = 0; i < in; i++) {
                    acc += m.w1[j * in + i] * x[i];
                }
                hid[j] = std::tanh(acc);
            }
            std::vector<double> z(v);
            double zmax = -1e300;
            for (size_t k = 0; k < v; k++) {
                double acc = m.b2[k];
                for (size_t j = 0; j < h; j++) {
                    acc += m.w2[k * h + j] * hid[j];
                }
                z[k] = acc;
                zmax = std::max(zmax, acc);
            }
            double lse = 0.0;
            for (size_t k = 0; k < v; k++) {
                lse += std::exp(z[k] - zmax);
            }
            total_loss += zmax + std::log(lse) - z[static_cast<size_t>(ex.target)];

            std::vector<double> dz(v);
            for (size_t k = 0; k < v; k++) {
                dz[k] = std::exp(z[k] - zmax) / lse;
            }
            dz[static_cast<size_t>(ex.target)] -= 1.0;

            std::vector<double> dhid(h, 0.0);
            for (size_t k = 0; k < v; k++) {
                g_b2[k] += dz[k];
                for (size_t j = 0; j < h; j++) {
                    g_w2[k * h + j] += dz[k] * hid[j];
                    dhid[j] += dz[k] * m.w2[k * h + j];
                }
            }
            std::vector<double> dx(in, 0.0);
            for (size_t j = 0; j < h; j++) {
                const double dpre = dhid[j] * (1.0 - hid[j] * hid[j]);
                g_b1[j] += dpre;
                for (size_t i = 0; i < in; i++) {
                    g_w1[j * in + i] += dpre * x[i];
                    dx[i] += dpre * m.w1[j * in + i];
                }
            }
            for (size_t i = 0; i < c; i++) {
                for (size_t j = 0; j < d; j++) {
                    g_embed[static_cast<size_t>(ex.context[i]) * d + j] += dx[i * d + j];
                }
            }
        }

        const double scale = lr / static_cast<double>(examples.size());
        for (size_t i = 0; i < m.embed.size(); i++) m.embed[i] -= scale * g_embed[i];
        for (size_t i = 0; i < m.w1.size(); i++) m.w1[i] -= scale * g_w1[i];
        for (size_t i = 0; i < m.b1.size(); i++) m.b1[i] -= scale * g_b1[i];
        for (size_t i = 0; i < m.w2.size(); i++) m.w2[i] -= scale * g_w2[i];
        for (size_t i = 0; i < m.b2.size(); i++) m.b2[i] -= scale * g_b2[i];
        return total_loss / static_cast<double>(examples.size());
    }
};

} // namespace

TEST_CASE("vocab and tokenization") {
    const auto v = build_vocab("the cat sat\nthe dog", tokenizer_mode::whitespace);
    CHECK(v.size() == 7); // 3 reserved + the, cat, sat, dog
    CHECK(v.id_of("the") == 3);
    CHECK(v.id_of("dog") == 6);
    CHECK(v.id_of("horse") == vocab::unk_id);

    const auto lines = encode_lines(v, "the dog sat\n\ncat");
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == std::vector<int32_t>{3, 6, 5});
    CHECK(lines[1] == std::vector<int32_t>{4});

    const auto cv = build_vocab("abc\nab", tokenizer_mode::character);
    CHECK(cv.size() == 6);
    CHECK(tokenize_line("ab c", tokenizer_mode::character).size() == 4);
}

TEST_CASE("pad_context pads and truncates from the left") {
    CHECK(pad_context({}, 3) == std::vector<int32_t>{0, 0, 0});
    CHECK(pad_context({7}, 3) == std::vector<int32_t>{0, 0, 7});
    CHECK(pad_context({5, 6, 7, 8}, 3) == std::vector<int32_t>{6, 7, 8});
}

TEST_CASE("make_examples covers every token plus the stop") {
    const std::vector<std::vector<int32_t>> lines = {{4, 5}};
    const auto ex = make_examples(lines, 2);
    REQUIRE(ex.size() == 3);
    CHECK(ex[0].context == std::vector<int32_t>{0, 0});
    CHECK(ex[0].target == 4);
    CHECK(ex[1].context == std::vector<int32_t>{0, 4});
    CHECK(ex[1].target == 5);
    CHECK(ex[2].context == std::vector<int32_t>{4, 5});
    CHECK(ex[2].target == vocab::stop_id);
}

TEST_CASE("forward basics") {
    const auto v = build_vocab("a b c", tokenizer_mode::whitespace);
    auto m = init_model(v, 2, 4, 6, 42);

    // zero weights give zero scores, hence a uniform softmax
    auto zero = m;
    for (auto * block : {&zero.embed, &zero.w1, &zero.b1, &zero.w2, &zero.b2}) {
        std::fill(block->begin(), block->end(), 0.0);
    }
    const auto z0 = forward(zero, {0, 3});
    CHECK(static_cast<int32_t>(z0.size()) == v.size());
    for (const double s : z0) {
        CHECK(s == 0.0);
    }
    const auto u = softmax(z0);
    for (const double p : u.probs) {
        CHECK(p == doctest::Approx(1.0 / v.size()).epsilon(1e-12));
    }

    // deterministic given the seed
    const auto m2 = init_model(v, 2, 4, 6, 42);
    CHECK(forward(m, {3, 4}) == forward(m2, {3, 4}));

    CHECK_THROWS_AS(forward(m, {3}), std::invalid_argument);
    CHECK_THROWS_AS(forward(m, {3, 99}), std::invalid_argument);
}

TEST_CASE("training overfits a deterministic pattern") {
    const std::string text = repeated_lines("ab", 50);
    const auto v = build_vocab(text, tokenizer_mode::character);
    auto m = init_model(v, 2, 6, 12, 7);
    const auto examples = make_examples(encode_lines(v, text), 2);

    train_config cfg;
    cfg.alpha = 2.0;
    cfg.learning_rate = 0.3;
    cfg.epochs = 60;
    cfg.batch_size = 8;
    cfg.seed = 7;
    const auto stats = train(m, examples, cfg);
    CHECK(stats.epoch_mean_loss.back() < stats.epoch_mean_loss.front());

    for (const auto & ex : examples) {
        const auto p = sparsemax(forward(m, ex.context));
        CHECK(p.prob_of(ex.target) >= 0.99);
    }
}

TEST_CASE("alpha=1 training follows the independent NLL oracle") {
    const std::string text = repeated_lines("ab", 10) + repeated_lines("ba", 5);
    const auto v = build_vocab(text, tokenizer_mode::character);
    const auto examples = make_examples(encode_lines(v, text), 2);

    auto m = init_model(v, 2, 4, 8, 11);
    nll_oracle oracle{m, 0.2};

    train_config cfg;
    cfg.alpha = 1.0;
    cfg.learning_rate = 0.2;
    cfg.epochs = 10;
    cfg.batch_size = static_cast<int>(examples.size()); // full batch = one step per epoch
    cfg.seed = 11;
    const auto stats = train(m, examples, cfg);

    for (int step = 0; step < 10; step++) {
        const double oracle_loss = oracle.step(examples);
        CHECK(std::fabs(stats.epoch_mean_loss[static_cast<size_t>(step)] - oracle_loss) <= 1e-6);
    }
}

TEST_CASE("zero learning rate leaves the parameters untouched") {
    const std::string text = repeated_lines("ab", 5);
    const auto v = build_vocab(text, tokenizer_mode::character);
    auto m = init_model(v, 2, 4, 8, 3);
    const auto before = m;

    train_config cfg;
    cfg.alpha = 1.5;
    cfg.learning_rate = 0.0;
    cfg.epochs = 3;
    cfg.seed = 3;
    train(m, make_examples(encode_lines(v, text), 2), cfg);

    CHECK(m.embed == before.embed);
    CHECK(m.w1 == before.w1);
    CHECK(m.b1 == before.b1);
    CHECK(m.w2 == before.w2);
    CHECK(m.b2 == before.b2);
}

TEST_CASE("training is bit-deterministic") {
    const std::string text = repeated_lines("ab ba", 8);
    const auto v = build_vocab(text, tokenizer_mode::whitespace);
    const auto examples = make_examples(encode_lines(v, text), 2);

    train_config cfg;
    cfg.alpha = 1.5;
    cfg.learning_rate = 0.1;
    cfg.epochs = 12;
    cfg.batch_size = 4;
    cfg.seed = 99;

    auto m1 = init_model(v, 2, 5, 9, 99);
    auto m2 = init_model(v, 2, 5, 9, 99);
    train(m1, examples, cfg);
    train(m2, examples, cfg);
    CHECK(m1.embed == m2.embed);
    CHECK(m1.w1 == m2.w1);
    CHECK(m1.b1 == m2.b1);
    CHECK(m1.w2 == m2.w2);
    CHECK(m1.b2 == m2.b2);
}

TEST_CASE("backprop matches finite differences through the network") {
    const auto v = build_vocab("a b c d e", tokenizer_mode::whitespace);
    for (const double alpha : {1.0, 1.5}) {
        const auto m = init_model(v, 2, 4, 6, 17);
        const double err = finite_diff_check(m, {3, 5}, 4, alpha, 50, 12345);
        CHECK(err <= 1e-4);
    }

    // alpha=2 probe at a trained point whose support is stable under +-h
    const std::string text = repeated_lines("a b", 20);
    const auto tv = build_vocab(text, tokenizer_mode::whitespace);
    auto tm = init_model(tv, 2, 4, 6, 5);
    train_config cfg;
    cfg.alpha = 2.0;
    cfg.learning_rate = 0.2;
    cfg.epochs = 10;
    cfg.seed = 5;
    train(tm, make_examples(encode_lines(tv, text), 2), cfg);
    const double err2 = finite_diff_check(tm, {0, 3}, 4, 2.0, 50, 777);
    CHECK(err2 <= 1e-4);
}

TEST_CASE("entmax-trained model adapts its support to ambiguity") {
    // "p q" always continues one way; "u *" continues four ways
    std::string text = repeated_lines("p q", 40);
    for (const char * cont : {"u a", "u b", "u c", "u d"}) {
        text += repeated_lines(cont, 10);
    }
    const auto v = build_vocab(text, tokenizer_mode::whitespace);
    auto m = init_model(v, 2, 8, 16, 21);

    train_config cfg;
    cfg.alpha = 1.5;
    cfg.learning_rate = 0.5;
    cfg.epochs = 300;
    cfg.batch_size = 16;
    cfg.seed = 21;
    train(m, make_examples(encode_lines(v, text), 2), cfg);

    entmax_params ep;
    ep.alpha = 1.5;
    const auto deterministic = entmax(forward(m, pad_context({v.id_of("p")}, 2)), ep);
    const auto ambiguous     = entmax(forward(m, pad_context({v.id_of("u")}, 2)), ep);
    CHECK(deterministic.support_size() == 1);
    CHECK(deterministic.prob_of(v.id_of("q")) == 1.0);
    CHECK(ambiguous.support_size() >= 2);
}

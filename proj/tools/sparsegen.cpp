// Command line surface: train / generate / eval / sweep / curves.

#include "sparsegen/io.hpp"
#include "sparsegen/kernels.hpp"
#include "sparsegen/losses.hpp"
#include "sparsegen/metrics.hpp"
#include "sparsegen/sampling.hpp"
#include "sparsegen/tinylm.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <string>
#include <vector>

using namespace sparsegen;
using nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------- helpers

struct strategy_flags {
    std::string name = "softmax";
    double alpha = 1.5;
    double top_k = 0.0;
    double top_p = 0.9;
    double temperature = 1.0;

    void add_to(CLI::App * cmd) {
        cmd->add_option("--strategy", name, "decoding strategy: greedy|softmax|temperature|topk|nucleus|entmax");
        cmd->add_option("--alpha", alpha, "entmax alpha (strategy=entmax)");
        top_k_opt = cmd->add_option("--top-k", top_k, "k (strategy=topk)");
        cmd->add_option("--top-p", top_p, "P (strategy=nucleus)");
        cmd->add_option("--temperature", temperature, "tau (strategy=temperature)");
    }

    decoder_config config(int max_len, uint64_t seed) const {
        decoder_config cfg;
        cfg.strategy = strategy_from_name(name);
        cfg.max_len  = max_len;
        cfg.seed     = seed;
        switch (cfg.strategy) {
            case decode_strategy::greedy:
            case decode_strategy::softmax:
                cfg.param = 0.0;
                break;
            case decode_strategy::temperature:
                cfg.param = temperature;
                break;
            case decode_strategy::topk:
                if (top_k_opt->count() == 0) {
                    throw std::invalid_argument("strategy topk requires --top-k");
                }
                cfg.param = top_k;
                break;
            case decode_strategy::nucleus:
                cfg.param = top_p;
                break;
            case decode_strategy::entmax:
                cfg.param = alpha;
                break;
        }
        check_decoder_config(cfg);
        return cfg;
    }

    CLI::Option * top_k_opt = nullptr;
};

std::string render_tokens(const tinylm::vocab & v, const std::vector<int32_t> & tokens) {
    std::string out;
    bool first = true;
    for (const int32_t id : tokens) {
        if (id == tinylm::vocab::stop_id || id == tinylm::vocab::start_id) {
            continue;
        }
        if (v.mode == tinylm::tokenizer_mode::whitespace && !first) {
            out.push_back(' ');
        }
        out += v.tokens[static_cast<size_t>(id)];
        first = false;
    }
    return out;
}

std::vector<io::logit_record> records_from_model(const tinylm::model_params & model,
                                                 const std::string & corpus_text) {
    const auto lines = tinylm::encode_lines(model.vocabulary, corpus_text);
    const auto examples = tinylm::make_examples(lines, model.context_window);
    if (examples.empty()) {
        throw std::runtime_error("corpus produced no evaluation positions");
    }
    std::vector<io::logit_record> records;
    records.reserve(examples.size());
    for (const auto & ex : examples) {
        io::logit_record rec;
        rec.gold   = ex.target;
        rec.scores = tinylm::forward(model, ex.context);
        records.push_back(std::move(rec));
    }
    return records;
}

// ---------------------------------------------------------------- eval core

struct eval_result {
    int64_t vocab_size = 0;
    int64_t positions  = 0;
    double  sp = 0.0, js = 0.0, eps_ppl = 0.0, eps_star = 0.0, lambda_star = 0.0;
    repetition_result repetition;
    std::map<int, double> distinct;
    support_stats support;
};

eval_result evaluate_records(const std::vector<io::logit_record> & records,
                             const decoder_config & cfg,
                             const std::vector<int64_t> & windows) {
    if (records.empty()) {
        throw std::runtime_error("no evaluation records");
    }
    const int64_t v = static_cast<int64_t>(records[0].scores.size());
    if (cfg.strategy == decode_strategy::topk && static_cast<int64_t>(cfg.param) > v) {
        throw std::invalid_argument("--top-k exceeds the vocabulary size of the input");
    }

    rng64 rng(cfg.seed);
    std::vector<token_eval_record> evals;
    std::vector<int32_t> gold_seq, predicted_seq;
    evals.reserve(records.size());
    for (const auto & rec : records) {
        token_eval_record er;
        er.gold = rec.gold;
        er.dist = next_token_distribution(rec.scores, cfg);
        gold_seq.push_back(rec.gold);
        predicted_seq.push_back(sample(er.dist, rng));
        evals.push_back(std::move(er));
    }

    eval_result out;
    out.vocab_size = v;
    out.positions  = static_cast<int64_t>(evals.size());
    out.sp         = sparsemax_score(evals);
    out.js         = js_score(evals);

    const epsilon_solution eps = optimal_epsilon(evals);
    out.eps_ppl     = eps.eps_ppl;
    out.eps_star    = eps.eps_star;
    out.lambda_star = eps.lambda_star;

    out.repetition = repetition_metrics(gold_seq, predicted_seq, windows);
    for (int n = 1; n <= 4; n++) {
        out.distinct[n] = distinct_n(predicted_seq, n);
    }
    out.support = support_statistics(evals);
    return out;
}

ordered_json report_json(const eval_result & r, const decoder_config & cfg,
                         const std::vector<int64_t> & windows, uint64_t seed) {
    ordered_json j;
    j["tool_version"] = io::tool_version;
    j["strategy"]     = strategy_name(cfg.strategy);
    j["param"]        = io::json_double(cfg.param);
    j["vocab_size"]   = r.vocab_size;
    j["positions"]    = r.positions;
    j["seed"]         = seed;
    j["windows"]      = windows;
    j["sp"]           = io::json_double(r.sp);
    j["js"]           = io::json_double(r.js);
    j["eps_ppl"]      = io::json_double(r.eps_ppl);
    j["eps_star"]     = io::json_double(r.eps_star);
    j["lambda_star"]  = io::json_double(r.lambda_star);

    ordered_json rep = ordered_json::object();
    for (const auto & [l, val] : r.repetition.rep) {
        rep[std::to_string(l)] = io::json_double(val);
    }
    rep["mean"] = io::json_double(r.repetition.rep_mean);
    j["rep"] = rep;

    ordered_json wrep = ordered_json::object();
    for (const auto & [l, val] : r.repetition.wrep) {
        wrep[std::to_string(l)] = io::json_double(val);
    }
    wrep["mean"] = io::json_double(r.repetition.wrep_mean);
    j["wrep"] = wrep;

    ordered_json distinct = ordered_json::object();
    for (const auto & [n, val] : r.distinct) {
        distinct[std::to_string(n)] = io::json_double(val);
    }
    j["distinct"] = distinct;

    ordered_json support = ordered_json::object();
    support["mean"]   = io::json_double(r.support.mean);
    support["median"] = io::json_double(r.support.median);
    support["sd"]     = io::json_double(r.support.sd);
    support["min"]    = r.support.min;
    support["max"]    = r.support.max;
    j["support_stats"] = support;
    return j;
}

std::vector<std::string> csv_header(const std::vector<int64_t> & windows) {
    std::vector<std::string> h = {"param", "sp", "js", "eps_ppl", "eps_star", "lambda_star"};
    for (const int64_t l : windows) {
        h.push_back("rep_" + std::to_string(l));
    }
    h.push_back("rep_mean");
    for (const int64_t l : windows) {
        h.push_back("wrep_" + std::to_string(l));
    }
    h.push_back("wrep_mean");
    for (int n = 1; n <= 4; n++) {
        h.push_back("distinct_" + std::to_string(n));
    }
    for (const char * s : {"support_mean", "support_median", "support_sd", "support_min", "support_max"}) {
        h.emplace_back(s);
    }
    return h;
}

std::vector<std::string> csv_row(double param, const eval_result & r,
                                 const std::vector<int64_t> & windows) {
    std::vector<std::string> row = {
        io::format_double(param),
        io::format_double(r.sp),
        io::format_double(r.js),
        io::format_double(r.eps_ppl),
        io::format_double(r.eps_star),
        io::format_double(r.lambda_star),
    };
    for (const int64_t l : windows) {
        row.push_back(io::format_double(r.repetition.rep.at(l)));
    }
    row.push_back(io::format_double(r.repetition.rep_mean));
    for (const int64_t l : windows) {
        row.push_back(io::format_double(r.repetition.wrep.at(l)));
    }
    row.push_back(io::format_double(r.repetition.wrep_mean));
    for (int n = 1; n <= 4; n++) {
        row.push_back(io::format_double(r.distinct.at(n)));
    }
    row.push_back(io::format_double(r.support.mean));
    row.push_back(io::format_double(r.support.median));
    row.push_back(io::format_double(r.support.sd));
    row.push_back(std::to_string(r.support.min));
    row.push_back(std::to_string(r.support.max));
    return row;
}

std::vector<double> default_grid(decode_strategy s) {
    switch (s) {
        case decode_strategy::entmax:      return {1.1, 1.2, 1.3, 1.5};
        case decode_strategy::topk:        return {5, 10, 20, 50, 100};
        case decode_strategy::nucleus:     return {0.5, 0.8, 0.85, 0.9, 0.95, 0.97};
        case decode_strategy::temperature: return {0.7, 0.8, 0.9, 0.95, 0.97};
        default:                           return {0.0};
    }
}

} // namespace

int main(int argc, char ** argv) {
    CLI::App app{"sparse text generation toolkit"};
    app.require_subcommand(1);

    // ---- train
    auto * train_cmd = app.add_subcommand("train", "train a tiny feedforward LM with the entmax loss");
    std::string train_corpus, train_tokenizer = "whitespace", train_out = "model.ckpt";
    double train_alpha = 1.5, train_lr = 0.05;
    int train_context = 2, train_embed = 16, train_hidden = 32, train_epochs = 50, train_batch = 16;
    uint64_t train_seed = 1;
    train_cmd->add_option("--corpus", train_corpus, "training text, one sequence per line")->required();
    train_cmd->add_option("--tokenizer", train_tokenizer, "whitespace|char");
    train_cmd->add_option("--alpha", train_alpha, "entmax loss alpha (1 = negative log-likelihood)");
    train_cmd->add_option("--context-window", train_context, "context window C");
    train_cmd->add_option("--embed-dim", train_embed, "embedding dimension");
    train_cmd->add_option("--hidden-dim", train_hidden, "hidden layer width");
    train_cmd->add_option("--lr", train_lr, "learning rate");
    train_cmd->add_option("--epochs", train_epochs, "training epochs");
    train_cmd->add_option("--batch-size", train_batch, "minibatch size");
    train_cmd->add_option("--seed", train_seed, "rng seed");
    train_cmd->add_option("--out", train_out, "checkpoint output path");

    // ---- generate
    auto * gen_cmd = app.add_subcommand("generate", "sample a continuation from a checkpoint");
    std::string gen_checkpoint, gen_prompt, gen_out = "generation.txt";
    strategy_flags gen_strategy;
    int gen_max_len = 64;
    uint64_t gen_seed = 0;
    gen_cmd->add_option("--checkpoint", gen_checkpoint, "model checkpoint")->required();
    gen_cmd->add_option("--prompt", gen_prompt, "context text");
    gen_strategy.add_to(gen_cmd);
    gen_cmd->add_option("--max-len", gen_max_len, "maximum generated tokens");
    gen_cmd->add_option("--seed", gen_seed, "rng seed");
    gen_cmd->add_option("--out", gen_out, "output text path (support sizes in <out>.support)");

    // ---- eval
    auto * eval_cmd = app.add_subcommand("eval", "next-token metrics for a decoding strategy");
    std::string eval_records_path, eval_checkpoint, eval_corpus, eval_out = "report.json";
    std::string eval_dump_records;
    strategy_flags eval_strategy;
    std::vector<int64_t> eval_windows = {16, 32, 128, 512};
    uint64_t eval_seed = 0;
    eval_cmd->add_option("--records", eval_records_path, "logit record file (gold id + V scores per line)");
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "model checkpoint (with --corpus)");
    eval_cmd->add_option("--corpus", eval_corpus, "evaluation text (with --checkpoint)");
    eval_strategy.add_to(eval_cmd);
    eval_cmd->add_option("--windows", eval_windows, "repetition windows")->delimiter(',');
    eval_cmd->add_option("--seed", eval_seed, "seed for the sampled prediction stream");
    eval_cmd->add_option("--out", eval_out, "report output path");
    eval_cmd->add_option("--dump-records", eval_dump_records, "also write the evaluated logit records here");

    // ---- sweep
    auto * sweep_cmd = app.add_subcommand("sweep", "metrics over a parameter grid");
    std::string sweep_checkpoint, sweep_corpus, sweep_strategy = "entmax", sweep_out = "sweep.csv";
    std::vector<double> sweep_grid;
    std::vector<int64_t> sweep_windows = {16, 32, 128, 512};
    uint64_t sweep_seed = 0;
    sweep_cmd->add_option("--checkpoint", sweep_checkpoint, "model checkpoint")->required();
    sweep_cmd->add_option("--corpus", sweep_corpus, "evaluation text")->required();
    sweep_cmd->add_option("--strategy", sweep_strategy, "strategy whose parameter is swept");
    sweep_cmd->add_option("--grid", sweep_grid, "parameter grid")->delimiter(',');
    sweep_cmd->add_option("--windows", sweep_windows, "repetition windows")->delimiter(',');
    sweep_cmd->add_option("--seed", sweep_seed, "seed for the sampled prediction stream");
    sweep_cmd->add_option("--out", sweep_out, "CSV output path");

    // ---- curves
    auto * curves_cmd = app.add_subcommand("curves", "single-token metric comparison curves");
    std::vector<double> curve_epsilons = {0.0, 0.01};
    int curve_grid = 101;
    int64_t curve_vocab = 50000;
    std::string curves_out = "curves.csv";
    curves_cmd->add_option("--epsilon", curve_epsilons, "epsilon values for the eps-ppl columns")->delimiter(',');
    curves_cmd->add_option("--grid", curve_grid, "number of gold-probability grid points");
    curves_cmd->add_option("--vocab-size", curve_vocab, "vocabulary size of the synthetic model");
    curves_cmd->add_option("--out", curves_out, "CSV output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError & e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (train_cmd->parsed()) {
            const std::string text = io::read_text_file(train_corpus);
            const auto mode = tinylm::tokenizer_from_name(train_tokenizer);

            tinylm::train_config cfg;
            cfg.alpha         = train_alpha;
            cfg.learning_rate = train_lr;
            cfg.epochs        = train_epochs;
            cfg.seed          = train_seed;
            cfg.batch_size    = train_batch;

            const auto vocab = tinylm::build_vocab(text, mode);
            auto model = tinylm::init_model(vocab, train_context, train_embed, train_hidden, train_seed);
            const auto lines = tinylm::encode_lines(vocab, text);
            const auto examples = tinylm::make_examples(lines, train_context);
            const auto stats = tinylm::train(model, examples, cfg);

            io::save_checkpoint(train_out, model);
            ordered_json config;
            config["corpus"]         = train_corpus;
            config["tokenizer"]      = train_tokenizer;
            config["alpha"]          = train_alpha;
            config["context_window"] = train_context;
            config["embed_dim"]      = train_embed;
            config["hidden_dim"]     = train_hidden;
            config["lr"]             = train_lr;
            config["epochs"]         = train_epochs;
            config["batch_size"]     = train_batch;
            config["seed"]           = train_seed;
            config["out"]            = train_out;
            io::write_manifest(train_out, "train", config, {train_corpus});
            std::printf("trained %d epochs, final mean loss %s, vocabulary %d, checkpoint %s\n",
                        train_epochs, io::format_double(stats.epoch_mean_loss.back()).c_str(),
                        model.vocab_size(), train_out.c_str());
        } else if (gen_cmd->parsed()) {
            const auto model = io::load_checkpoint(gen_checkpoint);
            const decoder_config cfg = gen_strategy.config(gen_max_len, gen_seed);

            std::vector<int32_t> context;
            for (const auto & tok : tinylm::tokenize_line(gen_prompt, model.vocabulary.mode)) {
                context.push_back(model.vocabulary.id_of(tok));
            }
            const tinylm::lm_adapter adapter(model);
            const generated_sequence seq = generate(adapter, context, cfg);

            const std::string text = render_tokens(model.vocabulary, seq.tokens);
            std::printf("%s\n", text.c_str());
            io::write_text_file(gen_out, text + "\n");
            std::string sidecar;
            for (const int64_t s : seq.support_sizes) {
                sidecar += std::to_string(s);
                sidecar.push_back('\n');
            }
            io::write_text_file(gen_out + ".support", sidecar);

            ordered_json config;
            config["checkpoint"] = gen_checkpoint;
            config["prompt"]     = gen_prompt;
            config["strategy"]   = strategy_name(cfg.strategy);
            config["param"]      = io::json_double(cfg.param);
            config["max_len"]    = gen_max_len;
            config["seed"]       = gen_seed;
            config["out"]        = gen_out;
            io::write_manifest(gen_out, "generate", config, {gen_checkpoint});
        } else if (eval_cmd->parsed()) {
            std::vector<io::logit_record> records;
            std::vector<std::string> inputs;
            if (!eval_records_path.empty()) {
                if (!eval_checkpoint.empty() || !eval_corpus.empty()) {
                    throw std::invalid_argument("pass either --records or --checkpoint/--corpus, not both");
                }
                records = io::read_logit_records(eval_records_path);
                inputs  = {eval_records_path};
            } else {
                if (eval_checkpoint.empty() || eval_corpus.empty()) {
                    throw std::invalid_argument("eval needs --records or both --checkpoint and --corpus");
                }
                const auto model = io::load_checkpoint(eval_checkpoint);
                records = records_from_model(model, io::read_text_file(eval_corpus));
                inputs  = {eval_checkpoint, eval_corpus};
            }
            if (!eval_dump_records.empty()) {
                io::write_logit_records(eval_dump_records, records);
            }

            const decoder_config cfg = eval_strategy.config(1, eval_seed);
            const eval_result result = evaluate_records(records, cfg, eval_windows);
            const ordered_json report = report_json(result, cfg, eval_windows, eval_seed);
            io::write_text_file(eval_out, report.dump(2) + "\n");

            ordered_json config;
            config["strategy"] = strategy_name(cfg.strategy);
            config["param"]    = io::json_double(cfg.param);
            config["windows"]  = eval_windows;
            config["seed"]     = eval_seed;
            config["out"]      = eval_out;
            io::write_manifest(eval_out, "eval", config, inputs);
            std::printf("sp %s  js %s  eps_ppl %s  positions %lld\n",
                        io::format_double(result.sp).c_str(), io::format_double(result.js).c_str(),
                        io::format_double(result.eps_ppl).c_str(),
                        static_cast<long long>(result.positions));
        } else if (sweep_cmd->parsed()) {
            const auto model = io::load_checkpoint(sweep_checkpoint);
            const auto records = records_from_model(model, io::read_text_file(sweep_corpus));
            const decode_strategy strat = strategy_from_name(sweep_strategy);
            if (sweep_cmd->get_option("--grid")->count() == 0) {
                sweep_grid = default_grid(strat);
            }
            if (sweep_grid.empty()) {
                throw std::invalid_argument("sweep: empty parameter grid");
            }

            io::csv_writer csv;
            csv.row(csv_header(sweep_windows));
            for (const double param : sweep_grid) {
                decoder_config cfg;
                cfg.strategy = strat;
                cfg.param    = param;
                cfg.max_len  = 1;
                cfg.seed     = sweep_seed;
                check_decoder_config(cfg);
                const eval_result result = evaluate_records(records, cfg, sweep_windows);
                csv.row(csv_row(param, result, sweep_windows));
            }
            csv.write(sweep_out);

            ordered_json config;
            config["strategy"] = sweep_strategy;
            config["grid"]     = sweep_grid;
            config["windows"]  = sweep_windows;
            config["seed"]     = sweep_seed;
            config["out"]      = sweep_out;
            io::write_manifest(sweep_out, "sweep", config, {sweep_checkpoint, sweep_corpus});
            std::printf("wrote %zu sweep rows to %s\n", sweep_grid.size(), sweep_out.c_str());
        } else if (curves_cmd->parsed()) {
            if (curve_grid < 2) {
                throw std::invalid_argument("curves: --grid must be >= 2");
            }
            std::vector<double> p_grid(static_cast<size_t>(curve_grid));
            for (int i = 0; i < curve_grid; i++) {
                p_grid[static_cast<size_t>(i)] = static_cast<double>(i) / static_cast<double>(curve_grid - 1);
            }
            const auto rows = metric_curves(p_grid, curve_epsilons, curve_vocab);

            io::csv_writer csv;
            std::vector<std::string> header = {"p_gold"};
            for (const double eps : curve_epsilons) {
                header.push_back("eps_ppl_" + io::format_double(eps));
            }
            header.emplace_back("sp");
            header.emplace_back("js");
            csv.row(header);
            for (const auto & row : rows) {
                std::vector<std::string> cells = {io::format_double(row.p_gold)};
                for (const double v : row.eps_ppl) {
                    cells.push_back(io::format_double(v));
                }
                cells.push_back(io::format_double(row.sp));
                cells.push_back(io::format_double(row.js));
                csv.row(cells);
            }
            csv.write(curves_out);

            ordered_json config;
            config["epsilon"]    = curve_epsilons;
            config["grid"]       = curve_grid;
            config["vocab_size"] = curve_vocab;
            config["out"]        = curves_out;
            io::write_manifest(curves_out, "curves", config, {});
            std::printf("wrote %d curve rows to %s\n", curve_grid, curves_out.c_str());
        }
    } catch (const std::invalid_argument & e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception & e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sparsegen/io.hpp"
#include "sparsegen/metrics.hpp"
#include "test_util.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

using namespace sparsegen;
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct sandbox {
    fs::path dir;

    sandbox() {
        dir = fs::temp_directory_path() / ("sparsegen_test_" + std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    ~sandbox() { fs::remove_all(dir); }

    std::string path(const std::string & name) const { return (dir / name).string(); }
};

int run_cli(const std::string & args) {
    const std::string cmd = std::string(SPARSEGEN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string capture_cli(const std::string & args, const std::string & stdout_path) {
    const std::string cmd = std::string(SPARSEGEN_CLI_PATH) + " " + args + " >" + stdout_path + " 2>/dev/null";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    return io::read_text_file(stdout_path);
}

const std::string k_corpus =
    "north star\nnorth star\nnorth star\nnorth star\n"
    "coin heads\ncoin tails\ncoin heads\ncoin tails\n"
    "deep sea\ndeep sea\ndeep sea\ndeep sea\n";

} // namespace

TEST_CASE("sha256 known vectors") {
    CHECK(io::sha256_hex("", 0) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(io::sha256_hex("abc", 3) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("double formatting round-trips") {
    rng64 rng(3001);
    for (int i = 0; i < 5000; i++) {
        const double v = rng.uniform(-1e6, 1e6) * std::pow(10.0, static_cast<double>(rng.below(13)) - 6.0);
        CHECK(io::parse_double(io::format_double(v)) == v);
    }
    CHECK(std::isinf(io::parse_double("inf")));
    CHECK(io::format_double(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(io::format_double(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK_THROWS(io::parse_double("12x"));
}

TEST_CASE("checkpoint round-trip is exact") {
    sandbox sb;
    const auto v = tinylm::build_vocab("alpha beta gamma", tinylm::tokenizer_mode::whitespace);
    const auto m = tinylm::init_model(v, 3, 5, 7, 1234);

    io::save_checkpoint(sb.path("m.ckpt"), m);
    const auto back = io::load_checkpoint(sb.path("m.ckpt"));

    CHECK(back.vocabulary.tokens == m.vocabulary.tokens);
    CHECK(back.vocabulary.mode == m.vocabulary.mode);
    CHECK(back.context_window == m.context_window);
    CHECK(back.embed == m.embed);
    CHECK(back.w1 == m.w1);
    CHECK(back.b1 == m.b1);
    CHECK(back.w2 == m.w2);
    CHECK(back.b2 == m.b2);

    // saving the loaded model reproduces the file byte for byte
    io::save_checkpoint(sb.path("m2.ckpt"), back);
    CHECK(io::sha256_file(sb.path("m.ckpt")) == io::sha256_file(sb.path("m2.ckpt")));

    CHECK_THROWS(io::load_checkpoint(sb.path("missing.ckpt")));
    io::write_text_file(sb.path("junk.ckpt"), "not a checkpoint");
    CHECK_THROWS(io::load_checkpoint(sb.path("junk.ckpt")));
}

TEST_CASE("logit records round-trip is exact") {
    sandbox sb;
    rng64 rng(3002);
    std::vector<io::logit_record> records;
    for (int i = 0; i < 25; i++) {
        io::logit_record rec;
        rec.gold = static_cast<int32_t>(rng.below(6));
        rec.scores = testutil::random_scores(rng, 6, -30.0, 30.0);
        records.push_back(rec);
    }
    io::write_logit_records(sb.path("r.txt"), records);
    const auto back = io::read_logit_records(sb.path("r.txt"));
    REQUIRE(back.size() == records.size());
    for (size_t i = 0; i < records.size(); i++) {
        CHECK(back[i].gold == records[i].gold);
        CHECK(back[i].scores == records[i].scores); // bit-exact through the text form
    }

    io::write_text_file(sb.path("bad.txt"), "0 1.0 2.0\n1 1.0\n");
    CHECK_THROWS(io::read_logit_records(sb.path("bad.txt")));
    io::write_text_file(sb.path("bad2.txt"), "7 1.0 2.0\n");
    CHECK_THROWS(io::read_logit_records(sb.path("bad2.txt")));
}

TEST_CASE("cli: train is deterministic and validates alpha") {
    sandbox sb;
    io::write_text_file(sb.path("corpus.txt"), k_corpus);

    const std::string flags = "train --corpus " + sb.path("corpus.txt") +
        " --context-window 2 --embed-dim 6 --hidden-dim 10 --epochs 20 --seed 5 --out ";
    CHECK(run_cli(flags + sb.path("a.ckpt")) == 0);
    CHECK(run_cli(flags + sb.path("b.ckpt")) == 0);
    CHECK(io::sha256_file(sb.path("a.ckpt")) == io::sha256_file(sb.path("b.ckpt")));
    CHECK(fs::exists(sb.path("a.ckpt.manifest.json")));

    const auto manifest = ordered_json::parse(io::read_text_file(sb.path("a.ckpt.manifest.json")));
    CHECK(manifest["command"] == "train");
    CHECK(manifest["inputs"][sb.path("corpus.txt")] == io::sha256_file(sb.path("corpus.txt")));

    // usage errors exit with 2, runtime errors with 1
    CHECK(run_cli("train --corpus " + sb.path("corpus.txt") + " --alpha 0.5 --out " + sb.path("x.ckpt")) == 2);
    CHECK(run_cli("train --corpus " + sb.path("nope.txt") + " --out " + sb.path("x.ckpt")) == 1);
    CHECK(run_cli("frobnicate") == 2);
}

TEST_CASE("cli: generation determinism and the nucleus P=1 identity") {
    sandbox sb;
    io::write_text_file(sb.path("corpus.txt"), k_corpus);
    REQUIRE(run_cli("train --corpus " + sb.path("corpus.txt") +
                    " --context-window 2 --embed-dim 6 --hidden-dim 10 --epochs 30 --seed 5 --out " +
                    sb.path("m.ckpt")) == 0);

    const std::string base = "generate --checkpoint " + sb.path("m.ckpt") + " --prompt north --max-len 8 ";

    // greedy ignores the seed
    const auto g1 = capture_cli(base + "--strategy greedy --seed 1 --out " + sb.path("g1.txt"), sb.path("s1"));
    const auto g2 = capture_cli(base + "--strategy greedy --seed 2 --out " + sb.path("g2.txt"), sb.path("s2"));
    CHECK(g1 == g2);

    // entmax with a fixed seed reproduces exactly
    const auto e1 = capture_cli(base + "--strategy entmax --alpha 1.5 --seed 9 --out " + sb.path("e1.txt"), sb.path("s3"));
    const auto e2 = capture_cli(base + "--strategy entmax --alpha 1.5 --seed 9 --out " + sb.path("e2.txt"), sb.path("s4"));
    CHECK(e1 == e2);
    CHECK(io::read_text_file(sb.path("e1.txt.support")) == io::read_text_file(sb.path("e2.txt.support")));

    // nucleus with P=1 never truncates, so it matches plain softmax draws
    const auto n1 = capture_cli(base + "--strategy nucleus --top-p 1.0 --seed 4 --out " + sb.path("n1.txt"), sb.path("s5"));
    const auto sm = capture_cli(base + "--strategy softmax --seed 4 --out " + sb.path("sm.txt"), sb.path("s6"));
    CHECK(n1 == sm);

    CHECK(run_cli(base + "--strategy beam --out " + sb.path("x.txt")) == 2);
    CHECK(run_cli(base + "--strategy nucleus --top-p 1.5 --out " + sb.path("x.txt")) == 2);
}

TEST_CASE("cli: eval reports, golden values, and the records/checkpoint identity") {
    sandbox sb;

    // gold always argmax: greedy decodes perfectly
    std::vector<io::logit_record> perfect;
    for (int i = 0; i < 8; i++) {
        io::logit_record rec;
        rec.gold = i % 4;
        rec.scores = score_vector(4, 0.0);
        rec.scores[static_cast<size_t>(rec.gold)] = 5.0;
        perfect.push_back(rec);
    }
    io::write_logit_records(sb.path("perfect.txt"), perfect);
    REQUIRE(run_cli("eval --records " + sb.path("perfect.txt") + " --strategy greedy --out " +
                    sb.path("perfect.json")) == 0);
    const auto pj = ordered_json::parse(io::read_text_file(sb.path("perfect.json")));
    CHECK(io::double_from_json(pj["sp"]) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(io::double_from_json(pj["js"]) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(io::double_from_json(pj["eps_star"]) == 0.0);
    CHECK(io::double_from_json(pj["eps_ppl"]) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(pj["support_stats"]["mean"] == 1.0);
    CHECK(pj["support_stats"]["sd"] == 0.0);

    // uniform scores, V=4: sp = 0.625, js = js_to_onehot(0.25)
    std::vector<io::logit_record> uniform;
    for (int i = 0; i < 6; i++) {
        io::logit_record rec;
        rec.gold = i % 4;
        rec.scores = score_vector(4, 0.0);
        uniform.push_back(rec);
    }
    io::write_logit_records(sb.path("uniform.txt"), uniform);
    REQUIRE(run_cli("eval --records " + sb.path("uniform.txt") + " --strategy softmax --out " +
                    sb.path("uniform.json")) == 0);
    const auto uj = ordered_json::parse(io::read_text_file(sb.path("uniform.json")));
    CHECK(io::double_from_json(uj["sp"]) == doctest::Approx(0.625).epsilon(1e-9));
    CHECK(io::double_from_json(uj["js"]) == doctest::Approx(js_to_onehot(0.25)).epsilon(1e-9));

    // reports round-trip byte for byte
    const std::string report_text = io::read_text_file(sb.path("uniform.json"));
    CHECK(ordered_json::parse(report_text).dump(2) + "\n" == report_text);

    // evaluating a checkpoint+corpus equals evaluating its dumped records
    io::write_text_file(sb.path("corpus.txt"), k_corpus);
    REQUIRE(run_cli("train --corpus " + sb.path("corpus.txt") +
                    " --context-window 2 --embed-dim 6 --hidden-dim 10 --epochs 20 --seed 5 --out " +
                    sb.path("m.ckpt")) == 0);
    REQUIRE(run_cli("eval --checkpoint " + sb.path("m.ckpt") + " --corpus " + sb.path("corpus.txt") +
                    " --strategy entmax --alpha 1.5 --seed 3 --dump-records " + sb.path("dump.txt") +
                    " --out " + sb.path("from_model.json")) == 0);
    REQUIRE(run_cli("eval --records " + sb.path("dump.txt") +
                    " --strategy entmax --alpha 1.5 --seed 3 --out " + sb.path("from_records.json")) == 0);
    CHECK(io::read_text_file(sb.path("from_model.json")) == io::read_text_file(sb.path("from_records.json")));

    // V mismatch between the records file and --top-k
    CHECK(run_cli("eval --records " + sb.path("uniform.txt") + " --strategy topk --top-k 9 --out " +
                  sb.path("x.json")) == 2);
    CHECK(run_cli("eval --records " + sb.path("uniform.txt") + " --strategy topk --out " +
                  sb.path("x.json")) == 2);
}

TEST_CASE("cli: sweep endpoints match the softmax column") {
    sandbox sb;
    io::write_text_file(sb.path("corpus.txt"), k_corpus);
    REQUIRE(run_cli("train --corpus " + sb.path("corpus.txt") +
                    " --context-window 2 --embed-dim 6 --hidden-dim 10 --epochs 20 --seed 5 --out " +
                    sb.path("m.ckpt")) == 0);
    REQUIRE(run_cli("eval --checkpoint " + sb.path("m.ckpt") + " --corpus " + sb.path("corpus.txt") +
                    " --strategy softmax --seed 3 --out " + sb.path("softmax.json")) == 0);
    const auto sj = ordered_json::parse(io::read_text_file(sb.path("softmax.json")));
    const int64_t v = sj["vocab_size"].get<int64_t>();

    // top-k with k = V is the identity truncation
    REQUIRE(run_cli("sweep --checkpoint " + sb.path("m.ckpt") + " --corpus " + sb.path("corpus.txt") +
                    " --strategy topk --grid " + std::to_string(v) + " --seed 3 --out " +
                    sb.path("topk.csv")) == 0);
    // alpha = 1 entmax is softmax
    REQUIRE(run_cli("sweep --checkpoint " + sb.path("m.ckpt") + " --corpus " + sb.path("corpus.txt") +
                    " --strategy entmax --grid 1.0 --seed 3 --out " + sb.path("alpha.csv")) == 0);

    const auto parse_row = [](const std::string & text) {
        std::vector<std::string> cells;
        const size_t nl = text.find('\n');
        const std::string row = text.substr(nl + 1, text.find('\n', nl + 1) - nl - 1);
        size_t pos = 0;
        while (pos <= row.size()) {
            const size_t comma = row.find(',', pos);
            cells.push_back(row.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        return cells;
    };
    const auto topk_row = parse_row(io::read_text_file(sb.path("topk.csv")));
    const auto alpha_row = parse_row(io::read_text_file(sb.path("alpha.csv")));
    const double sp_ref = io::double_from_json(sj["sp"]);
    const double js_ref = io::double_from_json(sj["js"]);
    CHECK(io::parse_double(topk_row[1]) == doctest::Approx(sp_ref).epsilon(1e-6));
    CHECK(io::parse_double(topk_row[2]) == doctest::Approx(js_ref).epsilon(1e-6));
    CHECK(io::parse_double(alpha_row[1]) == doctest::Approx(sp_ref).epsilon(1e-6));
    CHECK(io::parse_double(alpha_row[2]) == doctest::Approx(js_ref).epsilon(1e-6));

    CHECK(run_cli("sweep --checkpoint " + sb.path("m.ckpt") + " --corpus " + sb.path("corpus.txt") +
                  " --strategy entmax --grid \"\" --out " + sb.path("x.csv")) == 2);
}

TEST_CASE("cli: curves endpoints") {
    sandbox sb;
    REQUIRE(run_cli("curves --epsilon 0,0.01 --grid 11 --vocab-size 50000 --out " +
                    sb.path("curves.csv")) == 0);
    const auto text = io::read_text_file(sb.path("curves.csv"));
    std::vector<std::string> lines;
    size_t pos = 0;
    while (pos < text.size()) {
        const size_t nl = text.find('\n', pos);
        lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    REQUIRE(lines.size() == 12);
    CHECK(lines[0] == "p_gold,eps_ppl_0,eps_ppl_0.01,sp,js");
    CHECK(lines[1].substr(0, 6) == "0,inf,");                  // p=0, eps=0 sentinel
    const auto & last = lines.back();
    CHECK(last.substr(0, 2) == "1,");
    CHECK(last.find(",1,0") != std::string::npos);             // sp=1, js=0 at p=1
}

#include "sparsegen/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sparsegen::io {

std::string sha256_hex(const void * data, size_t size) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int digest_len = 0;
    if (EVP_Digest(data, size, digest, &digest_len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256: digest computation failed");
    }
    static const char * hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * digest_len);
    for (unsigned int i = 0; i < digest_len; i++) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::string sha256_file(const std::string & path) {
    const std::string bytes = read_text_file(path);
    return sha256_hex(bytes.data(), bytes.size());
}

std::string read_text_file(const std::string & path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open file: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string & path, const std::string & content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write file: " + path);
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

std::string format_double(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string & text) {
    if (text == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    if (text == "-inf") {
        return -std::numeric_limits<double>::infinity();
    }
    if (text == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw std::runtime_error("cannot parse number: '" + text + "'");
    }
    return value;
}

nlohmann::ordered_json json_double(double value) {
    if (!std::isfinite(value)) {
        return format_double(value);
    }
    return value;
}

double double_from_json(const nlohmann::ordered_json & j) {
    if (j.is_string()) {
        return parse_double(j.get<std::string>());
    }
    return j.get<double>();
}

namespace {

constexpr char     k_magic[4]            = {'S', 'G', 'L', 'M'};
constexpr uint32_t k_checkpoint_version  = 1;

void put_u32(std::string & out, uint32_t v) {
    for (int i = 0; i < 4; i++) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

void put_u64(std::string & out, uint64_t v) {
    for (int i = 0; i < 8; i++) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

void put_f64(std::string & out, double v) {
    put_u64(out, std::bit_cast<uint64_t>(v));
}

struct reader {
    const std::string & bytes;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > bytes.size()) {
            throw std::runtime_error("checkpoint: truncated file");
        }
    }

    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; i++) {
            v |= static_cast<uint32_t>(static_cast<unsigned char>(bytes[pos + static_cast<size_t>(i)])) << (8 * i);
        }
        pos += 4;
        return v;
    }

    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; i++) {
            v |= static_cast<uint64_t>(static_cast<unsigned char>(bytes[pos + static_cast<size_t>(i)])) << (8 * i);
        }
        pos += 8;
        return v;
    }

    double f64() {
        return std::bit_cast<double>(u64());
    }

    std::string str(size_t n) {
        need(n);
        std::string s = bytes.substr(pos, n);
        pos += n;
        return s;
    }
};

void put_block(std::string & out, const std::vector<double> & block) {
    put_u64(out, block.size());
    for (const double v : block) {
        put_f64(out, v);
    }
}

std::vector<double> get_block(reader & r, size_t expected) {
    const uint64_t n = r.u64();
    if (n != expected) {
        throw std::runtime_error("checkpoint: weight block size mismatch");
    }
    std::vector<double> block(n);
    for (auto & v : block) {
        v = r.f64();
    }
    return block;
}

} // namespace

void save_checkpoint(const std::string & path, const tinylm::model_params & m) {
    std::string out;
    out.append(k_magic, 4);
    put_u32(out, k_checkpoint_version);
    put_u32(out, m.vocabulary.mode == tinylm::tokenizer_mode::whitespace ? 0 : 1);
    put_u32(out, static_cast<uint32_t>(m.context_window));
    put_u32(out, static_cast<uint32_t>(m.embed_dim));
    put_u32(out, static_cast<uint32_t>(m.hidden_dim));
    put_u32(out, static_cast<uint32_t>(m.vocab_size()));
    for (const auto & tok : m.vocabulary.tokens) {
        put_u32(out, static_cast<uint32_t>(tok.size()));
        out.append(tok);
    }
    put_block(out, m.embed);
    put_block(out, m.w1);
    put_block(out, m.b1);
    put_block(out, m.w2);
    put_block(out, m.b2);
    write_text_file(path, out);
}

tinylm::model_params load_checkpoint(const std::string & path) {
    const std::string bytes = read_text_file(path);
    reader r{bytes};
    if (r.str(4) != std::string(k_magic, 4)) {
        throw std::runtime_error("checkpoint: bad magic in " + path);
    }
    if (r.u32() != k_checkpoint_version) {
        throw std::runtime_error("checkpoint: unsupported version in " + path);
    }

    tinylm::model_params m;
    m.vocabulary.mode = r.u32() == 0 ? tinylm::tokenizer_mode::whitespace
                                     : tinylm::tokenizer_mode::character;
    m.context_window = static_cast<int32_t>(r.u32());
    m.embed_dim      = static_cast<int32_t>(r.u32());
    m.hidden_dim     = static_cast<int32_t>(r.u32());
    const uint32_t vs = r.u32();
    if (m.context_window < 1 || m.embed_dim < 1 || m.hidden_dim < 1 || vs < 3) {
        throw std::runtime_error("checkpoint: invalid dimensions in " + path);
    }
    for (uint32_t i = 0; i < vs; i++) {
        const uint32_t len = r.u32();
        const std::string tok = r.str(len);
        m.vocabulary.index[tok] = static_cast<int32_t>(i);
        m.vocabulary.tokens.push_back(tok);
    }

    const size_t v = static_cast<size_t>(vs);
    const size_t c = static_cast<size_t>(m.context_window);
    const size_t d = static_cast<size_t>(m.embed_dim);
    const size_t h = static_cast<size_t>(m.hidden_dim);
    m.embed = get_block(r, v * d);
    m.w1    = get_block(r, h * c * d);
    m.b1    = get_block(r, h);
    m.w2    = get_block(r, v * h);
    m.b2    = get_block(r, v);
    if (r.pos != bytes.size()) {
        throw std::runtime_error("checkpoint: trailing bytes in " + path);
    }
    return m;
}

void write_logit_records(const std::string & path, const std::vector<logit_record> & records) {
    std::string out;
    for (const auto & rec : records) {
        out += std::to_string(rec.gold);
        for (const double v : rec.scores) {
            out.push_back(' ');
            out += format_double(v);
        }
        out.push_back('\n');
    }
    write_text_file(path, out);
}

std::vector<logit_record> read_logit_records(const std::string & path) {
    const std::string text = read_text_file(path);
    std::vector<logit_record> out;
    std::istringstream ss(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(ss, line)) {
        line_no++;
        if (line.empty()) {
            continue;
        }
        std::istringstream ls(line);
        logit_record rec;
        std::string cell;
        if (!(ls >> cell)) {
            continue;
        }
        rec.gold = static_cast<int32_t>(std::stol(cell));
        while (ls >> cell) {
            rec.scores.push_back(parse_double(cell));
        }
        if (rec.scores.empty()) {
            throw std::runtime_error("logit records: no scores on line " + std::to_string(line_no));
        }
        if (!out.empty() && out.back().scores.size() != rec.scores.size()) {
            throw std::runtime_error("logit records: vocabulary size changes on line " +
                                     std::to_string(line_no));
        }
        if (rec.gold < 0 || static_cast<size_t>(rec.gold) >= rec.scores.size()) {
            throw std::runtime_error("logit records: gold id out of range on line " +
                                     std::to_string(line_no));
        }
        for (const double v : rec.scores) {
            if (!std::isfinite(v)) {
                throw std::runtime_error("logit records: non-finite score on line " +
                                         std::to_string(line_no));
            }
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::string manifest_path_for(const std::string & output_path) {
    return output_path + ".manifest.json";
}

void write_manifest(const std::string & output_path, const std::string & command,
                    const nlohmann::ordered_json & config,
                    const std::vector<std::string> & input_paths) {
    nlohmann::ordered_json m;
    m["command"]      = command;
    m["tool_version"] = tool_version;
    m["config"]       = config;
    nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
    for (const auto & p : input_paths) {
        inputs[p] = sha256_file(p);
    }
    m["inputs"] = inputs;
    write_text_file(manifest_path_for(output_path), m.dump(2) + "\n");
}

void csv_writer::row(const std::vector<std::string> & cells) {
    for (size_t i = 0; i < cells.size(); i++) {
        if (i > 0) {
            buffer.push_back(',');
        }
        buffer += cells[i];
    }
    buffer.push_back('\n');
}

void csv_writer::write(const std::string & path) const {
    write_text_file(path, buffer);
}

} // namespace sparsegen::io

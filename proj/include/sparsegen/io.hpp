#pragma once

#include "sparsegen/tinylm.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace sparsegen::io {

inline constexpr const char * tool_version = "0.1.0";

std::string sha256_hex(const void * data, size_t size);
std::string sha256_file(const std::string & path);

std::string read_text_file(const std::string & path);
void        write_text_file(const std::string & path, const std::string & content);

// shortest round-trip decimal form; "inf"/"-inf"/"nan" for non-finite
std::string format_double(double value);
double      parse_double(const std::string & text);

// JSON value for a double; non-finite values become sentinel strings so
// reports stay valid JSON
nlohmann::ordered_json json_double(double value);
double                 double_from_json(const nlohmann::ordered_json & j);

// versioned binary checkpoint: magic, dims, vocab, then the weight blocks
// as little-endian f64 arrays in declared order
void                 save_checkpoint(const std::string & path, const tinylm::model_params & m);
tinylm::model_params load_checkpoint(const std::string & path);

// line-delimited text records: gold token id followed by V scores
struct logit_record {
    int32_t      gold = 0;
    score_vector scores;
};

void write_logit_records(const std::string & path, const std::vector<logit_record> & records);
std::vector<logit_record> read_logit_records(const std::string & path);

// manifest written alongside every command output
void write_manifest(const std::string & output_path, const std::string & command,
                    const nlohmann::ordered_json & config,
                    const std::vector<std::string> & input_paths);

std::string manifest_path_for(const std::string & output_path);

// CSV with a header row, '.' decimal separator, LF line endings
struct csv_writer {
    std::string buffer;

    void row(const std::vector<std::string> & cells);
    void write(const std::string & path) const;
};

} // namespace sparsegen::io

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ubt/asmtext.hpp"
#include "ubt/common.hpp"
#include "ubt/corpus.hpp"
#include "ubt/embed.hpp"
#include "ubt/evalkit.hpp"
#include "ubt/toyoracle.hpp"
#include "ubt/vulndetect.hpp"
#include "ubt/xlate.hpp"
#include "ubt/xmap.hpp"

namespace ubt::pipeline {

// ---- CAIE construction -----------------------------------------------------

/// Fixed, architecture-agnostic embeddings for the special tokens: <PAD> is
/// zero, the others are deterministic unit vectors shared by both sides.
Eigen::MatrixXd special_embedding_rows(int d);

/// Builds the cross-architecture bundle from trained MAIE: real-word rows are
/// preprocessed (and mapped by W when given); specials get the fixed rows;
/// the transform and subword table are kept for OOV composition.
embed::EmbeddingMatrix make_caie(const embed::EmbeddingMatrix& maie, const Eigen::MatrixXd* W);

/// Preprocessed real-word rows (ids >= 4) of a MAIE matrix, frequency order.
Eigen::MatrixXd preprocessed_real_rows(const embed::EmbeddingMatrix& maie,
                                       Eigen::RowVectorXd* mean_out = nullptr);

// ---- functions.tsv ----------------------------------------------------------

struct FunctionIndex {
    std::vector<std::string> ids;
    std::vector<std::vector<int>> blocks;  // indices into the corpus file
};

void write_functions_file(const std::string& path, const FunctionIndex& index,
                          const std::string& arch, const Provenance& prov);
FunctionIndex read_functions_file(const std::string& path);

std::vector<std::vector<std::string>> gather_function_blocks(
    const std::vector<std::vector<std::string>>& corpus, const std::vector<int>& block_ids);

// ---- command verbs (file level; shared by CLI and tests) --------------------

struct NormalizeArgs {
    std::vector<std::string> listings;
    std::string arch;
    std::string out_corpus;
    std::string out_functions;  // optional
    std::uint64_t seed = 0;
};
void cmd_normalize(const NormalizeArgs& args);

struct StatsInput {
    std::string listing;  // either a listing ...
    std::string corpus;   // ... or a corpus file
    std::string functions;
    std::string arch;
    std::string opt_level = "O0";
};
struct StatsArgs {
    std::vector<StatsInput> inputs;
    std::string out_report;  // empty = stdout only
};
std::string cmd_stats(const StatsArgs& args);

struct TrainEmbedArgs {
    std::string corpus;
    std::string out_prefix;  // writes .vocab.txt .emb.txt .emb.bin [.sub.bin] .meta.json
    embed::TrainConfig cfg;
    std::int64_t min_count = 1;
};
void cmd_train_embed(const TrainEmbedArgs& args);

/// Loads <prefix>.vocab.txt / .emb.bin / .sub.bin back into a bundle.
embed::EmbeddingMatrix load_embedding(const std::string& prefix);

struct MapArgs {
    std::string src_prefix;  // low-resource side, mapped into the target space
    std::string tgt_prefix;
    std::string out_dir;  // writes mapping.txt caie_src.* caie_tgt.* map.meta.json
    std::string src_arch = "b";
    std::string tgt_arch = "a";
    xmap::SelfLearnConfig cfg;
};
void cmd_map(const MapArgs& args);

embed::EmbeddingMatrix load_caie(const std::string& caie_bin, const std::string& embed_prefix);

struct TrainXlateArgs {
    std::string corpus_a, corpus_b;
    std::string vocab_a, vocab_b;
    std::string caie_a, caie_b;  // .bin paths
    std::string out_model;
    std::string arch_a = "a", arch_b = "b";
    xlate::TrainSchedule schedule;
};
void cmd_train_xlate(const TrainXlateArgs& args);

struct TranslateArgs {
    std::string model;
    std::string input;  // corpus file in the source side
    std::string from;   // "a" or "b"
    std::string out;
    int beam_width = 1;
    std::string src_embed_prefix;  // optional, enables subword OOV substitution
};
void cmd_translate(const TranslateArgs& args);

struct BleuArgs {
    std::string model;
    std::string corpus_src;
    std::string functions_src;
    std::string from = "b";
    std::string oracle_lexicon;  // reference = lexicon image of the source
    std::string out_report;
    int beam_width = 1;
};
struct BleuResult {
    double mean_function_bleu = 0.0;
    double corpus_bleu_unsmoothed = 0.0;
    std::vector<std::pair<std::string, double>> per_function;
};
BleuResult cmd_bleu(const BleuArgs& args);

struct FuncsimArgs {
    std::string model;
    std::string caie_a;          // caie bin of the high-resource side
    std::string embed_prefix_a;  // vocab/subword sidecars
    std::string corpus_a, functions_a;
    std::string corpus_b, functions_b;
    std::string embed_prefix_b;  // optional OOV support for translation
    std::string out_report;
    std::uint64_t seed = 1;
    double validation_fraction = 0.5;
    int beam_width = 1;
};
struct FuncsimResult {
    double accuracy = 0.0;
    int pair_count = 0;
};
FuncsimResult cmd_funcsim(const FuncsimArgs& args);

struct VulnTrainArgs {
    std::string dataset;  // label + vector rows
    std::string out_model;
    vulndetect::OversampleConfig oversample;
    double lambda = 1e-4;
    int epochs = 50;
    std::uint64_t seed = 1;
};
void cmd_vuln_train(const VulnTrainArgs& args);

struct VulnScanArgs {
    std::string svm_model;
    std::string xlate_model;
    std::string caie_a;
    std::string embed_prefix_a;
    std::string corpus_b, functions_b, labels_b;  // labels: "<fid> <0|1>" lines
    std::string embed_prefix_b;                   // optional OOV support
    std::string from = "b";
    std::string out_report;
    int beam_width = 1;
};
struct VulnScanResult {
    vulndetect::Metrics metrics;
    std::uint64_t svm_hash = 0;
};
VulnScanResult cmd_vuln_scan(const VulnScanArgs& args);

struct ToygenArgs {
    toyoracle::TwinSpec spec;
    std::string out_dir;  // corpus_a.txt corpus_b.txt lexicon.tsv functions_{a,b}.tsv
};
void cmd_toygen(const ToygenArgs& args);

struct E2eArgs {
    std::string out_dir;
    std::uint64_t seed = 7;
    // desk-scale defaults sized for the toy twin corpora
    toyoracle::TwinSpec spec;
    int embed_dim = 32;
    int embed_epochs = 20;
    std::int64_t subword_buckets = 1 << 16;
    embed::Mode embed_mode = embed::Mode::Subword;
    int xlate_iterations = 2200;
    int xlate_batch = 32;
    double xlate_lr = 1e-3;
    int hidden_enc = 64;
    int hidden_dec = 128;
};
struct E2eResult {
    double token_accuracy = 0.0;
    double mean_function_bleu = 0.0;
    double funcsim_accuracy = 0.0;
    vulndetect::Metrics vuln;
    std::uint64_t svm_hash_train = 0, svm_hash_scan = 0;
};
E2eResult cmd_e2e_demo(const E2eArgs& args);

// labels file: "<fid> <label>" per line
void write_labels_file(const std::string& path, const std::vector<std::string>& fids,
                       const std::vector<int>& labels, const Provenance& prov);
std::vector<std::pair<std::string, int>> read_labels_file(const std::string& path);

std::uint64_t file_hash(const std::string& path);

}  // namespace ubt::pipeline

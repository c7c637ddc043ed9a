#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ubt/common.hpp"
#include "ubt/corpus.hpp"

namespace ubt::embed {

enum class Mode { Subword, Word };
Mode mode_from_string(const std::string& s);
std::string mode_name(Mode m);

/// Hashed character n-gram vectors backing subword composition.
struct SubwordTable {
    int n_min = 3;
    int n_max = 6;
    std::int64_t bucket_count = 0;
    Eigen::MatrixXd grams;  // bucket_count x d

    /// Bucket ids for the n-grams of "<word>" (with boundary markers). Falls
    /// back to the whole marked word when it is shorter than n_min.
    static std::vector<std::int64_t> ngram_ids(const std::string& word, int n_min, int n_max,
                                               std::int64_t bucket_count);
    std::vector<std::int64_t> ngram_ids(const std::string& word) const {
        return ngram_ids(word, n_min, n_max, bucket_count);
    }
};

/// Applied to raw vectors so out-of-vocabulary compositions land in the same
/// space as the stored rows: normalize, center, normalize, then map by W.
struct CaieTransform {
    Eigen::RowVectorXd mean;
    Eigen::MatrixXd W;
    Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
};

struct EmbeddingMatrix {
    Eigen::MatrixXd rows;  // V x d; row i embeds vocab id i
    int d = 0;
    Mode mode = Mode::Subword;
    corpus::Vocab vocab;
    std::optional<SubwordTable> subword;   // raw n-gram vectors (subword mode)
    std::optional<CaieTransform> caie;     // set once mapped into a shared space
    std::vector<double> epoch_loss;        // training metadata
    std::uint64_t seed = 0;

    /// In-vocab words return their row. OOV words compose from n-grams in
    /// subword mode (mapped through `caie` when present) and fall back to the
    /// <UNK> row in word mode.
    Eigen::VectorXd lookup(const std::string& word) const;
};

struct TrainConfig {
    int dim = 200;
    int window = 5;
    int negatives = 5;
    int epochs = 5;
    double learning_rate = 0.05;
    std::uint64_t seed = 1;
    Mode mode = Mode::Subword;
    std::int64_t buckets = 2'000'000;
    int n_min = 3;
    int n_max = 6;
};

/// Skip-gram with negative sampling over instruction windows within blocks.
/// Single-threaded and fully determined by (corpus, vocab, config).
EmbeddingMatrix train_maie(const corpus::MonoCorpus& corpus, const corpus::Vocab& vocab,
                           const TrainConfig& cfg);

std::vector<std::pair<std::string, double>> nearest_neighbors(const std::string& word,
                                                              const EmbeddingMatrix& emb, int k);

// ---- internals exposed for gradient verification ----
struct SgnsModel {
    Eigen::MatrixXd in;    // V x d word input vectors
    Eigen::MatrixXd out;   // V x d context vectors
    Eigen::MatrixXd grams; // B x d (subword mode; 0x0 otherwise)
    bool subword = false;
};

struct SgnsExample {
    std::int32_t center = 0;
    std::vector<std::int64_t> center_grams;  // empty in word mode
    std::int32_t context = 0;
    std::vector<std::int32_t> negatives;
};

struct SgnsGrads {
    Eigen::MatrixXd in, out, grams;
};

/// Loss of one positive + negatives; applies an SGD step when lr > 0 and
/// accumulates analytic gradients when grads != nullptr (one code path).
double sgns_step(SgnsModel& model, const SgnsExample& ex, double lr, SgnsGrads* grads);

// ---- serialization ----
// Text: optional '#' comments, header "V d", then "word v1 .. vd" with six
// significant digits. Binary companion: one manifest line, then float32
// little-endian rows (plus center-mean row and mapping when present).
void write_embedding_text(const std::string& path, const EmbeddingMatrix& emb,
                          const Provenance& prov, const std::string& comment = "");
void write_embedding_binary(const std::string& path, const EmbeddingMatrix& emb,
                            const Provenance& prov);
EmbeddingMatrix read_embedding_binary(const std::string& path);
void write_subword_binary(const std::string& path, const SubwordTable& table,
                          const Provenance& prov);
SubwordTable read_subword_binary(const std::string& path);

}  // namespace ubt::embed

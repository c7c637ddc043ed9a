#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "ubt/common.hpp"
#include "ubt/embed.hpp"

namespace ubt::evalkit {

/// Corpus-level BLEU over aligned sentence (basic-block) lists: geometric
/// mean of modified n-gram precisions for n = 1..max_n times the brevity
/// penalty exp(min(0, 1 - ref_len/cand_len)). Orders with no candidate
/// n-grams are skipped; with `smooth`, zero match counts use a 0.1 numerator
/// so short-block scores stay defined. Identical inputs score exactly 1.
double bleu_score(const std::vector<std::vector<std::string>>& candidate,
                  const std::vector<std::vector<std::string>>& reference, int max_n = 4,
                  bool smooth = true);

struct FunctionEmbedding {
    Eigen::VectorXd vector;
    std::string function_id;
};

/// TF-weighted sum of instruction embeddings: sum over unique instructions of
/// count * embedding, i.e. the bag sum over all tokens. Order-free.
Eigen::VectorXd function_embedding(const std::vector<std::vector<std::string>>& blocks,
                                   const embed::EmbeddingMatrix& caie);

double cosine_similarity(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

struct ScoredPair {
    double similarity = 0.0;
    int label = 0;  // 1 similar, 0 dissimilar
    std::string id_a, id_b;
};

struct ThresholdPolicy {
    enum class Kind { BestOnSet, ValidationSplit } kind = Kind::ValidationSplit;
    double validation_fraction = 0.5;
    std::uint64_t seed = 1;
};

/// Prediction = 1 iff similarity >= threshold. BestOnSet picks the threshold
/// maximizing accuracy on the full set; ValidationSplit picks it on a seeded
/// held-out split and reports accuracy on the rest.
double pair_accuracy(const std::vector<ScoredPair>& pairs, const ThresholdPolicy& policy);

/// Best accuracy over all thresholds of the given scored set (helper shared
/// by both policies); also reports the chosen threshold.
double best_threshold_accuracy(const std::vector<ScoredPair>& pairs, double* threshold_out);
double accuracy_at_threshold(const std::vector<ScoredPair>& pairs, double threshold);

}  // namespace ubt::evalkit

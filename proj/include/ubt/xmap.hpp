#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "ubt/common.hpp"

namespace ubt::xmap {

/// Length-normalize rows, mean-center columns, length-normalize again.
/// Optionally reports the column mean (needed to replay the transform on
/// out-of-vocabulary vectors) and uses `names` in zero-row error messages.
Eigen::MatrixXd preprocess_embeddings(const Eigen::MatrixXd& X,
                                      Eigen::RowVectorXd* mean_out = nullptr,
                                      const std::vector<std::string>* names = nullptr);

struct MappingTransform {
    Eigen::MatrixXd W;  // d x d, orthogonal
    std::string source_arch;
    std::string target_arch;
    bool converged = true;
    double objective = 0.0;  // best mean CSLS of the induced dictionary
    int iterations = 0;
};

struct SeedDictionary {
    std::vector<std::int32_t> src;
    std::vector<std::int32_t> tgt;
    std::vector<double> scores;
    std::size_t size() const { return src.size(); }
};

/// SortedSimilarity matches rows of the sorted intra-space similarity
/// matrices; FrequencyRank seeds with the rank-identity pairing (rows are
/// frequency-ordered), which is the stronger anchor on small corpora where
/// same-frequency words have indistinguishable sorted profiles.
enum class InitMode { SortedSimilarity, FrequencyRank };

struct SelfLearnConfig {
    int csls_k = 10;
    double keep_prob = 0.9;          // final keep probability
    double keep_prob_initial = 0.1;  // annealed upward: doubled on stalls
    int max_iterations = 200;
    double tolerance = 1e-6;
    std::uint64_t seed = 1;
    int vocab_limit = 4000;  // most-frequent rows used for init and induction
    int patience = 10;       // stalled iterations before annealing / stopping
    bool bidirectional = true;  // fit on the union of both induction directions
    InitMode init = InitMode::SortedSimilarity;
};

/// W = U V^T from SVD(Xs[dict]^T Zt[dict]); the orthogonal least-squares fit.
MappingTransform procrustes_fit(const Eigen::MatrixXd& Xs, const Eigen::MatrixXd& Zt,
                                const SeedDictionary& dict);

/// CSLS retrieval: for each source row the target maximizing
/// 2 cos(x,z) - r_T(x) - r_S(z); pairs kept with cfg.keep_prob.
SeedDictionary induce_dictionary(const Eigen::MatrixXd& XsW, const Eigen::MatrixXd& Zt,
                                 const SelfLearnConfig& cfg, Rng& rng);
SeedDictionary induce_dictionary(const Eigen::MatrixXd& XsW, const Eigen::MatrixXd& Zt,
                                 const SelfLearnConfig& cfg);

double mean_score(const SeedDictionary& dict);

/// Unsupervised alternation of procrustes_fit and induce_dictionary from a
/// sorted-similarity-row initialization. Inputs must be preprocessed, rows in
/// descending frequency order. Returns the best-scoring W; `converged` is
/// false when max_iterations ran out.
MappingTransform self_learn(const Eigen::MatrixXd& Xs, const Eigen::MatrixXd& Zt,
                            const SelfLearnConfig& cfg,
                            std::vector<double>* objective_trace = nullptr);

Eigen::MatrixXd map_embeddings(const Eigen::MatrixXd& Xs, const Eigen::MatrixXd& W);

double orthogonality_error(const Eigen::MatrixXd& W);  // ||W^T W - I||_F

// Mapping file: '#' comments, header line "d", then d rows of d reals.
void write_mapping_file(const std::string& path, const Eigen::MatrixXd& W, const Provenance& prov);
Eigen::MatrixXd read_mapping_file(const std::string& path);

}  // namespace ubt::xmap

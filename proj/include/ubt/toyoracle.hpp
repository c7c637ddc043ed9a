#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ubt/common.hpp"

namespace ubt::toyoracle {

/// Synthetic twin-ISA corpus spec: side A is sampled from a seeded Zipfian
/// bigram grammar; side B blocks are lexicon images of hidden A-side twins
/// with independent adjacent swaps at rate p.
struct TwinSpec {
    int vocab_size = 300;
    double zipf_exponent = 1.0;
    int block_len_min = 3;
    int block_len_max = 10;
    double swap_prob = 0.1;
    int corpus_blocks = 2000;
    std::uint64_t seed = 1;
    int fn_blocks_min = 1;
    int fn_blocks_max = 4;
    int bigram_fanout = 20;
};

enum class Direction { AtoB, BtoA };

struct Lexicon {
    std::vector<std::string> words_a;  // index = A word id
    std::vector<std::string> words_b;  // index = B word id
    std::vector<std::int32_t> a_to_b;  // A id -> B id (bijection)
    std::vector<std::int32_t> b_to_a;

    std::string translate(const std::string& word, Direction dir) const;  // error if missing

    std::string serialize() const;  // TSV: word_a \t word_b
    static Lexicon deserialize(const std::string& text);

    /// Builds the word indexes; called by the factories so concurrent
    /// translate() calls never race on first use.
    void build_index() const;

private:
    mutable std::unordered_map<std::string, std::int32_t> index_a_, index_b_;
};

struct TwinCorpus {
    std::vector<std::vector<std::string>> blocks_a;
    std::vector<std::vector<std::string>> blocks_b;
    std::vector<std::vector<int>> functions_a;  // function -> indices into blocks_a
    std::vector<std::vector<int>> functions_b;  // same functions on the B side
    std::vector<int> twin_of_b;                 // blocks_b[i] images blocks_a[twin_of_b[i]]
    Lexicon lexicon;
    std::int64_t swap_opportunities = 0;
    std::int64_t swaps_applied = 0;
};

TwinCorpus generate_twin_corpus(const TwinSpec& spec);

std::vector<std::string> oracle_translate(const std::vector<std::string>& block,
                                          const Lexicon& lexicon, Direction dir);

/// Independent corpus-BLEU implementation used to cross-check evalkit; shares
/// no code with it. Same pinned definition: modified n-gram precisions with
/// 0.1-numerator smoothing for zero matches, orders with no candidate n-grams
/// skipped, brevity penalty exp(min(0, 1 - ref_len/cand_len)).
double bleu_bruteforce(const std::vector<std::vector<std::string>>& candidate,
                       const std::vector<std::vector<std::string>>& reference, int max_n = 4,
                       bool smooth = true);

/// Central differences (f(x+eps)-f(x-eps))/(2 eps) on the given coordinates.
std::vector<double> finite_difference_grad(const std::function<double(const Eigen::VectorXd&)>& f,
                                           const Eigen::VectorXd& params,
                                           const std::vector<int>& coords, double eps = 1e-4);

/// Plants a random orthogonal Q (QR of a seeded Gaussian, sign-fixed) and
/// returns (Z = X*Q + sigma*noise, Q).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> plant_rotation(const Eigen::MatrixXd& X, double sigma,
                                                           std::uint64_t seed);

}  // namespace ubt::toyoracle

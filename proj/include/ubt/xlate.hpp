#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ubt/asmtext.hpp"
#include "ubt/common.hpp"
#include "ubt/corpus.hpp"
#include "ubt/embed.hpp"

namespace ubt::xlate {

enum class Side { A, B };
Side other(Side s);

struct GruCell {
    Eigen::MatrixXd Wr, Wz, Wn;  // hidden x input
    Eigen::MatrixXd Ur, Uz, Un;  // hidden x hidden
    Eigen::VectorXd br, bz, bnx, bnh;

    int hidden() const { return static_cast<int>(Ur.rows()); }
    void init(int hidden, int input, Rng& rng);
    void init_zero(int hidden, int input);
};

/// Decoder with multiplicative attention. The output projection is tied to
/// the architecture's frozen input embeddings: logits = CAIE * c + bias, so
/// the combined layer projects back into the embedding dimension.
struct AttnDecoder {
    GruCell cell;        // input d_emb
    Eigen::MatrixXd Wa;  // hidden x enc_dim, multiplicative attention
    Eigen::MatrixXd Wi;  // hidden x enc_dim, encoder-final -> initial hidden
    Eigen::VectorXd bi;
    Eigen::MatrixXd Wc;  // d_emb x (hidden + enc_dim)
    Eigen::VectorXd bc;
    Eigen::VectorXd bo;  // vocab; per-arch output bias

    void init(int hidden, int input, int enc_dim, int vocab, Rng& rng);
    void init_zero(int hidden, int input, int enc_dim, int vocab);
};

/// Everything updated by training. The shared encoder serves both directions;
/// each side owns one decoder. Input embeddings are not here: they are frozen.
struct TrainableParams {
    GruCell enc_fw, enc_bw;
    AttnDecoder dec_a, dec_b;

    struct TensorRef {
        std::string name;
        double* data;
        Eigen::Index rows, cols;
        std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
    };
    std::vector<TensorRef> tensors();  // fixed enumeration order

    void init(int d_emb, int h_enc, int h_dec, int vocab_a, int vocab_b, Rng& rng);
    void init_zero(int d_emb, int h_enc, int h_dec, int vocab_a, int vocab_b);
    void set_zero();
};

struct NoiseConfig {
    std::uint64_t seed = 1;
};

/// floor(N/2) sequential uniformly chosen adjacent transpositions; the token
/// multiset is preserved.
std::vector<std::int32_t> add_noise(const std::vector<std::int32_t>& block, Rng& rng);
std::vector<std::int32_t> add_noise(const std::vector<std::int32_t>& block,
                                    const NoiseConfig& cfg);

struct TrainSchedule {
    int iterations = 500;
    int batch_size = 32;
    double learning_rate = 3e-4;
    double clip_norm = 5.0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int max_block_len = 64;
    int hidden_enc = 128;  // per direction
    int hidden_dec = 256;
    std::uint64_t seed = 1;
};

struct LossCurves {
    std::vector<double> denoise_a, denoise_b, backtranslate_ab, backtranslate_ba;
};

struct TranslationModel {
    Eigen::MatrixXd emb_a, emb_b;  // frozen CAIE, rows 0..3 specials
    corpus::Vocab vocab_a, vocab_b;
    std::string arch_a = "a", arch_b = "b";
    TrainableParams params;
    TrainSchedule schedule;
    LossCurves losses;
    std::int64_t truncated_blocks = 0;
    std::int64_t skipped_bt_pairs = 0;
    bool trained = false;
    int d_emb = 0, h_enc = 0, h_dec = 0;

    const Eigen::MatrixXd& emb(Side s) const { return s == Side::A ? emb_a : emb_b; }
    const corpus::Vocab& vocab(Side s) const { return s == Side::A ? vocab_a : vocab_b; }
    const AttnDecoder& decoder(Side s) const { return s == Side::A ? params.dec_a : params.dec_b; }
    AttnDecoder& decoder(Side s) { return s == Side::A ? params.dec_a : params.dec_b; }
    std::uint64_t embedding_hash() const;
};

TranslationModel make_model(const Eigen::MatrixXd& emb_a, const corpus::Vocab& vocab_a,
                            const Eigen::MatrixXd& emb_b, const corpus::Vocab& vocab_b,
                            const TrainSchedule& schedule);

/// One context vector per source position from the shared encoder; inputs are
/// frozen CAIE rows. Blocks longer than max_block_len are truncated (flag).
std::vector<Eigen::VectorXd> encode_block(const TranslationModel& model,
                                          const std::vector<std::int32_t>& block, Side src,
                                          bool* truncated = nullptr);

using IdBlock = std::vector<std::int32_t>;
using SeqPair = std::pair<IdBlock, IdBlock>;  // (source block, target block)

/// Mean token cross-entropy of teacher-forced decoding tgt from src using
/// decoder(tgt_side). Accumulates analytic gradients when grads != nullptr.
double seq2seq_loss(const TranslationModel& model, const std::vector<SeqPair>& pairs,
                    Side src_side, Side tgt_side, TrainableParams* grads);

/// Denoising objective: reconstruct each block from its noised version.
double denoising_loss(const TranslationModel& model, const std::vector<IdBlock>& batch, Side side,
                      Rng& noise_rng, TrainableParams* grads);

struct BtPairs {
    std::vector<SeqPair> pairs;  // (pseudo-source in other(from), original in from)
    int skipped = 0;             // degenerate empty decodes
};

/// Greedy-translates each block to the other side with gradients suppressed;
/// the resulting pairs supervise the other(from) -> from direction.
BtPairs backtranslation_pairs(const TranslationModel& model, const std::vector<IdBlock>& batch,
                              Side from);
BtPairs make_backtranslation_pairs(const std::vector<IdBlock>& batch,
                                   const std::vector<IdBlock>& translations);

TranslationModel train_translator(const corpus::MonoCorpus& corpus_a,
                                  const corpus::MonoCorpus& corpus_b,
                                  const Eigen::MatrixXd& caie_a, const corpus::Vocab& vocab_a,
                                  const Eigen::MatrixXd& caie_b, const corpus::Vocab& vocab_b,
                                  const TrainSchedule& schedule);

/// Beam-search decode (width 1 = greedy); output capped at 2*input+5 tokens.
IdBlock translate_ids(const TranslationModel& model, const IdBlock& src, Side from,
                      int beam_width = 1);

/// Word-level translation. OOV source words are replaced by their nearest
/// in-vocab word under subword-composed CAIE cosine when src_caie is given,
/// falling back to <UNK>.
std::vector<std::string> translate_block(const TranslationModel& model,
                                         const std::vector<std::string>& words, Side from,
                                         int beam_width = 1,
                                         const embed::EmbeddingMatrix* src_caie = nullptr);

/// Per-block translation of a function; block order and name carry over.
/// Translated instructions are opaque single-token words.
asmtext::FunctionRecord translate_function(const TranslationModel& model,
                                           const asmtext::FunctionRecord& fn, Side from,
                                           int beam_width = 1,
                                           const embed::EmbeddingMatrix* src_caie = nullptr);

// Model file: magic "UBT1", JSON manifest line (tensor names/shapes, arch
// pair, seed, schedule, vocabularies), then float32 little-endian payloads in
// manifest order.
void write_model(const std::string& path, const TranslationModel& model, const Provenance& prov);
TranslationModel read_model(const std::string& path);

}  // namespace ubt::xlate

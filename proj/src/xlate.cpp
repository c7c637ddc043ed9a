#include "ubt/xlate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ubt::xlate {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Side other(Side s) { return s == Side::A ? Side::B : Side::A; }

namespace {

double uniform_sym(Rng& rng, double a) { return (rng.uniform() * 2.0 - 1.0) * a; }

void fill_uniform(MatrixXd& m, Rng& rng, double a) {
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) m(i, j) = uniform_sym(rng, a);
}

void fill_uniform(VectorXd& v, Rng& rng, double a) {
    for (Index i = 0; i < v.size(); ++i) v[i] = uniform_sym(rng, a);
}

VectorXd sigmoid(const VectorXd& x) {
    return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

}  // namespace

void GruCell::init_zero(int hidden, int input) {
    Wr = MatrixXd::Zero(hidden, input);
    Wz = MatrixXd::Zero(hidden, input);
    Wn = MatrixXd::Zero(hidden, input);
    Ur = MatrixXd::Zero(hidden, hidden);
    Uz = MatrixXd::Zero(hidden, hidden);
    Un = MatrixXd::Zero(hidden, hidden);
    br = VectorXd::Zero(hidden);
    bz = VectorXd::Zero(hidden);
    bnx = VectorXd::Zero(hidden);
    bnh = VectorXd::Zero(hidden);
}

void GruCell::init(int hidden, int input, Rng& rng) {
    init_zero(hidden, input);
    const double a = 1.0 / std::sqrt(static_cast<double>(hidden));
    fill_uniform(Wr, rng, a);
    fill_uniform(Wz, rng, a);
    fill_uniform(Wn, rng, a);
    fill_uniform(Ur, rng, a);
    fill_uniform(Uz, rng, a);
    fill_uniform(Un, rng, a);
    fill_uniform(br, rng, a);
    fill_uniform(bz, rng, a);
    fill_uniform(bnx, rng, a);
    fill_uniform(bnh, rng, a);
}

void AttnDecoder::init_zero(int hidden, int input, int enc_dim, int vocab) {
    cell.init_zero(hidden, input);
    Wa = MatrixXd::Zero(hidden, enc_dim);
    Wi = MatrixXd::Zero(hidden, enc_dim);
    bi = VectorXd::Zero(hidden);
    Wc = MatrixXd::Zero(input, hidden + enc_dim);
    bc = VectorXd::Zero(input);
    bo = VectorXd::Zero(vocab);
}

void AttnDecoder::init(int hidden, int input, int enc_dim, int vocab, Rng& rng) {
    cell.init(hidden, input, rng);
    Wa = MatrixXd(hidden, enc_dim);
    Wi = MatrixXd(hidden, enc_dim);
    bi = VectorXd(hidden);
    Wc = MatrixXd(input, hidden + enc_dim);
    bc = VectorXd(input);
    bo = VectorXd::Zero(vocab);
    fill_uniform(Wa, rng, 1.0 / std::sqrt(static_cast<double>(enc_dim)));
    fill_uniform(Wi, rng, 1.0 / std::sqrt(static_cast<double>(enc_dim)));
    fill_uniform(bi, rng, 1.0 / std::sqrt(static_cast<double>(enc_dim)));
    fill_uniform(Wc, rng, 1.0 / std::sqrt(static_cast<double>(hidden + enc_dim)));
    fill_uniform(bc, rng, 1.0 / std::sqrt(static_cast<double>(hidden + enc_dim)));
}

namespace {

void add_cell_tensors(std::vector<TrainableParams::TensorRef>& out, const std::string& prefix,
                      GruCell& c) {
    auto add = [&](const char* n, MatrixXd& m) {
        out.push_back({prefix + "." + n, m.data(), m.rows(), m.cols()});
    };
    auto addv = [&](const char* n, VectorXd& v) {
        out.push_back({prefix + "." + n, v.data(), v.size(), 1});
    };
    add("Wr", c.Wr);
    add("Wz", c.Wz);
    add("Wn", c.Wn);
    add("Ur", c.Ur);
    add("Uz", c.Uz);
    add("Un", c.Un);
    addv("br", c.br);
    addv("bz", c.bz);
    addv("bnx", c.bnx);
    addv("bnh", c.bnh);
}

void add_decoder_tensors(std::vector<TrainableParams::TensorRef>& out, const std::string& prefix,
                         AttnDecoder& d) {
    add_cell_tensors(out, prefix + ".cell", d.cell);
    auto add = [&](const char* n, MatrixXd& m) {
        out.push_back({prefix + "." + n, m.data(), m.rows(), m.cols()});
    };
    auto addv = [&](const char* n, VectorXd& v) {
        out.push_back({prefix + "." + n, v.data(), v.size(), 1});
    };
    add("Wa", d.Wa);
    add("Wi", d.Wi);
    addv("bi", d.bi);
    add("Wc", d.Wc);
    addv("bc", d.bc);
    addv("bo", d.bo);
}

}  // namespace

std::vector<TrainableParams::TensorRef> TrainableParams::tensors() {
    std::vector<TensorRef> out;
    add_cell_tensors(out, "enc_fw", enc_fw);
    add_cell_tensors(out, "enc_bw", enc_bw);
    add_decoder_tensors(out, "dec_a", dec_a);
    add_decoder_tensors(out, "dec_b", dec_b);
    return out;
}

void TrainableParams::init(int d_emb, int h_enc, int h_dec, int vocab_a, int vocab_b,
                           Rng& rng) {
    const int enc_dim = 2 * h_enc;
    enc_fw.init(h_enc, d_emb, rng);
    enc_bw.init(h_enc, d_emb, rng);
    dec_a.init(h_dec, d_emb, enc_dim, vocab_a, rng);
    dec_b.init(h_dec, d_emb, enc_dim, vocab_b, rng);
}

void TrainableParams::init_zero(int d_emb, int h_enc, int h_dec, int vocab_a, int vocab_b) {
    const int enc_dim = 2 * h_enc;
    enc_fw.init_zero(h_enc, d_emb);
    enc_bw.init_zero(h_enc, d_emb);
    dec_a.init_zero(h_dec, d_emb, enc_dim, vocab_a);
    dec_b.init_zero(h_dec, d_emb, enc_dim, vocab_b);
}

void TrainableParams::set_zero() {
    for (auto& t : tensors()) std::fill(t.data, t.data + t.size(), 0.0);
}

std::vector<std::int32_t> add_noise(const std::vector<std::int32_t>& block, Rng& rng) {
    std::vector<std::int32_t> out = block;
    const std::size_t n = out.size();
    if (n < 2) return out;
    const std::size_t swaps = n / 2;
    for (std::size_t s = 0; s < swaps; ++s) {
        const std::size_t i = rng.uniform_int(n - 1);
        std::swap(out[i], out[i + 1]);
    }
    return out;
}

std::vector<std::int32_t> add_noise(const std::vector<std::int32_t>& block,
                                    const NoiseConfig& cfg) {
    Rng rng(cfg.seed);
    return add_noise(block, rng);
}

std::uint64_t TranslationModel::embedding_hash() const {
    std::uint64_t h = fnv1a64(emb_a.data(), static_cast<std::size_t>(emb_a.size()) * sizeof(double));
    return fnv1a64(emb_b.data(), static_cast<std::size_t>(emb_b.size()) * sizeof(double), h);
}

TranslationModel make_model(const Eigen::MatrixXd& emb_a, const corpus::Vocab& vocab_a,
                            const Eigen::MatrixXd& emb_b, const corpus::Vocab& vocab_b,
                            const TrainSchedule& schedule) {
    if (emb_a.cols() != emb_b.cols())
        throw DataFormatError("translator: embedding dimension mismatch between sides");
    if (emb_a.rows() != vocab_a.size() || emb_b.rows() != vocab_b.size())
        throw DataFormatError("translator: embedding row count must equal vocabulary size");
    TranslationModel m;
    m.emb_a = emb_a;
    m.emb_b = emb_b;
    m.vocab_a = vocab_a;
    m.vocab_b = vocab_b;
    m.schedule = schedule;
    m.d_emb = static_cast<int>(emb_a.cols());
    m.h_enc = schedule.hidden_enc;
    m.h_dec = schedule.hidden_dec;
    Rng rng(schedule.seed);
    m.params.init(m.d_emb, m.h_enc, m.h_dec, vocab_a.size(), vocab_b.size(), rng);
    return m;
}

// ---------------------------------------------------------------------------
// forward/backward machinery
// ---------------------------------------------------------------------------
namespace {

struct GruStepCache {
    VectorXd x, h_prev, r, z, n, u, h;
};

VectorXd gru_step(const GruCell& c, const VectorXd& x, const VectorXd& h_prev,
                  GruStepCache* cache) {
    const VectorXd r = sigmoid(c.Wr * x + c.Ur * h_prev + c.br);
    const VectorXd z = sigmoid(c.Wz * x + c.Uz * h_prev + c.bz);
    const VectorXd u = c.Un * h_prev + c.bnh;
    const VectorXd n = (c.Wn * x + c.bnx + r.cwiseProduct(u)).array().tanh();
    VectorXd h = (VectorXd::Ones(n.size()) - z).cwiseProduct(n) + z.cwiseProduct(h_prev);
    if (cache) *cache = {x, h_prev, r, z, n, u, h};
    return h;
}

/// Accumulates parameter grads; returns dL/dh_prev. Input grads are dropped
/// (embeddings are frozen).
VectorXd gru_backward(const GruCell& c, GruCell& g, const GruStepCache& s, const VectorXd& dh) {
    const VectorXd dz = dh.cwiseProduct(s.h_prev - s.n);
    const VectorXd dn = dh.cwiseProduct(VectorXd::Ones(dh.size()) - s.z);
    VectorXd dh_prev = dh.cwiseProduct(s.z);

    const VectorXd dq = dn.cwiseProduct(VectorXd::Ones(dn.size()) - s.n.cwiseProduct(s.n));
    g.Wn.noalias() += dq * s.x.transpose();
    g.bnx += dq;
    const VectorXd dr = dq.cwiseProduct(s.u);
    const VectorXd du = dq.cwiseProduct(s.r);
    g.Un.noalias() += du * s.h_prev.transpose();
    g.bnh += du;
    dh_prev.noalias() += c.Un.transpose() * du;

    const VectorXd dpr =
        dr.cwiseProduct(s.r).cwiseProduct(VectorXd::Ones(dr.size()) - s.r);
    g.Wr.noalias() += dpr * s.x.transpose();
    g.Ur.noalias() += dpr * s.h_prev.transpose();
    g.br += dpr;
    dh_prev.noalias() += c.Ur.transpose() * dpr;

    const VectorXd dpz =
        dz.cwiseProduct(s.z).cwiseProduct(VectorXd::Ones(dz.size()) - s.z);
    g.Wz.noalias() += dpz * s.x.transpose();
    g.Uz.noalias() += dpz * s.h_prev.transpose();
    g.bz += dpz;
    dh_prev.noalias() += c.Uz.transpose() * dpz;
    return dh_prev;
}

struct EncCache {
    std::vector<GruStepCache> fw, bw;  // indexed by source position
    MatrixXd outputs;                  // enc_dim x T
    VectorXd final_state;              // [fw Tlast ; bw at t=0]
    int len = 0;
};

EncCache encode_sequence(const TranslationModel& m, const IdBlock& ids, Side src) {
    if (ids.empty()) throw DataFormatError("encoder: empty block");
    const MatrixXd& emb = m.emb(src);
    const int t_len = static_cast<int>(ids.size());
    const int h = m.h_enc;
    EncCache cache;
    cache.len = t_len;
    cache.fw.resize(static_cast<std::size_t>(t_len));
    cache.bw.resize(static_cast<std::size_t>(t_len));
    cache.outputs.resize(2 * h, t_len);

    VectorXd state = VectorXd::Zero(h);
    for (int t = 0; t < t_len; ++t) {
        const VectorXd x = emb.row(ids[static_cast<std::size_t>(t)]).transpose();
        state = gru_step(m.params.enc_fw, x, state, &cache.fw[static_cast<std::size_t>(t)]);
        cache.outputs.col(t).head(h) = state;
    }
    const VectorXd fw_last = state;

    state = VectorXd::Zero(h);
    for (int t = t_len - 1; t >= 0; --t) {
        const VectorXd x = emb.row(ids[static_cast<std::size_t>(t)]).transpose();
        state = gru_step(m.params.enc_bw, x, state, &cache.bw[static_cast<std::size_t>(t)]);
        cache.outputs.col(t).tail(h) = state;
    }
    cache.final_state.resize(2 * h);
    cache.final_state.head(h) = fw_last;
    cache.final_state.tail(h) = state;  // backward state after consuming t = 0
    return cache;
}

/// Backward through the bidirectional encoder given per-position output grads
/// and the final-state grad.
void encoder_backward(const TranslationModel& m, TrainableParams& g, const EncCache& cache,
                      MatrixXd& d_outputs, const VectorXd& d_final) {
    const int h = m.h_enc;
    const int t_len = cache.len;
    d_outputs.col(t_len - 1).head(h) += d_final.head(h);
    d_outputs.col(0).tail(h) += d_final.tail(h);

    VectorXd dh = VectorXd::Zero(h);
    for (int t = t_len - 1; t >= 0; --t) {
        dh += d_outputs.col(t).head(h);
        dh = gru_backward(m.params.enc_fw, g.enc_fw, cache.fw[static_cast<std::size_t>(t)], dh);
    }
    dh.setZero();
    for (int t = 0; t < t_len; ++t) {
        dh += d_outputs.col(t).tail(h);
        dh = gru_backward(m.params.enc_bw, g.enc_bw, cache.bw[static_cast<std::size_t>(t)], dh);
    }
}

struct DecStepCache {
    GruStepCache gru;
    VectorXd alpha, ctx, cat, c, p;
    std::int32_t target = 0;
};

struct DecCache {
    VectorXd h0;
    std::vector<DecStepCache> steps;
};

/// Teacher-forced decode of `target` (with BOS framing and EOS appended);
/// returns summed token cross-entropy and fills the cache when given.
double decode_sequence(const TranslationModel& m, const AttnDecoder& dec, Side tgt_side,
                       const EncCache& enc, const IdBlock& target, DecCache* cache) {
    const MatrixXd& emb = m.emb(tgt_side);
    const int steps = static_cast<int>(target.size()) + 1;  // + EOS
    const MatrixXd attn_keys = dec.Wa * enc.outputs;        // hidden x T

    VectorXd h = (dec.Wi * enc.final_state + dec.bi).array().tanh();
    if (cache) {
        cache->h0 = h;
        cache->steps.resize(static_cast<std::size_t>(steps));
    }
    double loss = 0.0;
    for (int t = 0; t < steps; ++t) {
        const std::int32_t prev =
            t == 0 ? corpus::kBos : target[static_cast<std::size_t>(t - 1)];
        const std::int32_t want =
            t < steps - 1 ? target[static_cast<std::size_t>(t)] : corpus::kEos;
        const VectorXd x = emb.row(prev).transpose();
        GruStepCache gc;
        h = gru_step(dec.cell, x, h, &gc);

        const VectorXd scores = attn_keys.transpose() * h;
        VectorXd alpha = (scores.array() - scores.maxCoeff()).exp();
        alpha /= alpha.sum();
        const VectorXd ctx = enc.outputs * alpha;

        VectorXd cat(h.size() + ctx.size());
        cat << h, ctx;
        const VectorXd c = dec.Wc * cat + dec.bc;  // linear pre-softmax layer
        const VectorXd logits = emb * c + dec.bo;  // tied output projection
        VectorXd p = (logits.array() - logits.maxCoeff()).exp();
        p /= p.sum();
        loss += -std::log(std::max(p[want], 1e-300));

        if (cache) {
            DecStepCache& sc = cache->steps[static_cast<std::size_t>(t)];
            sc.gru = gc;
            sc.alpha = alpha;
            sc.ctx = ctx;
            sc.cat = cat;
            sc.c = c;
            sc.p = p;
            sc.target = want;
        }
    }
    return loss;
}

/// Backward through decoder and attention; accumulates parameter grads and
/// the encoder-output grads (d_enc_outputs) plus encoder-final grad.
void decode_backward(const TranslationModel& m, const AttnDecoder& dec, AttnDecoder& g,
                     Side tgt_side, const EncCache& enc, const DecCache& cache, double scale,
                     MatrixXd& d_enc_outputs, VectorXd& d_final) {
    const int h_dim = m.h_dec;
    const MatrixXd& emb = m.emb(tgt_side);
    const MatrixXd attn_keys = dec.Wa * enc.outputs;  // hidden x T

    VectorXd dh_next = VectorXd::Zero(h_dim);
    for (int t = static_cast<int>(cache.steps.size()) - 1; t >= 0; --t) {
        const DecStepCache& sc = cache.steps[static_cast<std::size_t>(t)];
        VectorXd dlogits = sc.p * scale;
        dlogits[sc.target] -= scale;

        g.bo += dlogits;
        const VectorXd dc = emb.transpose() * dlogits;  // tied projection; emb frozen
        g.Wc.noalias() += dc * sc.cat.transpose();
        g.bc += dc;
        const VectorXd dcat = dec.Wc.transpose() * dc;
        VectorXd dh = dcat.head(h_dim) + dh_next;
        const VectorXd dctx = dcat.tail(dcat.size() - h_dim);

        // attention backward
        const VectorXd dalpha = enc.outputs.transpose() * dctx;
        const double mix = sc.alpha.dot(dalpha);
        const VectorXd dscores =
            sc.alpha.cwiseProduct(dalpha - VectorXd::Constant(dalpha.size(), mix));
        dh.noalias() += attn_keys * dscores;
        const VectorXd enc_ds = enc.outputs * dscores;  // sum_j ds_j e_j
        g.Wa.noalias() += sc.gru.h * enc_ds.transpose();
        d_enc_outputs.noalias() += dctx * sc.alpha.transpose();
        d_enc_outputs.noalias() += (dec.Wa.transpose() * sc.gru.h) * dscores.transpose();

        dh_next = gru_backward(dec.cell, g.cell, sc.gru, dh);
    }
    // initial state h0 = tanh(Wi final + bi)
    const VectorXd dh0 = dh_next;
    const VectorXd dh0pre =
        dh0.cwiseProduct(VectorXd::Ones(dh0.size()) - cache.h0.cwiseProduct(cache.h0));
    g.Wi.noalias() += dh0pre * enc.final_state.transpose();
    g.bi += dh0pre;
    d_final.noalias() += dec.Wi.transpose() * dh0pre;
}

IdBlock truncate_block(const IdBlock& block, int max_len, std::int64_t* counter) {
    if (static_cast<int>(block.size()) <= max_len) return block;
    if (counter) ++*counter;
    return IdBlock(block.begin(), block.begin() + max_len);
}

}  // namespace

std::vector<Eigen::VectorXd> encode_block(const TranslationModel& model,
                                          const std::vector<std::int32_t>& block, Side src,
                                          bool* truncated) {
    IdBlock ids = block;
    if (static_cast<int>(ids.size()) > model.schedule.max_block_len) {
        ids.resize(static_cast<std::size_t>(model.schedule.max_block_len));
        if (truncated) *truncated = true;
    } else if (truncated) {
        *truncated = false;
    }
    const EncCache cache = encode_sequence(model, ids, src);
    std::vector<VectorXd> out;
    out.reserve(static_cast<std::size_t>(cache.len));
    for (int t = 0; t < cache.len; ++t) out.push_back(cache.outputs.col(t));
    return out;
}

double seq2seq_loss(const TranslationModel& model, const std::vector<SeqPair>& pairs,
                    Side src_side, Side tgt_side, TrainableParams* grads) {
    if (pairs.empty()) throw DataFormatError("seq2seq_loss: empty batch");
    std::int64_t total_tokens = 0;
    for (const auto& [src, tgt] : pairs) {
        if (src.empty() || tgt.empty()) throw DataFormatError("seq2seq_loss: empty block");
        total_tokens += static_cast<std::int64_t>(tgt.size()) + 1;
    }
    const double scale = 1.0 / static_cast<double>(total_tokens);
    const AttnDecoder& dec = model.decoder(tgt_side);
    AttnDecoder* gdec = nullptr;
    if (grads) gdec = tgt_side == Side::A ? &grads->dec_a : &grads->dec_b;

    double loss_sum = 0.0;
    for (const auto& [src, tgt] : pairs) {
        EncCache enc = encode_sequence(model, src, src_side);
        DecCache dc;
        loss_sum += decode_sequence(model, dec, tgt_side, enc, tgt, grads ? &dc : nullptr);
        if (grads) {
            MatrixXd d_outputs = MatrixXd::Zero(enc.outputs.rows(), enc.outputs.cols());
            VectorXd d_final = VectorXd::Zero(enc.final_state.size());
            decode_backward(model, dec, *gdec, tgt_side, enc, dc, scale, d_outputs, d_final);
            encoder_backward(model, *grads, enc, d_outputs, d_final);
        }
    }
    return loss_sum * scale;
}

double denoising_loss(const TranslationModel& model, const std::vector<IdBlock>& batch, Side side,
                      Rng& noise_rng, TrainableParams* grads) {
    std::vector<SeqPair> pairs;
    pairs.reserve(batch.size());
    for (const IdBlock& block : batch) pairs.emplace_back(add_noise(block, noise_rng), block);
    return seq2seq_loss(model, pairs, side, side, grads);
}

BtPairs make_backtranslation_pairs(const std::vector<IdBlock>& batch,
                                   const std::vector<IdBlock>& translations) {
    if (batch.size() != translations.size())
        throw DataFormatError("backtranslation: batch/translation size mismatch");
    BtPairs out;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (translations[i].empty()) {
            ++out.skipped;
            continue;
        }
        out.pairs.emplace_back(translations[i], batch[i]);
    }
    return out;
}

BtPairs backtranslation_pairs(const TranslationModel& model, const std::vector<IdBlock>& batch,
                              Side from) {
    std::vector<IdBlock> translations;
    translations.reserve(batch.size());
    for (const IdBlock& block : batch)
        translations.push_back(translate_ids(model, block, from, 1));
    return make_backtranslation_pairs(batch, translations);
}

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------
namespace {

struct AdamState {
    TrainableParams m, v;
    std::int64_t t = 0;
};

void adam_step(TrainableParams& params, TrainableParams& grads, AdamState& state,
               const TrainSchedule& s) {
    // global gradient-norm clip
    double norm_sq = 0.0;
    auto gts = grads.tensors();
    for (const auto& g : gts)
        for (std::size_t i = 0; i < g.size(); ++i) norm_sq += g.data[i] * g.data[i];
    const double norm = std::sqrt(norm_sq);
    const double clip_scale = (s.clip_norm > 0 && norm > s.clip_norm) ? s.clip_norm / norm : 1.0;

    ++state.t;
    const double bc1 = 1.0 - std::pow(s.adam_beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(s.adam_beta2, static_cast<double>(state.t));
    auto pts = params.tensors();
    auto mts = state.m.tensors();
    auto vts = state.v.tensors();
    for (std::size_t k = 0; k < pts.size(); ++k) {
        double* p = pts[k].data;
        double* g = gts[k].data;
        double* m = mts[k].data;
        double* v = vts[k].data;
        const std::size_t n = pts[k].size();
        for (std::size_t i = 0; i < n; ++i) {
            const double gi = g[i] * clip_scale;
            m[i] = s.adam_beta1 * m[i] + (1.0 - s.adam_beta1) * gi;
            v[i] = s.adam_beta2 * v[i] + (1.0 - s.adam_beta2) * gi * gi;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= s.learning_rate * mhat / (std::sqrt(vhat) + s.adam_eps);
        }
    }
}

std::vector<IdBlock> sample_batch(const std::vector<IdBlock>& corpus, int batch_size, Rng& rng,
                                  int max_len, std::int64_t* truncations) {
    std::vector<IdBlock> batch;
    batch.reserve(static_cast<std::size_t>(batch_size));
    for (int i = 0; i < batch_size; ++i) {
        const std::size_t k = rng.uniform_int(corpus.size());
        batch.push_back(truncate_block(corpus[k], max_len, truncations));
    }
    return batch;
}

}  // namespace

TranslationModel train_translator(const corpus::MonoCorpus& corpus_a,
                                  const corpus::MonoCorpus& corpus_b,
                                  const Eigen::MatrixXd& caie_a, const corpus::Vocab& vocab_a,
                                  const Eigen::MatrixXd& caie_b, const corpus::Vocab& vocab_b,
                                  const TrainSchedule& schedule) {
    if (corpus_a.blocks.empty() || corpus_b.blocks.empty())
        throw DataFormatError("train_translator: both corpora must be non-empty");
    TranslationModel model = make_model(caie_a, vocab_a, caie_b, vocab_b, schedule);

    Rng batch_rng(schedule.seed);
    Rng noise_rng(schedule.seed ^ 0x9e3779b97f4a7c15ULL);
    AdamState adam;
    adam.m.init_zero(model.d_emb, model.h_enc, model.h_dec, vocab_a.size(), vocab_b.size());
    adam.v.init_zero(model.d_emb, model.h_enc, model.h_dec, vocab_a.size(), vocab_b.size());
    TrainableParams grads;
    grads.init_zero(model.d_emb, model.h_enc, model.h_dec, vocab_a.size(), vocab_b.size());

    // iterations whose batch degenerated to nothing record no loss entry
    auto run_objective = [&](const std::vector<SeqPair>& pairs, Side src_side, Side tgt_side,
                             std::vector<double>& curve) {
        if (pairs.empty()) return;
        grads.set_zero();
        const double loss = seq2seq_loss(model, pairs, src_side, tgt_side, &grads);
        adam_step(model.params, grads, adam, schedule);
        curve.push_back(loss);
    };

    for (int iter = 0; iter < schedule.iterations; ++iter) {
        // denoise A
        {
            auto batch = sample_batch(corpus_a.blocks, schedule.batch_size, batch_rng,
                                      schedule.max_block_len, &model.truncated_blocks);
            std::vector<SeqPair> pairs;
            pairs.reserve(batch.size());
            for (const auto& b : batch) pairs.emplace_back(add_noise(b, noise_rng), b);
            run_objective(pairs, Side::A, Side::A, model.losses.denoise_a);
        }
        // denoise B
        {
            auto batch = sample_batch(corpus_b.blocks, schedule.batch_size, batch_rng,
                                      schedule.max_block_len, &model.truncated_blocks);
            std::vector<SeqPair> pairs;
            pairs.reserve(batch.size());
            for (const auto& b : batch) pairs.emplace_back(add_noise(b, noise_rng), b);
            run_objective(pairs, Side::B, Side::B, model.losses.denoise_b);
        }
        // backtranslate A -> B: pseudo-source in A from real B blocks
        {
            auto batch = sample_batch(corpus_b.blocks, schedule.batch_size, batch_rng,
                                      schedule.max_block_len, &model.truncated_blocks);
            BtPairs bt = backtranslation_pairs(model, batch, Side::B);
            model.skipped_bt_pairs += bt.skipped;
            run_objective(bt.pairs, Side::A, Side::B, model.losses.backtranslate_ab);
        }
        // backtranslate B -> A: pseudo-source in B from real A blocks
        {
            auto batch = sample_batch(corpus_a.blocks, schedule.batch_size, batch_rng,
                                      schedule.max_block_len, &model.truncated_blocks);
            BtPairs bt = backtranslation_pairs(model, batch, Side::A);
            model.skipped_bt_pairs += bt.skipped;
            run_objective(bt.pairs, Side::B, Side::A, model.losses.backtranslate_ba);
        }
    }
    model.trained = true;
    return model;
}

// ---------------------------------------------------------------------------
// decoding
// ---------------------------------------------------------------------------
namespace {

struct DecodeStepOut {
    VectorXd log_probs;
    VectorXd h;
};

DecodeStepOut decode_step(const TranslationModel& m, const AttnDecoder& dec, Side tgt_side,
                          const EncCache& enc, const MatrixXd& attn_keys, std::int32_t prev,
                          const VectorXd& h_prev) {
    const VectorXd x = m.emb(tgt_side).row(prev).transpose();
    DecodeStepOut out;
    out.h = gru_step(dec.cell, x, h_prev, nullptr);
    const VectorXd scores = attn_keys.transpose() * out.h;
    VectorXd alpha = (scores.array() - scores.maxCoeff()).exp();
    alpha /= alpha.sum();
    const VectorXd ctx = enc.outputs * alpha;
    VectorXd cat(out.h.size() + ctx.size());
    cat << out.h, ctx;
    const VectorXd c = dec.Wc * cat + dec.bc;  // linear pre-softmax layer
    VectorXd logits = m.emb(tgt_side) * c + dec.bo;  // tied output projection
    logits[corpus::kPad] = -1e30;
    logits[corpus::kBos] = -1e30;
    const double mx = logits.maxCoeff();
    const double lse = mx + std::log((logits.array() - mx).exp().sum());
    out.log_probs = logits.array() - lse;
    return out;
}

}  // namespace

IdBlock translate_ids(const TranslationModel& model, const IdBlock& src, Side from,
                      int beam_width) {
    if (src.empty()) throw DataFormatError("translate: empty block");
    if (beam_width < 1) throw ConfigError("translate: beam width must be >= 1");
    IdBlock ids = truncate_block(src, model.schedule.max_block_len, nullptr);
    const Side to = other(from);
    const AttnDecoder& dec = model.decoder(to);
    const EncCache enc = encode_sequence(model, ids, from);
    const MatrixXd attn_keys = dec.Wa * enc.outputs;
    const int max_len = 2 * static_cast<int>(ids.size()) + 5;

    struct Hyp {
        IdBlock tokens;
        double logp = 0.0;
        VectorXd h;
        std::int32_t prev = corpus::kBos;
    };
    std::vector<Hyp> live(1);
    live[0].h = (dec.Wi * enc.final_state + dec.bi).array().tanh();
    std::vector<Hyp> done;

    for (int step = 0; step < max_len && !live.empty(); ++step) {
        std::vector<Hyp> expanded;
        for (const Hyp& hyp : live) {
            const DecodeStepOut out = decode_step(model, dec, to, enc, attn_keys, hyp.prev, hyp.h);
            // top beam_width candidate tokens of this hypothesis
            std::vector<std::int32_t> order(static_cast<std::size_t>(out.log_probs.size()));
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::int32_t>(i);
            const int take = std::min<int>(beam_width, static_cast<int>(order.size()));
            std::partial_sort(order.begin(), order.begin() + take, order.end(),
                              [&](std::int32_t a, std::int32_t b) {
                                  if (out.log_probs[a] != out.log_probs[b])
                                      return out.log_probs[a] > out.log_probs[b];
                                  return a < b;
                              });
            for (int k = 0; k < take; ++k) {
                const std::int32_t tok = order[static_cast<std::size_t>(k)];
                Hyp next;
                next.tokens = hyp.tokens;
                next.logp = hyp.logp + out.log_probs[tok];
                next.h = out.h;
                next.prev = tok;
                if (tok == corpus::kEos) {
                    done.push_back(std::move(next));
                } else {
                    next.tokens.push_back(tok);
                    expanded.push_back(std::move(next));
                }
            }
        }
        std::stable_sort(expanded.begin(), expanded.end(),
                         [](const Hyp& a, const Hyp& b) { return a.logp > b.logp; });
        if (static_cast<int>(expanded.size()) > beam_width)
            expanded.resize(static_cast<std::size_t>(beam_width));
        live = std::move(expanded);
        // scores only decrease as tokens append, so once the best finished
        // hypothesis beats every live one the search is over
        if (!done.empty() && !live.empty()) {
            double best_done = done[0].logp;
            for (const Hyp& h : done) best_done = std::max(best_done, h.logp);
            if (best_done >= live[0].logp) break;
        }
    }
    if (done.empty())
        for (Hyp& h : live) done.push_back(std::move(h));  // length-capped fallback
    if (done.empty()) return {};
    const Hyp* best = &done[0];
    for (const Hyp& h : done)
        if (h.logp > best->logp) best = &h;
    return best->tokens;
}

std::vector<std::string> translate_block(const TranslationModel& model,
                                         const std::vector<std::string>& words, Side from,
                                         int beam_width, const embed::EmbeddingMatrix* src_caie) {
    if (!model.trained) throw NumericalError("translate: model has not been trained");
    const corpus::Vocab& vocab = model.vocab(from);
    const Eigen::MatrixXd& emb = model.emb(from);
    IdBlock ids;
    ids.reserve(words.size());
    for (const std::string& w : words) {
        if (vocab.contains(w)) {
            ids.push_back(vocab.id_of(w));
            continue;
        }
        std::int32_t sub = corpus::kUnk;
        if (src_caie && src_caie->mode == embed::Mode::Subword && src_caie->subword) {
            // nearest in-vocab instruction under subword-composed CAIE cosine
            const VectorXd q = src_caie->lookup(w);
            const double qn = q.norm();
            if (qn > 0) {
                double best = -2.0;
                for (std::int32_t i = corpus::kNumSpecials; i < vocab.size(); ++i) {
                    const VectorXd r = emb.row(i).transpose();
                    const double rn = r.norm();
                    if (rn == 0) continue;
                    const double cosine = q.dot(r) / (qn * rn);
                    if (cosine > best) {
                        best = cosine;
                        sub = i;
                    }
                }
            }
        }
        ids.push_back(sub);
    }
    const IdBlock out = translate_ids(model, ids, from, beam_width);
    return corpus::decode_block(out, model.vocab(other(from)));
}

asmtext::FunctionRecord translate_function(const TranslationModel& model,
                                           const asmtext::FunctionRecord& fn, Side from,
                                           int beam_width,
                                           const embed::EmbeddingMatrix* src_caie) {
    asmtext::FunctionRecord out;
    out.name = fn.name;
    out.arch = fn.arch == asmtext::Arch::X86 ? asmtext::Arch::Arm : asmtext::Arch::X86;
    for (const asmtext::BasicBlock& block : fn.blocks) {
        std::vector<std::string> words = asmtext::block_words(block);
        std::vector<std::string> translated =
            translate_block(model, words, from, beam_width, src_caie);
        if (translated.empty()) translated.push_back(corpus::kSpecialWords[corpus::kUnk]);
        asmtext::BasicBlock tb;
        for (const std::string& w : translated)
            tb.instructions.push_back(asmtext::NormalizedInstruction{w, {}, {}});
        out.blocks.push_back(std::move(tb));
    }
    return out;
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------
namespace {

using nlohmann::json;

void write_f32_tensor(std::ostream& os, const double* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const float f = static_cast<float>(data[i]);
        os.write(reinterpret_cast<const char*>(&f), sizeof f);
    }
}

void read_f32_tensor(std::istream& is, double* data, std::size_t n, const std::string& name) {
    for (std::size_t i = 0; i < n; ++i) {
        float f = 0;
        if (!is.read(reinterpret_cast<char*>(&f), sizeof f))
            throw DataFormatError("model file: truncated tensor " + name);
        data[i] = static_cast<double>(f);
    }
}

json vocab_to_json(const corpus::Vocab& v) {
    json words = json::array();
    json counts = json::array();
    for (std::int32_t i = 0; i < v.size(); ++i) {
        words.push_back(v.word(i));
        counts.push_back(v.count(i));
    }
    return json{{"words", words}, {"counts", counts}};
}

corpus::Vocab vocab_from_json(const json& j) {
    corpus::Vocab v;
    const auto& words = j.at("words");
    const auto& counts = j.at("counts");
    for (std::size_t i = corpus::kNumSpecials; i < words.size(); ++i)
        v.add(words[i].get<std::string>(), counts[i].get<std::int64_t>());
    return v;
}

}  // namespace

void write_model(const std::string& path, const TranslationModel& model, const Provenance& prov) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataFormatError("cannot write file: " + path);

    json manifest;
    manifest["format"] = "UBT1";
    manifest["tool_version"] = kToolVersion;
    manifest["arch_a"] = model.arch_a;
    manifest["arch_b"] = model.arch_b;
    manifest["d_emb"] = model.d_emb;
    manifest["h_enc"] = model.h_enc;
    manifest["h_dec"] = model.h_dec;
    manifest["trained"] = model.trained;
    manifest["truncated_blocks"] = model.truncated_blocks;
    manifest["skipped_bt_pairs"] = model.skipped_bt_pairs;
    manifest["seed"] = model.schedule.seed;
    manifest["provenance"] = {{"seed", prov.seed}, {"config", hash_hex(prov.config_hash)}};
    manifest["schedule"] = {{"iterations", model.schedule.iterations},
                            {"batch_size", model.schedule.batch_size},
                            {"learning_rate", model.schedule.learning_rate},
                            {"clip_norm", model.schedule.clip_norm},
                            {"adam_beta1", model.schedule.adam_beta1},
                            {"adam_beta2", model.schedule.adam_beta2},
                            {"adam_eps", model.schedule.adam_eps},
                            {"max_block_len", model.schedule.max_block_len},
                            {"hidden_enc", model.schedule.hidden_enc},
                            {"hidden_dec", model.schedule.hidden_dec},
                            {"seed", model.schedule.seed}};
    manifest["vocab_a"] = vocab_to_json(model.vocab_a);
    manifest["vocab_b"] = vocab_to_json(model.vocab_b);
    manifest["losses"] = {{"denoise_a", model.losses.denoise_a},
                          {"denoise_b", model.losses.denoise_b},
                          {"backtranslate_ab", model.losses.backtranslate_ab},
                          {"backtranslate_ba", model.losses.backtranslate_ba}};

    json tensors = json::array();
    tensors.push_back({{"name", "emb_a"}, {"rows", model.emb_a.rows()}, {"cols", model.emb_a.cols()}, {"dtype", "f32"}});
    tensors.push_back({{"name", "emb_b"}, {"rows", model.emb_b.rows()}, {"cols", model.emb_b.cols()}, {"dtype", "f32"}});
    auto refs = const_cast<TranslationModel&>(model).params.tensors();
    for (const auto& r : refs)
        tensors.push_back({{"name", r.name}, {"rows", r.rows}, {"cols", r.cols}, {"dtype", "f32"}});
    manifest["tensors"] = tensors;

    os << "UBT1\n" << manifest.dump() << "\n";
    write_f32_tensor(os, model.emb_a.data(), static_cast<std::size_t>(model.emb_a.size()));
    write_f32_tensor(os, model.emb_b.data(), static_cast<std::size_t>(model.emb_b.size()));
    for (const auto& r : refs) write_f32_tensor(os, r.data, r.size());
    if (!os) throw DataFormatError("write failed: " + path);
}

TranslationModel read_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataFormatError("cannot open file: " + path);
    std::string magic;
    if (!std::getline(is, magic) || magic != "UBT1")
        throw DataFormatError("model file: bad magic: " + path);
    std::string manifest_line;
    if (!std::getline(is, manifest_line)) throw DataFormatError("model file: missing manifest");
    json manifest;
    try {
        manifest = json::parse(manifest_line);
    } catch (const json::exception& e) {
        throw DataFormatError(std::string("model file: bad manifest: ") + e.what());
    }

    TranslationModel model;
    model.arch_a = manifest.at("arch_a").get<std::string>();
    model.arch_b = manifest.at("arch_b").get<std::string>();
    model.d_emb = manifest.at("d_emb").get<int>();
    model.h_enc = manifest.at("h_enc").get<int>();
    model.h_dec = manifest.at("h_dec").get<int>();
    model.trained = manifest.at("trained").get<bool>();
    model.truncated_blocks = manifest.at("truncated_blocks").get<std::int64_t>();
    model.skipped_bt_pairs = manifest.at("skipped_bt_pairs").get<std::int64_t>();
    const json& s = manifest.at("schedule");
    model.schedule.iterations = s.at("iterations").get<int>();
    model.schedule.batch_size = s.at("batch_size").get<int>();
    model.schedule.learning_rate = s.at("learning_rate").get<double>();
    model.schedule.clip_norm = s.at("clip_norm").get<double>();
    model.schedule.adam_beta1 = s.at("adam_beta1").get<double>();
    model.schedule.adam_beta2 = s.at("adam_beta2").get<double>();
    model.schedule.adam_eps = s.at("adam_eps").get<double>();
    model.schedule.max_block_len = s.at("max_block_len").get<int>();
    model.schedule.hidden_enc = s.at("hidden_enc").get<int>();
    model.schedule.hidden_dec = s.at("hidden_dec").get<int>();
    model.schedule.seed = s.at("seed").get<std::uint64_t>();
    model.vocab_a = vocab_from_json(manifest.at("vocab_a"));
    model.vocab_b = vocab_from_json(manifest.at("vocab_b"));
    const json& losses = manifest.at("losses");
    model.losses.denoise_a = losses.at("denoise_a").get<std::vector<double>>();
    model.losses.denoise_b = losses.at("denoise_b").get<std::vector<double>>();
    model.losses.backtranslate_ab = losses.at("backtranslate_ab").get<std::vector<double>>();
    model.losses.backtranslate_ba = losses.at("backtranslate_ba").get<std::vector<double>>();

    model.params.init_zero(model.d_emb, model.h_enc, model.h_dec, model.vocab_a.size(),
                           model.vocab_b.size());
    auto refs = model.params.tensors();
    std::size_t ref_idx = 0;
    for (const json& t : manifest.at("tensors")) {
        const std::string name = t.at("name").get<std::string>();
        const Index rows = t.at("rows").get<Index>();
        const Index cols = t.at("cols").get<Index>();
        if (name == "emb_a" || name == "emb_b") {
            MatrixXd& m = name == "emb_a" ? model.emb_a : model.emb_b;
            m.resize(rows, cols);
            read_f32_tensor(is, m.data(), static_cast<std::size_t>(rows * cols), name);
            continue;
        }
        if (ref_idx >= refs.size() || refs[ref_idx].name != name ||
            refs[ref_idx].rows != rows || refs[ref_idx].cols != cols)
            throw DataFormatError("model file: unexpected tensor " + name);
        read_f32_tensor(is, refs[ref_idx].data, refs[ref_idx].size(), name);
        ++ref_idx;
    }
    if (ref_idx != refs.size()) throw DataFormatError("model file: missing tensors");
    return model;
}

}  // namespace ubt::xlate

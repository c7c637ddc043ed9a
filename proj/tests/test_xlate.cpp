#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ubt/toyoracle.hpp"
#include "ubt/xlate.hpp"

using namespace ubt;
using namespace ubt::xlate;

namespace {

corpus::Vocab words_vocab(int n, const std::string& prefix) {
    std::vector<std::vector<std::string>> blocks(1);
    for (int i = 0; i < n; ++i) blocks[0].push_back(prefix + std::to_string(i));
    return corpus::build_vocab(blocks, 1);
}

Eigen::MatrixXd random_emb(int v, int d, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd m(v, d);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.gaussian() * 0.5;
    return m;
}

TranslationModel tiny_model(int va, int vb, int d, std::uint64_t seed, int h_enc = 5,
                            int h_dec = 7) {
    TrainSchedule s;
    s.hidden_enc = h_enc;
    s.hidden_dec = h_dec;
    s.seed = seed;
    const corpus::Vocab vocab_a = words_vocab(va - corpus::kNumSpecials, "a");
    const corpus::Vocab vocab_b = words_vocab(vb - corpus::kNumSpecials, "b");
    return make_model(random_emb(va, d, seed + 1), vocab_a, random_emb(vb, d, seed + 2), vocab_b,
                      s);
}

Eigen::VectorXd pack_params(TranslationModel& m) {
    std::size_t total = 0;
    for (const auto& t : m.params.tensors()) total += t.size();
    Eigen::VectorXd out(static_cast<Eigen::Index>(total));
    std::size_t at = 0;
    for (const auto& t : m.params.tensors()) {
        std::copy(t.data, t.data + t.size(), out.data() + at);
        at += t.size();
    }
    return out;
}

void unpack_params(TranslationModel& m, const Eigen::VectorXd& v) {
    std::size_t at = 0;
    for (auto& t : m.params.tensors()) {
        std::copy(v.data() + at, v.data() + at + t.size(), t.data);
        at += t.size();
    }
}

}  // namespace

TEST_CASE("add_noise basics and the replayed procedure") {
    Rng rng(1);
    CHECK(add_noise({42}, rng) == std::vector<std::int32_t>{42});

    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::int32_t> block;
        const int len = 2 + static_cast<int>(rng.uniform_int(10));
        for (int i = 0; i < len; ++i) block.push_back(static_cast<std::int32_t>(rng.uniform_int(9)));
        Rng noise(trial);
        auto noised = add_noise(block, noise);
        auto a = block, b = noised;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        CHECK(a == b);  // multiset preserved
    }

    // replay the documented procedure: floor(N/2) sequential uniform adjacent swaps
    const std::vector<std::int32_t> block = {1, 2, 3, 4};
    const NoiseConfig cfg{99};
    const auto ours = add_noise(block, cfg);
    Rng replay(99);
    std::vector<std::int32_t> expect = block;
    for (std::size_t s = 0; s < block.size() / 2; ++s) {
        const std::size_t i = replay.uniform_int(block.size() - 1);
        std::swap(expect[i], expect[i + 1]);
    }
    CHECK(ours == expect);
}

TEST_CASE("encoder is a pure function with truncation warnings") {
    TranslationModel m = tiny_model(10, 11, 6, 5);
    const std::vector<std::int32_t> block = {4, 5, 6};
    const auto out1 = encode_block(m, block, Side::A);
    const auto out2 = encode_block(m, block, Side::A);
    REQUIRE(out1.size() == 3);
    CHECK(out1[0].size() == 2 * m.h_enc);
    for (std::size_t i = 0; i < out1.size(); ++i) CHECK((out1[i] - out2[i]).norm() == 0.0);

    CHECK_THROWS_AS(encode_block(m, {}, Side::A), DataFormatError);

    TranslationModel small = tiny_model(10, 11, 6, 5);
    small.schedule.max_block_len = 2;
    bool truncated = false;
    const auto out3 = encode_block(small, block, Side::A, &truncated);
    CHECK(truncated);
    CHECK(out3.size() == 2);
}

TEST_CASE("untrained per-token loss is close to ln V") {
    const int vb = 24;
    TranslationModel m = tiny_model(20, vb, 8, 7, 8, 8);
    Rng rng(3);
    std::vector<SeqPair> pairs;
    for (int i = 0; i < 8; ++i) {
        IdBlock src, tgt;
        for (int t = 0; t < 6; ++t) {
            src.push_back(4 + static_cast<std::int32_t>(rng.uniform_int(16)));
            tgt.push_back(4 + static_cast<std::int32_t>(rng.uniform_int(vb - 4)));
        }
        pairs.emplace_back(src, tgt);
    }
    const double loss = seq2seq_loss(m, pairs, Side::A, Side::B, nullptr);
    CHECK(loss == doctest::Approx(std::log(vb)).epsilon(0.20));
}

TEST_CASE("analytic gradients match finite differences") {
    TranslationModel m = tiny_model(10, 11, 6, 11);
    Rng rng(13);

    const std::vector<SeqPair> denoise_pairs = {
        {{5, 4, 6}, {4, 5, 6}},
        {{7, 8}, {7, 8}},
    };
    const std::vector<SeqPair> bt_pairs = {
        {{4, 5}, {6, 7, 8}},
        {{9, 6, 4}, {5, 9}},
    };

    struct Case {
        std::vector<SeqPair> pairs;
        Side src, tgt;
    };
    std::vector<Case> cases = {{denoise_pairs, Side::A, Side::A},
                               {bt_pairs, Side::B, Side::A},
                               {bt_pairs, Side::A, Side::B}};

    int checked = 0;
    for (const Case& c : cases) {
        TrainableParams grads;
        grads.init_zero(m.d_emb, m.h_enc, m.h_dec, m.vocab_a.size(), m.vocab_b.size());
        seq2seq_loss(m, c.pairs, c.src, c.tgt, &grads);

        Eigen::VectorXd analytic;
        {
            TranslationModel tmp = m;
            tmp.params = grads;
            analytic = pack_params(tmp);
        }
        const Eigen::VectorXd packed = pack_params(m);
        std::vector<int> coords;
        for (int k = 0; k < 40; ++k)
            coords.push_back(static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(packed.size()))));
        const auto loss_fn = [&](const Eigen::VectorXd& p) {
            TranslationModel probe = m;
            unpack_params(probe, p);
            return seq2seq_loss(probe, c.pairs, c.src, c.tgt, nullptr);
        };
        const auto fd = toyoracle::finite_difference_grad(loss_fn, packed, coords, 1e-5);
        for (std::size_t k = 0; k < coords.size(); ++k) {
            const double a = analytic[coords[k]];
            const double f = fd[k];
            const double denom = std::max({std::abs(a), std::abs(f), 1e-6});
            CHECK(std::abs(a - f) / denom <= 1e-5);
            ++checked;
        }
    }
    CHECK(checked >= 100);
}

TEST_CASE("backtranslation never backpropagates into the generating decoder") {
    TranslationModel m = tiny_model(10, 11, 6, 17);
    // pairs for the B->A direction: pseudo-source in B, target in A.
    // decoder B generated the pseudo-sources and must receive zero gradient.
    const std::vector<SeqPair> pairs = {{{4, 5, 6}, {7, 8}}, {{9}, {4}}};
    TrainableParams grads;
    grads.init_zero(m.d_emb, m.h_enc, m.h_dec, m.vocab_a.size(), m.vocab_b.size());
    seq2seq_loss(m, pairs, Side::B, Side::A, &grads);

    double decoder_b_norm = 0.0, decoder_a_norm = 0.0, encoder_norm = 0.0;
    for (const auto& t : grads.tensors()) {
        double n = 0;
        for (std::size_t i = 0; i < t.size(); ++i) n += t.data[i] * t.data[i];
        if (t.name.rfind("dec_b", 0) == 0) decoder_b_norm += n;
        if (t.name.rfind("dec_a", 0) == 0) decoder_a_norm += n;
        if (t.name.rfind("enc_", 0) == 0) encoder_norm += n;
    }
    CHECK(decoder_b_norm == 0.0);
    CHECK(decoder_a_norm > 0.0);
    CHECK(encoder_norm > 0.0);
}

TEST_CASE("backtranslation pair plumbing") {
    const std::vector<IdBlock> batch = {{4, 5}, {6}, {7, 8, 9}};
    const std::vector<IdBlock> translations = {{10, 11}, {}, {12}};
    const BtPairs bt = make_backtranslation_pairs(batch, translations);
    CHECK(bt.skipped == 1);
    REQUIRE(bt.pairs.size() == 2);
    CHECK(bt.pairs[0].first == translations[0]);
    CHECK(bt.pairs[0].second == batch[0]);
    CHECK(bt.pairs[1].second == batch[2]);
}

TEST_CASE("identity toy: backtranslation reproduces the single-token mapping") {
    // one-word vocabularies on both sides, identical frozen embeddings
    corpus::MonoCorpus ca, cb;
    for (int i = 0; i < 12; ++i) {
        ca.blocks.push_back({4});
        cb.blocks.push_back({4});
    }
    const corpus::Vocab va = words_vocab(1, "only_a");
    const corpus::Vocab vb = words_vocab(1, "only_b");
    const Eigen::MatrixXd emb = random_emb(5, 6, 61);

    TrainSchedule sched;
    sched.iterations = 60;
    sched.batch_size = 4;
    sched.hidden_enc = 4;
    sched.hidden_dec = 5;
    sched.learning_rate = 3e-3;
    sched.seed = 62;
    const TranslationModel m = train_translator(ca, cb, emb, va, emb, vb, sched);

    const std::vector<IdBlock> batch = {{4}, {4, 4}};
    const BtPairs bt = backtranslation_pairs(m, batch, Side::A);
    CHECK(bt.skipped == 0);
    REQUIRE(bt.pairs.size() == 2);
    for (std::size_t i = 0; i < bt.pairs.size(); ++i) {
        for (const std::int32_t id : bt.pairs[i].first) CHECK(id == 4);  // the mapped token
        CHECK(bt.pairs[i].second == batch[i]);                           // reconstructs a
    }
}

TEST_CASE("memorizing a single block drives the loss down") {
    TranslationModel m = tiny_model(12, 12, 8, 23, 8, 10);
    const std::vector<SeqPair> pairs = {{{4, 5, 6}, {4, 5, 6}}};

    TrainableParams grads, adam_m, adam_v;
    grads.init_zero(m.d_emb, m.h_enc, m.h_dec, m.vocab_a.size(), m.vocab_b.size());
    adam_m.init_zero(m.d_emb, m.h_enc, m.h_dec, m.vocab_a.size(), m.vocab_b.size());
    adam_v.init_zero(m.d_emb, m.h_enc, m.h_dec, m.vocab_a.size(), m.vocab_b.size());

    // plain adam on the one-pair objective, training the A -> B direction
    const double lr = 3e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    double loss = 0;
    for (int step = 1; step <= 500; ++step) {
        grads.set_zero();
        loss = seq2seq_loss(m, pairs, Side::A, Side::B, &grads);
        auto pt = m.params.tensors();
        auto gt = grads.tensors();
        auto mt = adam_m.tensors();
        auto vt = adam_v.tensors();
        const double bc1 = 1 - std::pow(b1, step), bc2 = 1 - std::pow(b2, step);
        for (std::size_t k = 0; k < pt.size(); ++k)
            for (std::size_t i = 0; i < pt[k].size(); ++i) {
                mt[k].data[i] = b1 * mt[k].data[i] + (1 - b1) * gt[k].data[i];
                vt[k].data[i] = b2 * vt[k].data[i] + (1 - b2) * gt[k].data[i] * gt[k].data[i];
                pt[k].data[i] -=
                    lr * (mt[k].data[i] / bc1) / (std::sqrt(vt[k].data[i] / bc2) + eps);
            }
    }
    CHECK(loss <= 0.05);

    // the memorized model is sharply peaked: greedy and beam-3 agree
    m.trained = true;
    const IdBlock greedy = translate_ids(m, {4, 5, 6}, Side::A, 1);
    const IdBlock beam3 = translate_ids(m, {4, 5, 6}, Side::A, 3);
    CHECK(greedy == beam3);
    CHECK(greedy == IdBlock{4, 5, 6});
}

TEST_CASE("training freezes embeddings and is reproducible") {
    corpus::MonoCorpus ca, cb;
    Rng rng(29);
    for (int i = 0; i < 30; ++i) {
        IdBlock a, b;
        const int len = 2 + static_cast<int>(rng.uniform_int(4));
        for (int t = 0; t < len; ++t) {
            a.push_back(4 + static_cast<std::int32_t>(rng.uniform_int(6)));
            b.push_back(4 + static_cast<std::int32_t>(rng.uniform_int(7)));
        }
        ca.blocks.push_back(a);
        cb.blocks.push_back(b);
    }
    const corpus::Vocab va = words_vocab(6, "a");
    const corpus::Vocab vb = words_vocab(7, "b");
    const Eigen::MatrixXd ea = random_emb(10, 6, 31);
    const Eigen::MatrixXd eb = random_emb(11, 6, 32);

    TrainSchedule sched;
    sched.iterations = 100;
    sched.batch_size = 4;
    sched.hidden_enc = 5;
    sched.hidden_dec = 6;
    sched.seed = 33;

    TranslationModel m1 = train_translator(ca, cb, ea, va, eb, vb, sched);
    const std::uint64_t frozen =
        fnv1a64(ea.data(), sizeof(double) * static_cast<std::size_t>(ea.size()),
                fnv1a64(eb.data(), sizeof(double) * static_cast<std::size_t>(eb.size())));
    const std::uint64_t after =
        fnv1a64(m1.emb_a.data(), sizeof(double) * static_cast<std::size_t>(m1.emb_a.size()),
                fnv1a64(m1.emb_b.data(), sizeof(double) * static_cast<std::size_t>(m1.emb_b.size())));
    CHECK(frozen == after);
    CHECK(m1.losses.denoise_a.size() == 100);

    // byte-identical serialized models for identical seeds
    TranslationModel m2 = train_translator(ca, cb, ea, va, eb, vb, sched);
    const std::string p1 = "/tmp/ubt_model_1.ubt", p2 = "/tmp/ubt_model_2.ubt";
    write_model(p1, m1, Provenance{33, 1});
    write_model(p2, m2, Provenance{33, 1});
    CHECK(read_text_file(p1) == read_text_file(p2));

    // round trip
    const TranslationModel back = read_model(p1);
    CHECK(back.vocab_a.size() == m1.vocab_a.size());
    CHECK(back.trained);
    CHECK(back.losses.denoise_b.size() == 100);
    CHECK(back.emb_a.rows() == m1.emb_a.rows());
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("loss curves trend downward on twin corpora") {
    toyoracle::TwinSpec spec;
    spec.vocab_size = 20;
    spec.corpus_blocks = 150;
    spec.block_len_min = 2;
    spec.block_len_max = 6;
    spec.swap_prob = 0.1;
    spec.seed = 41;
    const toyoracle::TwinCorpus twin = toyoracle::generate_twin_corpus(spec);

    const corpus::Vocab va = corpus::build_vocab(twin.blocks_a, 1);
    const corpus::Vocab vb = corpus::build_vocab(twin.blocks_b, 1);
    const corpus::MonoCorpus ca =
        corpus::encode_corpus(twin.blocks_a, va, asmtext::Arch::X86, corpus::OptLevel::O0);
    const corpus::MonoCorpus cb =
        corpus::encode_corpus(twin.blocks_b, vb, asmtext::Arch::Arm, corpus::OptLevel::O0);

    // lexicon-aligned frozen embeddings, the shape real CAIE would have
    const int d = 8;
    const Eigen::MatrixXd ea = random_emb(va.size(), d, 44);
    Eigen::MatrixXd eb = random_emb(vb.size(), d, 45);
    for (std::int32_t i = corpus::kNumSpecials; i < vb.size(); ++i) {
        const std::string wa =
            twin.lexicon.translate(vb.word(i), toyoracle::Direction::BtoA);
        if (va.contains(wa)) eb.row(i) = ea.row(va.id_of(wa));
    }

    TrainSchedule sched;
    sched.iterations = 200;
    sched.batch_size = 8;
    sched.hidden_enc = 8;
    sched.hidden_dec = 10;
    sched.learning_rate = 1e-3;
    sched.seed = 43;
    const TranslationModel m = train_translator(ca, cb, ea, va, eb, vb, sched);

    const auto quarter_means = [](const std::vector<double>& curve) {
        const std::size_t q = curve.size() / 4;
        double first = 0, last = 0;
        for (std::size_t i = 0; i < q; ++i) first += curve[i];
        for (std::size_t i = curve.size() - q; i < curve.size(); ++i) last += curve[i];
        return std::pair<double, double>{first / q, last / q};
    };
    for (const auto* curve : {&m.losses.denoise_a, &m.losses.denoise_b,
                              &m.losses.backtranslate_ab, &m.losses.backtranslate_ba}) {
        const auto [first, last] = quarter_means(*curve);
        CHECK(last < first);
    }

    // shared encoder: a block and its word-for-word rendering on the other
    // side produce nearby mean context vectors
    double cos_sum = 0;
    int counted = 0;
    for (int i = 0; i < 20; ++i) {
        const auto& wa_block = twin.blocks_a[static_cast<std::size_t>(i)];
        std::vector<std::string> wb_block;
        for (const auto& w : wa_block)
            wb_block.push_back(twin.lexicon.translate(w, toyoracle::Direction::AtoB));
        const auto ca_ctx = encode_block(m, corpus::encode_block(wa_block, va), Side::A);
        const auto cb_ctx = encode_block(m, corpus::encode_block(wb_block, vb), Side::B);
        Eigen::VectorXd mean_a = Eigen::VectorXd::Zero(ca_ctx[0].size());
        Eigen::VectorXd mean_b = Eigen::VectorXd::Zero(cb_ctx[0].size());
        for (const auto& v : ca_ctx) mean_a += v;
        for (const auto& v : cb_ctx) mean_b += v;
        mean_a /= static_cast<double>(ca_ctx.size());
        mean_b /= static_cast<double>(cb_ctx.size());
        cos_sum += mean_a.dot(mean_b) / (mean_a.norm() * mean_b.norm());
        ++counted;
    }
    CHECK(cos_sum / counted >= 0.9);
}

TEST_CASE("translate_block and translate_function plumbing") {
    TranslationModel m = tiny_model(12, 12, 8, 47);
    CHECK_THROWS_AS(
        translate_block(m, {m.vocab_b.word(4)}, Side::B, 1, nullptr), NumericalError);
    m.trained = true;

    const auto out = translate_block(m, {m.vocab_b.word(4), m.vocab_b.word(5)}, Side::B);
    for (const auto& w : out) CHECK(m.vocab_a.contains(w));

    // unknown source words fall back to <UNK> without a subword table
    const auto oov = translate_block(m, {"never_seen"}, Side::B);
    (void)oov;  // must not throw

    asmtext::FunctionRecord fn;
    fn.name = "three_blocks";
    fn.arch = asmtext::Arch::Arm;
    for (int b = 0; b < 3; ++b) {
        asmtext::BasicBlock block;
        block.instructions.push_back(
            asmtext::NormalizedInstruction{m.vocab_b.word(4 + b), {}, {}});
        fn.blocks.push_back(block);
    }
    const asmtext::FunctionRecord tfn = translate_function(m, fn, Side::B);
    CHECK(tfn.name == "three_blocks");
    CHECK(tfn.blocks.size() == 3);

    asmtext::FunctionRecord one;
    one.name = "one";
    one.arch = asmtext::Arch::Arm;
    one.blocks.push_back(fn.blocks[0]);
    const auto tone = translate_function(m, one, Side::B);
    const auto direct = translate_block(m, asmtext::block_words(one.blocks[0]), Side::B);
    CHECK(asmtext::block_words(tone.blocks[0]) == direct);
}

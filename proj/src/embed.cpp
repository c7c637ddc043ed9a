#include "ubt/embed.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ubt::embed {

Mode mode_from_string(const std::string& s) {
    const std::string m = to_upper(trim(s));
    if (m == "SUBWORD" || m == "FASTTEXT") return Mode::Subword;
    if (m == "WORD" || m == "WORD2VEC") return Mode::Word;
    throw ConfigError("unknown embedding mode: " + s);
}

std::string mode_name(Mode m) { return m == Mode::Subword ? "subword" : "word"; }

namespace {

std::uint32_t fnv1a32(const std::string& s) {
    std::uint32_t h = 2166136261u;
    for (unsigned char c : s) {
        h ^= c;
        h *= 16777619u;
    }
    return h;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double safe_log(double x) { return std::log(std::max(x, 1e-12)); }

}  // namespace

std::vector<std::int64_t> SubwordTable::ngram_ids(const std::string& word, int n_min, int n_max,
                                                  std::int64_t bucket_count) {
    if (n_min < 1 || n_max < n_min) throw ConfigError("bad n-gram range");
    if (bucket_count < 1) throw ConfigError("bucket_count must be >= 1");
    const std::string marked = "<" + word + ">";
    const int len = static_cast<int>(marked.size());
    std::vector<std::int64_t> ids;
    for (int n = n_min; n <= n_max; ++n) {
        for (int i = 0; i + n <= len; ++i) {
            ids.push_back(static_cast<std::int64_t>(
                fnv1a32(marked.substr(static_cast<std::size_t>(i), static_cast<std::size_t>(n))) %
                static_cast<std::uint32_t>(bucket_count)));
        }
    }
    if (ids.empty())
        ids.push_back(static_cast<std::int64_t>(fnv1a32(marked) %
                                                static_cast<std::uint32_t>(bucket_count)));
    return ids;
}

Eigen::VectorXd CaieTransform::apply(const Eigen::VectorXd& v) const {
    Eigen::VectorXd x = v;
    double n = x.norm();
    if (n == 0.0) throw NumericalError("cannot transform a zero vector");
    x /= n;
    if (mean.size() > 0) {
        x -= mean.transpose();
        n = x.norm();
        if (n == 0.0) throw NumericalError("vector vanished after centering");
        x /= n;
    }
    if (W.size() > 0) x = W.transpose() * x;
    return x;
}

Eigen::VectorXd EmbeddingMatrix::lookup(const std::string& word) const {
    if (vocab.contains(word)) return rows.row(vocab.id_of(word)).transpose();
    if (mode == Mode::Subword && subword && subword->grams.size() > 0) {
        const auto ids = subword->ngram_ids(word);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
        for (std::int64_t id : ids) g += subword->grams.row(id).transpose();
        g /= static_cast<double>(ids.size());
        if (caie) g = caie->apply(g);
        return g;
    }
    return rows.row(corpus::kUnk).transpose();
}

double sgns_step(SgnsModel& model, const SgnsExample& ex, double lr, SgnsGrads* grads) {
    const Eigen::Index d = model.in.cols();
    Eigen::VectorXd h = model.in.row(ex.center).transpose();
    const double gram_n = static_cast<double>(ex.center_grams.size());
    if (model.subword && gram_n > 0) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
        for (std::int64_t id : ex.center_grams) g += model.grams.row(id).transpose();
        h += g / gram_n;
    }

    double loss = 0.0;
    Eigen::VectorXd dh = Eigen::VectorXd::Zero(d);
    auto accumulate = [&](std::int32_t target, double label) {
        const double s = model.out.row(target).dot(h);
        const double p = sigmoid(s);
        loss += label > 0.5 ? -safe_log(p) : -safe_log(1.0 - p);
        const double g = p - label;  // dL/ds
        dh += g * model.out.row(target).transpose();
        if (grads) grads->out.row(target) += g * h.transpose();
        if (lr > 0) model.out.row(target) -= lr * g * h.transpose();
    };
    accumulate(ex.context, 1.0);
    for (std::int32_t neg : ex.negatives) accumulate(neg, 0.0);

    if (grads) {
        grads->in.row(ex.center) += dh.transpose();
        if (model.subword)
            for (std::int64_t id : ex.center_grams) grads->grams.row(id) += dh.transpose() / gram_n;
    }
    if (lr > 0) {
        model.in.row(ex.center) -= lr * dh.transpose();
        if (model.subword)
            for (std::int64_t id : ex.center_grams) model.grams.row(id) -= lr * dh.transpose() / gram_n;
    }
    return loss;
}

EmbeddingMatrix train_maie(const corpus::MonoCorpus& corpus, const corpus::Vocab& vocab,
                           const TrainConfig& cfg) {
    if (cfg.dim <= 0) throw ConfigError("embedding dimension must be positive");
    if (cfg.window < 1 || cfg.negatives < 1 || cfg.epochs < 1 || cfg.learning_rate <= 0)
        throw ConfigError("embedding training parameters must be positive");
    std::int64_t total_tokens = 0;
    for (const auto& b : corpus.blocks) total_tokens += static_cast<std::int64_t>(b.size());
    if (total_tokens == 0) throw DataFormatError("cannot train embeddings on an empty corpus");

    const std::int32_t v = vocab.size();
    const int d = cfg.dim;
    const bool subword = cfg.mode == Mode::Subword;

    Rng rng(cfg.seed);
    SgnsModel model;
    model.subword = subword;
    model.in.resize(v, d);
    const double span = 0.5 / d;
    for (std::int32_t i = 0; i < v; ++i)
        for (int j = 0; j < d; ++j) model.in(i, j) = (rng.uniform() * 2.0 - 1.0) * span;
    if (subword) {
        model.grams.resize(cfg.buckets, d);
        for (std::int64_t i = 0; i < cfg.buckets; ++i)
            for (int j = 0; j < d; ++j) model.grams(i, j) = (rng.uniform() * 2.0 - 1.0) * span;
    } else {
        model.grams.resize(0, 0);
    }
    model.out = Eigen::MatrixXd::Zero(v, d);

    // per-word n-gram ids (subword mode)
    std::vector<std::vector<std::int64_t>> word_grams(static_cast<std::size_t>(v));
    if (subword)
        for (std::int32_t i = 0; i < v; ++i)
            word_grams[static_cast<std::size_t>(i)] =
                SubwordTable::ngram_ids(vocab.word(i), cfg.n_min, cfg.n_max, cfg.buckets);

    // unigram^0.75 negative-sampling distribution over non-special words
    std::vector<std::int32_t> table_ids;
    std::vector<double> cumulative;
    double acc = 0.0;
    for (std::int32_t i = corpus::kNumSpecials; i < v; ++i) {
        if (vocab.count(i) <= 0) continue;
        acc += std::pow(static_cast<double>(vocab.count(i)), 0.75);
        table_ids.push_back(i);
        cumulative.push_back(acc);
    }
    const bool can_sample = !table_ids.empty();
    auto draw_negative = [&]() -> std::int32_t {
        const double r = rng.uniform() * acc;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
        const std::size_t k = it == cumulative.end() ? cumulative.size() - 1
                                                     : static_cast<std::size_t>(it - cumulative.begin());
        return table_ids[k];
    };

    EmbeddingMatrix result;
    const std::int64_t schedule_total = total_tokens * cfg.epochs;
    std::int64_t processed = 0;
    SgnsExample ex;
    ex.negatives.reserve(static_cast<std::size_t>(cfg.negatives));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double loss_sum = 0.0;
        std::int64_t examples = 0;
        for (const auto& block : corpus.blocks) {
            const int len = static_cast<int>(block.size());
            for (int t = 0; t < len; ++t) {
                ++processed;
                const std::int32_t center = block[static_cast<std::size_t>(t)];
                if (corpus::Vocab::is_special(center) || !can_sample) continue;
                const double lr =
                    std::max(cfg.learning_rate *
                                 (1.0 - static_cast<double>(processed) /
                                            static_cast<double>(schedule_total + 1)),
                             cfg.learning_rate * 1e-4);
                const int win = 1 + static_cast<int>(rng.uniform_int(
                                        static_cast<std::uint64_t>(cfg.window)));
                for (int off = -win; off <= win; ++off) {
                    if (off == 0) continue;
                    const int u = t + off;
                    if (u < 0 || u >= len) continue;
                    const std::int32_t context = block[static_cast<std::size_t>(u)];
                    if (corpus::Vocab::is_special(context)) continue;
                    ex.center = center;
                    ex.context = context;
                    if (subword) ex.center_grams = word_grams[static_cast<std::size_t>(center)];
                    ex.negatives.clear();
                    for (int n = 0; n < cfg.negatives; ++n) {
                        const std::int32_t neg = draw_negative();
                        if (neg == context) continue;  // skip collisions with the positive
                        ex.negatives.push_back(neg);
                    }
                    loss_sum += sgns_step(model, ex, lr, nullptr);
                    ++examples;
                }
            }
        }
        result.epoch_loss.push_back(examples > 0 ? loss_sum / static_cast<double>(examples) : 0.0);
    }

    result.d = d;
    result.mode = cfg.mode;
    result.vocab = vocab;
    result.seed = cfg.seed;
    result.rows = model.in;
    if (subword) {
        for (std::int32_t i = 0; i < v; ++i) {
            const auto& ids = word_grams[static_cast<std::size_t>(i)];
            Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
            for (std::int64_t id : ids) g += model.grams.row(id).transpose();
            result.rows.row(i) += g.transpose() / static_cast<double>(ids.size());
        }
        SubwordTable table;
        table.n_min = cfg.n_min;
        table.n_max = cfg.n_max;
        table.bucket_count = cfg.buckets;
        table.grams = std::move(model.grams);
        result.subword = std::move(table);
    }
    if (!result.rows.allFinite()) throw NumericalError("embedding training produced non-finite values");
    return result;
}

std::vector<std::pair<std::string, double>> nearest_neighbors(const std::string& word,
                                                              const EmbeddingMatrix& emb, int k) {
    const Eigen::VectorXd q = emb.lookup(word);
    const double qn = q.norm();
    if (qn == 0.0) throw NumericalError("query embeds to a zero vector: " + word);
    const std::int32_t self = emb.vocab.contains(word) ? emb.vocab.id_of(word) : -1;
    std::vector<std::pair<std::string, double>> scored;
    for (std::int32_t i = corpus::kNumSpecials; i < emb.vocab.size(); ++i) {
        if (i == self) continue;
        const Eigen::VectorXd r = emb.rows.row(i).transpose();
        const double rn = r.norm();
        if (rn == 0.0) continue;
        scored.emplace_back(emb.vocab.word(i), q.dot(r) / (qn * rn));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (static_cast<int>(scored.size()) > k) scored.resize(static_cast<std::size_t>(k));
    return scored;
}

void write_embedding_text(const std::string& path, const EmbeddingMatrix& emb,
                          const Provenance& prov, const std::string& comment) {
    std::ostringstream out;
    out << prov.line();
    if (!comment.empty()) out << "# " << comment << "\n";
    out << emb.vocab.size() << " " << emb.d << "\n";
    for (std::int32_t i = 0; i < emb.vocab.size(); ++i) {
        out << emb.vocab.word(i);
        for (int j = 0; j < emb.d; ++j) out << ' ' << format_double(emb.rows(i, j), 6);
        out << '\n';
    }
    write_text_file(path, out.str());
}

namespace {

void write_f32(std::ostream& os, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const float f = static_cast<float>(m(i, j));
            os.write(reinterpret_cast<const char*>(&f), sizeof f);
        }
}

Eigen::MatrixXd read_f32(std::istream& is, Eigen::Index rows, Eigen::Index cols,
                         const std::string& what) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) {
            float f = 0;
            if (!is.read(reinterpret_cast<char*>(&f), sizeof f))
                throw DataFormatError("truncated payload in " + what);
            m(i, j) = static_cast<double>(f);
        }
    return m;
}

}  // namespace

void write_embedding_binary(const std::string& path, const EmbeddingMatrix& emb,
                            const Provenance& prov) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataFormatError("cannot write file: " + path);
    const bool has_mean = emb.caie && emb.caie->mean.size() > 0;
    const bool has_map = emb.caie && emb.caie->W.size() > 0;
    os << "UBE1 " << emb.rows.rows() << " " << emb.d << " " << mode_name(emb.mode) << " seed="
       << emb.seed << " mean=" << (has_mean ? 1 : 0) << " map=" << (has_map ? 1 : 0)
       << " ubt=" << kToolVersion << " config=" << hash_hex(prov.config_hash) << "\n";
    write_f32(os, emb.rows);
    if (has_mean) write_f32(os, emb.caie->mean);
    if (has_map) write_f32(os, emb.caie->W);
    if (!os) throw DataFormatError("write failed: " + path);
}

EmbeddingMatrix read_embedding_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataFormatError("cannot open file: " + path);
    std::string manifest;
    if (!std::getline(is, manifest)) throw DataFormatError("missing manifest line: " + path);
    std::istringstream ms(manifest);
    std::string magic, mode_s, seed_s, mean_s, map_s;
    long v = 0, d = 0;
    if (!(ms >> magic >> v >> d >> mode_s >> seed_s >> mean_s >> map_s) || magic != "UBE1")
        throw DataFormatError("bad embedding manifest: " + manifest);
    EmbeddingMatrix emb;
    emb.d = static_cast<int>(d);
    emb.mode = mode_from_string(mode_s);
    emb.seed = std::stoull(seed_s.substr(seed_s.find('=') + 1));
    const int has_mean = std::stoi(mean_s.substr(mean_s.find('=') + 1));
    const int has_map = std::stoi(map_s.substr(map_s.find('=') + 1));
    emb.rows = read_f32(is, v, d, path);
    if (has_mean || has_map) {
        CaieTransform t;
        if (has_mean) t.mean = read_f32(is, 1, d, path).row(0);
        if (has_map) t.W = read_f32(is, d, d, path);
        emb.caie = std::move(t);
    }
    return emb;
}

void write_subword_binary(const std::string& path, const SubwordTable& table,
                          const Provenance& prov) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataFormatError("cannot write file: " + path);
    os << "UBS1 " << table.bucket_count << " " << table.grams.cols() << " " << table.n_min << " "
       << table.n_max << " ubt=" << kToolVersion << " config=" << hash_hex(prov.config_hash)
       << "\n";
    write_f32(os, table.grams);
    if (!os) throw DataFormatError("write failed: " + path);
}

SubwordTable read_subword_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataFormatError("cannot open file: " + path);
    std::string manifest;
    if (!std::getline(is, manifest)) throw DataFormatError("missing manifest line: " + path);
    std::istringstream ms(manifest);
    std::string magic;
    long b = 0, d = 0;
    SubwordTable t;
    if (!(ms >> magic >> b >> d >> t.n_min >> t.n_max) || magic != "UBS1")
        throw DataFormatError("bad subword manifest: " + manifest);
    t.bucket_count = b;
    t.grams = read_f32(is, b, d, path);
    return t;
}

}  // namespace ubt::embed

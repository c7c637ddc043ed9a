#include "ubt/toyoracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace ubt::toyoracle {

std::string Lexicon::translate(const std::string& word, Direction dir) const {
    build_index();
    if (dir == Direction::AtoB) {
        auto it = index_a_.find(word);
        if (it == index_a_.end()) throw DataFormatError("lexicon: unknown A-side word: " + word);
        return words_b[static_cast<std::size_t>(a_to_b[static_cast<std::size_t>(it->second)])];
    }
    auto it = index_b_.find(word);
    if (it == index_b_.end()) throw DataFormatError("lexicon: unknown B-side word: " + word);
    return words_a[static_cast<std::size_t>(b_to_a[static_cast<std::size_t>(it->second)])];
}

void Lexicon::build_index() const {
    if (!index_a_.empty() || words_a.empty()) return;
    for (std::size_t i = 0; i < words_a.size(); ++i)
        index_a_.emplace(words_a[i], static_cast<std::int32_t>(i));
    for (std::size_t i = 0; i < words_b.size(); ++i)
        index_b_.emplace(words_b[i], static_cast<std::int32_t>(i));
}

std::string Lexicon::serialize() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < words_a.size(); ++i)
        out << words_a[i] << "\t" << words_b[static_cast<std::size_t>(a_to_b[i])] << "\n";
    return out.str();
}

Lexicon Lexicon::deserialize(const std::string& text) {
    Lexicon lex;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line[0] == '#') continue;
        const auto cols = split_on(line, '\t');
        if (cols.size() != 2) throw DataFormatError("lexicon: expected two columns: " + line);
        lex.words_a.push_back(trim(cols[0]));
        lex.words_b.push_back(trim(cols[1]));
        lex.a_to_b.push_back(static_cast<std::int32_t>(lex.words_a.size() - 1));
        lex.b_to_a.push_back(static_cast<std::int32_t>(lex.words_b.size() - 1));
    }
    lex.build_index();
    return lex;
}

namespace {

/// Draws an index from cumulative weights via binary search.
int draw(const std::vector<double>& cumulative, Rng& rng) {
    const double r = rng.uniform() * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
    if (it == cumulative.end()) --it;
    return static_cast<int>(it - cumulative.begin());
}

std::vector<double> cumulate(const std::vector<double>& weights) {
    std::vector<double> c(weights.size());
    double acc = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        c[i] = acc;
    }
    return c;
}

}  // namespace

TwinCorpus generate_twin_corpus(const TwinSpec& spec) {
    if (spec.vocab_size < 2) throw ConfigError("twin spec: vocab_size must be >= 2");
    if (spec.swap_prob < 0.0 || spec.swap_prob > 0.5)
        throw ConfigError("twin spec: swap_prob must be in [0, 0.5]");
    if (spec.block_len_min < 1 || spec.block_len_max < spec.block_len_min)
        throw ConfigError("twin spec: bad block length range");

    Rng rng(spec.seed);
    const int v = spec.vocab_size;

    TwinCorpus out;
    // random-string word names so subword n-grams behave like they do on real
    // instruction tokens instead of overlapping on a shared numeric prefix
    auto make_names = [&rng](int count, char lead) {
        static const char alphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789_";
        std::unordered_map<std::string, bool> seen;
        std::vector<std::string> names;
        names.reserve(static_cast<std::size_t>(count));
        while (static_cast<int>(names.size()) < count) {
            std::string name(1, lead);
            const int len = 4 + static_cast<int>(rng.uniform_int(5));
            for (int k = 0; k < len; ++k)
                name.push_back(alphabet[rng.uniform_int(sizeof(alphabet) - 1)]);
            if (!seen.emplace(name, true).second) continue;
            names.push_back(std::move(name));
        }
        return names;
    };
    out.lexicon.words_a = make_names(v, 'a');
    out.lexicon.words_b = make_names(v, 'b');
    std::vector<std::int32_t> perm(static_cast<std::size_t>(v));
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    out.lexicon.a_to_b = perm;
    out.lexicon.b_to_a.resize(static_cast<std::size_t>(v));
    for (int i = 0; i < v; ++i)
        out.lexicon.b_to_a[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] =
            static_cast<std::int32_t>(i);

    // Zipfian unigram weights; word id doubles as frequency rank.
    std::vector<double> zipf(static_cast<std::size_t>(v));
    for (int i = 0; i < v; ++i)
        zipf[static_cast<std::size_t>(i)] = 1.0 / std::pow(i + 1, spec.zipf_exponent);
    const auto zipf_cum = cumulate(zipf);

    // Bigram structure: each word prefers a small seeded successor set.
    const int fanout = std::min(spec.bigram_fanout, v);
    std::vector<std::vector<int>> successors(static_cast<std::size_t>(v));
    std::vector<std::vector<double>> succ_cum(static_cast<std::size_t>(v));
    for (int i = 0; i < v; ++i) {
        std::vector<int>& succ = successors[static_cast<std::size_t>(i)];
        std::vector<double> w;
        while (static_cast<int>(succ.size()) < fanout) {
            const int cand = draw(zipf_cum, rng);
            if (std::find(succ.begin(), succ.end(), cand) == succ.end()) {
                succ.push_back(cand);
                w.push_back(zipf[static_cast<std::size_t>(cand)]);
            }
        }
        succ_cum[static_cast<std::size_t>(i)] = cumulate(w);
    }

    auto sample_block = [&](Rng& r) {
        const int len = spec.block_len_min +
                        static_cast<int>(r.uniform_int(static_cast<std::uint64_t>(
                            spec.block_len_max - spec.block_len_min + 1)));
        std::vector<int> ids(static_cast<std::size_t>(len));
        ids[0] = draw(zipf_cum, r);
        for (int t = 1; t < len; ++t) {
            const int prev = ids[static_cast<std::size_t>(t - 1)];
            if (r.uniform() < 0.85) {
                const int k = draw(succ_cum[static_cast<std::size_t>(prev)], r);
                ids[static_cast<std::size_t>(t)] =
                    successors[static_cast<std::size_t>(prev)][static_cast<std::size_t>(k)];
            } else {
                ids[static_cast<std::size_t>(t)] = draw(zipf_cum, r);
            }
        }
        return ids;
    };

    // A-side corpus
    std::vector<std::vector<int>> ids_a(static_cast<std::size_t>(spec.corpus_blocks));
    for (int b = 0; b < spec.corpus_blocks; ++b) ids_a[static_cast<std::size_t>(b)] = sample_block(rng);
    out.blocks_a.resize(ids_a.size());
    for (std::size_t b = 0; b < ids_a.size(); ++b) {
        out.blocks_a[b].reserve(ids_a[b].size());
        for (int id : ids_a[b])
            out.blocks_a[b].push_back(out.lexicon.words_a[static_cast<std::size_t>(id)]);
    }

    // B-side corpus: shuffled, swap-noised images of the A blocks.
    std::vector<int> order(ids_a.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    out.twin_of_b = order;
    out.blocks_b.resize(ids_a.size());
    std::vector<int> b_pos_of_a(ids_a.size());
    for (std::size_t bi = 0; bi < order.size(); ++bi) {
        const std::size_t ai = static_cast<std::size_t>(order[bi]);
        b_pos_of_a[ai] = static_cast<int>(bi);
        std::vector<int> ids = ids_a[ai];
        for (std::size_t t = 0; t + 1 < ids.size();) {
            ++out.swap_opportunities;
            if (rng.uniform() < spec.swap_prob) {
                std::swap(ids[t], ids[t + 1]);
                ++out.swaps_applied;
                t += 2;
            } else {
                ++t;
            }
        }
        auto& block = out.blocks_b[bi];
        block.reserve(ids.size());
        for (int id : ids)
            block.push_back(out.lexicon.words_b[static_cast<std::size_t>(
                out.lexicon.a_to_b[static_cast<std::size_t>(id)])]);
    }

    out.lexicon.build_index();

    // Group consecutive A blocks into functions; B functions mirror them.
    int b0 = 0;
    while (b0 < spec.corpus_blocks) {
        const int span = spec.fn_blocks_min +
                         static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(
                             spec.fn_blocks_max - spec.fn_blocks_min + 1)));
        const int end = std::min(b0 + span, spec.corpus_blocks);
        std::vector<int> fa, fb;
        for (int i = b0; i < end; ++i) {
            fa.push_back(i);
            fb.push_back(b_pos_of_a[static_cast<std::size_t>(i)]);
        }
        out.functions_a.push_back(std::move(fa));
        out.functions_b.push_back(std::move(fb));
        b0 = end;
    }
    return out;
}

std::vector<std::string> oracle_translate(const std::vector<std::string>& block,
                                          const Lexicon& lexicon, Direction dir) {
    std::vector<std::string> out;
    out.reserve(block.size());
    for (const std::string& w : block) out.push_back(lexicon.translate(w, dir));
    return out;
}

namespace {

// n-grams joined with an unlikely separator; exhaustive enumeration.
std::unordered_map<std::string, long> ngram_counts_bf(const std::vector<std::string>& sent, int n) {
    std::unordered_map<std::string, long> counts;
    if (static_cast<int>(sent.size()) < n) return counts;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= sent.size(); ++i) {
        std::string key;
        for (int j = 0; j < n; ++j) {
            if (j > 0) key.push_back('\x1f');
            key += sent[i + static_cast<std::size_t>(j)];
        }
        ++counts[key];
    }
    return counts;
}

}  // namespace

double bleu_bruteforce(const std::vector<std::vector<std::string>>& candidate,
                       const std::vector<std::vector<std::string>>& reference, int max_n,
                       bool smooth) {
    if (candidate.size() != reference.size())
        throw DataFormatError("bleu: candidate/reference length mismatch");
    if (candidate.empty()) throw DataFormatError("bleu: empty input");

    long cand_len = 0, ref_len = 0;
    std::vector<long> matched(static_cast<std::size_t>(max_n), 0);
    std::vector<long> total(static_cast<std::size_t>(max_n), 0);
    for (std::size_t s = 0; s < candidate.size(); ++s) {
        cand_len += static_cast<long>(candidate[s].size());
        ref_len += static_cast<long>(reference[s].size());
        for (int n = 1; n <= max_n; ++n) {
            const auto cc = ngram_counts_bf(candidate[s], n);
            const auto rc = ngram_counts_bf(reference[s], n);
            for (const auto& [key, count] : cc) {
                total[static_cast<std::size_t>(n - 1)] += count;
                auto it = rc.find(key);
                if (it != rc.end())
                    matched[static_cast<std::size_t>(n - 1)] += std::min(count, it->second);
            }
        }
    }
    if (cand_len == 0) return 0.0;

    double log_sum = 0.0;
    int orders = 0;
    for (int n = 1; n <= max_n; ++n) {
        const long tot = total[static_cast<std::size_t>(n - 1)];
        if (tot == 0) continue;  // no candidate n-grams of this order
        double num = static_cast<double>(matched[static_cast<std::size_t>(n - 1)]);
        if (num == 0.0) {
            if (!smooth) return 0.0;
            num = 0.1;
        }
        log_sum += std::log(num / static_cast<double>(tot));
        ++orders;
    }
    if (orders == 0) return 0.0;
    const double bp =
        std::exp(std::min(0.0, 1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len)));
    return bp * std::exp(log_sum / orders);
}

std::vector<double> finite_difference_grad(const std::function<double(const Eigen::VectorXd&)>& f,
                                           const Eigen::VectorXd& params,
                                           const std::vector<int>& coords, double eps) {
    std::vector<double> grad;
    grad.reserve(coords.size());
    Eigen::VectorXd p = params;
    for (int c : coords) {
        const double orig = p[c];
        p[c] = orig + eps;
        const double fp = f(p);
        p[c] = orig - eps;
        const double fm = f(p);
        p[c] = orig;
        grad.push_back((fp - fm) / (2.0 * eps));
    }
    return grad;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> plant_rotation(const Eigen::MatrixXd& X, double sigma,
                                                           std::uint64_t seed) {
    const Eigen::Index d = X.cols();
    Rng rng(seed);
    Eigen::MatrixXd g(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) g(i, j) = rng.gaussian();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < d; ++j)
        if (r(j, j) < 0) q.col(j) = -q.col(j);

    Eigen::MatrixXd z = X * q;
    if (sigma > 0) {
        for (Eigen::Index i = 0; i < z.rows(); ++i)
            for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) += sigma * rng.gaussian();
    }
    return {std::move(z), std::move(q)};
}

}  // namespace ubt::toyoracle

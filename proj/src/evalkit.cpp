#include "ubt/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace ubt::evalkit {

namespace {

using Ngram = std::vector<std::string>;

void count_ngrams(const std::vector<std::string>& sent, int n, std::map<Ngram, long>& counts) {
    if (static_cast<int>(sent.size()) < n) return;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= sent.size(); ++i) {
        Ngram g(sent.begin() + static_cast<std::ptrdiff_t>(i),
                sent.begin() + static_cast<std::ptrdiff_t>(i) + n);
        ++counts[g];
    }
}

}  // namespace

double bleu_score(const std::vector<std::vector<std::string>>& candidate,
                  const std::vector<std::vector<std::string>>& reference, int max_n, bool smooth) {
    if (candidate.size() != reference.size())
        throw DataFormatError("bleu_score: candidate and reference must pair block-for-block");
    if (candidate.empty()) throw DataFormatError("bleu_score: empty evaluation set");
    if (max_n < 1) throw ConfigError("bleu_score: max_n must be >= 1");

    long cand_len = 0, ref_len = 0;
    std::vector<long> matched(static_cast<std::size_t>(max_n), 0);
    std::vector<long> total(static_cast<std::size_t>(max_n), 0);
    for (std::size_t s = 0; s < candidate.size(); ++s) {
        cand_len += static_cast<long>(candidate[s].size());
        ref_len += static_cast<long>(reference[s].size());
        for (int n = 1; n <= max_n; ++n) {
            std::map<Ngram, long> cc, rc;
            count_ngrams(candidate[s], n, cc);
            count_ngrams(reference[s], n, rc);
            for (const auto& [gram, count] : cc) {
                total[static_cast<std::size_t>(n - 1)] += count;
                const auto it = rc.find(gram);
                if (it != rc.end())
                    matched[static_cast<std::size_t>(n - 1)] += std::min(count, it->second);
            }
        }
    }
    if (cand_len == 0) return 0.0;

    double log_precision_sum = 0.0;
    int orders = 0;
    for (int n = 1; n <= max_n; ++n) {
        const long tot = total[static_cast<std::size_t>(n - 1)];
        if (tot == 0) continue;
        double num = static_cast<double>(matched[static_cast<std::size_t>(n - 1)]);
        if (num == 0.0) {
            if (!smooth) return 0.0;
            num = 0.1;
        }
        log_precision_sum += std::log(num / static_cast<double>(tot));
        ++orders;
    }
    if (orders == 0) return 0.0;
    const double brevity =
        std::exp(std::min(0.0, 1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len)));
    return brevity * std::exp(log_precision_sum / orders);
}

Eigen::VectorXd function_embedding(const std::vector<std::vector<std::string>>& blocks,
                                   const embed::EmbeddingMatrix& caie) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(caie.d);
    std::int64_t tokens = 0;
    for (const auto& block : blocks) {
        for (const std::string& word : block) {
            sum += caie.lookup(word);
            ++tokens;
        }
    }
    if (tokens == 0) throw DataFormatError("function_embedding: empty function");
    return sum;
}

double cosine_similarity(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    if (u.size() != v.size()) throw DataFormatError("cosine_similarity: dimension mismatch");
    const double nu = u.norm(), nv = v.norm();
    if (nu == 0.0 || nv == 0.0) throw NumericalError("cosine_similarity: zero vector");
    return u.dot(v) / (nu * nv);
}

double accuracy_at_threshold(const std::vector<ScoredPair>& pairs, double threshold) {
    if (pairs.empty()) throw DataFormatError("pair_accuracy: empty pair set");
    long correct = 0;
    for (const auto& p : pairs) {
        const int pred = p.similarity >= threshold ? 1 : 0;
        if (pred == p.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

double best_threshold_accuracy(const std::vector<ScoredPair>& pairs, double* threshold_out) {
    if (pairs.empty()) throw DataFormatError("pair_accuracy: empty pair set");
    std::vector<ScoredPair> sorted = pairs;
    std::sort(sorted.begin(), sorted.end(),
              [](const ScoredPair& a, const ScoredPair& b) { return a.similarity < b.similarity; });
    const std::size_t m = sorted.size();
    // suffix_pos[i] = positives in [i, m); predicting 1 for indices >= i
    std::vector<long> suffix_pos(m + 1, 0);
    for (std::size_t i = m; i-- > 0;)
        suffix_pos[i] = suffix_pos[i + 1] + (sorted[i].label == 1 ? 1 : 0);

    double best_acc = -1.0;
    double best_threshold = 0.0;
    long negatives_below = 0;  // negatives in [0, i) = true negatives
    for (std::size_t i = 0; i <= m; ++i) {
        const bool group_start = i == m || i == 0 || sorted[i].similarity != sorted[i - 1].similarity;
        if (group_start) {
            const long tp = suffix_pos[i];
            const long tn = negatives_below;
            const double acc = static_cast<double>(tp + tn) / static_cast<double>(m);
            if (acc > best_acc) {
                best_acc = acc;
                best_threshold = i == m ? sorted[m - 1].similarity + 1.0 : sorted[i].similarity;
            }
        }
        if (i < m && sorted[i].label == 0) ++negatives_below;
    }
    if (threshold_out) *threshold_out = best_threshold;
    return best_acc;
}

double pair_accuracy(const std::vector<ScoredPair>& pairs, const ThresholdPolicy& policy) {
    if (pairs.empty()) throw DataFormatError("pair_accuracy: empty pair set");
    if (policy.kind == ThresholdPolicy::Kind::BestOnSet || pairs.size() == 1)
        return best_threshold_accuracy(pairs, nullptr);

    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(policy.seed);
    rng.shuffle(order);
    std::size_t n_val = static_cast<std::size_t>(
        std::ceil(policy.validation_fraction * static_cast<double>(pairs.size())));
    n_val = std::clamp<std::size_t>(n_val, 1, pairs.size() - 1);
    std::vector<ScoredPair> val, test;
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < n_val ? val : test).push_back(pairs[order[i]]);
    double threshold = 0.0;
    best_threshold_accuracy(val, &threshold);
    return accuracy_at_threshold(test, threshold);
}

}  // namespace ubt::evalkit

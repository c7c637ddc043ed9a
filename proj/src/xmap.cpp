#include "ubt/xmap.hpp"

#include <algorithm>
#include <sstream>

namespace ubt::xmap {

Eigen::MatrixXd preprocess_embeddings(const Eigen::MatrixXd& X, Eigen::RowVectorXd* mean_out,
                                      const std::vector<std::string>* names) {
    Eigen::MatrixXd out = X;
    auto row_label = [&](Eigen::Index i) {
        if (names && static_cast<std::size_t>(i) < names->size())
            return "word '" + (*names)[static_cast<std::size_t>(i)] + "'";
        return "row " + std::to_string(i);
    };
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double n = out.row(i).norm();
        if (n == 0.0) throw NumericalError("zero embedding for " + row_label(i));
        out.row(i) /= n;
    }
    const Eigen::RowVectorXd mean = out.colwise().mean();
    out.rowwise() -= mean;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double n = out.row(i).norm();
        if (n == 0.0)
            throw NumericalError("embedding vanished after centering for " + row_label(i));
        out.row(i) /= n;
    }
    if (mean_out) *mean_out = mean;
    return out;
}

MappingTransform procrustes_fit(const Eigen::MatrixXd& Xs, const Eigen::MatrixXd& Zt,
                                const SeedDictionary& dict) {
    if (dict.size() == 0) throw DataFormatError("procrustes: empty seed dictionary");
    if (Xs.cols() != Zt.cols())
        throw DataFormatError("procrustes: dimension mismatch between spaces");
    const Eigen::Index d = Xs.cols();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t k = 0; k < dict.size(); ++k)
        m += Xs.row(dict.src[k]).transpose() * Zt.row(dict.tgt[k]);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    MappingTransform t;
    t.W = svd.matrixU() * svd.matrixV().transpose();
    return t;
}

namespace {

double top_k_mean(Eigen::VectorXd v, int k) {
    const int n = static_cast<int>(v.size());
    k = std::min(k, n);
    std::partial_sort(v.data(), v.data() + k, v.data() + n, std::greater<double>());
    double s = 0;
    for (int i = 0; i < k; ++i) s += v[i];
    return s / k;
}

}  // namespace

SeedDictionary induce_dictionary(const Eigen::MatrixXd& XsW, const Eigen::MatrixXd& Zt,
                                 const SelfLearnConfig& cfg, Rng& rng) {
    const Eigen::Index ls = std::min<Eigen::Index>(cfg.vocab_limit, XsW.rows());
    const Eigen::Index lt = std::min<Eigen::Index>(cfg.vocab_limit, Zt.rows());
    if (ls == 0 || lt == 0) throw DataFormatError("induce_dictionary: empty space");
    const Eigen::MatrixXd cos = XsW.topRows(ls) * Zt.topRows(lt).transpose();

    Eigen::VectorXd r_src(ls);  // source row -> mean cosine to its k nearest targets
    for (Eigen::Index i = 0; i < ls; ++i) r_src[i] = top_k_mean(cos.row(i), cfg.csls_k);
    Eigen::VectorXd r_tgt(lt);  // target row -> mean cosine to its k nearest mapped sources
    for (Eigen::Index j = 0; j < lt; ++j) r_tgt[j] = top_k_mean(cos.col(j), cfg.csls_k);

    SeedDictionary dict;
    for (Eigen::Index i = 0; i < ls; ++i) {
        Eigen::Index best = 0;
        double best_score = -1e300;
        for (Eigen::Index j = 0; j < lt; ++j) {
            const double score = 2.0 * cos(i, j) - r_src[i] - r_tgt[j];
            if (score > best_score) {
                best_score = score;
                best = j;
            }
        }
        const bool keep = rng.uniform() < cfg.keep_prob;
        if (!keep) continue;
        dict.src.push_back(static_cast<std::int32_t>(i));
        dict.tgt.push_back(static_cast<std::int32_t>(best));
        dict.scores.push_back(best_score);
    }
    return dict;
}

SeedDictionary induce_dictionary(const Eigen::MatrixXd& XsW, const Eigen::MatrixXd& Zt,
                                 const SelfLearnConfig& cfg) {
    Rng rng(cfg.seed);
    return induce_dictionary(XsW, Zt, cfg, rng);
}

double mean_score(const SeedDictionary& dict) {
    if (dict.scores.empty()) return -1e300;
    double s = 0;
    for (double v : dict.scores) s += v;
    return s / static_cast<double>(dict.scores.size());
}

namespace {

/// Match rows of the sorted intra-space similarity matrices: each Xs profile
/// row is paired with its CSLS-nearest Zt profile row.
SeedDictionary similarity_init(const Eigen::MatrixXd& Xs, const Eigen::MatrixXd& Zt, int limit,
                               int csls_k, Rng& rng) {
    const Eigen::Index l =
        std::min<Eigen::Index>(limit, std::min<Eigen::Index>(Xs.rows(), Zt.rows()));
    if (l < 2) throw DataFormatError("self_learn: too few rows for initialization");
    Eigen::MatrixXd ms = Xs.topRows(l) * Xs.topRows(l).transpose();
    Eigen::MatrixXd mt = Zt.topRows(l) * Zt.topRows(l).transpose();
    auto sort_normalize_rows = [l](Eigen::MatrixXd& m) {
        for (Eigen::Index i = 0; i < l; ++i) {
            Eigen::VectorXd r = m.row(i).transpose();
            std::sort(r.data(), r.data() + l, std::greater<double>());
            const double n = r.norm();
            if (n > 0) r /= n;
            m.row(i) = r.transpose();
        }
    };
    sort_normalize_rows(ms);
    sort_normalize_rows(mt);
    SelfLearnConfig match;
    match.csls_k = csls_k;
    match.keep_prob = 1.0;
    match.vocab_limit = static_cast<int>(l);
    return induce_dictionary(ms, mt, match, rng);
}

}  // namespace

MappingTransform self_learn(const Eigen::MatrixXd& Xs, const Eigen::MatrixXd& Zt,
                            const SelfLearnConfig& cfg, std::vector<double>* objective_trace) {
    if (Xs.cols() != Zt.cols()) throw DataFormatError("self_learn: dimension mismatch");
    if (cfg.keep_prob <= 0.0 || cfg.keep_prob > 1.0)
        throw ConfigError("self_learn: keep_prob must be in (0, 1]");
    if (cfg.keep_prob_initial <= 0.0 || cfg.keep_prob_initial > 1.0)
        throw ConfigError("self_learn: keep_prob_initial must be in (0, 1]");
    if (cfg.csls_k < 1) throw ConfigError("self_learn: csls_k must be >= 1");

    Rng rng(cfg.seed);
    SeedDictionary dict;
    if (cfg.init == InitMode::SortedSimilarity) {
        dict = similarity_init(Xs, Zt, cfg.vocab_limit, cfg.csls_k, rng);
    } else {
        const Eigen::Index l = std::min<Eigen::Index>(
            cfg.vocab_limit, std::min<Eigen::Index>(Xs.rows(), Zt.rows()));
        if (l < 2) throw DataFormatError("self_learn: too few rows for initialization");
        for (Eigen::Index i = 0; i < l; ++i) {
            dict.src.push_back(static_cast<std::int32_t>(i));
            dict.tgt.push_back(static_cast<std::int32_t>(i));
            dict.scores.push_back(0.0);
        }
    }

    // The keep probability anneals upward: aggressive dropout early explores
    // competing alignments, the final value polishes the winning one.
    double keep = std::min(cfg.keep_prob_initial, cfg.keep_prob);
    MappingTransform best;
    double best_obj = -1e300;
    int stall = 0;
    int it = 0;
    bool converged = false;
    for (it = 1; it <= cfg.max_iterations; ++it) {
        MappingTransform t = procrustes_fit(Xs, Zt, dict);
        const Eigen::MatrixXd mapped = Xs * t.W;

        SelfLearnConfig round = cfg;
        round.keep_prob = keep;
        SeedDictionary forward = induce_dictionary(mapped, Zt, round, rng);
        double obj_num = mean_score(forward) * static_cast<double>(forward.size());
        double obj_den = static_cast<double>(forward.size());
        if (cfg.bidirectional) {
            const SeedDictionary backward =
                induce_dictionary(Zt * t.W.transpose(), Xs, round, rng);
            for (std::size_t k = 0; k < backward.size(); ++k) {
                forward.src.push_back(backward.tgt[k]);
                forward.tgt.push_back(backward.src[k]);
                forward.scores.push_back(backward.scores[k]);
            }
            obj_num += mean_score(backward) * static_cast<double>(backward.size());
            obj_den += static_cast<double>(backward.size());
        }
        if (forward.size() == 0) {
            // every pair dropped by the stochastic keep; retry deterministically
            round.keep_prob = 1.0;
            forward = induce_dictionary(mapped, Zt, round, rng);
            obj_num = mean_score(forward) * static_cast<double>(forward.size());
            obj_den = static_cast<double>(forward.size());
        }
        dict = std::move(forward);
        const double obj = obj_den > 0 ? obj_num / obj_den : -1e300;
        if (objective_trace) objective_trace->push_back(obj);

        if (obj > best_obj + cfg.tolerance) {
            best_obj = obj;
            best.W = t.W;
            stall = 0;
        } else {
            ++stall;
            if (stall >= cfg.patience) {
                if (keep < cfg.keep_prob) {
                    keep = std::min(keep * 2.0, cfg.keep_prob);
                    stall = 0;
                } else {
                    converged = true;
                    break;
                }
            }
        }
    }
    best.converged = converged;
    best.objective = best_obj;
    best.iterations = std::min(it, cfg.max_iterations);
    if (best.W.size() == 0) throw NumericalError("self_learn: no mapping produced");
    return best;
}

Eigen::MatrixXd map_embeddings(const Eigen::MatrixXd& Xs, const Eigen::MatrixXd& W) {
    if (Xs.cols() != W.rows())
        throw DataFormatError("map_embeddings: dimension mismatch (" + std::to_string(Xs.cols()) +
                              " vs " + std::to_string(W.rows()) + ")");
    return Xs * W;
}

double orthogonality_error(const Eigen::MatrixXd& W) {
    const Eigen::Index d = W.cols();
    return (W.transpose() * W - Eigen::MatrixXd::Identity(d, d)).norm();
}

void write_mapping_file(const std::string& path, const Eigen::MatrixXd& W,
                        const Provenance& prov) {
    std::ostringstream out;
    out << prov.line();
    out << W.rows() << "\n";
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
        for (Eigen::Index j = 0; j < W.cols(); ++j) {
            if (j > 0) out << ' ';
            out << format_double(W(i, j), 17);
        }
        out << '\n';
    }
    write_text_file(path, out.str());
}

Eigen::MatrixXd read_mapping_file(const std::string& path) {
    const auto lines = content_lines(read_text_file(path));
    std::size_t k = 0;
    while (k < lines.size() && trim(lines[k]).empty()) ++k;
    if (k >= lines.size()) throw DataFormatError("mapping file: missing header: " + path);
    const int d = std::stoi(trim(lines[k++]));
    Eigen::MatrixXd w(d, d);
    for (int i = 0; i < d; ++i) {
        while (k < lines.size() && trim(lines[k]).empty()) ++k;
        if (k >= lines.size()) throw DataFormatError("mapping file: truncated: " + path);
        const auto vals = split_ws(lines[k++]);
        if (static_cast<int>(vals.size()) != d)
            throw DataFormatError("mapping file: bad row " + std::to_string(i));
        for (int j = 0; j < d; ++j) w(i, j) = std::stod(vals[static_cast<std::size_t>(j)]);
    }
    return w;
}

}  // namespace ubt::xmap

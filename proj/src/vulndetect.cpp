#include "ubt/vulndetect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ubt::vulndetect {

std::int64_t LabeledSet::count(int label) const {
    return std::count(y.begin(), y.end(), label);
}

std::string LabeledSet::serialize() const {
    std::ostringstream out;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        out << y[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < x.cols(); ++j) out << ' ' << format_double(x(i, j), 17);
        out << '\n';
    }
    return out.str();
}

LabeledSet LabeledSet::deserialize(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (trim(line).empty() || line[0] == '#') continue;
        const auto toks = split_ws(line);
        if (toks.size() < 2) throw DataFormatError("dataset: need label and vector: " + line);
        labels.push_back(std::stoi(toks[0]));
        std::vector<double> row;
        for (std::size_t i = 1; i < toks.size(); ++i) row.push_back(std::stod(toks[i]));
        if (!rows.empty() && rows.back().size() != row.size())
            throw DataFormatError("dataset: inconsistent vector dimensions");
        rows.push_back(std::move(row));
    }
    LabeledSet set;
    set.y = std::move(labels);
    if (rows.empty()) return set;
    set.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            set.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return set;
}

std::int64_t oversample_target(std::int64_t majority, double ratio) {
    return static_cast<std::int64_t>(std::ceil(ratio * static_cast<double>(majority)));
}

namespace {

std::vector<Eigen::Index> label_indices(const LabeledSet& set, int label) {
    std::vector<Eigen::Index> idx;
    for (std::size_t i = 0; i < set.y.size(); ++i)
        if (set.y[i] == label) idx.push_back(static_cast<Eigen::Index>(i));
    return idx;
}

LabeledSet append_rows(const LabeledSet& set, const Eigen::MatrixXd& extra, int label) {
    LabeledSet out;
    out.x.resize(set.x.rows() + extra.rows(), set.x.cols());
    out.x.topRows(set.x.rows()) = set.x;
    out.x.bottomRows(extra.rows()) = extra;
    out.y = set.y;
    for (Eigen::Index i = 0; i < extra.rows(); ++i) out.y.push_back(label);
    return out;
}

void check_both_classes(const LabeledSet& set, const char* what) {
    if (set.count(1) == 0 || set.count(0) == 0)
        throw DataFormatError(std::string(what) + ": need at least one sample of each class");
}

}  // namespace

LabeledSet duplicate_minority(const LabeledSet& set, int copies) {
    if (copies < 0) throw ConfigError("duplicate_minority: copies must be >= 0");
    const auto minority = label_indices(set, 1);
    if (minority.empty()) throw DataFormatError("duplicate_minority: no minority samples");
    Eigen::MatrixXd extra(static_cast<Eigen::Index>(minority.size()) * copies, set.x.cols());
    Eigen::Index r = 0;
    for (int c = 0; c < copies; ++c)
        for (const Eigen::Index i : minority) extra.row(r++) = set.x.row(i);
    return append_rows(set, extra, 1);
}

LabeledSet ros_oversample(const LabeledSet& set, const OversampleConfig& cfg) {
    check_both_classes(set, "ros_oversample");
    const auto minority = label_indices(set, 1);
    const std::int64_t majority = set.count(0);
    const std::int64_t target = oversample_target(majority, cfg.sampling_ratio);
    const std::int64_t need = target - static_cast<std::int64_t>(minority.size());
    if (need <= 0) return set;
    Rng rng(cfg.seed);
    Eigen::MatrixXd extra(need, set.x.cols());
    for (std::int64_t k = 0; k < need; ++k) {
        const std::size_t pick = rng.uniform_int(minority.size());
        extra.row(k) = set.x.row(minority[pick]);
    }
    return append_rows(set, extra, 1);
}

LabeledSet smote_oversample(const LabeledSet& set, const OversampleConfig& cfg,
                            SmoteProvenance* provenance) {
    check_both_classes(set, "smote_oversample");
    if (cfg.k_neighbors < 1) throw ConfigError("smote: k_neighbors must be >= 1");
    const auto minority = label_indices(set, 1);
    const std::int64_t m = static_cast<std::int64_t>(minority.size());
    if (m <= cfg.k_neighbors)
        throw DataFormatError(
            "smote: minority size " + std::to_string(m) + " must exceed k_neighbors " +
            std::to_string(cfg.k_neighbors) + "; duplicate the minority samples first");
    const std::int64_t majority = set.count(0);
    const std::int64_t target = oversample_target(majority, cfg.sampling_ratio);
    const std::int64_t need = target - m;

    Eigen::MatrixXd min_rows(m, set.x.cols());
    for (std::int64_t i = 0; i < m; ++i) min_rows.row(i) = set.x.row(minority[static_cast<std::size_t>(i)]);
    if (provenance) provenance->minority = min_rows;
    if (need <= 0) return set;

    // k nearest minority neighbors per minority sample, ties by index
    std::vector<std::vector<int>> neighbors(static_cast<std::size_t>(m));
    for (std::int64_t i = 0; i < m; ++i) {
        std::vector<std::pair<double, int>> dist;
        for (std::int64_t j = 0; j < m; ++j) {
            if (j == i) continue;
            dist.emplace_back((min_rows.row(i) - min_rows.row(j)).squaredNorm(),
                              static_cast<int>(j));
        }
        std::sort(dist.begin(), dist.end());
        for (int k = 0; k < cfg.k_neighbors; ++k)
            neighbors[static_cast<std::size_t>(i)].push_back(dist[static_cast<std::size_t>(k)].second);
    }

    Rng rng(cfg.seed);
    Eigen::MatrixXd synth(need, set.x.cols());
    for (std::int64_t k = 0; k < need; ++k) {
        const int i = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(m)));
        const auto& nns = neighbors[static_cast<std::size_t>(i)];
        const int nn = nns[rng.uniform_int(nns.size())];
        const double lambda = rng.uniform();
        synth.row(k) = min_rows.row(i) + lambda * (min_rows.row(nn) - min_rows.row(i));
        if (provenance) provenance->generated.emplace_back(i, nn, lambda);
    }
    return append_rows(set, synth, 1);
}

LinearModel train_linear_svm(const LabeledSet& set, double lambda, int epochs, std::uint64_t seed,
                             std::vector<double>* epoch_objective) {
    check_both_classes(set, "train_linear_svm");
    if (lambda <= 0 || epochs < 1) throw ConfigError("svm: lambda and epochs must be positive");
    const Eigen::Index n = set.x.rows();
    LinearModel model;
    model.lambda = lambda;
    model.w = Eigen::VectorXd::Zero(set.x.cols());
    model.b = 0.0;

    Rng rng(seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::int64_t t = 0;
    // Pegasos on the bias-augmented problem; the constant feature keeps the
    // intercept step sizes bounded.
    for (int epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        for (const Eigen::Index i : order) {
            ++t;
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            const double yi = set.y[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
            const double margin = yi * (model.w.dot(set.x.row(i).transpose()) + model.b);
            model.w *= 1.0 - eta * lambda;
            model.b *= 1.0 - eta * lambda;
            if (margin < 1.0) {
                model.w += eta * yi * set.x.row(i).transpose();
                model.b += eta * yi;
            }
        }
        if (epoch_objective) epoch_objective->push_back(svm_objective(model, set));
    }
    if (!model.w.allFinite() || !std::isfinite(model.b))
        throw NumericalError("svm training diverged");
    return model;
}

double svm_objective(const LinearModel& model, const LabeledSet& set) {
    double hinge = 0.0;
    for (Eigen::Index i = 0; i < set.x.rows(); ++i) {
        const double yi = set.y[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
        hinge += std::max(0.0, 1.0 - yi * (model.w.dot(set.x.row(i).transpose()) + model.b));
    }
    hinge /= static_cast<double>(set.x.rows());
    return 0.5 * model.lambda * model.w.squaredNorm() + hinge;
}

Metrics evaluate_detection(const LinearModel& model, const LabeledSet& test) {
    if (test.x.rows() == 0) throw DataFormatError("evaluate_detection: empty test set");
    long tp = 0, fp = 0, tn = 0, fn = 0;
    for (Eigen::Index i = 0; i < test.x.rows(); ++i) {
        const int pred = model.predict(test.x.row(i).transpose());
        const int label = test.y[static_cast<std::size_t>(i)];
        if (label == 1)
            pred == 1 ? ++tp : ++fn;
        else
            pred == 1 ? ++fp : ++tn;
    }
    Metrics m;
    if (tp + fn > 0) m.tpr = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (fp + tn > 0) m.fpr = static_cast<double>(fp) / static_cast<double>(fp + tn);
    if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (m.precision && m.tpr && (*m.precision + *m.tpr) > 0)
        m.f1 = 2.0 * *m.precision * *m.tpr / (*m.precision + *m.tpr);
    return m;
}

std::string format_metrics(const Metrics& m) {
    auto cell = [](const std::optional<double>& v) {
        return v ? format_double(*v, 4) : std::string("undefined");
    };
    return "tpr=" + cell(m.tpr) + " fpr=" + cell(m.fpr) + " precision=" + cell(m.precision) +
           " f1=" + cell(m.f1);
}

std::string LinearModel::serialize() const {
    std::ostringstream out;
    out << "UBSVM1 " << w.size() << " " << format_double(b, 17) << " " << format_double(lambda, 17)
        << "\n";
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (i > 0) out << ' ';
        out << format_double(w[i], 17);
    }
    out << '\n';
    return out.str();
}

LinearModel LinearModel::deserialize(const std::string& text) {
    const auto lines = content_lines(text);
    std::size_t k = 0;
    while (k < lines.size() && trim(lines[k]).empty()) ++k;
    if (k + 1 >= lines.size() + (lines.size() > k ? 0 : 1))
        throw DataFormatError("svm model: truncated");
    std::istringstream hs(lines[k]);
    std::string magic;
    long d = 0;
    LinearModel m;
    if (!(hs >> magic >> d >> m.b >> m.lambda) || magic != "UBSVM1")
        throw DataFormatError("svm model: bad header");
    ++k;
    while (k < lines.size() && trim(lines[k]).empty()) ++k;
    if (k >= lines.size()) throw DataFormatError("svm model: missing weights");
    const auto vals = split_ws(lines[k]);
    if (static_cast<long>(vals.size()) != d) throw DataFormatError("svm model: weight count");
    m.w.resize(d);
    for (long i = 0; i < d; ++i) m.w[i] = std::stod(vals[static_cast<std::size_t>(i)]);
    return m;
}

std::uint64_t LinearModel::hash() const {
    std::uint64_t h = fnv1a64(w.data(), static_cast<std::size_t>(w.size()) * sizeof(double));
    h = fnv1a64(&b, sizeof b, h);
    h = fnv1a64(&lambda, sizeof lambda, h);
    return h;
}

}  // namespace ubt::vulndetect

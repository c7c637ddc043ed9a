#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ubt/common.hpp"

namespace ubt::vulndetect {

/// Function-embedding dataset; label 1 = vulnerable (minority), 0 = benign.
struct LabeledSet {
    Eigen::MatrixXd x;  // one sample per row
    std::vector<int> y;

    std::int64_t count(int label) const;
    std::string serialize() const;  // "label v1 .. vd" per line
    static LabeledSet deserialize(const std::string& text);
};

struct OversampleConfig {
    enum class Method { Ros, Smote } method = Method::Smote;
    int k_neighbors = 2;
    double sampling_ratio = 0.002;  // target minority = ceil(ratio * majority)
    int duplicate_copies = 3;       // extra copies of each minority sample
    std::uint64_t seed = 1;
};

/// Adds `copies` extra copies of every minority sample.
LabeledSet duplicate_minority(const LabeledSet& set, int copies);

LabeledSet ros_oversample(const LabeledSet& set, const OversampleConfig& cfg);

struct SmoteProvenance {
    // (minority index i, neighbor index nn, lambda) per synthetic sample
    std::vector<std::tuple<int, int, double>> generated;
    Eigen::MatrixXd minority;  // minority rows the indices refer to
};

/// Synthetic minority samples x_i + lambda (x_nn - x_i) with lambda ~ U[0,1)
/// and x_nn among the k nearest minority neighbors (Euclidean).
LabeledSet smote_oversample(const LabeledSet& set, const OversampleConfig& cfg,
                            SmoteProvenance* provenance = nullptr);

std::int64_t oversample_target(std::int64_t majority, double ratio);

struct LinearModel {
    Eigen::VectorXd w;
    double b = 0.0;
    double lambda = 1e-4;

    double score(const Eigen::VectorXd& x) const { return w.dot(x) + b; }
    int predict(const Eigen::VectorXd& x) const { return score(x) >= 0 ? 1 : 0; }

    std::string serialize() const;
    static LinearModel deserialize(const std::string& text);
    std::uint64_t hash() const;
};

/// Pegasos-style stochastic subgradient descent on the L2-regularized hinge
/// objective lambda/2 ||w||^2 + mean hinge. Bias unregularized.
LinearModel train_linear_svm(const LabeledSet& set, double lambda, int epochs, std::uint64_t seed,
                             std::vector<double>* epoch_objective = nullptr);

double svm_objective(const LinearModel& model, const LabeledSet& set);

struct Metrics {
    std::optional<double> tpr, fpr, precision, f1;
};

Metrics evaluate_detection(const LinearModel& model, const LabeledSet& test);
std::string format_metrics(const Metrics& m);

}  // namespace ubt::vulndetect

#pragma once

// Linear SVM (dual coordinate descent), ROC-AUC, stratified nested
// cross-validation with (p, tau) grid search, and the four classification
// pipelines.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "btacm/acm.hpp"
#include "btacm/errors.hpp"
#include "btacm/features.hpp"
#include "btacm/signal.hpp"

namespace btacm {

struct SvmModel {
    Eigen::VectorXd weights;
    double bias = 0.0;
    double c = 1.0;
};

// L2-regularized hinge-loss SVM trained by dual coordinate descent; stops at
// duality gap 1e-4 or after 10 * n_examples epochs. The bias is learned as
// an augmented (regularized) coordinate. Deterministic: the coordinate
// permutation uses a fixed internal seed.
SvmModel svm_train(const std::vector<Eigen::VectorXd>& features, const std::vector<int>& labels,
                   double c);

Eigen::VectorXd svm_decision(const SvmModel& model, const std::vector<Eigen::VectorXd>& features);

// Mann-Whitney U with mid-rank tie handling, normalized to [0, 1].
double roc_auc(const Eigen::VectorXd& scores, const std::vector<int>& labels);

enum class PipelineKind { BtAcm, Acm, TsSvm, Mdm };

PipelineKind pipeline_from_string(const std::string& name);
std::string to_string(PipelineKind kind);

struct GridRange {
    int lo = 1;
    int hi = 10;
};

struct PipelineConfig {
    PipelineKind kind = PipelineKind::BtAcm;
    GridRange p_grid{1, 10};
    GridRange tau_grid{1, 10};
    double c = 1.0;
    int outer_folds = 5;
    int inner_folds = 3;
    std::uint64_t seed = 0;
    int threads = 1;
    bool collect_timings = true;
};

struct FoldReport {
    double auc = 0.0;
    int p = 1;
    int tau = 1;
    double fit_ms = 0.0;
    double predict_ms = 0.0;
    int n_train = 0;
    int n_test = 0;
};

struct EvalReport {
    PipelineConfig config;
    std::vector<FoldReport> folds;
    double mean_auc = 0.0;
    double std_auc = 0.0;
    double total_ms = 0.0;
};

// Label-balanced folds: per-class indices are shuffled with the seed and
// dealt round-robin. Every class must have at least `k` members.
std::vector<std::vector<int>> stratified_folds(const std::vector<int>& labels, int k,
                                               std::uint64_t seed);

// Fits the pipeline on `train` and returns one ranking score per element of
// `test` (higher = class 1). All fitting state (reference points, class
// means, SVM) comes from `train` only.
Eigen::VectorXd run_pipeline(PipelineKind kind, const std::vector<Epoch>& train,
                             const std::vector<Epoch>& test, const EmbeddingParams& params,
                             double c);

// Within-session nested cross-validation: stratified outer folds, a
// stratified inner grid search over (p, tau) maximizing mean inner AUC
// (ties broken toward smaller p, then smaller tau), refit on the outer
// training split, scored on the outer test split.
EvalReport nested_cv(const Dataset& ds, const PipelineConfig& cfg);

// JSON text of the report ({"schema": 1, ...}); extra key/value pairs are
// appended to the config object.
std::string report_to_json(const EvalReport& report,
                           const std::vector<std::pair<std::string, std::string>>& extra_config = {});

}  // namespace btacm

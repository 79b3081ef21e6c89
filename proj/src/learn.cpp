#include "btacm/learn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <thread>

#include "json.hpp"

#include "btacm/matfun.hpp"
#include "btacm/rng.hpp"
#include "btacm/siegel.hpp"
#include "btacm/spd.hpp"
#include "btacm/verblunsky.hpp"

namespace btacm {

namespace {

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point t0, Clock::time_point t1) {
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

void shuffle_indices(std::vector<int>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        std::swap(idx[i - 1], idx[rng.below(i)]);
    }
}

void check_binary_labels(const std::vector<int>& labels) {
    bool has0 = false, has1 = false;
    for (int y : labels) {
        if (y == 0) has0 = true;
        else if (y == 1) has1 = true;
        else throw DegenerateLabels("labels must be binary (0/1)");
    }
    if (!has0 || !has1) {
        throw DegenerateLabels("both classes must be present");
    }
}

// Deterministic static partition of [0, n) across at most `threads` workers.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(threads);
    for (int w = 0; w < threads; ++w) {
        const int lo = static_cast<int>(static_cast<long long>(n) * w / threads);
        const int hi = static_cast<int>(static_cast<long long>(n) * (w + 1) / threads);
        workers.emplace_back([lo, hi, &fn] {
            for (int i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : workers) t.join();
}

}  // namespace

SvmModel svm_train(const std::vector<Eigen::VectorXd>& features, const std::vector<int>& labels,
                   double c) {
    if (!(c > 0.0)) {
        throw InvalidConfig("svm_train: C must be positive");
    }
    if (features.size() != labels.size() || features.empty()) {
        throw ShapeError("svm_train: features and labels disagree");
    }
    const int n = static_cast<int>(features.size());
    const Eigen::Index dim = features[0].size();
    int n0 = 0, n1 = 0;
    for (int y : labels) {
        if (y == 0) ++n0;
        else if (y == 1) ++n1;
        else throw DegenerateLabels("svm_train: labels must be binary (0/1)");
    }
    if (n0 < 2 || n1 < 2) {
        throw DegenerateLabels("svm_train: need at least two examples per class");
    }
    for (const auto& x : features) {
        if (x.size() != dim) throw ShapeError("svm_train: inconsistent feature dimension");
    }

    // Augmented problem: the bias is a regularized extra coordinate with
    // constant input 1.
    std::vector<double> y(n);
    std::vector<double> qii(n);
    for (int i = 0; i < n; ++i) {
        y[i] = labels[i] == 1 ? 1.0 : -1.0;
        qii[i] = features[i].squaredNorm() + 1.0;
    }
    Eigen::VectorXd w = Eigen::VectorXd::Zero(dim + 1);
    std::vector<double> alpha(n, 0.0);

    const int max_epochs = 10 * n;
    constexpr double kGapTol = 1e-4;
    Rng rng(0x5eedc0de12345ULL);  // fixed: training must be reproducible
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < max_epochs; ++epoch) {
        shuffle_indices(order, rng);
        for (int i : order) {
            const auto& x = features[i];
            const double margin = y[i] * (w.head(dim).dot(x) + w(dim)) - 1.0;
            double pg = margin;
            if (alpha[i] <= 0.0) {
                pg = std::min(margin, 0.0);
            } else if (alpha[i] >= c) {
                pg = std::max(margin, 0.0);
            }
            if (std::abs(pg) > 1e-12) {
                const double next = std::clamp(alpha[i] - margin / qii[i], 0.0, c);
                const double delta = (next - alpha[i]) * y[i];
                w.head(dim) += delta * x;
                w(dim) += delta;
                alpha[i] = next;
            }
        }
        // duality gap: primal P(w) minus dual D(alpha)
        double hinge = 0.0;
        for (int i = 0; i < n; ++i) {
            hinge += std::max(0.0, 1.0 - y[i] * (w.head(dim).dot(features[i]) + w(dim)));
        }
        const double wnorm2 = w.squaredNorm();
        const double primal = 0.5 * wnorm2 + c * hinge;
        const double dual = std::accumulate(alpha.begin(), alpha.end(), 0.0) - 0.5 * wnorm2;
        if (primal - dual <= kGapTol) {
            break;
        }
    }
    return SvmModel{w.head(dim), w(dim), c};
}

Eigen::VectorXd svm_decision(const SvmModel& model, const std::vector<Eigen::VectorXd>& features) {
    Eigen::VectorXd scores(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].size() != model.weights.size()) {
            throw ShapeError("svm_decision: feature dimension does not match model");
        }
        scores(static_cast<Eigen::Index>(i)) = model.weights.dot(features[i]) + model.bias;
    }
    return scores;
}

double roc_auc(const Eigen::VectorXd& scores, const std::vector<int>& labels) {
    if (static_cast<std::size_t>(scores.size()) != labels.size()) {
        throw ShapeError("roc_auc: scores and labels disagree");
    }
    check_binary_labels(labels);
    const int n = static_cast<int>(labels.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return scores(a) < scores(b); });

    // mid-ranks over tie groups
    std::vector<double> rank(n);
    int i = 0;
    while (i < n) {
        int j = i;
        while (j + 1 < n && scores(order[j + 1]) == scores(order[i])) ++j;
        const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (int k = i; k <= j; ++k) rank[order[k]] = mid;
        i = j + 1;
    }
    double pos_ranks = 0.0;
    long n1 = 0;
    for (int k = 0; k < n; ++k) {
        if (labels[k] == 1) {
            pos_ranks += rank[k];
            ++n1;
        }
    }
    const long n0 = n - n1;
    return (pos_ranks - static_cast<double>(n1) * (n1 + 1) / 2.0) /
           (static_cast<double>(n1) * static_cast<double>(n0));
}

PipelineKind pipeline_from_string(const std::string& name) {
    if (name == "bt-acm") return PipelineKind::BtAcm;
    if (name == "acm") return PipelineKind::Acm;
    if (name == "ts-svm") return PipelineKind::TsSvm;
    if (name == "mdm") return PipelineKind::Mdm;
    throw InvalidConfig("unknown pipeline: " + name);
}

std::string to_string(PipelineKind kind) {
    switch (kind) {
        case PipelineKind::BtAcm: return "bt-acm";
        case PipelineKind::Acm: return "acm";
        case PipelineKind::TsSvm: return "ts-svm";
        case PipelineKind::Mdm: return "mdm";
    }
    return "?";
}

std::vector<std::vector<int>> stratified_folds(const std::vector<int>& labels, int k,
                                               std::uint64_t seed) {
    if (k < 2) {
        throw InvalidConfig("stratified_folds: need k >= 2");
    }
    std::map<int, std::vector<int>> by_class;
    for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
        by_class[labels[i]].push_back(i);
    }
    for (const auto& [cls, idx] : by_class) {
        if (static_cast<int>(idx.size()) < k) {
            throw InvalidConfig("stratified_folds: class " + std::to_string(cls) +
                                " has fewer members than folds");
        }
    }
    Rng rng(seed);
    std::vector<std::vector<int>> folds(k);
    for (auto& [cls, idx] : by_class) {
        shuffle_indices(idx, rng);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            folds[i % k].push_back(idx[i]);
        }
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

namespace {

// Per-epoch representation: a Verblunsky decomposition for the bt-acm
// pipeline, a single SPD matrix for the others.
struct Represented {
    std::vector<BTDecomposition> decs;
    std::vector<Eigen::MatrixXd> mats;

    Represented select(const std::vector<int>& idx) const {
        Represented out;
        if (!decs.empty()) {
            out.decs.reserve(idx.size());
            for (int i : idx) out.decs.push_back(decs[i]);
        } else {
            out.mats.reserve(idx.size());
            for (int i : idx) out.mats.push_back(mats[i]);
        }
        return out;
    }
};

Represented represent(const std::vector<const Epoch*>& epochs, PipelineKind kind,
                      const EmbeddingParams& params, int threads) {
    Represented rep;
    const int n = static_cast<int>(epochs.size());
    switch (kind) {
        case PipelineKind::BtAcm:
            rep.decs.resize(n);
            parallel_for(n, threads, [&](int i) {
                rep.decs[i] = verblunsky_decompose(shrunk_lagged_blocks(*epochs[i], params));
            });
            break;
        case PipelineKind::Acm:
            rep.mats.resize(n);
            parallel_for(n, threads, [&](int i) { rep.mats[i] = acm_sample(*epochs[i], params); });
            break;
        case PipelineKind::TsSvm:
        case PipelineKind::Mdm:
            rep.mats.resize(n);
            parallel_for(n, threads, [&](int i) {
                rep.mats[i] = shrunk_lagged_blocks(*epochs[i], EmbeddingParams{1, 1}).blocks[0];
            });
            break;
    }
    return rep;
}

// Trained state of a pipeline; everything here came from training data only.
struct FittedPipeline {
    PipelineKind kind;
    std::optional<ProductChart> chart;  // bt-acm
    std::optional<SvmModel> model;      // bt-acm, acm, ts-svm
    Eigen::MatrixXd whitener;           // acm, ts-svm
    Eigen::MatrixXd mean0, mean1;       // mdm
};

FittedPipeline fit_pipeline(const Represented& train, PipelineKind kind,
                            const std::vector<int>& y_train, double c) {
    FittedPipeline fit;
    fit.kind = kind;
    if (kind == PipelineKind::BtAcm) {
        fit.chart.emplace(fit_reference(train.decs));
        std::vector<Eigen::VectorXd> x;
        x.reserve(train.decs.size());
        for (const auto& dec : train.decs) x.push_back(fit.chart->features(dec));
        fit.model = svm_train(x, y_train, c);
        return fit;
    }
    if (kind == PipelineKind::Mdm) {
        std::vector<Eigen::MatrixXd> class0, class1;
        for (std::size_t i = 0; i < train.mats.size(); ++i) {
            (y_train[i] == 0 ? class0 : class1).push_back(train.mats[i]);
        }
        if (class0.empty() || class1.empty()) {
            throw DegenerateLabels("mdm: both classes must be present in training data");
        }
        fit.mean0 = frechet_mean(class0);
        fit.mean1 = frechet_mean(class1);
        return fit;
    }
    fit.whitener = spd_fn(frechet_mean(train.mats), SpdFn::InvSqrt);
    std::vector<Eigen::VectorXd> x;
    x.reserve(train.mats.size());
    for (const auto& m : train.mats) x.push_back(whitened_log_vector(fit.whitener, m));
    fit.model = svm_train(x, y_train, c);
    return fit;
}

Eigen::VectorXd score_pipeline(const FittedPipeline& fit, const Represented& test) {
    if (fit.kind == PipelineKind::BtAcm) {
        std::vector<Eigen::VectorXd> x;
        x.reserve(test.decs.size());
        for (const auto& dec : test.decs) x.push_back(fit.chart->features(dec));
        return svm_decision(*fit.model, x);
    }
    if (fit.kind == PipelineKind::Mdm) {
        Eigen::VectorXd scores(test.mats.size());
        for (std::size_t i = 0; i < test.mats.size(); ++i) {
            scores(static_cast<Eigen::Index>(i)) =
                spd_distance(test.mats[i], fit.mean0) - spd_distance(test.mats[i], fit.mean1);
        }
        return scores;
    }
    std::vector<Eigen::VectorXd> x;
    x.reserve(test.mats.size());
    for (const auto& m : test.mats) x.push_back(whitened_log_vector(fit.whitener, m));
    return svm_decision(*fit.model, x);
}

std::vector<int> gather(const std::vector<int>& labels, const std::vector<int>& idx) {
    std::vector<int> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(labels[i]);
    return out;
}

std::vector<const Epoch*> epoch_pointers(const std::vector<Epoch>& epochs) {
    std::vector<const Epoch*> out;
    out.reserve(epochs.size());
    for (const auto& e : epochs) out.push_back(&e);
    return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    return x;
}

}  // namespace

Eigen::VectorXd run_pipeline(PipelineKind kind, const std::vector<Epoch>& train,
                             const std::vector<Epoch>& test, const EmbeddingParams& params,
                             double c) {
    std::vector<int> y_train;
    y_train.reserve(train.size());
    for (const auto& e : train) y_train.push_back(e.label);

    const Represented rep_train = represent(epoch_pointers(train), kind, params, 1);
    const FittedPipeline fitted = fit_pipeline(rep_train, kind, y_train, c);
    const Represented rep_test = represent(epoch_pointers(test), kind, params, 1);
    return score_pipeline(fitted, rep_test);
}

EvalReport nested_cv(const Dataset& ds, const PipelineConfig& cfg) {
    const auto t_start = Clock::now();
    if (ds.epochs.empty()) {
        throw InvalidConfig("nested_cv: empty dataset");
    }
    if (cfg.outer_folds < 2 || cfg.inner_folds < 2) {
        throw InvalidConfig("nested_cv: need at least two folds in each loop");
    }
    if (cfg.p_grid.lo < 1 || cfg.tau_grid.lo < 1 || cfg.p_grid.lo > cfg.p_grid.hi ||
        cfg.tau_grid.lo > cfg.tau_grid.hi) {
        throw InvalidConfig("nested_cv: malformed grid ranges");
    }
    std::vector<int> labels;
    labels.reserve(ds.epochs.size());
    for (const auto& e : ds.epochs) labels.push_back(e.label);
    check_binary_labels(labels);

    const int T = ds.samples();
    const bool grid_search = cfg.kind == PipelineKind::BtAcm || cfg.kind == PipelineKind::Acm;
    std::vector<EmbeddingParams> grid;
    if (grid_search) {
        for (int p = cfg.p_grid.lo; p <= cfg.p_grid.hi; ++p) {
            for (int tau = cfg.tau_grid.lo; tau <= cfg.tau_grid.hi; ++tau) {
                if ((p - 1) * tau >= T) {
                    throw InvalidConfig("nested_cv: grid cell (p=" + std::to_string(p) +
                                        ", tau=" + std::to_string(tau) +
                                        ") infeasible for epoch length " + std::to_string(T));
                }
                grid.push_back(EmbeddingParams{p, tau});
            }
        }
    } else {
        grid.push_back(EmbeddingParams{1, 1});
    }

    const auto outer = stratified_folds(labels, cfg.outer_folds, cfg.seed);
    const auto all_epochs = epoch_pointers(ds.epochs);
    const int n = static_cast<int>(ds.epochs.size());

    // Outer train splits and their inner fold partitions (in local positions
    // of the train split), fixed across grid cells so comparisons are paired.
    std::vector<std::vector<int>> outer_train(cfg.outer_folds);
    std::vector<std::vector<std::vector<int>>> inner_parts(cfg.outer_folds);
    for (int f = 0; f < cfg.outer_folds; ++f) {
        std::vector<char> in_test(n, 0);
        for (int i : outer[f]) in_test[i] = 1;
        for (int i = 0; i < n; ++i) {
            if (!in_test[i]) outer_train[f].push_back(i);
        }
        if (grid_search && grid.size() > 1) {
            inner_parts[f] = stratified_folds(gather(labels, outer_train[f]), cfg.inner_folds,
                                              mix_seed(cfg.seed, static_cast<std::uint64_t>(f)));
        }
    }

    // Grid search: per-epoch representations depend only on (p, tau), never
    // on the split, so each cell is represented once and scored across all
    // fold pairs.
    std::vector<std::vector<double>> inner_auc(grid.size(),
                                               std::vector<double>(cfg.outer_folds, 0.0));
    if (grid_search && grid.size() > 1) {
        for (std::size_t cell = 0; cell < grid.size(); ++cell) {
            const Represented rep = represent(all_epochs, cfg.kind, grid[cell], cfg.threads);
            for (int f = 0; f < cfg.outer_folds; ++f) {
                const auto& pool = outer_train[f];
                double acc = 0.0;
                for (int g = 0; g < cfg.inner_folds; ++g) {
                    std::vector<int> val_idx, fit_idx;
                    std::vector<char> in_val(pool.size(), 0);
                    for (int local : inner_parts[f][g]) in_val[local] = 1;
                    for (std::size_t local = 0; local < pool.size(); ++local) {
                        (in_val[local] ? val_idx : fit_idx).push_back(pool[local]);
                    }
                    const FittedPipeline fitted = fit_pipeline(
                        rep.select(fit_idx), cfg.kind, gather(labels, fit_idx), cfg.c);
                    const Eigen::VectorXd scores = score_pipeline(fitted, rep.select(val_idx));
                    acc += roc_auc(scores, gather(labels, val_idx));
                }
                inner_auc[cell][f] = acc / cfg.inner_folds;
            }
        }
    }

    // Pick the best cell per outer fold (strict improvement in p-major,
    // tau-minor order prefers the cheaper model on ties), then refit from
    // raw epochs so the reported timings cover the full fit.
    EvalReport report;
    report.config = cfg;
    report.folds.resize(cfg.outer_folds);
    for (int f = 0; f < cfg.outer_folds; ++f) {
        std::size_t best = 0;
        if (grid_search && grid.size() > 1) {
            for (std::size_t cell = 1; cell < grid.size(); ++cell) {
                if (inner_auc[cell][f] > inner_auc[best][f]) best = cell;
            }
        }
        const EmbeddingParams params = grid[best];

        FoldReport& fr = report.folds[f];
        fr.p = params.p;
        fr.tau = params.tau;
        fr.n_train = static_cast<int>(outer_train[f].size());
        fr.n_test = static_cast<int>(outer[f].size());

        std::vector<const Epoch*> train_ptrs, test_ptrs;
        train_ptrs.reserve(outer_train[f].size());
        test_ptrs.reserve(outer[f].size());
        for (int i : outer_train[f]) train_ptrs.push_back(all_epochs[i]);
        for (int i : outer[f]) test_ptrs.push_back(all_epochs[i]);

        const auto t_fit = Clock::now();
        const Represented rep_train = represent(train_ptrs, cfg.kind, params, cfg.threads);
        const FittedPipeline fitted =
            fit_pipeline(rep_train, cfg.kind, gather(labels, outer_train[f]), cfg.c);
        const auto t_predict = Clock::now();
        const Represented rep_test = represent(test_ptrs, cfg.kind, params, cfg.threads);
        const Eigen::VectorXd scores = score_pipeline(fitted, rep_test);
        const auto t_done = Clock::now();

        fr.auc = roc_auc(scores, gather(labels, outer[f]));
        if (cfg.collect_timings) {
            fr.fit_ms = ms_between(t_fit, t_predict);
            fr.predict_ms = ms_between(t_predict, t_done);
        }
    }

    double mean = 0.0;
    for (const auto& fr : report.folds) mean += fr.auc;
    mean /= static_cast<double>(report.folds.size());
    double var = 0.0;
    for (const auto& fr : report.folds) var += (fr.auc - mean) * (fr.auc - mean);
    report.mean_auc = mean;
    report.std_auc = report.folds.size() > 1
                         ? std::sqrt(var / (static_cast<double>(report.folds.size()) - 1.0))
                         : 0.0;
    report.total_ms = cfg.collect_timings ? ms_between(t_start, Clock::now()) : 0.0;
    return report;
}

std::string report_to_json(const EvalReport& report,
                           const std::vector<std::pair<std::string, std::string>>& extra_config) {
    nlohmann::ordered_json j;
    j["schema"] = 1;
    nlohmann::ordered_json cfg;
    cfg["pipeline"] = to_string(report.config.kind);
    cfg["p_range"] = std::to_string(report.config.p_grid.lo) + ":" +
                     std::to_string(report.config.p_grid.hi);
    cfg["tau_range"] = std::to_string(report.config.tau_grid.lo) + ":" +
                       std::to_string(report.config.tau_grid.hi);
    cfg["c"] = report.config.c;
    cfg["outer_folds"] = report.config.outer_folds;
    cfg["inner_folds"] = report.config.inner_folds;
    cfg["seed"] = report.config.seed;
    for (const auto& [key, value] : extra_config) cfg[key] = value;
    j["config"] = cfg;
    j["folds"] = nlohmann::ordered_json::array();
    for (const auto& fr : report.folds) {
        nlohmann::ordered_json f;
        f["auc"] = fr.auc;
        f["p"] = fr.p;
        f["tau"] = fr.tau;
        f["fit_ms"] = fr.fit_ms;
        f["predict_ms"] = fr.predict_ms;
        f["n_train"] = fr.n_train;
        f["n_test"] = fr.n_test;
        j["folds"].push_back(f);
    }
    j["mean_auc"] = report.mean_auc;
    j["std_auc"] = report.std_auc;
    j["total_ms"] = report.total_ms;
    return j.dump(2) + "\n";
}

}  // namespace btacm

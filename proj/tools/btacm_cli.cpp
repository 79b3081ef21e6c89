// Command-line front end: synthetic dataset generation, nested-CV
// evaluation, feature export, and the full-matrix vs Block-Toeplitz timing
// benchmark.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "btacm/acm.hpp"
#include "btacm/features.hpp"
#include "btacm/learn.hpp"
#include "btacm/matfun.hpp"
#include "btacm/rng.hpp"
#include "btacm/signal.hpp"
#include "btacm/spd.hpp"
#include "btacm/verblunsky.hpp"

namespace {

using namespace btacm;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::pair<int, int> parse_int_range(const std::string& text, const char* what) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw UsageError(std::string(what) + ": expected LO:HI, got '" + text + "'");
    }
    try {
        return {std::stoi(text.substr(0, colon)), std::stoi(text.substr(colon + 1))};
    } catch (const std::exception&) {
        throw UsageError(std::string(what) + ": expected LO:HI, got '" + text + "'");
    }
}

std::pair<double, double> parse_band(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw UsageError("--band: expected LO:HI, got '" + text + "'");
    }
    try {
        return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
    } catch (const std::exception&) {
        throw UsageError("--band: expected LO:HI, got '" + text + "'");
    }
}

int default_threads() {
    if (const char* env = std::getenv("BTACM_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

double quantile(std::vector<double> sorted, double q) {
    const double pos = q * (static_cast<double>(sorted.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

// ---------------------------------------------------------------- synth ---

struct SynthArgs {
    std::string out;
    int channels = 4;
    int epochs_per_class = 100;
    int samples = 512;
    double fs = 250.0;
    std::uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& args) {
    SynthConfig cfg;
    cfg.channels = args.channels;
    cfg.epochs_per_class = args.epochs_per_class;
    cfg.samples = args.samples;
    cfg.fs = args.fs;
    const Dataset ds = synth_var(cfg, args.seed);
    write_epz(ds, args.out);
    std::printf("wrote %zu epochs (d=%d, T=%d, fs=%g) to %s\n", ds.epochs.size(), ds.channels(),
                ds.samples(), ds.fs, args.out.c_str());
    return 0;
}

// ----------------------------------------------------------------- eval ---

struct EvalArgs {
    std::string data;
    std::string pipeline = "bt-acm";
    std::string p_range = "1:10";
    std::string tau_range = "1:10";
    int outer = 5;
    int inner = 3;
    double c = 1.0;
    std::string band = "8:32";
    std::uint64_t seed = 0;
    std::string report;
    bool no_timings = false;
    bool allow_wide = false;
    int threads = 0;
};

int cmd_eval(const EvalArgs& args) {
    const auto [p_lo, p_hi] = parse_int_range(args.p_range, "--p-range");
    const auto [tau_lo, tau_hi] = parse_int_range(args.tau_range, "--tau-range");
    if (!args.allow_wide) {
        if (p_lo < 1 || p_hi > 10 || tau_lo < 1 || tau_hi > 10) {
            throw UsageError("grid must stay within [1,10]; pass --allow-wide to override");
        }
    }
    if (p_lo < 1 || tau_lo < 1 || p_lo > p_hi || tau_lo > tau_hi) {
        throw UsageError("malformed grid range");
    }
    const auto [band_lo, band_hi] = parse_band(args.band);

    Dataset ds = read_epz(args.data);
    const SosFilter filter = design_bandpass(4, band_lo, band_hi, ds.fs);
    for (auto& epoch : ds.epochs) {
        epoch = filtfilt(filter, epoch);
    }

    PipelineConfig cfg;
    cfg.kind = pipeline_from_string(args.pipeline);
    cfg.p_grid = {p_lo, p_hi};
    cfg.tau_grid = {tau_lo, tau_hi};
    cfg.c = args.c;
    cfg.outer_folds = args.outer;
    cfg.inner_folds = args.inner;
    cfg.seed = args.seed;
    cfg.threads = args.threads >= 1 ? args.threads : default_threads();
    cfg.collect_timings = !args.no_timings;

    const EvalReport report = nested_cv(ds, cfg);
    const std::string json = report_to_json(report, {{"band", args.band}, {"data", args.data}});
    if (!args.report.empty()) {
        std::ofstream out(args.report, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot open report path " + args.report);
        }
        out << json;
    }
    std::printf("%s %s: auc %.4f +- %.4f over %d folds\n", args.pipeline.c_str(),
                args.data.c_str(), report.mean_auc, report.std_auc, cfg.outer_folds);
    return 0;
}

// ------------------------------------------------------------ transform ---

struct TransformArgs {
    std::string data;
    int p = 1;
    int tau = 1;
    std::string out;
};

int cmd_transform(const TransformArgs& args) {
    if (args.p < 1 || args.tau < 1) {
        throw UsageError("--p and --tau must be >= 1");
    }
    const Dataset ds = read_epz(args.data);
    if (ds.epochs.empty()) {
        throw UsageError("dataset is empty");
    }
    const EmbeddingParams params{args.p, args.tau};

    std::vector<BTDecomposition> decs;
    decs.reserve(ds.epochs.size());
    for (std::size_t i = 0; i < ds.epochs.size(); ++i) {
        try {
            decs.push_back(verblunsky_decompose(shrunk_lagged_blocks(ds.epochs[i], params)));
        } catch (const EpochTooShort& e) {
            throw UsageError("epoch " + std::to_string(i) + ": " + e.what());
        }
    }
    const ProductChart chart(fit_reference(decs));

    std::ofstream out(args.out, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot open output path " + args.out);
    }
    out << "label";
    for (const auto& name : feature_labels(ds.channels(), args.p)) {
        out << ',' << name;
    }
    out << '\n';
    char buf[64];
    for (std::size_t i = 0; i < ds.epochs.size(); ++i) {
        const Eigen::VectorXd x = chart.features(decs[i]);
        out << ds.epochs[i].label;
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", x(k));
            out << ',' << buf;
        }
        out << '\n';
    }
    std::printf("wrote %zu feature rows (%d columns) to %s\n", ds.epochs.size(),
                1 + feature_length(ds.channels(), args.p), args.out.c_str());
    return 0;
}

// ---------------------------------------------------------------- bench ---

struct BenchArgs {
    int channels = 22;
    int p = 10;
    int tau = 2;
    int trials = 100;
    std::uint64_t seed = 0;
};

// Stationary mixed-AR epochs for timing; class structure is irrelevant here.
std::vector<Epoch> bench_epochs(const BenchArgs& args, int T) {
    Rng rng(args.seed);
    const int d = args.channels;
    Eigen::MatrixXd mix(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) mix(i, j) = rng.gaussian() / std::sqrt(double(d));
    std::vector<Epoch> epochs(args.trials);
    for (auto& epoch : epochs) {
        Eigen::MatrixXd z(d, T);
        for (int i = 0; i < d; ++i) {
            const double a = i % 2 == 0 ? 0.6 : 0.35;
            const double innov = std::sqrt(1.0 - a * a);
            z(i, 0) = rng.gaussian();
            for (int t = 1; t < T; ++t) z(i, t) = a * z(i, t - 1) + innov * rng.gaussian();
        }
        epoch.data = mix * z;
        epoch.label = 0;
    }
    return epochs;
}

int cmd_bench(const BenchArgs& args) {
    constexpr int kSamples = 512;
    if (args.channels < 2 || args.p < 1 || args.tau < 1 || args.trials < 1) {
        throw UsageError("bench: need channels >= 2, p >= 1, tau >= 1, trials >= 1");
    }
    if ((args.p - 1) * args.tau >= kSamples) {
        throw UsageError("bench: (p-1)*tau must be below the internal epoch length of 512");
    }
    const EmbeddingParams params{args.p, args.tau};
    const std::vector<Epoch> epochs = bench_epochs(args, kSamples);

    // References fitted once, outside the timed region, as a trained
    // pipeline would hold them.
    const Eigen::MatrixXd full_whitener = spd_fn(acm_sample(epochs[0], params), SpdFn::InvSqrt);
    const ProductChart chart(
        fit_reference({verblunsky_decompose(shrunk_lagged_blocks(epochs[0], params))}));

    using Clock = std::chrono::steady_clock;
    std::vector<double> full_ms(epochs.size()), bt_ms(epochs.size());

    for (std::size_t i = 0; i < epochs.size(); ++i) {
        const auto t0 = Clock::now();
        const Eigen::MatrixXd s = acm_sample(epochs[i], params);
        const Eigen::VectorXd x = whitened_log_vector(full_whitener, s);
        const auto t1 = Clock::now();
        full_ms[i] = std::chrono::duration<double, std::milli>(t1 - t0).count();
        if (!x.allFinite()) throw NumericalError("bench: non-finite full-path features");
    }
    for (std::size_t i = 0; i < epochs.size(); ++i) {
        const auto t0 = Clock::now();
        const BTDecomposition dec = verblunsky_decompose(shrunk_lagged_blocks(epochs[i], params));
        const Eigen::VectorXd x = chart.features(dec);
        const auto t1 = Clock::now();
        bt_ms[i] = std::chrono::duration<double, std::milli>(t1 - t0).count();
        if (!x.allFinite()) throw NumericalError("bench: non-finite bt-path features");
    }

    std::sort(full_ms.begin(), full_ms.end());
    std::sort(bt_ms.begin(), bt_ms.end());
    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["channels"] = args.channels;
    j["p"] = args.p;
    j["tau"] = args.tau;
    j["trials"] = args.trials;
    j["full_median_ms"] = quantile(full_ms, 0.5);
    j["full_iqr_ms"] = quantile(full_ms, 0.75) - quantile(full_ms, 0.25);
    j["bt_median_ms"] = quantile(bt_ms, 0.5);
    j["bt_iqr_ms"] = quantile(bt_ms, 0.75) - quantile(bt_ms, 0.25);
    j["ratio"] = quantile(full_ms, 0.5) / quantile(bt_ms, 0.5);
    std::printf("%s\n", j.dump().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Block-Toeplitz augmented-covariance classification toolkit"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "generate a synthetic two-class EPZ dataset");
    synth->add_option("--out", synth_args.out, "output EPZ path")->required();
    synth->add_option("--channels", synth_args.channels, "channel count");
    synth->add_option("--epochs-per-class", synth_args.epochs_per_class, "epochs per class");
    synth->add_option("--samples", synth_args.samples, "samples per epoch");
    synth->add_option("--fs", synth_args.fs, "sampling rate, Hz");
    synth->add_option("--seed", synth_args.seed, "generator seed");

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "nested cross-validation on an EPZ dataset");
    eval->add_option("--data", eval_args.data, "input EPZ path")->required();
    eval->add_option("--pipeline", eval_args.pipeline, "bt-acm | acm | ts-svm | mdm");
    eval->add_option("--p-range", eval_args.p_range, "embedding order grid LO:HI");
    eval->add_option("--tau-range", eval_args.tau_range, "embedding delay grid LO:HI");
    eval->add_option("--outer", eval_args.outer, "outer folds");
    eval->add_option("--inner", eval_args.inner, "inner folds");
    eval->add_option("--c", eval_args.c, "SVM regularization constant");
    eval->add_option("--band", eval_args.band, "band-pass LO:HI in Hz");
    eval->add_option("--seed", eval_args.seed, "fold shuffle seed");
    eval->add_option("--report", eval_args.report, "JSON report output path");
    eval->add_flag("--no-timings", eval_args.no_timings, "zero timing fields in the report");
    eval->add_flag("--allow-wide", eval_args.allow_wide, "allow grids outside [1,10]");
    eval->add_option("--threads", eval_args.threads, "worker threads (default: cores)");

    TransformArgs transform_args;
    auto* transform = app.add_subcommand("transform", "export tangent features as CSV");
    transform->add_option("--data", transform_args.data, "input EPZ path")->required();
    transform->add_option("--p", transform_args.p, "embedding order")->required();
    transform->add_option("--tau", transform_args.tau, "embedding delay")->required();
    transform->add_option("--out", transform_args.out, "output CSV path")->required();

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "time full-matrix vs Block-Toeplitz features");
    bench->add_option("--channels", bench_args.channels, "channel count");
    bench->add_option("--p", bench_args.p, "embedding order");
    bench->add_option("--tau", bench_args.tau, "embedding delay");
    bench->add_option("--trials", bench_args.trials, "epochs to time");
    bench->add_option("--seed", bench_args.seed, "generator seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help();
        return 2;
    }

    try {
        if (synth->parsed()) return cmd_synth(synth_args);
        if (eval->parsed()) return cmd_eval(eval_args);
        if (transform->parsed()) return cmd_transform(transform_args);
        if (bench->parsed()) return cmd_bench(bench_args);
        std::cerr << app.help();
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const InvalidConfig& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const InvalidBand& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const EpochTooShort& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DegenerateLabels& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

#include "btacm/features.hpp"

#include <cmath>

#include "btacm/matfun.hpp"
#include "btacm/siegel.hpp"
#include "btacm/spd.hpp"

namespace btacm {

namespace {

void check_consistent(const std::vector<BTDecomposition>& decs) {
    if (decs.empty()) {
        throw InvalidInput("fit_reference: empty input");
    }
    for (const auto& dec : decs) {
        if (dec.d != decs[0].d || dec.p != decs[0].p) {
            throw ShapeError("fit_reference: decompositions disagree on (d, p)");
        }
    }
}

void check_shapes(const BTDecomposition& dec, int d, int p, const char* who) {
    if (dec.d != d || dec.p != p || dec.omegas.size() != static_cast<std::size_t>(p - 1)) {
        throw ShapeError(std::string(who) + ": decomposition does not match reference (d, p)");
    }
}

}  // namespace

ProductReference fit_reference(const std::vector<BTDecomposition>& decs, SiegelRefMode mode) {
    check_consistent(decs);
    const int d = decs[0].d;
    const int p = decs[0].p;

    std::vector<Eigen::MatrixXd> p0s;
    p0s.reserve(decs.size());
    for (const auto& dec : decs) p0s.push_back(dec.p0);

    ProductReference ref;
    ref.d = d;
    ref.p = p;
    ref.spd_ref = frechet_mean(p0s);
    ref.siegel_refs.reserve(p - 1);
    for (int l = 0; l < p - 1; ++l) {
        if (mode == SiegelRefMode::Origin) {
            ref.siegel_refs.push_back(Eigen::MatrixXd::Zero(d, d));
        } else {
            Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(d, d);
            for (const auto& dec : decs) mean += dec.omegas[l];
            mean /= static_cast<double>(decs.size());
            // the disk is convex, so the mean is interior up to rounding
            const double smax = svd(mean).singular_values(0);
            if (smax >= 1.0 - 1e-9) {
                mean *= (1.0 - 1e-9) / smax;
            }
            ref.siegel_refs.push_back(std::move(mean));
        }
    }
    return ref;
}

int feature_length(int d, int p) {
    return d * (d + 1) / 2 + (p - 1) * d * d;
}

std::vector<std::string> feature_labels(int d, int p) {
    std::vector<std::string> labels;
    labels.reserve(feature_length(d, p));
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j)
            labels.push_back("p0_" + std::to_string(i) + "_" + std::to_string(j));
    for (int l = 1; l < p; ++l)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                labels.push_back("om" + std::to_string(l) + "_" + std::to_string(i) + "_" +
                                 std::to_string(j));
    return labels;
}

ProductChart::ProductChart(ProductReference ref) : ref_(std::move(ref)) {
    spd_whitener_ = spd_fn(ref_.spd_ref, SpdFn::InvSqrt);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(ref_.d, ref_.d);
    siegel_charts_.reserve(ref_.siegel_refs.size());
    for (const auto& psi : ref_.siegel_refs) {
        SiegelChart chart;
        chart.at_origin = psi.isZero(0.0);
        if (!chart.at_origin) {
            chart.psi = psi;
            chart.left_inv_sqrt = spd_fn((eye - psi * psi.transpose()).eval(), SpdFn::InvSqrt);
            chart.right_sqrt = spd_fn((eye - psi.transpose() * psi).eval(), SpdFn::Sqrt);
        }
        siegel_charts_.push_back(std::move(chart));
    }
}

Eigen::VectorXd ProductChart::features(const BTDecomposition& dec) const {
    check_shapes(dec, ref_.d, ref_.p, "ProductChart::features");
    const int d = ref_.d;
    const int p = ref_.p;
    Eigen::VectorXd out(feature_length(d, p));

    // SPD block: sqrt(p) times the whitened-log upper triangle.
    const double wp = std::sqrt(static_cast<double>(p));
    const int spd_len = d * (d + 1) / 2;
    out.head(spd_len) = wp * whitened_log_vector(spd_whitener_, dec.p0);
    Eigen::Index k = spd_len;

    // Siegel blocks: sqrt(p-l) times the origin-chart tangent coordinates.
    for (int l = 1; l < p; ++l) {
        const SiegelChart& chart = siegel_charts_[l - 1];
        Eigen::MatrixXd t;
        if (chart.at_origin) {
            t = siegel_log0(dec.omegas[l - 1]);
        } else {
            const Eigen::Index n = d;
            Eigen::FullPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(n, n) -
                                                 chart.psi.transpose() * dec.omegas[l - 1]);
            if (!lu.isInvertible()) {
                throw NumericalError("ProductChart: Mobius denominator singular");
            }
            const Eigen::MatrixXd moved =
                chart.left_inv_sqrt * (dec.omegas[l - 1] - chart.psi) * lu.solve(chart.right_sqrt);
            t = siegel_log0(moved);
        }
        const double wl = std::sqrt(static_cast<double>(p - l));
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) out(k++) = wl * t(i, j);
    }
    return out;
}

Eigen::VectorXd bt_tangent_features(const BTDecomposition& dec, const ProductReference& ref) {
    return ProductChart(ref).features(dec);
}

double product_distance(const BTDecomposition& a, const BTDecomposition& b) {
    if (a.d != b.d || a.p != b.p) {
        throw ShapeError("product_distance: decompositions disagree on (d, p)");
    }
    const double ds = spd_distance(a.p0, b.p0);
    double acc = static_cast<double>(a.p) * ds * ds;
    for (int l = 1; l < a.p; ++l) {
        const double dl = siegel_distance(a.omegas[l - 1], b.omegas[l - 1]);
        acc += static_cast<double>(a.p - l) * dl * dl;
    }
    return std::sqrt(acc);
}

}  // namespace btacm

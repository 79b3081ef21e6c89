#pragma once

// Product-manifold reference fitting and the metric-weighted tangent feature
// map: sqrt(p) times the SPD tangent block followed by sqrt(p-l) times each
// Siegel tangent block, so Euclidean geometry on the features matches the
// product metric.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "btacm/errors.hpp"
#include "btacm/verblunsky.hpp"

namespace btacm {

struct ProductReference {
    Eigen::MatrixXd spd_ref;                   // Frechet mean of training P_0's
    std::vector<Eigen::MatrixXd> siegel_refs;  // p-1 interior points (default: origins)
    int d = 0;
    int p = 0;
};

enum class SiegelRefMode {
    Origin,         // zero matrices (default pipeline)
    EuclideanMean,  // per-level Euclidean means, clamped to the disk
};

ProductReference fit_reference(const std::vector<BTDecomposition>& decs,
                               SiegelRefMode mode = SiegelRefMode::Origin);

// Feature vector length d(d+1)/2 + (p-1) d^2 and the per-column labels used
// by the CSV export.
int feature_length(int d, int p);
std::vector<std::string> feature_labels(int d, int p);

Eigen::VectorXd bt_tangent_features(const BTDecomposition& dec, const ProductReference& ref);

// sqrt( p d_spd(P0_a, P0_b)^2 + sum_l (p-l) d_siegel(Omega_l^a, Omega_l^b)^2 )
double product_distance(const BTDecomposition& a, const BTDecomposition& b);

// Reference with its whiteners precomputed, for mapping many decompositions.
class ProductChart {
public:
    explicit ProductChart(ProductReference ref);

    Eigen::VectorXd features(const BTDecomposition& dec) const;
    const ProductReference& reference() const { return ref_; }

private:
    ProductReference ref_;
    Eigen::MatrixXd spd_whitener_;  // spd_ref^{-1/2}
    struct SiegelChart {
        bool at_origin = true;
        Eigen::MatrixXd left_inv_sqrt;   // (I - psi psi^T)^{-1/2}
        Eigen::MatrixXd right_sqrt;      // (I - psi^T psi)^{1/2}
        Eigen::MatrixXd psi;
    };
    std::vector<SiegelChart> siegel_charts_;
};

}  // namespace btacm

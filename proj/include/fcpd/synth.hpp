#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "fcpd/dense_tensor.hpp"
#include "fcpd/kruskal.hpp"

namespace fcpd {

/// Specification of a synthetic Kruskal tensor with controlled per-mode
/// collinearity and additive Gaussian noise at a target SNR.
struct SynthSpec {
    std::vector<Index> shape;
    Index rank = 2;
    std::vector<double> collinearity; // one c_n per mode
    double snr_db = 10.0;
    std::uint64_t seed = 0;
    Eigen::VectorXd weights; // empty = all ones

    void validate() const;
};

struct SynthData {
    DenseTensor noisy;
    KruskalTensor truth;
    double realized_snr_db = 0;
};

/// Factors A = Q L^T with Q a random orthonormal basis and L the Cholesky
/// factor of the unit-diagonal correlation matrix, so the pairwise column
/// correlations equal c_n exactly. Noise is scaled to hit the SNR exactly.
SynthData generate(const SynthSpec& spec);

struct ComponentMatch {
    std::vector<int> permutation; // est column matched to truth component r
    Eigen::MatrixXd signs;        // N x R, sign of the matched inner product
    double cost = 0;              // sum of (1 - congruence)
};

/// Optimal assignment between true and estimated components, minimizing
/// 1 - prod_n |a_r^T ahat_s| over unit-normalized columns.
ComponentMatch match_components(const KruskalTensor& truth, const KruskalTensor& est);

/// Minimum-cost assignment for a square cost matrix; returns the column
/// assigned to each row.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

/// dB ceiling reported for exact recoveries.
inline constexpr double kSaeDbCap = 300.0;

struct SaeReport {
    Eigen::MatrixXd alpha_sq;       // N x R squared angular errors, matched
    std::vector<int> permutation;
    double msae_db = 0;             // -10 log10(mean of all alpha^2), capped
    double median_sae_db = 0;       // -10 log10(median of all alpha^2), capped
    Eigen::VectorXd mode_mean_db;   // per-mode -10 log10(mean alpha^2)
    Eigen::VectorXd mode_median_db;
};

/// Squared angular errors after matching, with the dB statistics used by the
/// benchmark reports.
SaeReport sae(const KruskalTensor& truth, const KruskalTensor& est);

double sae_db(double alpha_sq_statistic);

} // namespace fcpd

#pragma once

#include <vector>

#include <Eigen/Core>

#include "fcpd/dense_tensor.hpp"

namespace fcpd {

/// Core tensor plus orthonormal factor matrices.
struct TuckerTensor {
    DenseTensor core;
    std::vector<Eigen::MatrixXd> factors;

    DenseTensor to_dense() const;
};

/// Tensor-times-matrix along one mode. With transpose_u the factor is applied
/// as U^T (compression); otherwise as U (expansion).
DenseTensor ttm(const DenseTensor& t, const Eigen::MatrixXd& u, int mode, bool transpose_u);

/// HOSVD initialization followed by `sweeps` rounds of higher-order
/// orthogonal iteration.
TuckerTensor tucker_hooi(const DenseTensor& t, const std::vector<Index>& ranks, int sweeps = 2);

struct RankOne {
    double weight = 0;
    std::vector<Eigen::VectorXd> vectors; // unit norm, one per mode
};

/// Best rank-one approximation (higher-order power iteration). For matrices
/// this is the leading singular triple.
RankOne best_rank_one(const DenseTensor& t);

/// Leading left singular vectors of the mode-n matricization, via the
/// mode-n Gram matrix.
Eigen::MatrixXd leading_mode_vectors(const DenseTensor& t, int mode, Index count);

} // namespace fcpd

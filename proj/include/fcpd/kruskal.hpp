#pragma once

#include <vector>

#include <Eigen/Core>

#include "fcpd/dense_tensor.hpp"

namespace fcpd {

/// Weights plus N factor matrices. After normalize() the columns are
/// unit-norm and the weights are positive and sorted descending.
struct KruskalTensor {
    Eigen::VectorXd weights;
    std::vector<Eigen::MatrixXd> factors;

    Index order() const { return static_cast<Index>(factors.size()); }
    Index rank() const { return weights.size(); }
    std::vector<Index> shape() const;

    /// Consistency of ranks and factor sizes; throws std::invalid_argument.
    void validate() const;
};

/// Column-wise Kronecker product of the listed matrices, with the first
/// listed matrix's row index varying fastest. Under the column-major vec
/// convention this is kron(m_K, ..., m_1) column by column.
Eigen::MatrixXd khatri_rao(const std::vector<Eigen::MatrixXd>& mats);
Eigen::MatrixXd khatri_rao(const std::vector<const Eigen::MatrixXd*>& mats);

DenseTensor kruskal_to_dense(const KruskalTensor& k);

/// Unfolding in Kruskal form: same weights, merged factors equal to the
/// Khatri-Rao product over each group.
KruskalTensor kruskal_unfold(const KruskalTensor& k, const UnfoldingRule& rule);

/// Reorders the factor list; weights unchanged.
KruskalTensor kruskal_transpose(const KruskalTensor& k, const std::vector<int>& perm);

/// Unit columns, positive weights (sign flips absorbed into the first
/// factor), components stably sorted by descending weight.
KruskalTensor normalize(const KruskalTensor& k);

/// Mode-n matricization of t times the Khatri-Rao product of the other
/// factors: the I_n x R gradient kernel.
Eigen::MatrixXd mttkrp(const DenseTensor& t, const std::vector<Eigen::MatrixXd>& factors,
                       int mode);

double kruskal_norm_squared(const KruskalTensor& k);
double kruskal_inner(const KruskalTensor& a, const KruskalTensor& b);
/// <t, dense(k)> without materializing dense(k).
double dense_kruskal_inner(const DenseTensor& t, const KruskalTensor& k);

/// ||t - dense(k)||_F / ||t||_F, computed exactly on the dense difference.
double relative_error_dense(const DenseTensor& t, const KruskalTensor& k);

} // namespace fcpd

#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fcpd/als.hpp"
#include "fcpd/kruskal.hpp"

namespace fcpd {

/// Rank-J Kruskal tensor with block structure: the first N-2 factors are
/// shared across each block r (replicated J_r times), the last two modes
/// carry per-block orthonormal matrices U_r and the sigma-scaled V_r from a
/// truncated SVD of each merged component. The split pair is always the last
/// two modes; callers permute modes to honour that.
struct StructuredKruskal {
    Eigen::VectorXd lambda;               // per-block weights, length R
    std::vector<int> block_sizes;         // J_r, length R
    std::vector<Eigen::MatrixXd> shared;  // B^(n), I_n x R, n = 1..N-2
    Eigen::MatrixXd split_u;              // [U_1 ... U_R], I_{N-1} x J
    Eigen::MatrixXd split_v;              // [V_1 diag(s_1) ... V_R diag(s_R)], I_N x J

    Index order() const { return Index(shared.size()) + 2; }
    Index rank() const { return lambda.size(); }
    Index total_rank() const;
    std::vector<Index> shape() const;

    /// Generic rank-J Kruskal expansion (replicated shared factors).
    KruskalTensor to_kruskal() const;

    /// Rank-R Kruskal tensor keeping only each block's leading pair.
    KruskalTensor leading_rank_r() const;

    void validate() const;
};

/// ||Ytilde||_F^2 from Gram identities, never materializing the tensor.
double structured_norm_squared(const StructuredKruskal& s);

/// (Ytilde_(n) - Yhat_(n)) * khatri_rao(other factors of `current`), computed
/// through the factored identities; never materializes either tensor.
Eigen::MatrixXd structured_gradient(const StructuredKruskal& s, const KruskalTensor& current,
                                    int mode);

/// ALS for the structured tensor using only factored quantities. The error is
/// measured against the Gram-computed norm of the structured tensor.
std::pair<KruskalTensor, FitReport> structured_als(const StructuredKruskal& s, Index rank,
                                                   const KruskalTensor& init,
                                                   const AlsOptions& opts = {});

} // namespace fcpd

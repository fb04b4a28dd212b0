#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fcpd/als.hpp"
#include "fcpd/dense_tensor.hpp"
#include "fcpd/kruskal.hpp"

namespace fcpd {

enum class FcpMode { rank_one, low_rank };

struct FcpOptions {
    UnfoldingRule rule;
    /// Energy threshold for the truncated SVDs of merged components.
    double tau = 0.99;
    FcpMode mode = FcpMode::low_rank;
    bool refine = false;
    bool compress = true;
    int hooi_sweeps = 2;
    /// Cap on each block rank J_r.
    int j_max = 10;
    /// Decompose with rank R + rank_overshoot, truncate to R before refinement.
    Index rank_overshoot = 0;
    AlsOptions unfolded_als;   // stage-2 CPD of the unfolded (compressed) tensor
    AlsOptions structured_als; // stage-3 structured runs
    AlsOptions refine_als;     // stage-4 refinement
    std::uint64_t seed = 0;
};

/// Per-run snapshot of the first split, kept for residual diagnostics.
struct FcpRunArtifacts {
    bool available = false;
    double stage2_residual_sq = 0;  // ||Y_unfolded - stage-2 estimate||^2
    KruskalTensor ytilde_j;          // rank-J working tensor of the first run
    KruskalTensor ytilde_r;          // leading-pair rank-R working tensor
    UnfoldingRule working_rule;      // layout of the working tensor w.r.t. the input
};

struct FcpTrace {
    double seconds_compress = 0;
    double seconds_unfolded_cpd = 0;
    double seconds_reconstruct = 0;
    double seconds_refine = 0;
    std::vector<std::vector<int>> block_ranks; // J_r per reconstruction run
    double unfolded_relative_error = 0;        // stage-2 epsilon on the unfolded tensor
    FitReport fit;                             // against the input tensor
    std::vector<std::string> warnings;
    FcpRunArtifacts first_run;
};

/// Algorithm: unfold (+ optional Tucker compression), CPD of the low-order
/// tensor, then recover each original-mode component from the merged factors
/// by best rank-one approximation.
std::pair<KruskalTensor, FcpTrace> fcp_rank_one(const DenseTensor& t, Index rank,
                                                const FcpOptions& opts);

/// Low-rank variant: merged components are split by truncated SVDs into a
/// structured rank-J Kruskal tensor which is reduced back to rank R by the
/// fast structured ALS, one peeled mode per run; optional ALS refinement on
/// the input tensor.
std::pair<KruskalTensor, FcpTrace> fcp_low_rank(const DenseTensor& t, Index rank,
                                                const FcpOptions& opts);

/// Dispatches on opts.mode.
std::pair<KruskalTensor, FcpTrace> fcp(const DenseTensor& t, Index rank,
                                       const FcpOptions& opts);

struct ErrorOrdering {
    double stage2_sq = 0;   // ||E||^2
    double low_rank_sq = 0; // ||Y - Ytilde_J||^2
    double rank_one_sq = 0; // ||Y - Ytilde_R||^2
};

/// Recomputes the three residuals of the first low-rank run and checks
/// ||E||^2 <= ||Y - Ytilde_J||^2 <= ||Y - Ytilde_R||^2 (1e-9 relative slack).
/// Throws invalid_state_error when the trace holds no artifacts and
/// numeric_error when the ordering is violated.
ErrorOrdering error_ordering_check(const DenseTensor& t, const FcpTrace& trace);

} // namespace fcpd

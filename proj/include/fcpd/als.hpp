#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "fcpd/dense_tensor.hpp"
#include "fcpd/kruskal.hpp"

namespace fcpd {

enum class CpInit { random, svd_leading, given };

struct AlsOptions {
    int max_iters = 1000;
    /// Relative-change stopping rule: |eps_old - eps| <= tol * eps.
    double tol = 1e-8;
    /// Absolute stopping rule: eps <= abs_tol.
    double abs_tol = 1e-8;
    CpInit init = CpInit::random;
    std::uint64_t seed = 0;
    std::optional<KruskalTensor> initial_guess;
};

struct FitReport {
    double relative_error = 0; // ||Y - Yhat||_F / ||Y||_F
    double fit_percent = 0;    // 100 * (1 - relative_error)
    int iterations = 0;
    double seconds = 0;
    bool degenerate_warning = false; // a Gram solve fell back to the pseudo-inverse
    std::vector<double> error_history;
};

/// Alternating least squares CP decomposition. Each sweep solves the exact
/// per-mode least-squares update via the mode Gram Hadamard product.
std::pair<KruskalTensor, FitReport> cp_als(const DenseTensor& t, Index rank,
                                           const AlsOptions& opts = {});

/// Initial factors for cp_als; exposed for solvers that share the scheme.
std::vector<Eigen::MatrixXd> cp_initial_factors(const DenseTensor& t, Index rank,
                                                const AlsOptions& opts);

/// Solves X * gram = rhs^T row-wise, i.e. returns rhs * gram^-1, falling back
/// to a pseudo-inverse (singular values below 1e-12 * sigma_max dropped) when
/// the Gram matrix is rank deficient. Sets *degenerate when it does.
Eigen::MatrixXd solve_gram(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& rhs,
                           bool* degenerate);

} // namespace fcpd

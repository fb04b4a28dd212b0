#include "fcpd/tucker.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "fcpd/errors.hpp"

namespace fcpd {

DenseTensor ttm(const DenseTensor& t, const Eigen::MatrixXd& u, int mode, bool transpose_u) {
    const Index N = t.order();
    if (mode < 0 || mode >= N) throw std::invalid_argument("ttm mode out of range");
    const Index In = t.shape()[mode];
    const Index rows_in = transpose_u ? u.rows() : u.cols();
    const Index rows_out = transpose_u ? u.cols() : u.rows();
    if (rows_in != In) throw std::invalid_argument("ttm factor does not match mode size");

    Index left = 1, right = 1;
    for (Index n = 0; n < mode; ++n) left *= t.shape()[n];
    for (Index n = mode + 1; n < N; ++n) right *= t.shape()[n];

    std::vector<Index> out_shape = t.shape();
    out_shape[mode] = rows_out;
    DenseTensor out(out_shape);

    // per-slab GEMM over the trailing modes
    const Index in_slab = left * In;
    const Index out_slab = left * rows_out;
    for (Index q = 0; q < right; ++q) {
        Eigen::Map<const Eigen::MatrixXd> y(t.data() + q * in_slab, left, In);
        Eigen::Map<Eigen::MatrixXd> z(out.data() + q * out_slab, left, rows_out);
        if (transpose_u)
            z.noalias() = y * u;
        else
            z.noalias() = y * u.transpose();
    }
    return out;
}

Eigen::MatrixXd leading_mode_vectors(const DenseTensor& t, int mode, Index count) {
    const Index N = t.order();
    const Index In = t.shape()[mode];
    if (count < 1 || count > In) throw std::invalid_argument("invalid subspace size");

    Index left = 1, right = 1;
    for (Index n = 0; n < mode; ++n) left *= t.shape()[n];
    for (Index n = mode + 1; n < N; ++n) right *= t.shape()[n];

    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(In, In);
    const Index slab = left * In;
    for (Index q = 0; q < right; ++q) {
        Eigen::Map<const Eigen::MatrixXd> y(t.data() + q * slab, left, In);
        gram.noalias() += y.transpose() * y;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) throw numeric_error("mode Gram eigendecomposition failed");
    // eigenvalues ascending; take the trailing `count` columns in reverse
    Eigen::MatrixXd u(In, count);
    for (Index j = 0; j < count; ++j) u.col(j) = eig.eigenvectors().col(In - 1 - j);
    return u;
}

DenseTensor TuckerTensor::to_dense() const {
    DenseTensor out = core;
    for (Index n = 0; n < Index(factors.size()); ++n)
        out = ttm(out, factors[n], int(n), /*transpose_u=*/false);
    return out;
}

TuckerTensor tucker_hooi(const DenseTensor& t, const std::vector<Index>& ranks, int sweeps) {
    const Index N = t.order();
    if (Index(ranks.size()) != N) throw std::invalid_argument("one rank per mode required");
    for (Index n = 0; n < N; ++n)
        if (ranks[n] < 1 || ranks[n] > t.shape()[n])
            throw std::invalid_argument("Tucker ranks must satisfy 1 <= R_n <= I_n");

    TuckerTensor tt;
    tt.factors.resize(N);
    for (Index n = 0; n < N; ++n) tt.factors[n] = leading_mode_vectors(t, int(n), ranks[n]);

    for (int sweep = 0; sweep < sweeps; ++sweep) {
        for (Index n = 0; n < N; ++n) {
            DenseTensor w = t;
            for (Index k = 0; k < N; ++k)
                if (k != n) w = ttm(w, tt.factors[k], int(k), /*transpose_u=*/true);
            tt.factors[n] = leading_mode_vectors(w, int(n), ranks[n]);
        }
    }

    tt.core = t;
    for (Index n = 0; n < N; ++n) tt.core = ttm(tt.core, tt.factors[n], int(n), true);
    return tt;
}

RankOne best_rank_one(const DenseTensor& t) {
    const Index N = t.order();
    const double nrm = t.frobenius_norm();
    if (nrm == 0) throw degenerate_component_error("rank-one approximation of a zero tensor");

    RankOne r1;
    r1.vectors.resize(N);
    for (Index n = 0; n < N; ++n) r1.vectors[n] = leading_mode_vectors(t, int(n), 1).col(0);

    double g_old = 0;
    const int max_sweeps = 200;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double g = 0;
        for (Index n = 0; n < N; ++n) {
            DenseTensor w = t;
            for (Index k = 0; k < N; ++k) {
                if (k == n) continue;
                Eigen::MatrixXd u = r1.vectors[k].transpose(); // 1 x I_k
                w = ttm(w, u, int(k), /*transpose_u=*/false);
            }
            Eigen::Map<const Eigen::VectorXd> wv(w.data(), w.size());
            g = wv.norm();
            if (g == 0) throw degenerate_component_error("power iteration collapsed to zero");
            r1.vectors[n] = wv / g;
        }
        if (std::abs(g - g_old) <= 1e-13 * std::max(1.0, g)) {
            g_old = g;
            break;
        }
        g_old = g;
    }
    r1.weight = g_old;
    return r1;
}

} // namespace fcpd

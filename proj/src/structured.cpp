#include "fcpd/structured.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "fcpd/errors.hpp"

namespace fcpd {

namespace {

using Clock = std::chrono::steady_clock;

// Replicates rows/columns of an R x R matrix into block shape (J x R or J x J).
Eigen::MatrixXd replicate_rows(const Eigen::MatrixXd& x, const std::vector<int>& blocks) {
    Index J = 0;
    for (int b : blocks) J += b;
    Eigen::MatrixXd out(J, x.cols());
    Index row = 0;
    for (std::size_t r = 0; r < blocks.size(); ++r)
        for (int j = 0; j < blocks[r]; ++j) out.row(row++) = x.row(Index(r));
    return out;
}

} // namespace

Index StructuredKruskal::total_rank() const {
    return std::accumulate(block_sizes.begin(), block_sizes.end(), Index(0));
}

std::vector<Index> StructuredKruskal::shape() const {
    std::vector<Index> s;
    s.reserve(shared.size() + 2);
    for (const auto& b : shared) s.push_back(b.rows());
    s.push_back(split_u.rows());
    s.push_back(split_v.rows());
    return s;
}

void StructuredKruskal::validate() const {
    const Index R = lambda.size();
    if (R < 1) throw std::invalid_argument("structured tensor has no blocks");
    if (Index(block_sizes.size()) != R)
        throw std::invalid_argument("one block size per component required");
    Index J = 0;
    for (int b : block_sizes) {
        if (b < 1) throw std::invalid_argument("block sizes must be positive");
        J += b;
    }
    for (const auto& b : shared)
        if (b.cols() != R) throw std::invalid_argument("shared factor column count mismatch");
    if (split_u.cols() != J || split_v.cols() != J)
        throw std::invalid_argument("split factor column count does not match total rank");

    // per-block orthogonality: U_r orthonormal, V_r orthogonal with the
    // singular values carried as column norms
    Index col = 0;
    for (Index r = 0; r < R; ++r) {
        const int jr = block_sizes[r];
        const auto u = split_u.middleCols(col, jr);
        Eigen::MatrixXd gu = u.transpose() * u;
        gu.diagonal().array() -= 1.0;
        if (gu.cwiseAbs().maxCoeff() > 1e-10)
            throw std::invalid_argument("split U block is not orthonormal");
        const auto v = split_v.middleCols(col, jr);
        const Eigen::MatrixXd gv = v.transpose() * v;
        for (int i = 0; i < jr; ++i)
            for (int j = i + 1; j < jr; ++j)
                if (std::abs(gv(i, j)) >
                    1e-10 * std::sqrt(gv(i, i) * gv(j, j)) + 1e-30)
                    throw std::invalid_argument("split V block is not orthogonal");
        col += jr;
    }
}

KruskalTensor StructuredKruskal::to_kruskal() const {
    validate();
    KruskalTensor k;
    const Index J = total_rank();
    k.weights.resize(J);
    Index col = 0;
    for (Index r = 0; r < rank(); ++r)
        for (int j = 0; j < block_sizes[r]; ++j) k.weights(col++) = lambda(r);
    for (const auto& b : shared)
        k.factors.push_back(replicate_rows((b.transpose()).eval(), block_sizes).transpose());
    k.factors.push_back(split_u);
    k.factors.push_back(split_v);
    return k;
}

KruskalTensor StructuredKruskal::leading_rank_r() const {
    validate();
    KruskalTensor k;
    const Index R = rank();
    k.weights.resize(R);
    std::vector<Eigen::MatrixXd> lead_uv(2);
    lead_uv[0].resize(split_u.rows(), R);
    lead_uv[1].resize(split_v.rows(), R);
    Index col = 0;
    for (Index r = 0; r < R; ++r) {
        const double s1 = split_v.col(col).norm(); // sigma_r1 (V columns carry sigma)
        k.weights(r) = lambda(r) * s1;
        lead_uv[0].col(r) = split_u.col(col);
        lead_uv[1].col(r) = s1 > 0 ? (split_v.col(col) / s1).eval() : split_v.col(col);
        col += block_sizes[r];
    }
    k.factors = shared;
    k.factors.push_back(std::move(lead_uv[0]));
    k.factors.push_back(std::move(lead_uv[1]));
    return k;
}

double structured_norm_squared(const StructuredKruskal& s) {
    s.validate();
    const Index J = s.total_rank();
    Eigen::VectorXd lam(J);
    Index col = 0;
    for (Index r = 0; r < s.rank(); ++r)
        for (int j = 0; j < s.block_sizes[r]; ++j) lam(col++) = s.lambda(r);

    Eigen::MatrixXd had = Eigen::MatrixXd::Ones(J, J);
    for (const auto& b : s.shared) {
        Eigen::MatrixXd g = b.transpose() * b;
        Eigen::MatrixXd rep = replicate_rows(replicate_rows(g, s.block_sizes).transpose(),
                                             s.block_sizes);
        had = had.cwiseProduct(rep);
    }
    had = had.cwiseProduct(s.split_u.transpose() * s.split_u);
    had = had.cwiseProduct(s.split_v.transpose() * s.split_v);
    return lam.dot(had * lam);
}

namespace {

struct FastTerms {
    // per-block products against the current estimate's factors
    std::vector<Eigen::MatrixXd> shared_prod; // B^(k)^T A^(k), R x R
    Eigen::MatrixXd omega;                    // hadamard of shared_prod, R x R (col r = block r)
    Eigen::MatrixXd kmat;                     // R x R, row r = lambda_r 1^T (U_r^T A ⊛ V_r^T A)
};

// omega(s, r) = prod_k <a_s^(k), b_r^(k)>; kmat as in the fast-gradient identities.
FastTerms fast_terms(const StructuredKruskal& s, const std::vector<Eigen::MatrixXd>& est) {
    const Index R = s.lambda.size();
    const Index Rest = est.front().cols();
    const Index nshared = Index(s.shared.size());
    FastTerms ft;
    ft.shared_prod.resize(nshared);
    Eigen::MatrixXd omega_t = Eigen::MatrixXd::Ones(R, Rest); // (r, s)
    for (Index k = 0; k < nshared; ++k) {
        ft.shared_prod[k] = s.shared[k].transpose() * est[k]; // R x Rest
        omega_t = omega_t.cwiseProduct(ft.shared_prod[k]);
    }
    ft.omega = omega_t.transpose(); // (s, r)

    const Eigen::MatrixXd ua = s.split_u.transpose() * est[nshared];     // J x Rest
    const Eigen::MatrixXd va = s.split_v.transpose() * est[nshared + 1]; // J x Rest
    ft.kmat.resize(R, Rest);
    Index row = 0;
    for (Index r = 0; r < R; ++r) {
        ft.kmat.row(r) = s.lambda(r) *
                         (ua.middleRows(row, s.block_sizes[r])
                              .cwiseProduct(va.middleRows(row, s.block_sizes[r])))
                             .colwise()
                             .sum();
        row += s.block_sizes[r];
    }
    return ft;
}

// Ytilde_(n) * khatri_rao(other est factors), via the factored identities.
Eigen::MatrixXd structured_mttkrp(const StructuredKruskal& s,
                                  const std::vector<Eigen::MatrixXd>& est, Index n,
                                  const FastTerms& ft) {
    const Index N = s.order();
    const Index nshared = N - 2;
    const Index R = s.lambda.size();

    if (n < nshared) {
        Eigen::MatrixXd had = ft.kmat;
        for (Index k = 0; k < nshared; ++k)
            if (k != n) had = had.cwiseProduct(ft.shared_prod[k]);
        return s.shared[n] * had;
    }

    Eigen::MatrixXd result;
    if (n == nshared) {
        const Eigen::MatrixXd va = s.split_v.transpose() * est[nshared + 1]; // J x Rest
        result = Eigen::MatrixXd::Zero(s.split_u.rows(), est.front().cols());
        Index col = 0;
        for (Index r = 0; r < R; ++r) {
            const auto ur = s.split_u.middleCols(col, s.block_sizes[r]);
            const auto vr = va.middleRows(col, s.block_sizes[r]);
            result.noalias() +=
                s.lambda(r) * ur * (vr * ft.omega.col(r).asDiagonal());
            col += s.block_sizes[r];
        }
    } else {
        const Eigen::MatrixXd ua = s.split_u.transpose() * est[nshared]; // J x Rest
        result = Eigen::MatrixXd::Zero(s.split_v.rows(), est.front().cols());
        Index col = 0;
        for (Index r = 0; r < R; ++r) {
            const auto vr = s.split_v.middleCols(col, s.block_sizes[r]);
            const auto ur = ua.middleRows(col, s.block_sizes[r]);
            result.noalias() +=
                s.lambda(r) * vr * (ur * ft.omega.col(r).asDiagonal());
            col += s.block_sizes[r];
        }
    }
    return result;
}

} // namespace

Eigen::MatrixXd structured_gradient(const StructuredKruskal& s, const KruskalTensor& current,
                                    int mode) {
    s.validate();
    current.validate();
    if (current.order() != s.order() || current.shape() != s.shape())
        throw std::invalid_argument("estimate does not match the structured tensor");
    if (mode < 0 || mode >= s.order()) throw std::invalid_argument("mode out of range");

    const FastTerms ft = fast_terms(s, current.factors);
    Eigen::MatrixXd ytilde_term = structured_mttkrp(s, current.factors, mode, ft);

    const Index R = current.rank();
    Eigen::MatrixXd gamma = Eigen::MatrixXd::Ones(R, R);
    for (Index k = 0; k < current.order(); ++k)
        if (k != mode)
            gamma = gamma.cwiseProduct(current.factors[k].transpose() * current.factors[k]);
    return ytilde_term - current.factors[mode] * current.weights.asDiagonal() * gamma;
}

std::pair<KruskalTensor, FitReport> structured_als(const StructuredKruskal& s, Index rank,
                                                   const KruskalTensor& init,
                                                   const AlsOptions& opts) {
    s.validate();
    init.validate();
    if (init.rank() != rank) throw std::invalid_argument("init rank does not match");
    if (init.shape() != s.shape()) throw std::invalid_argument("init shape does not match");
    if (opts.max_iters < 1 || opts.tol <= 0) throw std::invalid_argument("bad ALS options");

    const auto t0 = Clock::now();
    const Index N = s.order();
    const double norm_sq = structured_norm_squared(s);
    const double norm_y = std::sqrt(std::max(0.0, norm_sq));
    if (norm_y == 0) throw degenerate_component_error("structured tensor has zero norm");

    std::vector<Eigen::MatrixXd> est = init.factors;
    est[0] = est[0] * init.weights.asDiagonal();

    std::vector<Eigen::MatrixXd> grams(N);
    for (Index n = 0; n < N; ++n) grams[n] = est[n].transpose() * est[n];

    FitReport report;
    double eps = 1.0;
    bool have_eps = false;

    for (int iter = 1; iter <= opts.max_iters; ++iter) {
        for (Index n = 0; n < N; ++n) {
            const FastTerms ft = fast_terms(s, est);
            Eigen::MatrixXd g = structured_mttkrp(s, est, n, ft);
            Eigen::MatrixXd gamma = Eigen::MatrixXd::Ones(rank, rank);
            for (Index k = 0; k < N; ++k)
                if (k != n) gamma = gamma.cwiseProduct(grams[k]);
            est[n] = solve_gram(gamma, g, &report.degenerate_warning);
            grams[n] = est[n].transpose() * est[n];
        }
        const FastTerms ft = fast_terms(s, est);
        const double inner = (ft.kmat.cwiseProduct(ft.omega.transpose())).sum();
        Eigen::MatrixXd had = Eigen::MatrixXd::Ones(rank, rank);
        for (Index n = 0; n < N; ++n) had = had.cwiseProduct(grams[n]);
        const double resid_sq = std::max(0.0, norm_sq - 2 * inner + had.sum());
        const double eps_new = std::sqrt(resid_sq) / norm_y;
        report.error_history.push_back(eps_new);
        report.iterations = iter;

        const bool abs_stop = eps_new <= opts.abs_tol;
        const bool rel_stop = have_eps && std::abs(eps - eps_new) <= opts.tol * eps_new;
        eps = eps_new;
        have_eps = true;
        if (abs_stop || rel_stop) break;
    }

    KruskalTensor result;
    result.weights = Eigen::VectorXd::Ones(rank);
    result.factors = std::move(est);
    result = normalize(result);

    report.relative_error = eps;
    // near-exact fits sit below the Gram identity's cancellation floor;
    // re-measure them densely when the tensor is small enough to expand
    Index total = 1;
    for (Index sdim : s.shape()) total *= sdim;
    if (eps < 1e-7 && total <= (Index(1) << 22)) {
        DenseTensor dense = kruskal_to_dense(s.to_kruskal());
        report.relative_error = relative_error_dense(dense, result);
    }
    report.fit_percent = 100.0 * (1.0 - report.relative_error);
    report.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return {std::move(result), report};
}

} // namespace fcpd

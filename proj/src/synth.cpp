#include "fcpd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "fcpd/errors.hpp"
#include "fcpd/rng.hpp"

namespace fcpd {

void SynthSpec::validate() const {
    if (shape.empty()) throw std::invalid_argument("empty shape");
    if (rank < 1) throw std::invalid_argument("rank must be positive");
    if (collinearity.size() != shape.size())
        throw std::invalid_argument("one collinearity degree per mode required");
    for (Index s : shape) {
        if (s <= 0) throw std::invalid_argument("mode sizes must be positive");
        if (rank > s)
            throw std::invalid_argument("the collinearity construction needs R <= min I_n");
    }
    for (double c : collinearity) {
        if (!(std::abs(c) < 1.0))
            throw std::invalid_argument("|c_n| < 1 required");
        if (rank > 1 && c <= -1.0 / double(rank - 1))
            throw std::invalid_argument("correlation matrix not positive definite: need c > -1/(R-1)");
    }
    if (weights.size() != 0 && weights.size() != rank)
        throw std::invalid_argument("weights length must equal the rank");
}

SynthData generate(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const Index N = Index(spec.shape.size());
    const Index R = spec.rank;

    SynthData out;
    out.truth.weights =
        spec.weights.size() ? spec.weights : Eigen::VectorXd::Ones(R);
    out.truth.factors.resize(N);
    for (Index n = 0; n < N; ++n) {
        const Index in = spec.shape[n];
        Eigen::MatrixXd g = rng.gaussian_matrix(in, R);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(in, R);
        // fix the QR sign convention so the stream is reproducible by content
        Eigen::MatrixXd rmat = q.transpose() * g;
        for (Index r = 0; r < R; ++r)
            if (rmat(r, r) < 0) q.col(r) = -q.col(r);

        const double c = spec.collinearity[n];
        Eigen::MatrixXd corr = Eigen::MatrixXd::Constant(R, R, c);
        corr.diagonal().setOnes();
        Eigen::LLT<Eigen::MatrixXd> llt(corr);
        if (llt.info() != Eigen::Success)
            throw std::invalid_argument("correlation matrix is not positive definite");
        out.truth.factors[n] = q * Eigen::MatrixXd(llt.matrixL()).transpose();
    }

    DenseTensor clean = kruskal_to_dense(out.truth);
    const double signal_norm = clean.frobenius_norm();
    if (signal_norm == 0) throw degenerate_component_error("generated signal is zero");

    DenseTensor noisy = clean;
    Eigen::VectorXd noise = rng.gaussian_vector(clean.size());
    const double scale = signal_norm / (noise.norm() * std::pow(10.0, spec.snr_db / 20.0));
    noisy.as_vector() += scale * noise;
    out.realized_snr_db =
        10.0 * std::log10(signal_norm * signal_norm / (scale * scale * noise.squaredNorm()));
    out.noisy = std::move(noisy);
    return out;
}

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
    // Jonker-Volgenant style shortest augmenting path, O(n^3)
    const int n = int(cost.rows());
    if (cost.cols() != n) throw std::invalid_argument("assignment needs a square cost matrix");
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0), v(n + 1, 0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> assignment(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j]) assignment[p[j] - 1] = j - 1;
    return assignment;
}

namespace {

Eigen::MatrixXd unit_columns(const Eigen::MatrixXd& f) {
    Eigen::MatrixXd unit = f;
    for (Index r = 0; r < unit.cols(); ++r) {
        const double nrm = unit.col(r).norm();
        if (nrm < 1e-300) throw degenerate_component_error("zero factor column");
        unit.col(r) /= nrm;
    }
    return unit;
}

} // namespace

ComponentMatch match_components(const KruskalTensor& truth, const KruskalTensor& est) {
    truth.validate();
    est.validate();
    if (truth.rank() != est.rank()) throw std::invalid_argument("rank mismatch");
    if (truth.shape() != est.shape()) throw std::invalid_argument("shape mismatch");
    const Index R = truth.rank();
    const Index N = truth.order();

    std::vector<Eigen::MatrixXd> dots(N); // per mode, truth^T est on unit columns
    Eigen::MatrixXd congruence = Eigen::MatrixXd::Ones(R, R);
    for (Index n = 0; n < N; ++n) {
        dots[n] = unit_columns(truth.factors[n]).transpose() * unit_columns(est.factors[n]);
        congruence = congruence.cwiseProduct(dots[n].cwiseAbs());
    }
    const Eigen::MatrixXd cost = Eigen::MatrixXd::Ones(R, R) - congruence;

    ComponentMatch match;
    match.permutation = solve_assignment(cost);
    match.signs.resize(N, R);
    match.cost = 0;
    for (Index r = 0; r < R; ++r) {
        match.cost += cost(r, match.permutation[r]);
        for (Index n = 0; n < N; ++n) {
            const double d = dots[n](r, match.permutation[r]);
            match.signs(n, r) = d >= 0 ? 1.0 : -1.0;
        }
    }
    return match;
}

double sae_db(double alpha_sq_statistic) {
    if (alpha_sq_statistic < 1e-30) return kSaeDbCap;
    return std::min(kSaeDbCap, -10.0 * std::log10(alpha_sq_statistic));
}

namespace {

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

SaeReport sae(const KruskalTensor& truth, const KruskalTensor& est) {
    const ComponentMatch match = match_components(truth, est);
    const Index R = truth.rank();
    const Index N = truth.order();

    SaeReport rep;
    rep.permutation = match.permutation;
    rep.alpha_sq.resize(N, R);
    for (Index n = 0; n < N; ++n) {
        const Eigen::MatrixXd dots =
            unit_columns(truth.factors[n]).transpose() * unit_columns(est.factors[n]);
        for (Index r = 0; r < R; ++r) {
            const double cosine = std::min(1.0, std::abs(dots(r, match.permutation[r])));
            const double alpha = std::acos(cosine);
            rep.alpha_sq(n, r) = alpha * alpha;
        }
    }

    rep.msae_db = sae_db(rep.alpha_sq.mean());
    std::vector<double> all(rep.alpha_sq.data(), rep.alpha_sq.data() + rep.alpha_sq.size());
    rep.median_sae_db = sae_db(median_of(all));
    rep.mode_mean_db.resize(N);
    rep.mode_median_db.resize(N);
    for (Index n = 0; n < N; ++n) {
        rep.mode_mean_db(n) = sae_db(rep.alpha_sq.row(n).mean());
        std::vector<double> row(R);
        for (Index r = 0; r < R; ++r) row[r] = rep.alpha_sq(n, r);
        rep.mode_median_db(n) = sae_db(median_of(row));
    }
    return rep;
}

} // namespace fcpd

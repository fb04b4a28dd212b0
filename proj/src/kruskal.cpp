#include "fcpd/kruskal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fcpd/errors.hpp"

namespace fcpd {

std::vector<Index> KruskalTensor::shape() const {
    std::vector<Index> s;
    s.reserve(factors.size());
    for (const auto& f : factors) s.push_back(f.rows());
    return s;
}

void KruskalTensor::validate() const {
    if (factors.empty()) throw std::invalid_argument("Kruskal tensor has no factors");
    const Index R = weights.size();
    if (R < 1) throw std::invalid_argument("Kruskal tensor has no components");
    for (const auto& f : factors)
        if (f.cols() != R)
            throw std::invalid_argument("factor column count does not match the weight count");
}

Eigen::MatrixXd khatri_rao(const std::vector<const Eigen::MatrixXd*>& mats) {
    if (mats.empty()) throw std::invalid_argument("khatri_rao of an empty list");
    const Index R = mats.front()->cols();
    for (const auto* m : mats)
        if (m->cols() != R) throw std::invalid_argument("khatri_rao needs equal column counts");

    Eigen::MatrixXd acc = *mats.front();
    for (std::size_t n = 1; n < mats.size(); ++n) {
        const Eigen::MatrixXd& next = *mats[n];
        Eigen::MatrixXd out(acc.rows() * next.rows(), R);
        for (Index r = 0; r < R; ++r) {
            // col-major outer product: accumulated index varies fastest
            Eigen::Map<Eigen::MatrixXd>(out.col(r).data(), acc.rows(), next.rows()) =
                acc.col(r) * next.col(r).transpose();
        }
        acc = std::move(out);
    }
    return acc;
}

Eigen::MatrixXd khatri_rao(const std::vector<Eigen::MatrixXd>& mats) {
    std::vector<const Eigen::MatrixXd*> ptrs;
    ptrs.reserve(mats.size());
    for (const auto& m : mats) ptrs.push_back(&m);
    return khatri_rao(ptrs);
}

DenseTensor kruskal_to_dense(const KruskalTensor& k) {
    k.validate();
    DenseTensor out(k.shape());
    Eigen::Map<Eigen::VectorXd> v = out.as_vector();
    const Index R = k.rank();
    for (Index r = 0; r < R; ++r) {
        Eigen::VectorXd acc = k.factors[0].col(r);
        for (Index n = 1; n < k.order(); ++n) {
            const Eigen::VectorXd& a = k.factors[n].col(r);
            Eigen::MatrixXd outer = acc * a.transpose();
            acc = Eigen::Map<Eigen::VectorXd>(outer.data(), outer.size());
        }
        v += k.weights(r) * acc;
    }
    return out;
}

KruskalTensor kruskal_unfold(const KruskalTensor& k, const UnfoldingRule& rule) {
    k.validate();
    rule.validate(int(k.order()));
    KruskalTensor out;
    out.weights = k.weights;
    out.factors.reserve(rule.groups.size());
    for (const auto& g : rule.groups) {
        std::vector<const Eigen::MatrixXd*> mats;
        mats.reserve(g.size());
        for (int mode : g) mats.push_back(&k.factors[mode]);
        out.factors.push_back(khatri_rao(mats));
    }
    return out;
}

KruskalTensor kruskal_transpose(const KruskalTensor& k, const std::vector<int>& perm) {
    if (perm.size() != k.factors.size())
        throw std::invalid_argument("permutation length does not match tensor order");
    KruskalTensor out;
    out.weights = k.weights;
    out.factors.reserve(perm.size());
    for (int p : perm) out.factors.push_back(k.factors[p]);
    return out;
}

KruskalTensor normalize(const KruskalTensor& k) {
    k.validate();
    KruskalTensor out = k;
    const Index R = out.rank();
    const Index N = out.order();
    for (Index r = 0; r < R; ++r) {
        for (Index n = 0; n < N; ++n) {
            const double nrm = out.factors[n].col(r).norm();
            if (nrm < 1e-300)
                throw degenerate_component_error("zero column in factor " + std::to_string(n + 1) +
                                                 ", component " + std::to_string(r + 1));
            out.factors[n].col(r) /= nrm;
            out.weights(r) *= nrm;
        }
        if (out.weights(r) < 0) {
            out.weights(r) = -out.weights(r);
            out.factors[0].col(r) = -out.factors[0].col(r);
        }
    }
    std::vector<Index> idx(R);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](Index a, Index b) { return out.weights(a) > out.weights(b); });
    KruskalTensor sorted;
    sorted.weights.resize(R);
    sorted.factors.assign(N, Eigen::MatrixXd());
    for (Index n = 0; n < N; ++n) sorted.factors[n].resize(out.factors[n].rows(), R);
    for (Index r = 0; r < R; ++r) {
        sorted.weights(r) = out.weights(idx[r]);
        for (Index n = 0; n < N; ++n) sorted.factors[n].col(r) = out.factors[n].col(idx[r]);
    }
    return sorted;
}

Eigen::MatrixXd mttkrp(const DenseTensor& t, const std::vector<Eigen::MatrixXd>& factors,
                       int mode) {
    const Index N = t.order();
    if (Index(factors.size()) != N)
        throw std::invalid_argument("mttkrp needs one factor per mode");
    if (mode < 0 || mode >= N) throw std::invalid_argument("mode out of range");
    const Index R = factors.front().cols();
    for (Index n = 0; n < N; ++n) {
        if (factors[n].cols() != R) throw std::invalid_argument("factor column counts differ");
        if (n != mode && factors[n].rows() != t.shape()[n])
            throw std::invalid_argument("factor rows do not match tensor shape");
    }

    const auto& shape = t.shape();
    const Index In = shape[mode];
    Index left = 1, right = 1;
    for (Index n = 0; n < mode; ++n) left *= shape[n];
    for (Index n = mode + 1; n < N; ++n) right *= shape[n];

    Eigen::MatrixXd result = Eigen::MatrixXd::Zero(In, R);

    if (mode == 0) {
        // contiguous I_0 x right view, one GEMM against the trailing Khatri-Rao
        std::vector<const Eigen::MatrixXd*> rest;
        for (Index n = 1; n < N; ++n) rest.push_back(&factors[n]);
        Eigen::MatrixXd kr = khatri_rao(rest);
        Eigen::Map<const Eigen::MatrixXd> y(t.data(), In, right);
        result.noalias() = y * kr;
        return result;
    }

    std::vector<const Eigen::MatrixXd*> left_mats, right_mats;
    for (Index n = 0; n < mode; ++n) left_mats.push_back(&factors[n]);
    for (Index n = mode + 1; n < N; ++n) right_mats.push_back(&factors[n]);
    Eigen::MatrixXd krl = khatri_rao(left_mats); // left x R
    if (right_mats.empty()) {
        Eigen::Map<const Eigen::MatrixXd> y(t.data(), left, In);
        result.noalias() = y.transpose() * krl;
        return result;
    }
    Eigen::MatrixXd krr = khatri_rao(right_mats); // right x R

    const double* base = t.data();
    const Index slab = left * In;
    Eigen::MatrixXd s(In, R);
    for (Index q = 0; q < right; ++q) {
        Eigen::Map<const Eigen::MatrixXd> y(base + q * slab, left, In);
        s.noalias() = y.transpose() * krl;
        result.noalias() += s * krr.row(q).asDiagonal();
    }
    return result;
}

double kruskal_norm_squared(const KruskalTensor& k) { return kruskal_inner(k, k); }

double kruskal_inner(const KruskalTensor& a, const KruskalTensor& b) {
    a.validate();
    b.validate();
    if (a.order() != b.order()) throw std::invalid_argument("order mismatch");
    Eigen::MatrixXd had = Eigen::MatrixXd::Ones(a.rank(), b.rank());
    for (Index n = 0; n < a.order(); ++n) {
        if (a.factors[n].rows() != b.factors[n].rows())
            throw std::invalid_argument("shape mismatch");
        had = had.cwiseProduct(a.factors[n].transpose() * b.factors[n]);
    }
    return a.weights.dot(had * b.weights);
}

double dense_kruskal_inner(const DenseTensor& t, const KruskalTensor& k) {
    const Index last = t.order() - 1;
    Eigen::MatrixXd g = mttkrp(t, k.factors, int(last));
    double ip = 0;
    for (Index r = 0; r < k.rank(); ++r) ip += k.weights(r) * g.col(r).dot(k.factors[last].col(r));
    return ip;
}

double relative_error_dense(const DenseTensor& t, const KruskalTensor& k) {
    DenseTensor approx = kruskal_to_dense(k);
    if (approx.shape() != t.shape()) throw std::invalid_argument("shape mismatch");
    const double denom = t.frobenius_norm();
    if (denom == 0) throw degenerate_component_error("relative error of a zero tensor");
    return (t.as_vector() - approx.as_vector()).norm() / denom;
}

} // namespace fcpd

#pragma once

#include <vector>

#include <fcpd/dense_tensor.hpp>
#include <fcpd/kruskal.hpp>
#include <fcpd/rng.hpp>

namespace testutil {

using fcpd::DenseTensor;
using fcpd::Index;
using fcpd::KruskalTensor;
using fcpd::UnfoldingRule;

inline KruskalTensor random_kruskal(fcpd::Rng& rng, const std::vector<Index>& shape,
                                    Index rank, bool unit_columns = true) {
    KruskalTensor k;
    k.weights.resize(rank);
    for (Index r = 0; r < rank; ++r) k.weights(r) = 0.5 + rng.uniform() * 1.5;
    std::sort(k.weights.data(), k.weights.data() + rank, std::greater<double>());
    for (Index s : shape) {
        Eigen::MatrixXd f = rng.gaussian_matrix(s, rank);
        if (unit_columns)
            for (Index r = 0; r < rank; ++r) f.col(r).normalize();
        k.factors.push_back(std::move(f));
    }
    return k;
}

inline std::vector<Index> random_shape(fcpd::Rng& rng, int order, Index max_size) {
    std::vector<Index> shape(order);
    for (auto& s : shape) s = 2 + Index(rng.next_u64() % std::uint64_t(max_size - 1));
    return shape;
}

inline UnfoldingRule random_rule(fcpd::Rng& rng, int order) {
    std::vector<int> modes(order);
    for (int i = 0; i < order; ++i) modes[i] = i;
    for (int i = order - 1; i > 0; --i)
        std::swap(modes[i], modes[rng.next_u64() % std::uint64_t(i + 1)]);
    const int m = 1 + int(rng.next_u64() % std::uint64_t(order));
    std::vector<int> cuts{0};
    while (int(cuts.size()) < m) {
        int c = 1 + int(rng.next_u64() % std::uint64_t(order - 1));
        if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
    }
    cuts.push_back(order);
    std::sort(cuts.begin(), cuts.end());
    UnfoldingRule rule;
    for (std::size_t g = 0; g + 1 < cuts.size(); ++g)
        rule.groups.emplace_back(modes.begin() + cuts[g], modes.begin() + cuts[g + 1]);
    return rule;
}

inline bool next_index(std::vector<Index>& idx, const std::vector<Index>& shape) {
    for (std::size_t n = 0; n < shape.size(); ++n) {
        if (++idx[n] < shape[n]) return true;
        idx[n] = 0;
    }
    return false;
}

/// Independent expansion oracle: nested loops over every entry.
inline DenseTensor naive_kruskal_dense(const KruskalTensor& k) {
    DenseTensor out(k.shape());
    std::vector<Index> idx(k.order(), 0);
    Index lin = 0;
    do {
        double sum = 0;
        for (Index r = 0; r < k.rank(); ++r) {
            double prod = k.weights(r);
            for (Index n = 0; n < k.order(); ++n) prod *= k.factors[n](idx[n], r);
            sum += prod;
        }
        out[lin++] = sum;
    } while (next_index(idx, k.shape()));
    return out;
}

/// Independent mode-n matricization oracle: remaining modes ascending,
/// lowest mode fastest.
inline Eigen::MatrixXd naive_matricization(const DenseTensor& t, int mode) {
    Index cols = 1;
    for (Index n = 0; n < t.order(); ++n)
        if (n != mode) cols *= t.shape()[n];
    Eigen::MatrixXd m(t.shape()[mode], cols);
    std::vector<Index> idx(t.order(), 0);
    do {
        Index col = 0, stride = 1;
        for (Index n = 0; n < t.order(); ++n) {
            if (n == mode) continue;
            col += idx[n] * stride;
            stride *= t.shape()[n];
        }
        m(idx[mode], col) = t.at(idx);
    } while (next_index(idx, t.shape()));
    return m;
}

/// Independent columnwise Kronecker oracle in the library's convention
/// (first listed matrix fastest).
inline Eigen::MatrixXd naive_khatri_rao(const std::vector<Eigen::MatrixXd>& mats) {
    Index rows = 1;
    const Index r = mats.front().cols();
    for (const auto& m : mats) rows *= m.rows();
    Eigen::MatrixXd out(rows, r);
    for (Index c = 0; c < r; ++c) {
        for (Index i = 0; i < rows; ++i) {
            Index rem = i;
            double prod = 1;
            for (const auto& m : mats) {
                prod *= m(rem % m.rows(), c);
                rem /= m.rows();
            }
            out(i, c) = prod;
        }
    }
    return out;
}

inline double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).norm() / std::max(1e-300, b.norm());
}

inline double rel_diff(const DenseTensor& a, const DenseTensor& b) {
    return (a.as_vector() - b.as_vector()).norm() / std::max(1e-300, b.as_vector().norm());
}

} // namespace testutil

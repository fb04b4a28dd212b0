#include "fcpd/dense_tensor.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace fcpd {

namespace {

Index checked_product(const std::vector<Index>& shape) {
    Index p = 1;
    for (Index s : shape) {
        if (s <= 0) throw std::invalid_argument("tensor mode sizes must be positive");
        p *= s;
    }
    return p;
}

} // namespace

DenseTensor::DenseTensor(std::vector<Index> shape)
    : shape_(std::move(shape)), data_(checked_product(shape_), 0.0) {}

DenseTensor::DenseTensor(std::vector<Index> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_product(shape_) != Index(data_.size()))
        throw std::invalid_argument("data length does not match the product of the shape");
}

double DenseTensor::at(const std::vector<Index>& idx) const {
    if (Index(idx.size()) != order())
        throw std::invalid_argument("index arity does not match tensor order");
    Index lin = 0, stride = 1;
    for (Index n = 0; n < order(); ++n) {
        if (idx[n] < 0 || idx[n] >= shape_[n]) throw std::invalid_argument("index out of range");
        lin += idx[n] * stride;
        stride *= shape_[n];
    }
    return data_[lin];
}

double DenseTensor::squared_norm() const { return as_vector().squaredNorm(); }

double DenseTensor::frobenius_norm() const { return as_vector().norm(); }

UnfoldingRule UnfoldingRule::identity(int tensor_order) {
    UnfoldingRule r;
    r.groups.resize(tensor_order);
    for (int n = 0; n < tensor_order; ++n) r.groups[n] = {n};
    return r;
}

UnfoldingRule UnfoldingRule::mode_n(int mode, int tensor_order) {
    UnfoldingRule r;
    r.groups.push_back({mode});
    std::vector<int> rest;
    for (int n = 0; n < tensor_order; ++n)
        if (n != mode) rest.push_back(n);
    r.groups.push_back(std::move(rest));
    return r;
}

UnfoldingRule UnfoldingRule::parse(const std::string& text) {
    UnfoldingRule r;
    std::string s;
    for (char ch : text)
        if (!std::isspace(static_cast<unsigned char>(ch))) s.push_back(ch);

    std::size_t i = 0;
    auto read_mode = [&]() {
        std::size_t j = i;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        if (j == i) throw std::invalid_argument("bad unfolding rule '" + text + "'");
        int v = std::stoi(s.substr(i, j - i));
        if (v < 1) throw std::invalid_argument("mode numbers are 1-based in rule strings");
        i = j;
        return v - 1;
    };
    while (i < s.size()) {
        if (s[i] == '(') {
            ++i;
            std::vector<int> group;
            while (true) {
                group.push_back(read_mode());
                if (i < s.size() && s[i] == ',') { ++i; continue; }
                break;
            }
            if (i >= s.size() || s[i] != ')')
                throw std::invalid_argument("unbalanced parenthesis in rule '" + text + "'");
            ++i;
            r.groups.push_back(std::move(group));
        } else {
            r.groups.push_back({read_mode()});
        }
        if (i < s.size()) {
            if (s[i] != ',') throw std::invalid_argument("bad unfolding rule '" + text + "'");
            ++i;
            if (i == s.size()) throw std::invalid_argument("trailing comma in rule '" + text + "'");
        }
    }
    if (r.groups.empty()) throw std::invalid_argument("empty unfolding rule");
    return r;
}

std::string UnfoldingRule::to_string() const {
    std::ostringstream os;
    for (std::size_t m = 0; m < groups.size(); ++m) {
        if (m) os << ',';
        if (groups[m].size() > 1) {
            os << '(';
            for (std::size_t k = 0; k < groups[m].size(); ++k) {
                if (k) os << ',';
                os << groups[m][k] + 1;
            }
            os << ')';
        } else {
            os << groups[m].front() + 1;
        }
    }
    return os.str();
}

int UnfoldingRule::tensor_order() const {
    int n = 0;
    for (const auto& g : groups) n += int(g.size());
    return n;
}

bool UnfoldingRule::is_identity() const {
    for (std::size_t m = 0; m < groups.size(); ++m)
        if (groups[m].size() != 1 || groups[m].front() != int(m)) return false;
    return true;
}

std::vector<int> UnfoldingRule::permutation() const {
    std::vector<int> p;
    for (const auto& g : groups) p.insert(p.end(), g.begin(), g.end());
    return p;
}

std::vector<Index> UnfoldingRule::unfolded_shape(const std::vector<Index>& shape) const {
    std::vector<Index> L;
    L.reserve(groups.size());
    for (const auto& g : groups) {
        Index s = 1;
        for (int k : g) s *= shape[k];
        L.push_back(s);
    }
    return L;
}

void UnfoldingRule::validate(int n) const {
    if (groups.empty()) throw std::invalid_argument("unfolding rule has no groups");
    std::vector<char> seen(n, 0);
    int count = 0;
    for (const auto& g : groups) {
        if (g.empty()) throw std::invalid_argument("unfolding rule has an empty group");
        for (int k : g) {
            if (k < 0 || k >= n)
                throw std::invalid_argument("unfolding rule names mode " + std::to_string(k + 1) +
                                            " outside 1.." + std::to_string(n));
            if (seen[k])
                throw std::invalid_argument("unfolding rule repeats mode " + std::to_string(k + 1));
            seen[k] = 1;
            ++count;
        }
    }
    if (count != n) throw std::invalid_argument("unfolding rule does not cover all modes");
}

DenseTensor reshape(const DenseTensor& t, const std::vector<Index>& new_shape) {
    Index p = 1;
    for (Index s : new_shape) {
        if (s <= 0) throw std::invalid_argument("reshape sizes must be positive");
        p *= s;
    }
    if (p != t.size()) throw std::invalid_argument("reshape changes the number of elements");
    return {new_shape, t.values()};
}

std::vector<int> inverse_permutation(const std::vector<int>& perm) {
    std::vector<int> inv(perm.size());
    for (std::size_t k = 0; k < perm.size(); ++k) inv[perm[k]] = int(k);
    return inv;
}

namespace {

void check_permutation(const std::vector<int>& perm, Index n) {
    if (Index(perm.size()) != n)
        throw std::invalid_argument("permutation length does not match tensor order");
    std::vector<char> seen(n, 0);
    for (int v : perm) {
        if (v < 0 || v >= n || seen[v])
            throw std::invalid_argument("not a permutation of the modes");
        seen[v] = 1;
    }
}

} // namespace

DenseTensor transpose(const DenseTensor& t, const std::vector<int>& perm) {
    const Index N = t.order();
    check_permutation(perm, N);

    std::vector<Index> out_shape(N);
    for (Index k = 0; k < N; ++k) out_shape[k] = t.shape()[perm[k]];
    DenseTensor out(out_shape);

    // Source axis j lands on destination axis inv[j]; walk the source in
    // linear order with an odometer, updating the destination offset.
    std::vector<Index> dstride(N, 1);
    for (Index k = 1; k < N; ++k) dstride[k] = dstride[k - 1] * out_shape[k - 1];
    const std::vector<int> inv = inverse_permutation(perm);
    std::vector<Index> jump(N);
    for (Index j = 0; j < N; ++j) jump[j] = dstride[inv[j]];

    const auto& shape = t.shape();
    std::vector<Index> idx(N, 0);
    const double* src = t.data();
    double* dst = out.data();
    Index dpos = 0;
    const Index total = t.size();
    for (Index lin = 0; lin < total; ++lin) {
        dst[dpos] = src[lin];
        for (Index j = 0; j < N; ++j) {
            ++idx[j];
            dpos += jump[j];
            if (idx[j] < shape[j]) break;
            dpos -= jump[j] * shape[j];
            idx[j] = 0;
        }
    }
    return out;
}

DenseTensor unfold(const DenseTensor& t, const UnfoldingRule& rule) {
    rule.validate(int(t.order()));
    if (rule.is_identity()) return t;
    DenseTensor shuffled = transpose(t, rule.permutation());
    return reshape(shuffled, rule.unfolded_shape(t.shape()));
}

Eigen::MatrixXd mode_matricization(const DenseTensor& t, int mode) {
    if (mode < 0 || mode >= t.order()) throw std::invalid_argument("mode out of range");
    if (t.order() == 1)
        return Eigen::Map<const Eigen::MatrixXd>(t.data(), t.shape()[0], 1);
    DenseTensor m = unfold(t, UnfoldingRule::mode_n(mode, int(t.order())));
    return Eigen::Map<const Eigen::MatrixXd>(m.data(), m.shape()[0], m.shape()[1]);
}

} // namespace fcpd

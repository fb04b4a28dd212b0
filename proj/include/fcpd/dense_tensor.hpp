#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace fcpd {

using Index = Eigen::Index;

/// Dense order-N array of reals. Values are stored first-mode-fastest
/// (column-major): the linear index of (i_1,...,i_N) is
/// i_1 + I_1*i_2 + I_1*I_2*i_3 + ...  (all indices 0-based internally).
class DenseTensor {
public:
    DenseTensor() = default;

    explicit DenseTensor(std::vector<Index> shape);
    DenseTensor(std::vector<Index> shape, std::vector<double> data);

    Index order() const { return static_cast<Index>(shape_.size()); }
    Index size() const { return static_cast<Index>(data_.size()); }
    const std::vector<Index>& shape() const { return shape_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double operator[](Index i) const { return data_[static_cast<std::size_t>(i)]; }
    double& operator[](Index i) { return data_[static_cast<std::size_t>(i)]; }

    double at(const std::vector<Index>& idx) const;

    double squared_norm() const;
    double frobenius_norm() const;

    Eigen::Map<Eigen::VectorXd> as_vector() {
        return {data_.data(), size()};
    }
    Eigen::Map<const Eigen::VectorXd> as_vector() const {
        return {data_.data(), size()};
    }

private:
    std::vector<Index> shape_;
    std::vector<double> data_;
};

/// Partition of the modes 0..N-1 into M ordered groups. Strings and file
/// formats use 1-based mode numbers; everything in memory is 0-based.
struct UnfoldingRule {
    std::vector<std::vector<int>> groups;

    static UnfoldingRule identity(int tensor_order);
    static UnfoldingRule mode_n(int mode, int tensor_order);
    /// Parses e.g. "1,(2,3),(4,5)"; whitespace ignored.
    static UnfoldingRule parse(const std::string& text);

    std::string to_string() const;

    int order() const { return static_cast<int>(groups.size()); }
    int tensor_order() const;
    bool is_identity() const;

    /// Concatenation of the groups: the mode permutation p.
    std::vector<int> permutation() const;
    /// Unfolded shape: L_m = prod of grouped sizes.
    std::vector<Index> unfolded_shape(const std::vector<Index>& shape) const;

    /// Throws std::invalid_argument unless the groups form a partition of
    /// 0..tensor_order-1 with every group nonempty.
    void validate(int tensor_order) const;
};

/// Same data, new shape metadata; products must agree.
DenseTensor reshape(const DenseTensor& t, const std::vector<Index>& new_shape);

/// p-transpose: result(i_{p1},...,i_{pN}) = t(i_1,...,i_N). perm is 0-based.
DenseTensor transpose(const DenseTensor& t, const std::vector<int>& perm);

std::vector<int> inverse_permutation(const std::vector<int>& perm);

/// Generalized unfolding: reshape(transpose(t, concat(groups)), L).
DenseTensor unfold(const DenseTensor& t, const UnfoldingRule& rule);

/// Classical mode-n matricization, I_n x prod(rest), remaining modes in
/// ascending order with the lowest one fastest.
Eigen::MatrixXd mode_matricization(const DenseTensor& t, int mode);

} // namespace fcpd

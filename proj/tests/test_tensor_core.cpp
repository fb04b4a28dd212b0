#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fcpd/dense_tensor.hpp>
#include <fcpd/errors.hpp>
#include <fcpd/kruskal.hpp>
#include <fcpd/rng.hpp>
#include <fcpd/tucker.hpp>

#include "test_util.hpp"

using namespace fcpd;
using namespace testutil;

TEST_CASE("reshape keeps the linear data") {
    Rng rng(1);
    std::vector<double> vals(24);
    for (auto& v : vals) v = rng.gaussian();
    DenseTensor t({2, 3, 4}, vals);

    DenseTensor r = reshape(t, {6, 4});
    CHECK(r.shape() == std::vector<Index>{6, 4});
    CHECK(r.values() == vals);

    DenseTensor same = reshape(t, {2, 3, 4});
    CHECK(same.values() == t.values());

    DenseTensor m({2, 2}, {1, 2, 3, 4});
    DenseTensor v = reshape(m, {4});
    CHECK(v.values() == std::vector<double>{1, 2, 3, 4});

    CHECK_THROWS_AS(reshape(t, {5, 5}), std::invalid_argument);
}

TEST_CASE("transpose permutes indices") {
    DenseTensor m({2, 3}, {1, 4, 2, 5, 3, 6}); // [[1,2,3],[4,5,6]] column-major

    DenseTensor id = transpose(m, {0, 1});
    CHECK(id.values() == m.values());

    DenseTensor mt = transpose(m, {1, 0});
    CHECK(mt.shape() == std::vector<Index>{3, 2});
    for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 3; ++j) CHECK(mt.at({j, i}) == m.at({i, j}));

    CHECK_THROWS_AS(transpose(m, {0, 0}), std::invalid_argument);
}

TEST_CASE("transpose definition and inverse round-trip") {
    Rng rng(7);
    std::vector<double> vals(24);
    for (auto& v : vals) v = rng.gaussian();
    DenseTensor t({2, 3, 4}, vals);
    const std::vector<int> p{2, 0, 1};

    DenseTensor tp = transpose(t, p);
    std::vector<Index> idx(3, 0);
    do {
        // result(i_{p1},...,i_{pN}) = t(i_1,...,i_N)
        std::vector<Index> pidx{idx[p[0]], idx[p[1]], idx[p[2]]};
        CHECK(tp.at(pidx) == t.at(idx));
    } while (next_index(idx, t.shape()));

    DenseTensor back = transpose(tp, inverse_permutation(p));
    CHECK(back.values() == t.values());
}

TEST_CASE("unfold matches the mode-n matricization oracle") {
    Rng rng(11);
    std::vector<double> vals(60);
    for (auto& v : vals) v = rng.gaussian();
    DenseTensor t({3, 4, 5}, vals);
    for (int mode = 0; mode < 3; ++mode) {
        Eigen::MatrixXd lib = mode_matricization(t, mode);
        Eigen::MatrixXd oracle = naive_matricization(t, mode);
        CHECK(rel_diff(lib, oracle) == doctest::Approx(0.0).epsilon(1e-14));
    }
}

TEST_CASE("unfold produces the merged-mode tensor") {
    Rng rng(13);
    std::vector<Index> shape{2, 3, 4, 5};
    std::vector<double> vals(120);
    for (auto& v : vals) v = rng.gaussian();
    DenseTensor t(shape, vals);

    DenseTensor u = unfold(t, UnfoldingRule::parse("1,2,(3,4)"));
    REQUIRE(u.shape() == std::vector<Index>{2, 3, 20});
    std::vector<Index> idx(4, 0);
    do {
        CHECK(u.at({idx[0], idx[1], idx[2] + 4 * idx[3]}) == t.at(idx));
    } while (next_index(idx, shape));

    DenseTensor id = unfold(t, UnfoldingRule::identity(4));
    CHECK(id.values() == t.values());
}

TEST_CASE("rule parsing and validation") {
    UnfoldingRule r = UnfoldingRule::parse(" 1 ,(2, 3),( 4,5 )");
    CHECK(r.to_string() == "1,(2,3),(4,5)");
    CHECK_THROWS_AS(UnfoldingRule::parse("1,(2,3"), std::invalid_argument);
    CHECK_THROWS_AS(UnfoldingRule::parse("").validate(1), std::invalid_argument);
    CHECK_THROWS_AS(UnfoldingRule::parse("1,2,2").validate(3), std::invalid_argument);
    CHECK_THROWS_AS(UnfoldingRule::parse("1,2").validate(3), std::invalid_argument);
    CHECK_THROWS_AS(UnfoldingRule::parse("1,2,4").validate(3), std::invalid_argument);
}

TEST_CASE("khatri_rao convention") {
    Rng rng(17);
    Eigen::MatrixXd a = rng.gaussian_matrix(3, 2);
    CHECK(rel_diff(khatri_rao({a}), a) == doctest::Approx(0.0));

    Eigen::MatrixXd u = rng.gaussian_matrix(2, 1), v = rng.gaussian_matrix(2, 1);
    Eigen::MatrixXd kr = khatri_rao({u, v});
    REQUIRE(kr.rows() == 4);
    // first listed matrix varies fastest: kron(v, u)
    CHECK(kr(0, 0) == doctest::Approx(u(0, 0) * v(0, 0)));
    CHECK(kr(1, 0) == doctest::Approx(u(1, 0) * v(0, 0)));
    CHECK(kr(2, 0) == doctest::Approx(u(0, 0) * v(1, 0)));
    CHECK(kr(3, 0) == doctest::Approx(u(1, 0) * v(1, 0)));

    Eigen::MatrixXd b = rng.gaussian_matrix(4, 3), c = rng.gaussian_matrix(2, 3);
    CHECK(rel_diff(khatri_rao({a.leftCols(2), b.leftCols(2), c.leftCols(2)}),
                   naive_khatri_rao({a.leftCols(2), b.leftCols(2), c.leftCols(2)})) < 1e-14);

    CHECK_THROWS_AS(khatri_rao({a, b}), std::invalid_argument);
}

TEST_CASE("kruskal dense expansion") {
    SUBCASE("rank one constant tensor") {
        KruskalTensor k;
        k.weights = Eigen::VectorXd::Constant(1, 3.0);
        for (Index s : {2, 4}) {
            Eigen::MatrixXd f = Eigen::MatrixXd::Constant(s, 1, 1.0 / std::sqrt(double(s)));
            k.factors.push_back(f);
        }
        DenseTensor d = kruskal_to_dense(k);
        const double expect = 3.0 / std::sqrt(8.0);
        for (Index i = 0; i < d.size(); ++i) CHECK(d[i] == doctest::Approx(expect));
    }
    SUBCASE("matches the nested-loop oracle") {
        Rng rng(19);
        KruskalTensor k = random_kruskal(rng, {3, 2, 4, 3}, 3);
        CHECK(rel_diff(kruskal_to_dense(k), naive_kruskal_dense(k)) < 1e-12);
    }
    SUBCASE("vec equals khatri_rao times weights") {
        Rng rng(23);
        KruskalTensor k = random_kruskal(rng, {2, 3, 4}, 2);
        DenseTensor d = kruskal_to_dense(k);
        Eigen::VectorXd via_kr = khatri_rao(k.factors) * k.weights;
        CHECK((d.as_vector() - via_kr).norm() < 1e-12 * via_kr.norm());
    }
}

TEST_CASE("kruskal_unfold merges factors per group") {
    Rng rng(29);
    KruskalTensor k = random_kruskal(rng, {3, 4, 2, 5}, 3);
    UnfoldingRule rule = UnfoldingRule::parse("1,2,(3,4)");

    KruskalTensor ku = kruskal_unfold(k, rule);
    REQUIRE(ku.order() == 3);
    CHECK(ku.weights == k.weights);
    CHECK(rel_diff(ku.factors[0], k.factors[0]) == doctest::Approx(0.0));
    CHECK(rel_diff(ku.factors[2], khatri_rao({k.factors[2], k.factors[3]})) < 1e-15);

    SUBCASE("commutes with the dense path") {
        DenseTensor lhs = kruskal_to_dense(ku);
        DenseTensor rhs = unfold(kruskal_to_dense(k), rule);
        CHECK(rel_diff(lhs, rhs) < 1e-10);
    }
    SUBCASE("identity rule is the identity") {
        KruskalTensor same = kruskal_unfold(k, UnfoldingRule::identity(4));
        for (Index n = 0; n < 4; ++n)
            CHECK(rel_diff(same.factors[n], k.factors[n]) == doctest::Approx(0.0));
    }
}

TEST_CASE("unfold commutation holds for random tensors and rules") {
    Rng rng(31);
    for (int trial = 0; trial < 40; ++trial) {
        const int order = 3 + int(rng.next_u64() % 3);
        const Index rank = 1 + Index(rng.next_u64() % 4);
        KruskalTensor k = random_kruskal(rng, random_shape(rng, order, 6), rank);
        UnfoldingRule rule = random_rule(rng, order);
        DenseTensor lhs = kruskal_to_dense(kruskal_unfold(k, rule));
        DenseTensor rhs = unfold(kruskal_to_dense(k), rule);
        CHECK(rel_diff(lhs, rhs) < 1e-10);
    }
}

TEST_CASE("folded merged columns are rank one for exact Kruskal tensors") {
    Rng rng(37);
    KruskalTensor k = random_kruskal(rng, {3, 4, 3, 2}, 2);
    KruskalTensor ku = kruskal_unfold(k, UnfoldingRule::parse("1,(2,3,4)"));
    for (Index r = 0; r < k.rank(); ++r) {
        std::vector<double> col(ku.factors[1].col(r).data(),
                                ku.factors[1].col(r).data() + ku.factors[1].rows());
        DenseTensor folded({4, 3, 2}, col);
        RankOne r1 = best_rank_one(folded);
        KruskalTensor approx;
        approx.weights = Eigen::VectorXd::Constant(1, r1.weight);
        for (auto& v : r1.vectors) approx.factors.push_back(v);
        CHECK(relative_error_dense(folded, approx) < 1e-10);
    }
}

TEST_CASE("mttkrp") {
    Rng rng(41);
    SUBCASE("matrix case is a plain product") {
        std::vector<double> vals(12);
        for (auto& v : vals) v = rng.gaussian();
        DenseTensor t({3, 4}, vals);
        Eigen::MatrixXd u = rng.gaussian_matrix(3, 2), v = rng.gaussian_matrix(4, 2);
        Eigen::Map<const Eigen::MatrixXd> y(t.data(), 3, 4);
        CHECK(rel_diff(mttkrp(t, {u, v}, 0), (y * v).eval()) < 1e-14);
    }
    SUBCASE("agrees with the matricize-then-multiply oracle") {
        std::vector<double> vals(60);
        for (auto& v : vals) v = rng.gaussian();
        DenseTensor t({3, 4, 5}, vals);
        std::vector<Eigen::MatrixXd> f{rng.gaussian_matrix(3, 2), rng.gaussian_matrix(4, 2),
                                       rng.gaussian_matrix(5, 2)};
        for (int mode = 0; mode < 3; ++mode) {
            std::vector<Eigen::MatrixXd> rest;
            for (int k = 0; k < 3; ++k)
                if (k != mode) rest.push_back(f[k]);
            Eigen::MatrixXd oracle = naive_matricization(t, mode) * naive_khatri_rao(rest);
            CHECK(rel_diff(mttkrp(t, f, mode), oracle) < 1e-12);
        }
    }
    SUBCASE("Hadamard Gram identity on exact Kruskal input") {
        KruskalTensor k = random_kruskal(rng, {4, 3, 5}, 3);
        DenseTensor t = kruskal_to_dense(k);
        for (int mode = 0; mode < 3; ++mode) {
            Eigen::MatrixXd gamma = Eigen::MatrixXd::Ones(3, 3);
            for (int n = 0; n < 3; ++n)
                if (n != mode)
                    gamma = gamma.cwiseProduct(k.factors[n].transpose() * k.factors[n]);
            Eigen::MatrixXd expect = k.factors[mode] * k.weights.asDiagonal() * gamma;
            CHECK(rel_diff(mttkrp(t, k.factors, mode), expect) < 1e-12);
        }
    }
    SUBCASE("dimension mismatch throws") {
        DenseTensor t({3, 4}, std::vector<double>(12, 1.0));
        CHECK_THROWS_AS(mttkrp(t, {Eigen::MatrixXd::Ones(3, 2), Eigen::MatrixXd::Ones(5, 2)}, 0),
                        std::invalid_argument);
    }
}

TEST_CASE("normalize") {
    Rng rng(43);
    SUBCASE("absorbs norms and sorts") {
        KruskalTensor k;
        k.weights = Eigen::VectorXd::Constant(1, 1.0);
        Eigen::VectorXd a(3), b(2);
        a << 2, 0, 0;
        b << 0, 3;
        k.factors = {a, b};
        KruskalTensor n = normalize(k);
        CHECK(n.weights(0) == doctest::Approx(6.0));
        CHECK(n.factors[0].col(0).norm() == doctest::Approx(1.0));
        CHECK(n.factors[1].col(0).norm() == doctest::Approx(1.0));
    }
    SUBCASE("idempotent and dense-invariant") {
        KruskalTensor k = random_kruskal(rng, {3, 4, 2}, 3, /*unit_columns=*/false);
        k.weights(1) = -k.weights(1); // sign flip must be absorbed
        KruskalTensor n = normalize(k);
        CHECK(rel_diff(kruskal_to_dense(n), kruskal_to_dense(k)) < 1e-12);
        for (Index r = 0; r < n.rank(); ++r) CHECK(n.weights(r) > 0);
        for (Index r = 1; r < n.rank(); ++r) CHECK(n.weights(r) <= n.weights(r - 1));
        KruskalTensor again = normalize(n);
        CHECK(rel_diff(again.factors[0], n.factors[0]) == doctest::Approx(0.0));
        CHECK((again.weights - n.weights).norm() == doctest::Approx(0.0));
    }
    SUBCASE("zero column is degenerate") {
        KruskalTensor k;
        k.weights = Eigen::VectorXd::Ones(1);
        k.factors = {Eigen::MatrixXd::Zero(3, 1), Eigen::MatrixXd::Ones(2, 1)};
        CHECK_THROWS_AS(normalize(k), degenerate_component_error);
    }
}

TEST_CASE("kruskal inner products match dense computation") {
    Rng rng(47);
    KruskalTensor a = random_kruskal(rng, {3, 4, 2}, 2);
    KruskalTensor b = random_kruskal(rng, {3, 4, 2}, 3);
    DenseTensor da = kruskal_to_dense(a), db = kruskal_to_dense(b);
    CHECK(kruskal_inner(a, b) ==
          doctest::Approx(da.as_vector().dot(db.as_vector())).epsilon(1e-12));
    CHECK(kruskal_norm_squared(a) == doctest::Approx(da.squared_norm()).epsilon(1e-12));
    CHECK(dense_kruskal_inner(da, b) ==
          doctest::Approx(da.as_vector().dot(db.as_vector())).epsilon(1e-12));
}

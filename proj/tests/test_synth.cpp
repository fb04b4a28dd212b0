#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <fcpd/errors.hpp>
#include <fcpd/rng.hpp>
#include <fcpd/synth.hpp>

#include "test_util.hpp"

using namespace fcpd;
using namespace testutil;

namespace {

SynthSpec base_spec() {
    SynthSpec spec;
    spec.shape = {6, 5, 7};
    spec.rank = 3;
    spec.collinearity = {0.3, 0.0, 0.6};
    spec.snr_db = 10;
    spec.seed = 12;
    return spec;
}

} // namespace

TEST_CASE("generation hits the requested Gram structure exactly") {
    SynthData d = generate(base_spec());
    for (Index n = 0; n < 3; ++n) {
        const Eigen::MatrixXd gram =
            d.truth.factors[n].transpose() * d.truth.factors[n];
        for (Index r = 0; r < 3; ++r) {
            CHECK(gram(r, r) == doctest::Approx(1.0).epsilon(1e-12));
            for (Index s = 0; s < 3; ++s)
                if (r != s)
                    CHECK(gram(r, s) ==
                          doctest::Approx(base_spec().collinearity[n]).epsilon(1e-10));
        }
    }
}

TEST_CASE("realized SNR matches the request") {
    SynthSpec spec = base_spec();
    SynthData d = generate(spec);
    CHECK(std::abs(d.realized_snr_db - spec.snr_db) < 0.01);
    // recompute from the returned tensors
    DenseTensor clean = kruskal_to_dense(d.truth);
    const double signal = clean.squared_norm();
    const double noise = (d.noisy.as_vector() - clean.as_vector()).squaredNorm();
    CHECK(std::abs(10 * std::log10(signal / noise) - spec.snr_db) < 0.01);
}

TEST_CASE("generation is deterministic per seed") {
    SynthData a = generate(base_spec());
    SynthData b = generate(base_spec());
    CHECK(a.noisy.values() == b.noisy.values());
    for (Index n = 0; n < 3; ++n)
        CHECK((a.truth.factors[n] - b.truth.factors[n]).norm() == 0.0);
    SynthSpec other = base_spec();
    other.seed += 1;
    SynthData c = generate(other);
    CHECK(a.noisy.values() != c.noisy.values());
}

TEST_CASE("invalid specifications are rejected") {
    SynthSpec spec = base_spec();
    spec.collinearity = {0.3, 1.0, 0.6};
    CHECK_THROWS_AS(generate(spec), std::invalid_argument);
    spec = base_spec();
    spec.rank = 10; // exceeds min mode size
    CHECK_THROWS_AS(generate(spec), std::invalid_argument);
    spec = base_spec();
    spec.collinearity = {-0.9, 0.0, 0.0}; // not PD for R = 3
    CHECK_THROWS_AS(generate(spec), std::invalid_argument);
}

TEST_CASE("component matching") {
    Rng rng(3);
    KruskalTensor truth = random_kruskal(rng, {5, 6, 4}, 4);
    SUBCASE("recovers a pure permutation") {
        KruskalTensor est = truth;
        const std::vector<int> perm{2, 0, 3, 1}; // est column j = truth column perm[j]
        for (Index n = 0; n < 3; ++n)
            for (int j = 0; j < 4; ++j) est.factors[n].col(j) = truth.factors[n].col(perm[j]);
        ComponentMatch m = match_components(truth, est);
        for (int r = 0; r < 4; ++r) CHECK(perm[m.permutation[r]] == r);
        CHECK(m.cost < 1e-12);
    }
    SUBCASE("recovers sign flips") {
        KruskalTensor est = truth;
        est.factors[0].col(1) = -est.factors[0].col(1);
        est.factors[2].col(1) = -est.factors[2].col(1);
        ComponentMatch m = match_components(truth, est);
        CHECK(m.permutation[1] == 1);
        CHECK(m.cost < 1e-12);
        CHECK(m.signs(0, 1) == -1.0);
        CHECK(m.signs(2, 1) == -1.0);
        CHECK(m.signs(1, 1) == 1.0);
    }
    SUBCASE("assignment cost never exceeds greedy matching") {
        for (int trial = 0; trial < 20; ++trial) {
            KruskalTensor t2 = random_kruskal(rng, {4, 4, 4}, 4);
            KruskalTensor e2 = random_kruskal(rng, {4, 4, 4}, 4);
            ComponentMatch m = match_components(t2, e2);

            Eigen::MatrixXd congr = Eigen::MatrixXd::Ones(4, 4);
            for (Index n = 0; n < 3; ++n)
                congr = congr.cwiseProduct(
                    (t2.factors[n].transpose() * e2.factors[n]).cwiseAbs());
            double greedy = 0;
            std::vector<char> taken(4, 0);
            for (int r = 0; r < 4; ++r) {
                int best = -1;
                for (int s = 0; s < 4; ++s)
                    if (!taken[s] && (best < 0 || congr(r, s) > congr(r, best))) best = s;
                taken[best] = 1;
                greedy += 1 - congr(r, best);
            }
            CHECK(m.cost <= greedy + 1e-12);
        }
    }
    SUBCASE("rank mismatch throws") {
        KruskalTensor small = random_kruskal(rng, {5, 6, 4}, 2);
        CHECK_THROWS_AS(match_components(truth, small), std::invalid_argument);
    }
}

TEST_CASE("squared angular errors") {
    Rng rng(7);
    KruskalTensor truth = random_kruskal(rng, {5, 4, 6}, 3);
    SUBCASE("perfect recovery reports the dB cap") {
        SaeReport rep = sae(truth, truth);
        CHECK(rep.alpha_sq.maxCoeff() == doctest::Approx(0.0));
        CHECK(rep.msae_db == kSaeDbCap);
        CHECK(rep.median_sae_db == kSaeDbCap);
    }
    SUBCASE("orthogonal estimate reaches the maximal angle") {
        KruskalTensor est = truth;
        // replace one column by a vector orthogonal to it
        Eigen::VectorXd v = rng.gaussian_vector(5);
        v -= v.dot(truth.factors[0].col(0)) * truth.factors[0].col(0);
        v.normalize();
        est.factors[0].col(0) = v;
        SaeReport rep = sae(truth, est);
        const double quarter_pi_sq = (M_PI / 2) * (M_PI / 2);
        CHECK(rep.alpha_sq.maxCoeff() == doctest::Approx(quarter_pi_sq).epsilon(1e-10));
    }
    SUBCASE("angles ignore column scaling") {
        KruskalTensor est = truth;
        est.factors[1].col(2) *= 17.0;
        SaeReport rep = sae(truth, est);
        CHECK(rep.alpha_sq.maxCoeff() < 1e-12);
    }
    SUBCASE("report shape and permutation are consistent") {
        KruskalTensor est = truth;
        est.factors[0].col(0) = (est.factors[0].col(0) +
                                 0.05 * rng.gaussian_vector(5))
                                    .normalized();
        SaeReport rep = sae(truth, est);
        CHECK(rep.alpha_sq.rows() == 3);
        CHECK(rep.alpha_sq.cols() == 3);
        CHECK(rep.mode_mean_db.size() == 3);
        CHECK(rep.msae_db < kSaeDbCap);
    }
}

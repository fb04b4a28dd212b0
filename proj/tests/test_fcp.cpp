#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <fcpd/errors.hpp>
#include <fcpd/fcp.hpp>
#include <fcpd/rng.hpp>
#include <fcpd/synth.hpp>

#include "test_util.hpp"

using namespace fcpd;
using namespace testutil;

namespace {

SynthData make_case(std::vector<Index> shape, Index rank, std::vector<double> c, double snr,
                    std::uint64_t seed) {
    SynthSpec spec;
    spec.shape = std::move(shape);
    spec.rank = rank;
    spec.collinearity = std::move(c);
    spec.snr_db = snr;
    spec.seed = seed;
    return generate(spec);
}

} // namespace

TEST_CASE("rank-one FCP recovers well-separated exact components") {
    SynthData data = make_case({5, 6, 4, 5}, 2, {0, 0, 0, 0}, 300, 42);
    FcpOptions opts;
    opts.rule = UnfoldingRule::parse("1,2,(3,4)");
    opts.seed = 1;
    auto [est, trace] = fcp_rank_one(data.noisy, 2, opts);
    SaeReport rep = sae(data.truth, est);
    CHECK(rep.msae_db > 100);
    CHECK(trace.fit.relative_error < 1e-6);
}

TEST_CASE("identity rule without compression reduces to plain ALS") {
    SynthData data = make_case({5, 4, 6}, 2, {0.2, 0.1, 0.3}, 20, 7);
    FcpOptions opts;
    opts.rule = UnfoldingRule::identity(3);
    opts.compress = false;
    opts.unfolded_als.seed = 99;
    auto [est, trace] = fcp_rank_one(data.noisy, 2, opts);

    AlsOptions als;
    als.seed = 99;
    auto [ref, fit] = cp_als(data.noisy, 2, als);
    CHECK(rel_diff(kruskal_to_dense(est), kruskal_to_dense(ref)) < 1e-12);
    CHECK(trace.fit.relative_error == doctest::Approx(fit.relative_error).epsilon(1e-10));
}

TEST_CASE("low-rank FCP with tau = 1 reproduces the stage-2 residual") {
    for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
        SynthData data = make_case({5, 4, 3, 5}, 3, {0.3, 0.5, 0.4, 0.6}, 10, seed);
        FcpOptions opts;
        opts.rule = UnfoldingRule::parse("1,2,(3,4)");
        opts.tau = 1.0;
        opts.j_max = 100;
        opts.seed = seed;
        auto [est, trace] = fcp_low_rank(data.noisy, 3, opts);
        REQUIRE(trace.first_run.available);
        ErrorOrdering ord = error_ordering_check(data.noisy, trace);
        const double e = std::sqrt(ord.stage2_sq);
        const double j = std::sqrt(ord.low_rank_sq);
        CHECK(std::abs(e - j) <= 1e-9 * e);
        CHECK(ord.low_rank_sq <= ord.rank_one_sq * (1 + 1e-12) + 1e-12);
    }
}

TEST_CASE("all-singleton blocks make the low-rank path match the rank-one path") {
    SynthData data = make_case({4, 5, 4, 4}, 2, {0.2, 0.3, 0.4, 0.3}, 25, 21);
    FcpOptions opts;
    opts.rule = UnfoldingRule::parse("1,2,(3,4)");
    opts.j_max = 1; // forces J_r = 1
    opts.seed = 5;
    opts.unfolded_als.seed = 5;
    auto [lr, lr_trace] = fcp_low_rank(data.noisy, 2, opts);
    auto [r1, r1_trace] = fcp_rank_one(data.noisy, 2, opts);
    CHECK(rel_diff(kruskal_to_dense(lr), kruskal_to_dense(r1)) < 1e-8);
    for (const auto& run : lr_trace.block_ranks)
        for (int j : run) CHECK(j == 1);
}

TEST_CASE("paths coincide when merged components are exactly rank one") {
    // noiseless exact Kruskal data: sigma_r2 = 0, so tau keeps J_r = 1
    SynthData data = make_case({5, 4, 4, 5}, 2, {0.3, 0.2, 0.4, 0.3}, 300, 23);
    FcpOptions opts;
    opts.rule = UnfoldingRule::parse("1,2,(3,4)");
    opts.seed = 11;
    opts.unfolded_als.seed = 11;
    auto [lr, lr_trace] = fcp_low_rank(data.noisy, 2, opts);
    auto [r1, r1_trace] = fcp_rank_one(data.noisy, 2, opts);
    for (const auto& run : lr_trace.block_ranks)
        for (int j : run) CHECK(j == 1);
    CHECK(rel_diff(kruskal_to_dense(lr), kruskal_to_dense(r1)) < 1e-7);

    opts.mode = FcpMode::rank_one;
    auto [viaDispatch, dtrace] = fcp(data.noisy, 2, opts);
    CHECK(rel_diff(kruskal_to_dense(viaDispatch), kruskal_to_dense(r1)) == doctest::Approx(0.0));
}

TEST_CASE("residual ordering holds on noisy data with truncation") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SynthData data = make_case({4, 4, 5, 4, 3}, 3, {0.2, 0.5, 0.6, 0.5, 0.4}, 5, seed);
        FcpOptions opts;
        opts.rule = UnfoldingRule::parse("1,2,3,(4,5)");
        opts.tau = 0.9;
        opts.seed = seed;
        auto [est, trace] = fcp_low_rank(data.noisy, 3, opts);
        ErrorOrdering ord = error_ordering_check(data.noisy, trace); // throws on violation
        CHECK(ord.stage2_sq <= ord.low_rank_sq * (1 + 1e-9) + 1e-12);
        CHECK(ord.low_rank_sq <= ord.rank_one_sq * (1 + 1e-9) + 1e-12);
    }
}

TEST_CASE("multi-group rules keep the order bookkeeping straight") {
    SynthData data = make_case({3, 4, 3, 4, 3}, 2, {0.3, 0.4, 0.3, 0.5, 0.4}, 20, 31);
    FcpOptions opts;
    opts.rule = UnfoldingRule::parse("(1,2),3,(4,5)");
    opts.seed = 3;
    auto [est, trace] = fcp_low_rank(data.noisy, 2, opts);
    CHECK(est.order() == 5);
    CHECK(est.shape() == data.noisy.shape());
    CHECK(trace.block_ranks.size() == 2); // one per split run
    SaeReport rep = sae(data.truth, est);
    CHECK(rep.msae_db > 15);
}

TEST_CASE("refinement does not increase the error") {
    SynthData data = make_case({5, 5, 4, 4}, 2, {0.4, 0.6, 0.5, 0.6}, 10, 37);
    FcpOptions opts;
    opts.rule = UnfoldingRule::parse("1,2,(3,4)");
    opts.seed = 17;
    opts.unfolded_als.seed = 17;
    auto [plain, plain_trace] = fcp_low_rank(data.noisy, 2, opts);
    opts.refine = true;
    auto [refined, refined_trace] = fcp_low_rank(data.noisy, 2, opts);
    CHECK(refined_trace.fit.relative_error <=
          plain_trace.fit.relative_error * (1 + 1e-10) + 1e-12);
}

TEST_CASE("rank overshoot decomposes high then truncates") {
    SynthData data = make_case({5, 5, 5, 5}, 2, {0.3, 0.3, 0.3, 0.3}, 30, 41);
    FcpOptions opts;
    opts.rule = UnfoldingRule::parse("1,2,(3,4)");
    opts.rank_overshoot = 2;
    opts.refine = true; // truncation to the R largest weights feeds the refinement
    opts.seed = 19;
    auto [est, trace] = fcp_low_rank(data.noisy, 2, opts);
    CHECK(est.rank() == 2);
    SaeReport rep = sae(data.truth, est);
    CHECK(rep.msae_db > 25);
}

TEST_CASE("a leading multimode group splits exactly at tau = 1") {
    // the merged group sits at position 1 in the rule, so both sequential
    // splits run at the front of the working tensor
    SynthData data = make_case({4, 3, 4, 5}, 2, {0.5, 0.4, 0.5, 0.3}, 8, 47);
    FcpOptions opts;
    opts.rule = UnfoldingRule::parse("(1,2,3),4");
    opts.tau = 1.0;
    opts.j_max = 1000;
    opts.seed = 47;
    auto [est, trace] = fcp_low_rank(data.noisy, 2, opts);
    REQUIRE(trace.first_run.available);
    ErrorOrdering ord = error_ordering_check(data.noisy, trace);
    CHECK(std::abs(std::sqrt(ord.stage2_sq) - std::sqrt(ord.low_rank_sq)) <=
          1e-9 * std::sqrt(ord.stage2_sq));
    CHECK(est.shape() == data.noisy.shape());
    CHECK(trace.block_ranks.size() == 2);
}

TEST_CASE("trace invariants: non-negative stage times and positive block ranks") {
    SynthData data = make_case({4, 4, 4, 4, 4}, 3, {0.2, 0.6, 0.6, 0.6, 0.7}, 5, 53);
    FcpOptions opts;
    opts.rule = UnfoldingRule::parse("1,(2,3),(4,5)");
    opts.tau = 0.9;
    opts.refine = true;
    opts.seed = 53;
    auto [est, trace] = fcp_low_rank(data.noisy, 3, opts);
    CHECK(trace.seconds_compress >= 0);
    CHECK(trace.seconds_unfolded_cpd >= 0);
    CHECK(trace.seconds_reconstruct >= 0);
    CHECK(trace.seconds_refine >= 0);
    for (const auto& run : trace.block_ranks)
        for (int j : run) CHECK(j >= 1);
    CHECK(trace.fit.relative_error >= 0);
    CHECK(trace.fit.iterations >= 1); // refinement ran
}

TEST_CASE("option validation") {
    SynthData data = make_case({4, 4, 4}, 2, {0, 0, 0}, 20, 3);
    FcpOptions opts;
    opts.rule = UnfoldingRule::parse("1,(2,3)");
    opts.tau = 0;
    CHECK_THROWS_AS(fcp_low_rank(data.noisy, 2, opts), std::invalid_argument);
    opts.tau = 0.5; // allowed, but flagged
    auto [est, trace] = fcp_low_rank(data.noisy, 2, opts);
    CHECK(!trace.warnings.empty());
    opts.rule = UnfoldingRule::parse("1,(2,4)");
    CHECK_THROWS_AS(fcp_low_rank(data.noisy, 2, opts), std::invalid_argument);
}

TEST_CASE("error ordering check demands artifacts") {
    SynthData data = make_case({4, 4, 4}, 2, {0, 0, 0}, 20, 5);
    FcpOptions opts;
    opts.rule = UnfoldingRule::identity(3);
    auto [est, trace] = fcp_low_rank(data.noisy, 2, opts);
    CHECK(!trace.first_run.available);
    CHECK_THROWS_AS(error_ordering_check(data.noisy, trace), invalid_state_error);
}

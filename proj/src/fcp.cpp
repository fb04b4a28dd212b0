#include "fcpd/fcp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <Eigen/Dense>

#include "fcpd/errors.hpp"
#include "fcpd/structured.hpp"
#include "fcpd/tucker.hpp"

namespace fcpd {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void validate_options(const DenseTensor& t, Index rank, const FcpOptions& opts,
                      FcpTrace& trace) {
    if (rank < 1) throw std::invalid_argument("rank must be at least 1");
    opts.rule.validate(int(t.order()));
    if (!(opts.tau > 0.0 && opts.tau <= 1.0))
        throw std::invalid_argument("tau must lie in (0, 1]");
    if (opts.tau < 0.98)
        trace.warnings.push_back("tau below the recommended range [0.98, 1]");
    if (opts.j_max < 1) throw std::invalid_argument("j_max must be positive");
    if (opts.rank_overshoot < 0) throw std::invalid_argument("rank overshoot must be >= 0");
}

struct Stage12 {
    Eigen::VectorXd weights;             // stage-2 weights
    std::vector<Eigen::MatrixXd> factors; // back-projected merged factors
    DenseTensor unfolded;
    double stage2_eps = 0;
    double stage2_residual_sq = 0;
    int iterations = 0;
};

Stage12 run_stage12(const DenseTensor& t, Index rank, const FcpOptions& opts, FcpTrace& trace) {
    Stage12 out;
    auto t0 = Clock::now();
    out.unfolded = unfold(t, opts.rule);
    const Index M = out.unfolded.order();

    DenseTensor core = out.unfolded;
    std::vector<Eigen::MatrixXd> projections;
    if (opts.compress) {
        std::vector<Index> ranks(M);
        bool any = false;
        for (Index m = 0; m < M; ++m) {
            ranks[m] = std::min(out.unfolded.shape()[m], rank);
            any |= ranks[m] < out.unfolded.shape()[m];
        }
        if (any) {
            TuckerTensor tt = tucker_hooi(out.unfolded, ranks, opts.hooi_sweeps);
            core = std::move(tt.core);
            projections = std::move(tt.factors);
        }
    }
    trace.seconds_compress = seconds_since(t0);

    t0 = Clock::now();
    AlsOptions als = opts.unfolded_als;
    if (als.init != CpInit::given) als.seed = als.seed ^ opts.seed;
    auto [kt, fit] = cp_als(core, rank, als);
    out.iterations = fit.iterations;
    out.weights = kt.weights;
    out.factors = std::move(kt.factors);
    if (!projections.empty())
        for (Index m = 0; m < M; ++m) out.factors[m] = projections[m] * out.factors[m];

    KruskalTensor unfolded_estimate;
    unfolded_estimate.weights = out.weights;
    unfolded_estimate.factors = out.factors;
    out.stage2_eps = relative_error_dense(out.unfolded, unfolded_estimate);
    const double norm_sq = out.unfolded.squared_norm();
    out.stage2_residual_sq = out.stage2_eps * out.stage2_eps * norm_sq;
    trace.seconds_unfolded_cpd = seconds_since(t0);
    trace.unfolded_relative_error = out.stage2_eps;
    return out;
}

KruskalTensor finalize(const DenseTensor& t, Eigen::VectorXd weights,
                       std::vector<Eigen::MatrixXd> factors, Index rank,
                       const FcpOptions& opts, FcpTrace& trace, Clock::time_point pipeline_t0) {
    KruskalTensor result;
    result.weights = std::move(weights);
    result.factors = std::move(factors);
    result = normalize(result);
    if (result.rank() > rank) {
        // overshoot truncation: keep the R largest weights
        KruskalTensor cut;
        cut.weights = result.weights.head(rank);
        for (auto& f : result.factors) cut.factors.push_back(f.leftCols(rank));
        result = std::move(cut);
    }

    FitReport fit;
    if (opts.refine) {
        const auto t0 = Clock::now();
        AlsOptions als = opts.refine_als;
        als.init = CpInit::given;
        als.initial_guess = result;
        auto [refined, rfit] = cp_als(t, rank, als);
        result = std::move(refined);
        fit = rfit;
        trace.seconds_refine = seconds_since(t0);
    }
    fit.relative_error = relative_error_dense(t, result);
    fit.fit_percent = 100.0 * (1.0 - fit.relative_error);
    fit.seconds = seconds_since(pipeline_t0);
    trace.fit = std::move(fit);
    return result;
}

// Scatters working factors (group-concatenation order) back to original modes.
std::vector<Eigen::MatrixXd> unpermute(const std::vector<Eigen::MatrixXd>& work,
                                       const std::vector<int>& perm) {
    std::vector<Eigen::MatrixXd> out(work.size());
    for (std::size_t i = 0; i < work.size(); ++i) out[perm[i]] = work[i];
    return out;
}

} // namespace

std::pair<KruskalTensor, FcpTrace> fcp_rank_one(const DenseTensor& t, Index rank,
                                                const FcpOptions& opts) {
    const auto pipeline_t0 = Clock::now();
    FcpTrace trace;
    validate_options(t, rank, opts, trace);
    const Index r_work = rank + opts.rank_overshoot;

    Stage12 s12 = run_stage12(t, r_work, opts, trace);

    const auto t0 = Clock::now();
    Eigen::VectorXd lam = s12.weights;
    std::vector<Eigen::MatrixXd> out_factors(t.order());
    for (std::size_t m = 0; m < opts.rule.groups.size(); ++m) {
        const auto& group = opts.rule.groups[m];
        if (group.size() == 1) {
            out_factors[group[0]] = s12.factors[m];
            continue;
        }
        std::vector<Index> gshape;
        for (int mode : group) gshape.push_back(t.shape()[mode]);
        for (std::size_t k = 0; k < group.size(); ++k)
            out_factors[group[k]].resize(gshape[k], r_work);
        for (Index r = 0; r < r_work; ++r) {
            std::vector<double> col(s12.factors[m].col(r).data(),
                                    s12.factors[m].col(r).data() + s12.factors[m].rows());
            DenseTensor folded(gshape, std::move(col));
            RankOne r1;
            try {
                r1 = best_rank_one(folded);
            } catch (const degenerate_component_error&) {
                throw degenerate_component_error(
                    "rank-one extraction failed for group " + std::to_string(m + 1) +
                    ", component " + std::to_string(r + 1));
            }
            for (std::size_t k = 0; k < group.size(); ++k)
                out_factors[group[k]].col(r) = r1.vectors[k];
            lam(r) *= r1.weight;
        }
    }
    trace.seconds_reconstruct = seconds_since(t0);

    KruskalTensor result =
        finalize(t, std::move(lam), std::move(out_factors), rank, opts, trace, pipeline_t0);
    return {std::move(result), std::move(trace)};
}

std::pair<KruskalTensor, FcpTrace> fcp_low_rank(const DenseTensor& t, Index rank,
                                                const FcpOptions& opts) {
    const auto pipeline_t0 = Clock::now();
    FcpTrace trace;
    validate_options(t, rank, opts, trace);
    const Index r_work = rank + opts.rank_overshoot;

    Stage12 s12 = run_stage12(t, r_work, opts, trace);

    const auto t0 = Clock::now();
    std::vector<std::vector<int>> slots = opts.rule.groups;
    std::vector<Eigen::MatrixXd> work = std::move(s12.factors);
    Eigen::VectorXd lam = s12.weights;

    for (int m = int(opts.rule.groups.size()) - 1; m >= 0; --m) {
        const int splits = int(opts.rule.groups[m].size()) - 1;
        for (int k = 0; k < splits; ++k) {
            const int pos = m + k;
            const int split_mode = slots[pos][0];
            std::vector<int> rest(slots[pos].begin() + 1, slots[pos].end());
            const Index i_split = t.shape()[split_mode];
            Index rest_prod = 1;
            for (int mode : rest) rest_prod *= t.shape()[mode];

            std::vector<int> block_sizes(r_work);
            Index j_total = 0;
            Eigen::MatrixXd u_lead(i_split, r_work), v_lead(rest_prod, r_work);
            Eigen::VectorXd lam_lead(r_work);
            std::vector<Eigen::MatrixXd> u_blocks(r_work), v_blocks(r_work);

            for (Index r = 0; r < r_work; ++r) {
                Eigen::Map<const Eigen::MatrixXd> f(work[pos].col(r).data(), i_split, rest_prod);
                Eigen::BDCSVD<Eigen::MatrixXd> svd(f, Eigen::ComputeThinU | Eigen::ComputeThinV);
                if (svd.info() != Eigen::Success)
                    throw numeric_error("SVD failed in run (" + std::to_string(m + 1) + "," +
                                        std::to_string(k + 1) + "), component " +
                                        std::to_string(r + 1));
                const Eigen::VectorXd& sv = svd.singularValues();
                const double total = sv.squaredNorm();
                if (total <= 0)
                    throw degenerate_component_error(
                        "zero merged component in run (" + std::to_string(m + 1) + "," +
                        std::to_string(k + 1) + "), component " + std::to_string(r + 1));
                Index jr = 1;
                double acc = sv(0) * sv(0);
                const Index jcap = std::min<Index>(std::min(i_split, rest_prod), opts.j_max);
                while (acc < opts.tau * total && jr < jcap) {
                    acc += sv(jr) * sv(jr);
                    ++jr;
                }
                block_sizes[r] = int(jr);
                j_total += jr;
                u_blocks[r] = svd.matrixU().leftCols(jr);
                v_blocks[r] = svd.matrixV().leftCols(jr) * sv.head(jr).asDiagonal();
                u_lead.col(r) = svd.matrixU().col(0);
                v_lead.col(r) = svd.matrixV().col(0);
                lam_lead(r) = lam(r) * sv(0);
            }
            trace.block_ranks.push_back(block_sizes);

            // working layout after this split
            std::vector<std::vector<int>> new_slots;
            new_slots.reserve(slots.size() + 1);
            for (int i = 0; i < pos; ++i) new_slots.push_back(slots[i]);
            new_slots.push_back({split_mode});
            new_slots.push_back(rest);
            for (std::size_t i = pos + 1; i < slots.size(); ++i) new_slots.push_back(slots[i]);

            // leading-pair rank-R tensor in the new layout
            std::vector<Eigen::MatrixXd> lead_factors;
            lead_factors.reserve(work.size() + 1);
            for (int i = 0; i < pos; ++i) lead_factors.push_back(work[i]);
            lead_factors.push_back(u_lead);
            lead_factors.push_back(v_lead);
            for (std::size_t i = pos + 1; i < work.size(); ++i) lead_factors.push_back(work[i]);

            if (!trace.first_run.available) {
                trace.first_run.available = true;
                trace.first_run.stage2_residual_sq = s12.stage2_residual_sq;
                trace.first_run.working_rule.groups = new_slots;
                trace.first_run.ytilde_r.weights = lam_lead;
                trace.first_run.ytilde_r.factors = lead_factors;

                KruskalTensor yj;
                yj.weights.resize(j_total);
                Index col = 0;
                for (Index r = 0; r < r_work; ++r)
                    for (int j = 0; j < block_sizes[r]; ++j) yj.weights(col++) = lam(r);
                for (std::size_t i = 0; i < work.size() + 1; ++i) {
                    Eigen::MatrixXd f;
                    if (int(i) == pos) {
                        f.resize(i_split, j_total);
                    } else if (int(i) == pos + 1) {
                        f.resize(rest_prod, j_total);
                    } else {
                        const Eigen::MatrixXd& src = int(i) < pos ? work[i] : work[i - 1];
                        f.resize(src.rows(), j_total);
                        Index c = 0;
                        for (Index r = 0; r < r_work; ++r)
                            for (int j = 0; j < block_sizes[r]; ++j) f.col(c++) = src.col(r);
                    }
                    yj.factors.push_back(std::move(f));
                }
                Index c = 0;
                for (Index r = 0; r < r_work; ++r) {
                    yj.factors[pos].middleCols(c, block_sizes[r]) = u_blocks[r];
                    yj.factors[pos + 1].middleCols(c, block_sizes[r]) = v_blocks[r];
                    c += block_sizes[r];
                }
                trace.first_run.ytilde_j = std::move(yj);
            }

            if (j_total > r_work) {
                // structured layout: split pair moved to the back
                StructuredKruskal s;
                s.lambda = lam;
                s.block_sizes = block_sizes;
                for (int i = 0; i < pos; ++i) s.shared.push_back(work[i]);
                for (std::size_t i = pos + 1; i < work.size(); ++i) s.shared.push_back(work[i]);
                s.split_u.resize(i_split, j_total);
                s.split_v.resize(rest_prod, j_total);
                Index c = 0;
                for (Index r = 0; r < r_work; ++r) {
                    s.split_u.middleCols(c, block_sizes[r]) = u_blocks[r];
                    s.split_v.middleCols(c, block_sizes[r]) = v_blocks[r];
                    c += block_sizes[r];
                }

                KruskalTensor init;
                init.weights = lam_lead;
                for (int i = 0; i < pos; ++i) init.factors.push_back(work[i]);
                for (std::size_t i = pos + 1; i < work.size(); ++i)
                    init.factors.push_back(work[i]);
                init.factors.push_back(u_lead);
                init.factors.push_back(v_lead);

                auto [res, rfit] = structured_als(s, r_work, init, opts.structured_als);

                // back from the structured layout to the working layout
                const std::size_t L = work.size();
                std::vector<Eigen::MatrixXd> new_work(L + 1);
                for (int i = 0; i < pos; ++i) new_work[i] = res.factors[i];
                new_work[pos] = res.factors[L - 1];
                new_work[pos + 1] = res.factors[L];
                for (std::size_t i = pos + 1; i < L; ++i) new_work[i + 1] = res.factors[i - 1];
                work = std::move(new_work);
                lam = res.weights;
            } else {
                work = std::move(lead_factors);
                lam = lam_lead;
            }
            slots = std::move(new_slots);
        }
    }
    trace.seconds_reconstruct = seconds_since(t0);

    std::vector<Eigen::MatrixXd> out_factors = unpermute(work, opts.rule.permutation());
    KruskalTensor result =
        finalize(t, std::move(lam), std::move(out_factors), rank, opts, trace, pipeline_t0);
    return {std::move(result), std::move(trace)};
}

std::pair<KruskalTensor, FcpTrace> fcp(const DenseTensor& t, Index rank,
                                       const FcpOptions& opts) {
    return opts.mode == FcpMode::rank_one ? fcp_rank_one(t, rank, opts)
                                          : fcp_low_rank(t, rank, opts);
}

ErrorOrdering error_ordering_check(const DenseTensor& t, const FcpTrace& trace) {
    if (!trace.first_run.available)
        throw invalid_state_error("no low-rank run artifacts retained");
    const FcpRunArtifacts& art = trace.first_run;
    DenseTensor yw = unfold(t, art.working_rule);

    ErrorOrdering ord;
    ord.stage2_sq = art.stage2_residual_sq;
    DenseTensor dj = kruskal_to_dense(art.ytilde_j);
    DenseTensor dr = kruskal_to_dense(art.ytilde_r);
    ord.low_rank_sq = (yw.as_vector() - dj.as_vector()).squaredNorm();
    ord.rank_one_sq = (yw.as_vector() - dr.as_vector()).squaredNorm();

    const double slack = 1e-9 * yw.squared_norm();
    if (ord.stage2_sq > ord.low_rank_sq + slack || ord.low_rank_sq > ord.rank_one_sq + slack)
        throw numeric_error("residual ordering violated");
    return ord;
}

} // namespace fcpd

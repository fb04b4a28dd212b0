#include "fcpd/crib.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "fcpd/errors.hpp"

namespace fcpd {

namespace {

constexpr double kZeroTol = 1e-14;

double db_of(double value) { return -10.0 * std::log10(value); }

void require_unit_interval(double c, const char* what) {
    if (!(std::abs(c) < 1.0))
        throw singular_configuration_error(std::string(what) + " has magnitude >= 1");
}

// Exact CRLB trace for a rank-2 CP model with the given collinearities and
// first-mode size: trace of the a_1-orthogonal block of the pseudo-inverted
// Fisher information, with unit weights and unit noise.
double crlb_trace(const std::vector<double>& cs, Index i1) {
    const Index N = Index(cs.size());
    std::vector<Index> sizes(N, 2);
    sizes[0] = i1;

    std::vector<Eigen::MatrixXd> a(N);
    for (Index n = 0; n < N; ++n) {
        a[n] = Eigen::MatrixXd::Zero(sizes[n], 2);
        a[n](0, 0) = 1.0;
        a[n](0, 1) = cs[n];
        a[n](1, 1) = std::sqrt(1.0 - cs[n] * cs[n]);
    }

    Index total = 1;
    for (Index n = 0; n < N; ++n) total *= sizes[n];
    Index params = 0;
    for (Index n = 0; n < N; ++n) params += 2 * sizes[n];

    auto vec_rank1 = [&](const std::vector<Eigen::VectorXd>& cols) {
        Eigen::VectorXd v = cols[0];
        for (Index n = 1; n < N; ++n) {
            Eigen::MatrixXd outer = v * cols[n].transpose();
            v = Eigen::Map<Eigen::VectorXd>(outer.data(), outer.size());
        }
        return v;
    };

    Eigen::MatrixXd jac(total, params);
    Index col = 0;
    for (Index n = 0; n < N; ++n) {
        for (Index r = 0; r < 2; ++r) {
            for (Index i = 0; i < sizes[n]; ++i) {
                std::vector<Eigen::VectorXd> cols(N);
                for (Index k = 0; k < N; ++k) cols[k] = a[k].col(r);
                cols[n] = Eigen::VectorXd::Zero(sizes[n]);
                cols[n](i) = 1.0;
                jac.col(col++) = vec_rank1(cols);
            }
        }
    }

    Eigen::MatrixXd fim = jac.transpose() * jac;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fim);
    if (eig.info() != Eigen::Success)
        throw numeric_error("CRLB eigendecomposition failed");
    const Eigen::VectorXd& ev = eig.eigenvalues();
    const double cutoff = 1e-12 * ev.cwiseAbs().maxCoeff();

    // trace(Pperp * C11) with C = pinv(FIM); a_1 = e_1 in this basis
    Eigen::MatrixXd c11 = Eigen::MatrixXd::Zero(i1, i1);
    for (Index j = 0; j < ev.size(); ++j) {
        if (ev(j) <= cutoff) continue;
        const Eigen::VectorXd head = eig.eigenvectors().col(j).head(i1);
        c11.noalias() += (head * head.transpose()) / ev(j);
    }
    double tr = c11.trace() - c11(0, 0);
    return tr;
}

// Rank-2 bound with theta = 1; dispatches between the closed forms and the
// exact evaluator.
double crib_rank2_value(const std::vector<double>& cs, Index i1) {
    const Index N = Index(cs.size());
    if (N < 3) throw std::invalid_argument("rank-2 bound needs an order-3 or higher tensor");
    if (i1 < 2) throw std::invalid_argument("I_1 must be at least 2");

    int zeros = 0;
    for (Index n = 1; n < N; ++n) {
        if (!(std::abs(cs[n]) <= 1.0))
            throw std::invalid_argument("collinearity degrees must lie in [-1, 1]");
        if (std::abs(cs[n]) >= 1.0 - kZeroTol)
            throw singular_configuration_error("mode " + std::to_string(n + 1) +
                                               " has |c| = 1");
        if (std::abs(cs[n]) < kZeroTol) ++zeros;
    }
    if (!(std::abs(cs[0]) <= 1.0))
        throw std::invalid_argument("collinearity degrees must lie in [-1, 1]");

    double h1 = 1.0;
    for (Index n = 1; n < N; ++n) h1 *= cs[n];

    if (zeros >= 2) return double(i1 - 1); // correction vanishes, h_1 = 0

    if (std::abs(std::abs(cs[0]) - 1.0) < kZeroTol) {
        const double d = 1.0 - h1 * h1;
        if (d < kZeroTol) throw singular_configuration_error("|h| = 1 with |c_1| = 1");
        return double(i1 - 1) / d;
    }

    if (std::abs(cs[0]) < kZeroTol) {
        if (zeros == 1) {
            for (Index n = 1; n < N; ++n)
                if (std::abs(cs[n]) < kZeroTol)
                    throw singular_configuration_error(
                        "denominator vanishes for mode " + std::to_string(n + 1) +
                        " (c_1 = 0 with a single orthogonal mode)");
        }
        const double h1sq = h1 * h1;
        if (1.0 - h1sq < kZeroTol) throw singular_configuration_error("|h| = 1");
        double z = 0;
        for (Index n = 1; n < N; ++n) z += (1.0 - cs[n] * cs[n]) / (cs[n] * cs[n]);
        return ((i1 - 1) + h1sq * z / (1.0 - h1sq * (z + 1.0))) / (1.0 - h1sq);
    }

    return crlb_trace(cs, i1);
}

CribReport make_report(double value, std::string rule) {
    CribReport r;
    r.value = value;
    r.rule = std::move(rule);
    return r;
}

void check_order(const CollinearityProfile& p, Index order) {
    p.validate();
    if (Index(p.c.size()) != order)
        throw std::invalid_argument("profile order does not match this formula");
    if (p.rank != 2) throw std::invalid_argument("this closed form is for rank 2");
    if (std::abs(p.c[0]) > kZeroTol)
        throw std::invalid_argument("this closed form assumes c_1 = 0");
}

} // namespace

void CollinearityProfile::validate() const {
    if (c.empty()) throw std::invalid_argument("empty collinearity profile");
    for (double v : c)
        if (!(std::abs(v) <= 1.0))
            throw std::invalid_argument("collinearity degrees must lie in [-1, 1]");
    if (!(theta > 0)) throw std::invalid_argument("theta must be positive");
    if (i1 < 2) throw std::invalid_argument("I_1 must be at least 2");
    if (rank < 2) throw std::invalid_argument("rank must be at least 2");
}

double CribReport::db() const { return db_of(value); }

CribReport crib_rank2_general(const CollinearityProfile& p) {
    p.validate();
    if (p.rank != 2) throw std::invalid_argument("general formula is for rank 2");
    return make_report(p.theta * crib_rank2_value(p.c, p.i1), "full");
}

CribReport crib4_full(const CollinearityProfile& p) {
    check_order(p, 4);
    const double c2 = p.c[1], c3 = p.c[2], c4 = p.c[3];
    require_unit_interval(c2, "c_2");
    require_unit_interval(c3, "c_3");
    require_unit_interval(c4, "c_4");
    const double h = c2 * c3 * c4;
    const double hsq = h * h;
    if (1.0 - hsq < kZeroTol) throw singular_configuration_error("|h| = 1");
    const double pair = c2 * c2 * c3 * c3 + c2 * c2 * c4 * c4 + c3 * c3 * c4 * c4;
    const double v =
        (p.i1 - 1 + (pair - 3.0 * hsq) / (1.0 + 2.0 * hsq - pair)) / (1.0 - hsq);
    return make_report(p.theta * v, "full");
}

CribReport crib4_unfold_34(const CollinearityProfile& p) {
    check_order(p, 4);
    const double c2 = p.c[1], c34 = p.c[2] * p.c[3];
    require_unit_interval(c2, "c_2");
    require_unit_interval(c34, "c_3*c_4");
    const double h = c2 * c34;
    if (1.0 - h * h < kZeroTol) throw singular_configuration_error("|h| = 1");
    const double v =
        (p.i1 - 3 + 1.0 / (1.0 - c2 * c2) + 1.0 / (1.0 - c34 * c34)) / (1.0 - h * h);
    return make_report(p.theta * v, "1,2,(3,4)");
}

CribReport crib4_unfold_23(const CollinearityProfile& p) {
    check_order(p, 4);
    const double c23 = p.c[1] * p.c[2], c4 = p.c[3];
    require_unit_interval(c23, "c_2*c_3");
    require_unit_interval(c4, "c_4");
    const double h = c23 * c4;
    if (1.0 - h * h < kZeroTol) throw singular_configuration_error("|h| = 1");
    const double v =
        (p.i1 - 3 + 1.0 / (1.0 - c23 * c23) + 1.0 / (1.0 - c4 * c4)) / (1.0 - h * h);
    return make_report(p.theta * v, "1,(2,3),4");
}

OrthoModeBounds crib4_orthomode_rank_r(double c2, double c4, double theta, Index i1,
                                       Index rank) {
    if (rank < 2) throw std::invalid_argument("rank must be at least 2");
    if (i1 < 2) throw std::invalid_argument("I_1 must be at least 2");
    if (!(theta > 0)) throw std::invalid_argument("theta must be positive");
    require_unit_interval(c2, "c_2");
    require_unit_interval(c4, "c_4");
    OrthoModeBounds b;
    const double r1 = double(rank - 1);
    b.unfold_34 = make_report(theta * (i1 - rank + r1 / (1.0 - c2 * c2)), "1,2,(3,4)");
    b.unfold_23 = make_report(theta * (i1 - rank + r1 / (1.0 - c4 * c4)), "1,(2,3),4");
    b.full = make_report(theta * (i1 - rank + r1 / (1.0 - c2 * c2 * c4 * c4)), "full");
    b.unfold_34.loss_db = db_of(b.full.value / b.unfold_34.value);
    b.unfold_23.loss_db = db_of(b.full.value / b.unfold_23.value);
    return b;
}

CribReport crib5_full(const CollinearityProfile& p) {
    check_order(p, 5);
    const double c2 = p.c[1], c3 = p.c[2], c4 = p.c[3], c5 = p.c[4];
    for (int n = 1; n < 5; ++n) require_unit_interval(p.c[n], "c_n");
    const double h = c2 * c3 * c4 * c5;
    const double hsq = h * h;
    if (1.0 - hsq < kZeroTol) throw singular_configuration_error("|h| = 1");
    const double s2 = c2 * c2, s3 = c3 * c3, s4 = c4 * c4, s5 = c5 * c5;
    const double zeta = s2 * s3 * s4 + s2 * s3 * s5 + s2 * s4 * s5 + s3 * s4 * s5;
    const double v = (p.i1 - 1 + (zeta - 4.0 * hsq) / (1.0 + 3.0 * hsq - zeta)) / (1.0 - hsq);
    return make_report(p.theta * v, "full");
}

CribReport crib5_unfold_345(const CollinearityProfile& p) {
    check_order(p, 5);
    const double c2 = p.c[1], c345 = p.c[2] * p.c[3] * p.c[4];
    require_unit_interval(c2, "c_2");
    require_unit_interval(c345, "c_3*c_4*c_5");
    const double h = c2 * c345;
    if (1.0 - h * h < kZeroTol) throw singular_configuration_error("|h| = 1");
    const double v =
        (p.i1 - 3 + 1.0 / (1.0 - c2 * c2) + 1.0 / (1.0 - c345 * c345)) / (1.0 - h * h);
    return make_report(p.theta * v, "1,2,(3,4,5)");
}

CribReport crib5_unfold_23_45(const CollinearityProfile& p) {
    check_order(p, 5);
    const double c23 = p.c[1] * p.c[2], c45 = p.c[3] * p.c[4];
    require_unit_interval(c23, "c_2*c_3");
    require_unit_interval(c45, "c_4*c_5");
    const double h = c23 * c45;
    if (1.0 - h * h < kZeroTol) throw singular_configuration_error("|h| = 1");
    const double v =
        (p.i1 - 3 + 1.0 / (1.0 - c23 * c23) + 1.0 / (1.0 - c45 * c45)) / (1.0 - h * h);
    return make_report(p.theta * v, "1,(2,3),(4,5)");
}

Crib6Family crib6_family(double c, double theta, Index i1) {
    if (!(theta > 0)) throw std::invalid_argument("theta must be positive");
    if (i1 < 2) throw std::invalid_argument("I_1 must be at least 2");
    require_unit_interval(c, "c");

    const double c2 = c * c;
    const double c4 = c2 * c2, c6 = c4 * c2, c8 = c4 * c4, c10 = c8 * c2;
    const double d10 = 1.0 - c10, d8 = 1.0 - c8;
    const double base = (i1 - 1) / d10;

    Crib6Family fam;
    fam.full = make_report(
        theta * (base + 5.0 * c8 * (4.0 * c6 + 3.0 * c4 + 2.0 * c2 + 1.0) /
                            (d10 * d8 * (1.0 + 3.0 * c2 + c4) *
                             (1.0 + c2 + 6.0 * c4 + c6 + c8))),
        "full");
    fam.rules[0] = make_report(
        theta * (base + c6 * (6.0 * c8 + 11.0 * c6 + 7.0 * c4 + 5.0 * c2 + 1.0) /
                            (d10 * d8 * (1.0 + c2) *
                             (1.0 + 2.0 * c2 + 6.0 * c4 + 2.0 * c6 + c8))),
        "1,2,3,4,(5,6)");
    fam.rules[1] = make_report(
        theta * (base + c4 * (4.0 * c6 + 3.0 * c4 + 2.0 * c2 + 1.0) /
                            (d10 * d8 * (1.0 + 3.0 * c2 + c4))),
        "1,2,3,(4,5,6)");
    fam.rules[2] = make_report(
        theta * (base + c2 * (2.0 * c6 + c4 + c2 + 1.0) / (d10 * d8)), "1,2,(3,4,5,6)");
    // the merged profile (c, c^2, c^3); evaluated exactly rather than by the
    // printed display, which fails the parity the bound must have in c
    fam.rules[3] = make_report(
        theta * crib_rank2_value({c, c * c, c * c * c}, i1), "1,(2,3),(4,5,6)");
    fam.rules[4] = make_report(
        theta * (base + c6 * (2.0 * c6 + 2.0 * c4 + 2.0 * c2 + 1.0) *
                            (c6 + 4.0 * c4 + 3.0 * c2 + 2.0) /
                            (d10 * d8 * (1.0 + c2 + c4) *
                             (c8 + 3.0 * c6 + 6.0 * c4 + 3.0 * c2 + 1.0))),
        "1,2,(3,4),(5,6)");

    for (auto& r : fam.rules) r.loss_db = db_of(fam.full.value / r.value);
    return fam;
}

CribReport crib_ortho_two_modes(const std::vector<double>& gammas, double theta, Index i1,
                                Index rank) {
    if (rank < 2) throw std::invalid_argument("rank must be at least 2");
    if (Index(gammas.size()) != rank - 1)
        throw std::invalid_argument("one gamma per component r = 2..R required");
    if (!(theta > 0)) throw std::invalid_argument("theta must be positive");
    if (i1 < 2) throw std::invalid_argument("I_1 must be at least 2");
    double sum = 0;
    for (double g : gammas) {
        require_unit_interval(g, "gamma_r");
        sum += 1.0 / (1.0 - g * g);
    }
    return make_report(theta * (i1 - rank + sum), "1,2,(3:N)");
}

UnfoldingRule advise_unfolding(const std::vector<double>& c, int target_order,
                               double ortho_threshold, double tie_resolution) {
    const int n = int(c.size());
    if (target_order < 2) throw std::invalid_argument("target order must be at least 2");
    if (n <= target_order)
        throw std::invalid_argument("target order must be below the tensor order");
    if (tie_resolution < 0) throw std::invalid_argument("tie resolution must be >= 0");
    for (double v : c)
        if (!(std::abs(v) <= 1.0))
            throw std::invalid_argument("collinearity degrees must lie in [-1, 1]");

    struct Group {
        std::vector<int> modes; // ascending original indices
        double coeff;
        int rep() const { return modes.back(); }
    };
    std::vector<Group> groups;
    for (int m = 0; m < n; ++m) groups.push_back({{m}, c[m]});

    auto near_orth = [&](const Group& g) { return std::abs(g.coeff) < ortho_threshold; };
    auto magnitude = [&](const Group& g) {
        const double a = std::abs(g.coeff);
        return tie_resolution > 0 ? std::floor(a / tie_resolution + 0.5) : a;
    };

    while (int(groups.size()) > target_order) {
        int best_i = -1, best_j = -1;
        double best_hi = -1, best_lo = -1;
        int best_hi_rep = -1, best_lo_rep = -1;
        for (std::size_t i = 0; i < groups.size(); ++i) {
            for (std::size_t j = i + 1; j < groups.size(); ++j) {
                if (near_orth(groups[i]) != near_orth(groups[j])) continue;
                double hi = magnitude(groups[i]), lo = magnitude(groups[j]);
                int hi_rep = groups[i].rep(), lo_rep = groups[j].rep();
                if (hi < lo
                    || (hi == lo && hi_rep < lo_rep)) {
                    std::swap(hi, lo);
                    std::swap(hi_rep, lo_rep);
                }
                const bool better =
                    hi > best_hi || (hi == best_hi && lo > best_lo) ||
                    (hi == best_hi && lo == best_lo && hi_rep > best_hi_rep) ||
                    (hi == best_hi && lo == best_lo && hi_rep == best_hi_rep &&
                     lo_rep > best_lo_rep);
                if (better) {
                    best_hi = hi;
                    best_lo = lo;
                    best_hi_rep = hi_rep;
                    best_lo_rep = lo_rep;
                    best_i = int(i);
                    best_j = int(j);
                }
            }
        }
        if (best_i < 0) break; // no eligible pair left
        Group merged;
        merged.modes = groups[best_i].modes;
        merged.modes.insert(merged.modes.end(), groups[best_j].modes.begin(),
                            groups[best_j].modes.end());
        std::sort(merged.modes.begin(), merged.modes.end());
        merged.coeff = groups[best_i].coeff * groups[best_j].coeff;
        groups.erase(groups.begin() + best_j);
        groups[best_i] = std::move(merged);
    }

    std::sort(groups.begin(), groups.end(),
              [](const Group& a, const Group& b) { return a.modes.front() < b.modes.front(); });
    UnfoldingRule rule;
    for (auto& g : groups) rule.groups.push_back(std::move(g.modes));
    return rule;
}

std::vector<double> estimate_collinearity(const KruskalTensor& k) {
    k.validate();
    const Index R = k.rank();
    if (R < 2) throw std::invalid_argument("collinearity profile undefined for rank 1");
    std::vector<double> c;
    c.reserve(k.order());
    for (const auto& f : k.factors) {
        Eigen::MatrixXd unit = f;
        for (Index r = 0; r < R; ++r) {
            const double nrm = unit.col(r).norm();
            if (nrm < 1e-300) throw degenerate_component_error("zero factor column");
            unit.col(r) /= nrm;
        }
        const Eigen::MatrixXd gram = unit.transpose() * unit;
        double sum = 0;
        for (Index r = 0; r < R; ++r)
            for (Index s = 0; s < R; ++s)
                if (r != s) sum += std::abs(gram(r, s));
        c.push_back(sum / double(R * (R - 1)));
    }
    return c;
}

} // namespace fcpd

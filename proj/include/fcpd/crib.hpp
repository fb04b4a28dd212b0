#pragma once

#include <array>
#include <string>
#include <vector>

#include "fcpd/dense_tensor.hpp"
#include "fcpd/kruskal.hpp"

namespace fcpd {

/// Per-mode collinearity degrees plus the noise-to-signal scalar
/// theta = sigma^2 / lambda_1^2 for the mode carrying the bounded component.
struct CollinearityProfile {
    std::vector<double> c;
    double theta = 1.0;
    Index i1 = 2;
    Index rank = 2;

    void validate() const;
};

/// A bound on the squared angular error of the first component, in squared
/// radians, with the rule it applies to and its loss against a baseline.
struct CribReport {
    double value = 0;
    std::string rule;
    double loss_db = 0;

    double db() const;
};

/// Rank-2 bound for arbitrary per-mode collinearity. Closed form in the
/// c_1 = 0 and |c_1| = 1 regimes; exact reduced-size CRLB evaluation
/// otherwise (the bound is affine in I_1 and independent of the remaining
/// mode sizes).
CribReport crib_rank2_general(const CollinearityProfile& p);

/// Order-4 closed forms in the c_1 = 0 regime.
CribReport crib4_full(const CollinearityProfile& p);
CribReport crib4_unfold_34(const CollinearityProfile& p); // rule [1,2,(3,4)]
CribReport crib4_unfold_23(const CollinearityProfile& p); // rule [1,(2,3),4]

/// Rank-R bounds in the c_1 = c_3 = 0 regime.
struct OrthoModeBounds {
    CribReport unfold_34; // rule [1,2,(3,4)]
    CribReport unfold_23; // rule [1,(2,3),4]
    CribReport full;
};
OrthoModeBounds crib4_orthomode_rank_r(double c2, double c4, double theta, Index i1, Index rank);

/// Order-5 closed forms in the c_1 = 0 regime.
CribReport crib5_full(const CollinearityProfile& p);
CribReport crib5_unfold_345(const CollinearityProfile& p);   // rule [1,2,(3,4,5)]
CribReport crib5_unfold_23_45(const CollinearityProfile& p); // rule [1,(2,3),(4,5)]

/// Order-6 bounds under equal collinearity c in every mode, for the five
/// unfoldings l1=[1,2,3,4,(5,6)], l2=[1,2,3,(4,5,6)], l3=[1,2,(3,4,5,6)],
/// l4=[1,(2,3),(4,5,6)], l5=[1,2,(3,4),(5,6)]. Losses are relative to the
/// full-tensor bound.
struct Crib6Family {
    CribReport full;
    std::array<CribReport, 5> rules;
};
Crib6Family crib6_family(double c, double theta, Index i1);

/// Rank-R bound when two factor matrices have mutually orthogonal columns;
/// gammas holds the R-1 products gamma_r over the remaining modes.
CribReport crib_ortho_two_modes(const std::vector<double>& gammas, double theta, Index i1,
                                Index rank);

/// Greedy unfolding advisor: repeatedly merges the two groups with the
/// largest |c| (merged coefficient = product), never pairing a nearly
/// orthogonal group with a collinear one, until `target_order` groups remain.
/// Coefficients within `tie_resolution` of each other count as tied and
/// resolve toward the higher mode index, so estimated profiles with noisy
/// near-ties advise the same rule as their exact counterparts.
UnfoldingRule advise_unfolding(const std::vector<double>& c, int target_order,
                               double ortho_threshold = 0.15,
                               double tie_resolution = 0.02);

/// Per-mode average absolute cross-correlation of the factor columns.
std::vector<double> estimate_collinearity(const KruskalTensor& k);

} // namespace fcpd

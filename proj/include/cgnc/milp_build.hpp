#pragma once

#include <map>

#include "cgnc/expansion.hpp"
#include "cgnc/milp_ir.hpp"

namespace cgnc {

/// Uniform breakpoint grid per variable: l_j^r = lo_j + (r-1)/m (up_j - lo_j).
struct PartitionScheme {
    int m = 1;
    std::vector<Vec> breakpoints;  // per variable, m+1 ascending values
};
PartitionScheme uniform_partition(const FeatureBounds& bounds, int m);

/// Bound-tightening schedule for the iterative master problem: bounds
/// contract toward the previous iterate by factor nu per round and the
/// partition count shrinks as ceil(nu^(t-1) m_init).
struct TighteningState {
    int t = 1;
    double nu = 0.5;
    FeatureBounds initial;
    FeatureBounds current;
    int m_init = 20;
    int m_t = 20;
};
TighteningState make_tightening(FeatureBounds initial, int m_init, double nu);
TighteningState tighten(const TighteningState& state, const Vec& x_hat_prev);

/// Emits the piecewise McCormick envelope tying z to the product x_j x_k,
/// partitioned on x_j with the given breakpoints and one indicator binary
/// per segment (big-M activation, tightest constant per row from interval
/// arithmetic over the variables' declared bounds). The caller declares the
/// lambdas and the sum-to-one row. x_j == x_k encodes a square.
void mccormick_block(MilpModel& m, int xj, int xk, int z, const Vec& breakpoints,
                     const std::vector<int>& lambdas);

/// A built master or adversarial MILP together with its variable layout.
struct BuiltMilp {
    MilpModel model;
    std::vector<int> primal;                  // x (MP) or delta (AP) indices
    std::map<std::pair<int, int>, int> product;  // (j,k) -> z/eta index
    std::vector<std::vector<int>> lambda;     // per variable, segment binaries
};

/// Relaxed master problem: minimize the whitened lp distance from the factual
/// subject to one linearized robust-classification row per scenario, with
/// products replaced by z variables under the piecewise McCormick envelope.
BuiltMilp build_mp(const CgncModel& model, const ExpandedForm& exp,
                   const WhitenedMetric& metric, const Vec& factual,
                   const std::vector<Vec>& scenarios, const TighteningState& tightening,
                   double tau_prime, bool double_partition = false);

/// Relaxed adversarial problem: maximize the linearized violation tau' - H
/// over the uncertainty set around x_hat; delta bounds come from the set's
/// coordinate extent and are never tightened.
BuiltMilp build_ap(const CgncModel& model, const ExpandedForm& exp,
                   const UncertaintySet& uset, const Vec& x_hat, int m_fixed,
                   double tau_prime, bool double_partition = false);

}  // namespace cgnc

#pragma once

#include <cstdint>

#include "cgnc/expansion.hpp"
#include "cgnc/milp_ir.hpp"

namespace cgnc {

enum class SolveStatus { Optimal, Feasible, Infeasible, Unbounded, IterLimit };

struct SolveStats {
    long nodes = 0;
    long simplex_iterations = 0;
    double wall_seconds = 0.0;
};

struct SolveResult {
    SolveStatus status = SolveStatus::Infeasible;
    double objective = 0.0;  // in the model's own objective sense
    Vec assignment;          // dense, one entry per model variable
    double gap = 0.0;        // relative MIP gap at termination
    SolveStats stats;
};

const char* solve_status_name(SolveStatus s);

/// Best-first branch-and-bound over the dense simplex LP core. Branches on
/// the most fractional binary; terminates optimal once the global bound gap
/// |incumbent - bound| / max(1e-9, |incumbent|) drops below gap_tol (or the
/// absolute gap below 1e-7). Hitting the node or time limit returns the
/// incumbent, if any, with status IterLimit. Deterministic.
SolveResult solve_milp(const MilpModel& m, double gap_tol = 0.01,
                       long node_limit = 1000000, double time_limit = 3600.0);

/// Multi-start local solvers for the original nonconvex problems. Never claim
/// optimality: a successful solve reports status Feasible.
///
/// MP: minimize ||W (x - factual)||_p over the box subject to
/// H(x + scenario) >= tau' for every scenario, by exact-penalty projected
/// descent (rho schedule 10 ... 1e6) followed by a polish step that restores
/// scenario feasibility to within 1e-6. If no start yields a feasible point,
/// status is Infeasible and `objective` carries the best (smallest) maximum
/// scenario violation found.
/// When `warm_start` is given it replaces the factual as the first start.
SolveResult solve_local_mp(const CgncModel& model, const WhitenedMetric& metric,
                           const Vec& factual, const std::vector<Vec>& scenarios,
                           const FeatureBounds& bounds, double tau_prime, int starts,
                           std::uint64_t seed, const Vec* warm_start = nullptr);

/// AP: maximize tau' - H(x_hat + delta) over the uncertainty set by projected
/// gradient ascent in whitened coordinates, multi-start from zero plus seeded
/// random ball points.
SolveResult solve_local_ap(const CgncModel& model, const UncertaintySet& uset,
                           const Vec& x_hat, double tau_prime, int starts,
                           std::uint64_t seed);

/// Exhaustive grid oracles for desk-scale verification (n <= 4): evaluate the
/// exact objective on an axis-aligned grid with `resolution` points per axis
/// (AP grid points are filtered by set membership) and return the best point.
SolveResult solve_grid_mp(const CgncModel& model, const WhitenedMetric& metric,
                          const Vec& factual, const std::vector<Vec>& scenarios,
                          const FeatureBounds& bounds, double tau_prime, int resolution);
SolveResult solve_grid_ap(const CgncModel& model, const UncertaintySet& uset,
                          const Vec& x_hat, double tau_prime, int resolution);

}  // namespace cgnc

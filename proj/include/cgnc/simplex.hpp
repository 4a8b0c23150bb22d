#pragma once

#include <cstdint>

#include "cgnc/milp_ir.hpp"

namespace cgnc {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterLimit };

struct LpSolution {
    LpStatus status = LpStatus::IterLimit;
    double objective = 0.0;  // in Min sense over the passed objective
    Vec x;                   // structural variables only
    long iterations = 0;
};

/// Snapshot of a simplex basis, reusable to warm-start a related solve
/// (same model shape, possibly different variable bounds).
struct LpBasis {
    std::vector<int> basic;        // column basic in each row
    std::vector<std::uint8_t> at;  // per column: 0 lower, 1 upper, 2 basic
};

/// Revised bounded-variable simplex over a sparse LU factorization of the
/// basis with product-form updates. Feasibility is restored by dual pivots
/// (which makes warm starts from a parent basis cheap), then optimality is
/// finished by primal Dantzig pricing with Bland's anti-cycling fallback.
/// Deterministic.
///
/// Solves min objective.x subject to the model's constraints and the given
/// variable bounds (which may tighten or override the model's own bounds;
/// binaries are treated as continuous within their bounds).
LpSolution solve_lp(const MilpModel& m, const std::vector<std::pair<int, double>>& objective,
                    const Vec& lower, const Vec& upper, long max_iters = 200000,
                    const LpBasis* warm = nullptr, LpBasis* out_basis = nullptr);

}  // namespace cgnc

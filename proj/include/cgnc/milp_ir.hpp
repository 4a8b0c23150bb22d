#pragma once

#include <map>
#include <string>
#include <vector>

#include "cgnc/types.hpp"

namespace cgnc {

enum class VarKind { Continuous, Binary };
enum class Sense { Le, Eq, Ge };
enum class ObjSense { Min, Max };

struct MilpVariable {
    std::string name;
    VarKind kind = VarKind::Continuous;
    double lower = 0.0;
    double upper = 0.0;
};

/// Sparse linear row: sum_j coeffs[j] * var_j  <sense>  rhs.
struct LinearConstraint {
    std::vector<std::pair<int, double>> coeffs;  // (variable index, coefficient)
    Sense sense = Sense::Le;
    double rhs = 0.0;
    std::string name;
};

/// A one-hot binary group selecting which segment of a partitioned
/// continuous variable is active: lambdas[r] = 1 iff var lies in
/// [breakpoints[r], breakpoints[r+1]]. Lets the solver branch on segment
/// ranges instead of single binaries.
struct PartitionGroup {
    int var = -1;
    std::vector<int> lambdas;        // one binary per segment
    std::vector<double> breakpoints;  // lambdas.size() + 1 ascending values
};

/// Solver-agnostic MILP: bounded variables, linear constraints, linear objective.
struct MilpModel {
    std::vector<MilpVariable> variables;
    std::vector<LinearConstraint> constraints;
    std::vector<PartitionGroup> partitions;
    // bilinear links z ~= x_j * x_k behind the partition groups; lets the
    // solver rank branching candidates by true envelope error
    struct ProductLink {
        int xj = -1, xk = -1, z = -1;
    };
    std::vector<ProductLink> products;
    ObjSense obj_sense = ObjSense::Min;
    std::vector<std::pair<int, double>> objective;  // sparse
    double obj_constant = 0.0;

    int add_variable(const std::string& name, VarKind kind, double lower, double upper);
    void add_constraint(LinearConstraint c);

    /// Checks the IR invariants: referenced variables exist, binaries are
    /// [0,1], continuous bounds finite. Throws on violation.
    void validate() const;

    /// Evaluates one constraint's left-hand side at a dense assignment.
    double lhs(const LinearConstraint& c, const Vec& x) const;
    /// Maximum constraint/bound violation of an assignment.
    double max_violation(const Vec& x) const;
    /// Objective value (including the constant offset).
    double objective_value(const Vec& x) const;
};

/// Writes the model in LP file format for cross-checking with external solvers.
std::string to_lp_format(const MilpModel& m);

}  // namespace cgnc

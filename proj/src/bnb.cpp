#include "cgnc/solve.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <queue>

#include "cgnc/simplex.hpp"

namespace cgnc {

namespace {

constexpr double kIntTol = 1e-6;
constexpr double kAbsGapTol = 1e-7;

struct Node {
    double bound;  // parent LP objective: valid lower bound before solving
    long seq;      // insertion order, for deterministic tie-breaking
    Vec lower, upper;
    std::shared_ptr<const LpBasis> warm;  // parent's optimal basis
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        return a.seq > b.seq;
    }
};

double relative_gap(double incumbent, double bound) {
    return std::abs(incumbent - bound) / std::max(1e-9, std::abs(incumbent));
}

bool gap_closed(double incumbent, double bound, double gap_tol) {
    return std::abs(incumbent - bound) <= kAbsGapTol ||
           relative_gap(incumbent, bound) <= gap_tol;
}

}  // namespace

const char* solve_status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Feasible: return "feasible";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
        case SolveStatus::IterLimit: return "iteration-limit";
    }
    return "unknown";
}

SolveResult solve_milp(const MilpModel& m, double gap_tol, long node_limit,
                       double time_limit) {
    const auto t0 = std::chrono::steady_clock::now();
    m.validate();
    const int n = static_cast<int>(m.variables.size());
    const double sense = m.obj_sense == ObjSense::Max ? -1.0 : 1.0;
    std::vector<std::pair<int, double>> obj;
    obj.reserve(m.objective.size());
    for (auto [j, c] : m.objective) obj.emplace_back(j, sense * c);

    std::vector<int> binaries;
    for (int j = 0; j < n; ++j)
        if (m.variables[j].kind == VarKind::Binary) binaries.push_back(j);
    std::vector<int> group_of(n, -1);
    for (int g = 0; g < static_cast<int>(m.partitions.size()); ++g)
        for (int lam : m.partitions[g].lambdas) group_of[lam] = g;

    SolveResult out;
    auto finish = [&](SolveStatus status, double bound) {
        out.status = status;
        auto dt = std::chrono::steady_clock::now() - t0;
        out.stats.wall_seconds = std::chrono::duration<double>(dt).count();
        if (out.assignment.size() > 0) {
            double inner = out.objective;
            out.gap = status == SolveStatus::Optimal && binaries.empty()
                          ? 0.0
                          : relative_gap(inner, bound);
            if (status == SolveStatus::Optimal && gap_closed(inner, bound, gap_tol))
                out.gap = std::min(out.gap, gap_tol);
            out.objective = sense * inner + m.obj_constant;
        }
        return out;
    };

    Vec lo(n), up(n);
    for (int j = 0; j < n; ++j) {
        lo[j] = m.variables[j].lower;
        up[j] = m.variables[j].upper;
    }

    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    long seq = 0;
    open.push({-std::numeric_limits<double>::infinity(), seq++, lo, up, nullptr});

    bool have_incumbent = false;
    double incumbent = std::numeric_limits<double>::infinity();
    double best_bound = -std::numeric_limits<double>::infinity();

    while (!open.empty()) {
        auto dt = std::chrono::steady_clock::now() - t0;
        if (out.stats.nodes >= node_limit ||
            std::chrono::duration<double>(dt).count() > time_limit) {
            return finish(SolveStatus::IterLimit, open.top().bound);
        }
        Node node = open.top();
        open.pop();
        best_bound = node.bound;
        if (have_incumbent && gap_closed(incumbent, best_bound, gap_tol))
            return finish(SolveStatus::Optimal, best_bound);

        ++out.stats.nodes;
        auto basis = std::make_shared<LpBasis>();
        LpSolution lp =
            solve_lp(m, obj, node.lower, node.upper, 200000, node.warm.get(), basis.get());
        out.stats.simplex_iterations += lp.iterations;
        if (lp.status == LpStatus::Infeasible) continue;
        if (lp.status == LpStatus::Unbounded) {
            if (!have_incumbent && out.stats.nodes == 1)
                return finish(SolveStatus::Unbounded, best_bound);
            throw SolverError("unbounded LP relaxation below the root");
        }
        if (lp.status == LpStatus::IterLimit)
            throw SolverError("simplex iteration limit reached inside branch-and-bound");
        if (have_incumbent && gap_closed(incumbent, lp.objective, gap_tol)) continue;

        // diving heuristic: snap every partition group to the segment holding
        // the LP point and every loose binary to its rounded value, then
        // re-solve. A near-optimal incumbent this early prunes most of the
        // tree under best-first search.
        if (!have_incumbent || out.stats.nodes % 64 == 0) {
            Vec flo = node.lower, fup = node.upper;
            for (int j : binaries) {
                double r = group_of[j] >= 0 ? 0.0 : std::round(lp.x[j]);
                flo[j] = std::max(flo[j], r);
                fup[j] = std::min(fup[j], r);
            }
            for (const auto& pg : m.partitions) {
                const int segs = static_cast<int>(pg.lambdas.size());
                int best = -1;
                for (int r = 0; r < segs; ++r) {
                    if (node.upper[pg.lambdas[r]] < 0.5) continue;
                    if (best < 0 || (pg.breakpoints[r] <= lp.x[pg.var] &&
                                     lp.x[pg.var] <= pg.breakpoints[r + 1]))
                        best = r;
                }
                if (best >= 0) flo[pg.lambdas[best]] = fup[pg.lambdas[best]] = 1.0;
            }
            LpSolution dive = solve_lp(m, obj, flo, fup, 200000, basis.get());
            out.stats.simplex_iterations += dive.iterations;
            if (dive.status == LpStatus::Optimal &&
                (!have_incumbent || dive.objective < incumbent)) {
                have_incumbent = true;
                incumbent = dive.objective;
                out.objective = dive.objective;
                out.assignment = dive.x;
            }
        }

        // pick the most fractional binary
        int branch = -1;
        double most = kIntTol;
        for (int j : binaries) {
            double f = lp.x[j] - std::floor(lp.x[j]);
            double frac = std::min(f, 1.0 - f);
            if (frac > most) {
                most = frac;
                branch = j;
            }
        }
        if (branch >= 0 && !m.products.empty()) {
            // among groups that still have a fractional lambda, prefer the
            // one behind the largest true envelope error |z - xj*xk|: that
            // error, not lambda fractionality, is what branching must shrink
            std::vector<bool> frac_group(m.partitions.size(), false);
            for (int j : binaries) {
                double f = lp.x[j] - std::floor(lp.x[j]);
                if (group_of[j] >= 0 && std::min(f, 1.0 - f) > kIntTol)
                    frac_group[group_of[j]] = true;
            }
            std::vector<int> group_of_var(n, -1);
            for (int g = 0; g < static_cast<int>(m.partitions.size()); ++g)
                group_of_var[m.partitions[g].var] = g;
            int best_group = -1;
            double best_err = 1e-9;
            for (const auto& pr : m.products) {
                double err = std::abs(lp.x[pr.z] - lp.x[pr.xj] * lp.x[pr.xk]);
                if (err <= best_err) continue;
                for (int v : {pr.xj, pr.xk}) {
                    int g = group_of_var[v];
                    if (g >= 0 && frac_group[g]) {
                        best_err = err;
                        best_group = g;
                        break;
                    }
                }
            }
            if (best_group >= 0) branch = m.partitions[best_group].lambdas.front();
        }
        if (branch < 0) {
            // integral: snap binaries and, if that moved anything, restore
            // the continuous part by re-solving with the binaries fixed
            Vec x = lp.x;
            double objval = lp.objective;
            bool moved = false;
            for (int j : binaries) {
                double r = std::round(x[j]);
                if (x[j] != r) moved = true;
                x[j] = r;
            }
            if (moved) {
                Vec flo = node.lower, fup = node.upper;
                for (int j : binaries) flo[j] = fup[j] = x[j];
                LpSolution fixed = solve_lp(m, obj, flo, fup, 200000, basis.get());
                out.stats.simplex_iterations += fixed.iterations;
                if (fixed.status != LpStatus::Optimal) continue;
                x = fixed.x;
                objval = fixed.objective;
            }
            if (!have_incumbent || objval < incumbent) {
                have_incumbent = true;
                incumbent = objval;
                out.objective = objval;
                out.assignment = x;
            }
            continue;
        }
        Node down{lp.objective, seq++, node.lower, node.upper, basis};
        Node upn{lp.objective, seq++, node.lower, node.upper, basis};
        if (group_of[branch] >= 0) {
            // segment-range branching on the partition group: split the
            // active segments at the lambda center of gravity, so both
            // children narrow the partitioned variable's interval
            const auto& pg = m.partitions[group_of[branch]];
            const int segs = static_cast<int>(pg.lambdas.size());
            int rlo = segs, rhi = -1;
            double cg = 0.0, tot = 0.0;
            for (int r = 0; r < segs; ++r) {
                if (node.upper[pg.lambdas[r]] < 0.5) continue;
                rlo = std::min(rlo, r);
                rhi = std::max(rhi, r);
                double v = lp.x[pg.lambdas[r]];
                cg += v * r;
                tot += v;
            }
            int split = static_cast<int>(std::lround(cg / std::max(1e-12, tot)));
            split = std::clamp(split, rlo + 1, rhi);
            for (int r = split; r < segs; ++r) down.upper[pg.lambdas[r]] = 0.0;
            down.upper[pg.var] = std::min(down.upper[pg.var], pg.breakpoints[split]);
            for (int r = 0; r < split; ++r) upn.upper[pg.lambdas[r]] = 0.0;
            upn.lower[pg.var] = std::max(upn.lower[pg.var], pg.breakpoints[split]);
        } else {
            down.upper[branch] = 0.0;
            upn.lower[branch] = 1.0;
        }
        open.push(std::move(down));
        open.push(std::move(upn));
    }

    if (!have_incumbent) return finish(SolveStatus::Infeasible, best_bound);
    return finish(SolveStatus::Optimal, incumbent);
}

}  // namespace cgnc

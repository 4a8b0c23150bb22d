#include "cgnc/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

namespace cgnc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTolD = 1e-9;     // dual feasibility (reduced cost) tolerance
constexpr double kTolP = 5e-9;     // primal bound tolerance
constexpr double kTolPiv = 1e-9;   // pivot magnitude tolerance
constexpr double kPseudo = 1e12;   // stand-in for an infinite bound
constexpr int kRefactorEvery = 60;
constexpr int kStallLimit = 200;

enum class VStat : std::uint8_t { AtLower = 0, AtUpper = 1, Basic = 2 };

// B^-1 as a sparse LU factorization of a reference basis plus product-form
// eta updates for the pivots since the last refactorization.
struct BasisFactor {
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    std::vector<std::pair<int, Vec>> etas;  // (pivot row, w = B^-1 a_enter)
    int m = 0;

    bool refactor(const std::vector<std::vector<std::pair<int, double>>>& cols,
                  const std::vector<int>& basis) {
        m = static_cast<int>(basis.size());
        std::vector<Eigen::Triplet<double>> trip;
        for (int i = 0; i < m; ++i)
            for (auto [r, a] : cols[basis[i]]) trip.emplace_back(r, i, a);
        Eigen::SparseMatrix<double> b(m, m);
        b.setFromTriplets(trip.begin(), trip.end());
        lu.compute(b);
        etas.clear();
        return lu.info() == Eigen::Success;
    }

    Vec ftran(const Vec& rhs) const {  // B^-1 rhs
        Vec x = lu.solve(rhs);
        for (const auto& [r, w] : etas) {
            x[r] /= w[r];
            for (int i = 0; i < m; ++i)
                if (i != r) x[i] -= w[i] * x[r];
        }
        return x;
    }

    Vec btran(Vec y) {  // B^-T y (SparseLU::adjoint() is non-const in Eigen)
        for (auto it = etas.rbegin(); it != etas.rend(); ++it) {
            const auto& [r, w] = *it;
            double dot = w.dot(y) - w[r] * y[r];
            y[r] = (y[r] - dot) / w[r];
        }
        return lu.adjoint().solve(y);
    }
};

double jitter(int j);

struct Solver {
    int m = 0, ns = 0, ntot = 0;
    std::vector<std::vector<std::pair<int, double>>> cols;
    Vec b, lo, up, cost;
    std::vector<bool> pseudo_lo, pseudo_up;  // bound replaced by +-kPseudo
    std::vector<VStat> stat;
    std::vector<int> basis, basepos;
    Vec xb, xval;
    BasisFactor factor;
    long iters = 0;
    long max_iters = 0;

    double col_dot(int j, const Vec& y) const {
        double s = 0.0;
        for (auto [r, a] : cols[j]) s += a * y[r];
        return s;
    }

    Vec nonbasic_rhs() const {
        Vec rhs = b;
        for (int j = 0; j < ntot; ++j)
            if (stat[j] != VStat::Basic && xval[j] != 0.0)
                for (auto [r, a] : cols[j]) rhs[r] -= a * xval[j];
        return rhs;
    }

    bool refactor() {
        if (!factor.refactor(cols, basis)) return false;
        xb = factor.ftran(nonbasic_rhs());
        return true;
    }

    Vec dense_col(int j) const {
        Vec a = Vec::Zero(m);
        for (auto [r, c] : cols[j]) a[r] += c;
        return a;
    }

    Vec reduced_costs() {
        Vec cb(m);
        for (int i = 0; i < m; ++i) cb[i] = cost[basis[i]];
        Vec y = factor.btran(cb);
        Vec d(ntot);
        for (int j = 0; j < ntot; ++j)
            d[j] = stat[j] == VStat::Basic ? 0.0 : cost[j] - col_dot(j, y);
        return d;
    }

    // Flips nonbasic variables whose reduced-cost sign disagrees with their
    // bound, restoring dual feasibility (used at cold and warm starts).
    void restore_dual_feasibility(const Vec& d) {
        for (int j = 0; j < ntot; ++j) {
            if (stat[j] == VStat::Basic || lo[j] == up[j]) continue;
            if (stat[j] == VStat::AtLower && d[j] < -kTolD && up[j] < kInf)
                stat[j] = VStat::AtUpper;
            else if (stat[j] == VStat::AtUpper && d[j] > kTolD && lo[j] > -kInf)
                stat[j] = VStat::AtLower;
            else
                continue;
            xval[j] = stat[j] == VStat::AtLower ? lo[j] : up[j];
        }
        xb = factor.ftran(nonbasic_rhs());
    }

    void pivot(int row, int enter, const Vec& w, double enter_val, double leave_bound) {
        int out = basis[row];
        stat[out] = leave_bound == lo[out] ? VStat::AtLower : VStat::AtUpper;
        xval[out] = leave_bound;
        basepos[out] = -1;
        basis[row] = enter;
        basepos[enter] = row;
        stat[enter] = VStat::Basic;
        xb[row] = enter_val;
        factor.etas.emplace_back(row, w);
        if (static_cast<int>(factor.etas.size()) >= kRefactorEvery) refactor();
    }

    // Dual simplex: drives basic variables into their bounds while keeping
    // reduced costs sign-feasible. Returns Optimal when primal feasible,
    // Infeasible when a violated row has no eligible entering column.
    LpStatus dual_loop() {
        int stall = 0;
        int salt = 0;
        double best_infeas = kInf;
        while (iters < max_iters) {
            // most violated basic variable leaves
            int row = -1;
            double worst = kTolP;
            double total = 0.0;
            for (int i = 0; i < m; ++i) {
                int bi = basis[i];
                double v = std::max(lo[bi] - xb[i], xb[i] - up[bi]);
                if (v > 0.0) total += v;
                if (v > worst + 1e-15 && (stall < kStallLimit || row < 0)) {
                    worst = v;
                    row = i;
                }
            }
            if (row < 0) return LpStatus::Optimal;
            if (total < best_infeas - 1e-12) {
                best_infeas = total;
                stall = 0;
            } else if (++stall > 2 * kStallLimit) {
                // no progress on total infeasibility: pivots have produced
                // exact-zero reduced costs and the basis is cycling. Re-jitter
                // the costs with a fresh salt to break every dual tie; the
                // clean-up phases run with the true costs afterwards.
                salt += ntot;
                for (int j = 0; j < ntot; ++j)
                    cost[j] += (cost[j] < 0.0 ? -1.0 : 1.0) * 1e-8 * jitter(j + salt) *
                               std::max(1.0, std::abs(cost[j]));
                stall = 0;
                continue;
            }
            ++iters;
#ifdef CGNC_LP_DEBUG
            if (iters % 10000 == 0)
                std::fprintf(stderr, "dual iters=%ld row=%d viol=%g stall=%d\n", iters,
                             row, worst, stall);
#endif
            int out = basis[row];
            bool need_inc = xb[row] < lo[out];
            double bound = need_inc ? lo[out] : up[out];

            Vec e = Vec::Zero(m);
            e[row] = 1.0;
            Vec rho = factor.btran(e);
            Vec d = reduced_costs();

            // bound-flipping ratio test: walk the eligible columns in ratio
            // order. A column whose whole range cannot absorb the violation
            // is flipped to its other bound and the test continues on the
            // same row, so the row always ends in a pivot, in feasibility, or
            // in a proof of infeasibility. Ending the iteration after a lone
            // flip instead lets a flip/pivot pair on two rows undo each other
            // forever.
            struct Cand {
                double ratio;
                int j;
                double alpha;
            };
            std::vector<Cand> cands;
            for (int j = 0; j < ntot; ++j) {
                if (stat[j] == VStat::Basic || lo[j] == up[j]) continue;
                double alpha = col_dot(j, rho);
                if (std::abs(alpha) < kTolPiv) continue;
                bool ok = need_inc ? (stat[j] == VStat::AtLower ? alpha < 0 : alpha > 0)
                                   : (stat[j] == VStat::AtLower ? alpha > 0 : alpha < 0);
                if (!ok) continue;
                cands.push_back({std::abs(d[j]) / std::abs(alpha), j, alpha});
            }
            std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
                if (a.ratio != b.ratio) return a.ratio < b.ratio;
                return a.j < b.j;
            });

            double resid = xb[row] - bound;
            int enter = -1;
            Vec flip_rhs = Vec::Zero(m);
            bool flipped = false;
            for (const auto& c : cands) {
                double range = up[c.j] - lo[c.j];
                if (range < kInf && std::abs(resid / c.alpha) > range + kTolP) {
                    // each flip under-corrects the row, so |resid| shrinks
                    // strictly and this walk terminates
                    double delta = stat[c.j] == VStat::AtLower ? range : -range;
                    stat[c.j] =
                        stat[c.j] == VStat::AtLower ? VStat::AtUpper : VStat::AtLower;
                    xval[c.j] = stat[c.j] == VStat::AtLower ? lo[c.j] : up[c.j];
                    for (auto [r, a] : cols[c.j]) flip_rhs[r] += delta * a;
                    resid -= delta * c.alpha;
                    flipped = true;
                    continue;
                }
                enter = c.j;
                break;
            }
            if (flipped) xb -= factor.ftran(flip_rhs);
            if (enter < 0) {
                // flips can leave a residual below tolerance; only an
                // unresolved violation with no remaining column is a
                // certificate of infeasibility
                if (flipped && std::abs(xb[row] - bound) <= kTolP) continue;
                return LpStatus::Infeasible;
            }

            Vec w = factor.ftran(dense_col(enter));
            if (std::abs(w[row]) < kTolPiv) {
                // numeric disagreement between rho and the ftran column:
                // refactorize and retry this row
                if (!refactor()) return LpStatus::Infeasible;
                continue;
            }
            double step = (xb[row] - bound) / w[row];
            double enter_val = xval[enter] + step;
            xb -= step * w;
            pivot(row, enter, w, enter_val, bound);
        }
        return LpStatus::IterLimit;
    }

    // Primal clean-up: Dantzig pricing with a switch to Bland's rule on
    // stall. From a dual-feasible, primal-feasible point this usually exits
    // immediately; it also certifies optimality and catches unbounded rays.
    LpStatus primal_loop() {
        bool bland = false;
        int stall = 0;
        while (iters < max_iters) {
            Vec d = reduced_costs();
            int enter = -1, dir = 0;
            double best = 0.0;
            for (int j = 0; j < ntot; ++j) {
                if (stat[j] == VStat::Basic || lo[j] == up[j]) continue;
                if (stat[j] == VStat::AtLower && d[j] < -kTolD) {
                    if (bland) {
                        enter = j;
                        dir = 1;
                        break;
                    }
                    if (-d[j] > best) {
                        best = -d[j];
                        enter = j;
                        dir = 1;
                    }
                } else if (stat[j] == VStat::AtUpper && d[j] > kTolD) {
                    if (bland) {
                        enter = j;
                        dir = -1;
                        break;
                    }
                    if (d[j] > best) {
                        best = d[j];
                        enter = j;
                        dir = -1;
                    }
                }
            }
            if (enter < 0) return LpStatus::Optimal;
            ++iters;
#ifdef CGNC_LP_DEBUG
            if (iters % 10000 == 0)
                std::fprintf(stderr, "primal iters=%ld enter=%d best=%g bland=%d\n",
                             iters, enter, best, (int)bland);
#endif

            Vec w = factor.ftran(dense_col(enter));
            double step = up[enter] - lo[enter];
            int leave = -1;
            double hit = 0.0;
            for (int i = 0; i < m; ++i) {
                double g = -dir * w[i];
                int bi = basis[i];
                double lim = kInf, bnd = 0.0;
                if (g < -kTolPiv && lo[bi] > -kInf) {
                    lim = (xb[i] - lo[bi]) / (-g);
                    bnd = lo[bi];
                } else if (g > kTolPiv && up[bi] < kInf) {
                    lim = (up[bi] - xb[i]) / g;
                    bnd = up[bi];
                }
                if (lim < 0.0) lim = 0.0;
                if (lim < step - 1e-12 ||
                    (lim < step + 1e-12 && leave >= 0 && bi < basis[leave])) {
                    step = lim;
                    leave = i;
                    hit = bnd;
                }
            }
            if (step == kInf) return LpStatus::Unbounded;
            if (best * step <= 1e-12) {
                if (++stall >= kStallLimit) bland = true;
            } else {
                stall = 0;
            }
            xb -= step * dir * w;
            if (leave < 0) {
                stat[enter] = dir > 0 ? VStat::AtUpper : VStat::AtLower;
                xval[enter] = dir > 0 ? up[enter] : lo[enter];
                continue;
            }
            double enter_val = xval[enter] + dir * step;
            pivot(leave, enter, w, enter_val, hit);
        }
        return LpStatus::IterLimit;
    }

    double value(int j) const {
        return stat[j] == VStat::Basic ? xb[basepos[j]] : xval[j];
    }
};

// Deterministic per-column jitter in [0.5, 1.5), used to break dual
// degeneracy: without it, zero-ratio pivots let the basis cycle while the
// dual objective stands still.
double jitter(int j) {
    std::uint64_t z = static_cast<std::uint64_t>(j) + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return 0.5 + static_cast<double>(z >> 11) * 0x1.0p-53;
}

}  // namespace

LpSolution solve_lp(const MilpModel& model,
                    const std::vector<std::pair<int, double>>& objective,
                    const Vec& lower, const Vec& upper, long max_iters,
                    const LpBasis* warm, LpBasis* out_basis) {
    const int ns = static_cast<int>(model.variables.size());
    const int rows = static_cast<int>(model.constraints.size());
    Solver s;
    s.m = rows;
    s.ns = ns;
    s.ntot = ns + rows;
    s.max_iters = max_iters;
    s.cols.resize(s.ntot);
    s.b.resize(rows);
    s.lo.resize(s.ntot);
    s.up.resize(s.ntot);
    s.cost = Vec::Zero(s.ntot);
    s.pseudo_lo.assign(s.ntot, false);
    s.pseudo_up.assign(s.ntot, false);
    s.stat.assign(s.ntot, VStat::AtLower);
    s.xval = Vec::Zero(s.ntot);
    s.basepos.assign(s.ntot, -1);

    for (int j = 0; j < ns; ++j) {
        s.lo[j] = lower[j];
        s.up[j] = upper[j];
        if (s.lo[j] > s.up[j]) return {LpStatus::Infeasible, 0.0, Vec(), 0};
    }
    for (auto [j, c] : objective) s.cost[j] += c;
    for (int i = 0; i < rows; ++i) {
        const auto& c = model.constraints[i];
        for (auto [j, a] : c.coeffs)
            if (a != 0.0) s.cols[j].emplace_back(i, a);
        s.b[i] = c.rhs;
        int sj = ns + i;
        s.cols[sj].emplace_back(i, 1.0);
        switch (c.sense) {
            case Sense::Le: s.lo[sj] = 0.0; s.up[sj] = kInf; break;
            case Sense::Ge: s.lo[sj] = -kInf; s.up[sj] = 0.0; break;
            case Sense::Eq: s.lo[sj] = 0.0; s.up[sj] = 0.0; break;
        }
    }
    // a column whose favorable direction is unbounded gets a pseudo-bound;
    // if the optimum ends up there, the LP is unbounded
    for (int j = 0; j < s.ntot; ++j) {
        if (s.lo[j] == -kInf && (s.cost[j] > 0.0 || s.up[j] == kInf)) {
            s.lo[j] = -kPseudo;
            s.pseudo_lo[j] = true;
        }
        if (s.up[j] == kInf && s.cost[j] <= 0.0 && s.cost[j] != 0.0) {
            s.up[j] = kPseudo;
            s.pseudo_up[j] = true;
        }
    }

    const Vec true_cost = s.cost;
    for (int j = 0; j < s.ntot; ++j)
        s.cost[j] += (s.cost[j] < 0.0 ? -1.0 : 1.0) * 1e-8 * jitter(j) *
                     std::max(1.0, std::abs(s.cost[j]));

    bool warm_ok = false;
    if (warm != nullptr && static_cast<int>(warm->basic.size()) == rows &&
        static_cast<int>(warm->at.size()) == s.ntot) {
        s.basis = warm->basic;
        bool sane = true;
        for (int i = 0; i < rows; ++i)
            if (s.basis[i] < 0 || s.basis[i] >= s.ntot) sane = false;
        if (sane) {
            for (int j = 0; j < s.ntot; ++j) {
                s.stat[j] = static_cast<VStat>(warm->at[j]);
                s.basepos[j] = -1;
            }
            for (int i = 0; i < rows; ++i) {
                s.stat[s.basis[i]] = VStat::Basic;
                s.basepos[s.basis[i]] = i;
            }
            for (int j = 0; j < s.ntot; ++j) {
                if (s.stat[j] == VStat::Basic) continue;
                if (s.stat[j] == VStat::AtUpper && s.up[j] < kInf)
                    s.xval[j] = s.up[j];
                else if (s.lo[j] > -kInf) {
                    s.stat[j] = VStat::AtLower;
                    s.xval[j] = s.lo[j];
                } else {
                    s.stat[j] = VStat::AtUpper;
                    s.xval[j] = s.up[j];
                }
            }
            warm_ok = s.refactor();
        }
    }
    if (!warm_ok) {
        // cold start: all-slack basis, nonbasic columns placed dual-feasibly
        s.basis.resize(rows);
        for (int j = 0; j < s.ntot; ++j) {
            s.stat[j] = VStat::AtLower;
            s.basepos[j] = -1;
        }
        for (int i = 0; i < rows; ++i) {
            s.basis[i] = ns + i;
            s.stat[ns + i] = VStat::Basic;
            s.basepos[ns + i] = i;
        }
        for (int j = 0; j < ns; ++j) {
            bool prefer_upper = s.cost[j] < 0.0 ||
                                (s.cost[j] == 0.0 && std::abs(s.up[j]) < std::abs(s.lo[j]));
            s.stat[j] = prefer_upper ? VStat::AtUpper : VStat::AtLower;
            s.xval[j] = prefer_upper ? s.up[j] : s.lo[j];
        }
        if (!s.refactor()) return {LpStatus::Infeasible, 0.0, Vec(), 0};
    }
    s.restore_dual_feasibility(s.reduced_costs());

    LpStatus status = s.dual_loop();
    if (status == LpStatus::Optimal) {
        // feasible under the jittered costs: finish to true optimality with
        // the exact objective, then one more dual pass in case primal pivots
        // drifted a bound
        s.cost = true_cost;
        s.refactor();
        status = s.primal_loop();
        if (status == LpStatus::Optimal) {
            status = s.dual_loop();
            s.refactor();
        }
    }

    LpSolution out;
    out.iterations = s.iters;
    out.status = status;
    if (status != LpStatus::Optimal) return out;

    for (int j = 0; j < s.ntot; ++j) {
        double v = s.value(j);
        if ((s.pseudo_lo[j] && v < -kPseudo * 0.5) ||
            (s.pseudo_up[j] && v > kPseudo * 0.5)) {
            out.status = LpStatus::Unbounded;
            return out;
        }
    }
    out.x.resize(ns);
    for (int j = 0; j < ns; ++j)
        out.x[j] = std::clamp(s.value(j), s.lo[j], s.up[j]);
    out.objective = 0.0;
    for (auto [j, c] : objective) out.objective += c * out.x[j];
    if (out_basis != nullptr) {
        out_basis->basic = s.basis;
        out_basis->at.resize(s.ntot);
        for (int j = 0; j < s.ntot; ++j)
            out_basis->at[j] = static_cast<std::uint8_t>(s.stat[j]);
    }
    return out;
}

}  // namespace cgnc

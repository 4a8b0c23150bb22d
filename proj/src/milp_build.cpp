#include "cgnc/milp_build.hpp"

#include <algorithm>
#include <cmath>

namespace cgnc {

namespace {

// Interval of a linear expression over the declared variable bounds.
std::pair<double, double> expr_range(const MilpModel& m,
                                     const std::vector<std::pair<int, double>>& coeffs) {
    double lo = 0.0, hi = 0.0;
    for (auto [j, c] : coeffs) {
        double a = c * m.variables[j].lower, b = c * m.variables[j].upper;
        lo += std::min(a, b);
        hi += std::max(a, b);
    }
    return {lo, hi};
}

// Merges duplicate indices (needed when x_j == x_k in a square block).
std::vector<std::pair<int, double>> merged(std::vector<std::pair<int, double>> coeffs) {
    std::sort(coeffs.begin(), coeffs.end());
    std::vector<std::pair<int, double>> out;
    for (auto [j, c] : coeffs) {
        if (!out.empty() && out.back().first == j)
            out.back().second += c;
        else
            out.emplace_back(j, c);
    }
    return out;
}

// coeffs . vars >= rhs (or <=) required only when the binary lam is 1.
void add_indicator_row(MilpModel& m, std::vector<std::pair<int, double>> coeffs,
                       Sense sense, double rhs, int lam, const std::string& name) {
    coeffs = merged(std::move(coeffs));
    auto [lo, hi] = expr_range(m, coeffs);
    double big = sense == Sense::Ge ? std::max(0.0, rhs - lo) : std::max(0.0, hi - rhs);
    LinearConstraint c;
    c.coeffs = std::move(coeffs);
    c.sense = sense;
    c.name = name;
    if (sense == Sense::Ge) {
        c.coeffs.emplace_back(lam, -big);
        c.rhs = rhs - big;
    } else {
        c.coeffs.emplace_back(lam, big);
        c.rhs = rhs + big;
    }
    m.add_constraint(std::move(c));
}

std::pair<double, double> product_bounds(double lj, double uj, double lk, double uk,
                                         bool square) {
    if (square) {
        double hi = std::max(lj * lj, uj * uj);
        double lo = (lj <= 0.0 && uj >= 0.0) ? 0.0 : std::min(lj * lj, uj * uj);
        return {lo, hi};
    }
    double p1 = lj * lk, p2 = lj * uk, p3 = uj * lk, p4 = uj * uk;
    return {std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4})};
}

// Linearization of H over the primal variable (x for MP, delta for AP) with
// the complementary block folded in as constants: H = cx . v + cz . z + c0.
struct LinearizedH {
    Vec cx;
    std::map<std::pair<int, int>, double> cz;
    double constant = 0.0;
};

LinearizedH linearize_h(const CgncModel& model, const ExpandedForm& exp,
                        const Vec& fixed) {
    const int n = model.n();
    LinearizedH out;
    out.cx = Vec::Zero(n);
    for (int c = 0; c < 2; ++c) {
        double s = 2.0 * c - 1.0;
        out.constant += s * std::log(model.prior(c));
        for (int i = 0; i < n; ++i) {
            double var = model.cpd(c, i).variance;
            out.constant -= s * 0.5 * std::log(var);
            double f = -s / (2.0 * var);
            auto poly = deviation_poly(model, exp, c, i, fixed);
            for (auto [j, k, coef] : poly.quad) out.cz[{j, k}] += f * coef;
            for (auto [j, coef] : poly.lin) out.cx[j] += f * coef;
            out.constant += f * poly.constant;
        }
    }
    return out;
}

// Shared between MP and AP: product variables, partition binaries, and the
// McCormick blocks over the primal block's current bounds.
void add_products_and_blocks(BuiltMilp& built, const ExpandedForm& exp,
                             const FeatureBounds& bounds, int m_segments,
                             bool double_partition, const std::string& zprefix) {
    MilpModel& m = built.model;
    const int n = static_cast<int>(built.primal.size());
    for (auto [j, k] : exp.pair_set) {
        auto [lo, hi] = product_bounds(bounds.lower[j], bounds.upper[j],
                                       bounds.lower[k], bounds.upper[k], j == k);
        int z = m.add_variable(zprefix + std::to_string(j) + "_" + std::to_string(k),
                               VarKind::Continuous, lo, hi);
        built.product[{j, k}] = z;
        m.products.push_back({built.primal[j], built.primal[k], z});
    }

    // which variables get a partition: the smaller index of each pair
    std::vector<bool> partitioned(n, false);
    for (auto [j, k] : exp.pair_set) {
        partitioned[j] = true;
        if (double_partition && j != k) partitioned[k] = true;
    }
    PartitionScheme scheme = uniform_partition(bounds, m_segments);
    built.lambda.assign(n, {});
    for (int j = 0; j < n; ++j) {
        if (!partitioned[j]) continue;
        LinearConstraint one;
        for (int r = 0; r < m_segments; ++r) {
            int lam = m.add_variable("lam_" + std::to_string(j) + "_" + std::to_string(r),
                                     VarKind::Binary, 0.0, 1.0);
            built.lambda[j].push_back(lam);
            one.coeffs.emplace_back(lam, 1.0);
        }
        one.sense = Sense::Eq;
        one.rhs = 1.0;
        one.name = "part_" + std::to_string(j);
        m.add_constraint(std::move(one));
        PartitionGroup group;
        group.var = built.primal[j];
        group.lambdas = built.lambda[j];
        for (int r = 0; r <= m_segments; ++r)
            group.breakpoints.push_back(scheme.breakpoints[j][r]);
        m.partitions.push_back(std::move(group));
        // aggregated membership (x_j between the selected segment's ends,
        // written as a convex combination): implied once the lambdas are
        // integral, but much tighter than big-M in the LP relaxation
        LinearConstraint above, below;
        for (int r = 0; r < m_segments; ++r) {
            below.coeffs.emplace_back(built.lambda[j][r], scheme.breakpoints[j][r]);
            above.coeffs.emplace_back(built.lambda[j][r], scheme.breakpoints[j][r + 1]);
        }
        below.coeffs.emplace_back(built.primal[j], -1.0);
        below.sense = Sense::Le;
        below.rhs = 0.0;
        below.name = "agg_lo_" + std::to_string(j);
        above.coeffs.emplace_back(built.primal[j], -1.0);
        above.sense = Sense::Ge;
        above.rhs = 0.0;
        above.name = "agg_hi_" + std::to_string(j);
        m.add_constraint(std::move(below));
        m.add_constraint(std::move(above));
    }

    for (auto [j, k] : exp.pair_set) {
        int z = built.product[{j, k}];
        mccormick_block(m, built.primal[j], built.primal[k], z, scheme.breakpoints[j],
                        built.lambda[j]);
        if (double_partition && j != k)
            mccormick_block(m, built.primal[k], built.primal[j], z, scheme.breakpoints[k],
                            built.lambda[k]);
    }
}

}  // namespace

PartitionScheme uniform_partition(const FeatureBounds& bounds, int m) {
    if (m < 1) throw PreconditionError("partition count must be at least 1");
    PartitionScheme s;
    s.m = m;
    const int n = static_cast<int>(bounds.lower.size());
    s.breakpoints.reserve(n);
    for (int j = 0; j < n; ++j) {
        Vec bp(m + 1);
        for (int r = 0; r <= m; ++r)
            bp[r] = bounds.lower[j] +
                    (static_cast<double>(r) / m) * (bounds.upper[j] - bounds.lower[j]);
        s.breakpoints.push_back(std::move(bp));
    }
    return s;
}

TighteningState make_tightening(FeatureBounds initial, int m_init, double nu) {
    if (m_init < 1) throw PreconditionError("m_init must be at least 1");
    if (!(nu > 0.0 && nu < 1.0)) throw PreconditionError("nu must lie in (0,1)");
    TighteningState s;
    s.t = 1;
    s.nu = nu;
    s.initial = initial;
    s.current = std::move(initial);
    s.m_init = m_init;
    s.m_t = m_init;
    return s;
}

TighteningState tighten(const TighteningState& state, const Vec& x_hat_prev) {
    TighteningState next = state;
    double shrink = std::pow(state.nu, state.t);
    const int n = static_cast<int>(state.initial.lower.size());
    for (int j = 0; j < n; ++j) {
        next.current.lower[j] =
            shrink * state.initial.lower[j] + (1.0 - shrink) * x_hat_prev[j];
        next.current.upper[j] =
            shrink * state.initial.upper[j] + (1.0 - shrink) * x_hat_prev[j];
    }
    next.m_t = std::max(1L, std::lround(std::ceil(shrink * state.m_init)));
    next.t = state.t + 1;
    return next;
}

void mccormick_block(MilpModel& m, int xj, int xk, int z, const Vec& breakpoints,
                     const std::vector<int>& lambdas) {
    const int segs = static_cast<int>(breakpoints.size()) - 1;
    if (segs < 1 || static_cast<int>(lambdas.size()) != segs)
        throw PreconditionError("one indicator binary per segment required");
    const double lk = m.variables[xk].lower;
    const double uk = m.variables[xk].upper;
    if (!std::isfinite(lk) || !std::isfinite(uk) ||
        !std::isfinite(breakpoints[0]) || !std::isfinite(breakpoints[segs]))
        throw PreconditionError("McCormick block requires finite bounds");
    const std::string tag = m.variables[z].name;
    for (int r = 0; r < segs; ++r) {
        const double lo = breakpoints[r], hi = breakpoints[r + 1];
        const int lam = lambdas[r];
        const std::string sfx = tag + "_s" + std::to_string(r);
        // z >= x_j l_k + l_j^r x_k - l_j^r l_k
        add_indicator_row(m, {{z, 1.0}, {xj, -lk}, {xk, -lo}}, Sense::Ge, -lo * lk, lam,
                          "env1_" + sfx);
        // z >= x_j u_k + l_j^{r+1} x_k - l_j^{r+1} u_k
        add_indicator_row(m, {{z, 1.0}, {xj, -uk}, {xk, -hi}}, Sense::Ge, -hi * uk, lam,
                          "env2_" + sfx);
        // z <= x_j u_k + l_j^r x_k - l_j^r u_k
        add_indicator_row(m, {{z, 1.0}, {xj, -uk}, {xk, -lo}}, Sense::Le, -lo * uk, lam,
                          "env3_" + sfx);
        // z <= x_j l_k + l_j^{r+1} x_k - l_j^{r+1} l_k
        add_indicator_row(m, {{z, 1.0}, {xj, -lk}, {xk, -hi}}, Sense::Le, -hi * lk, lam,
                          "env4_" + sfx);
        // segment membership l_j^r <= x_j <= l_j^{r+1}
        add_indicator_row(m, {{xj, 1.0}}, Sense::Ge, lo, lam, "seg_lo_" + sfx);
        add_indicator_row(m, {{xj, 1.0}}, Sense::Le, hi, lam, "seg_hi_" + sfx);
    }
}

BuiltMilp build_mp(const CgncModel& model, const ExpandedForm& exp,
                   const WhitenedMetric& metric, const Vec& factual,
                   const std::vector<Vec>& scenarios, const TighteningState& tightening,
                   double tau_prime, bool double_partition) {
    if (scenarios.empty()) throw PreconditionError("scenario set must be non-empty");
    if (metric.p() == NormOrder::L2)
        throw InputError("p=2 objective has no linear representation in the MILP path");
    const int n = model.n();
    BuiltMilp built;
    MilpModel& m = built.model;
    for (int j = 0; j < n; ++j)
        built.primal.push_back(m.add_variable(model.feature_names()[j], VarKind::Continuous,
                                              tightening.current.lower[j],
                                              tightening.current.upper[j]));
    add_products_and_blocks(built, exp, tightening.current, tightening.m_t,
                            double_partition, "z_");

    // objective ||W (x - factual)||_p via linearization auxiliaries
    const Mat& w = metric.whitener();
    Vec wf = metric.whiten(factual);
    auto row_range = [&](int i) {
        std::vector<std::pair<int, double>> coeffs;
        for (int j = 0; j < n; ++j)
            if (w(i, j) != 0.0) coeffs.emplace_back(built.primal[j], w(i, j));
        auto [lo, hi] = expr_range(m, coeffs);
        return std::max(std::abs(lo - wf[i]), std::abs(hi - wf[i]));
    };
    std::vector<int> dist_aux;
    if (metric.p() == NormOrder::Linf) {
        double cap = 0.0;
        for (int i = 0; i < n; ++i) cap = std::max(cap, row_range(i));
        dist_aux.push_back(m.add_variable("t", VarKind::Continuous, 0.0, cap));
        m.objective.emplace_back(dist_aux[0], 1.0);
    } else {
        for (int i = 0; i < n; ++i) {
            int s = m.add_variable("s_" + std::to_string(i), VarKind::Continuous, 0.0,
                                   row_range(i));
            dist_aux.push_back(s);
            m.objective.emplace_back(s, 1.0);
        }
    }
    for (int i = 0; i < n; ++i) {
        int aux = metric.p() == NormOrder::Linf ? dist_aux[0] : dist_aux[i];
        LinearConstraint above, below;
        for (int j = 0; j < n; ++j) {
            if (w(i, j) == 0.0) continue;
            above.coeffs.emplace_back(built.primal[j], w(i, j));
            below.coeffs.emplace_back(built.primal[j], -w(i, j));
        }
        above.coeffs.emplace_back(aux, -1.0);
        above.sense = Sense::Le;
        above.rhs = wf[i];
        above.name = "dist_p_" + std::to_string(i);
        below.coeffs.emplace_back(aux, -1.0);
        below.sense = Sense::Le;
        below.rhs = -wf[i];
        below.name = "dist_m_" + std::to_string(i);
        m.add_constraint(std::move(above));
        m.add_constraint(std::move(below));
    }
    m.obj_sense = ObjSense::Min;

    // one linearized robust-classification row per scenario
    for (size_t s = 0; s < scenarios.size(); ++s) {
        auto lin = linearize_h(model, exp, scenarios[s]);
        LinearConstraint row;
        for (int j = 0; j < n; ++j)
            if (lin.cx[j] != 0.0) row.coeffs.emplace_back(built.primal[j], lin.cx[j]);
        for (auto& [pair, coef] : lin.cz)
            if (coef != 0.0) row.coeffs.emplace_back(built.product.at(pair), coef);
        row.sense = Sense::Ge;
        row.rhs = tau_prime - lin.constant;
        row.name = "robust_" + std::to_string(s);
        m.add_constraint(std::move(row));
    }
    m.validate();
    return built;
}

BuiltMilp build_ap(const CgncModel& model, const ExpandedForm& exp,
                   const UncertaintySet& uset, const Vec& x_hat, int m_fixed,
                   double tau_prime, bool double_partition) {
    const int n = model.n();
    BuiltMilp built;
    MilpModel& m = built.model;
    FeatureBounds ext = coordinate_extent(uset);
    for (int j = 0; j < n; ++j)
        built.primal.push_back(m.add_variable("d_" + std::to_string(j),
                                              VarKind::Continuous, ext.lower[j],
                                              ext.upper[j]));
    add_products_and_blocks(built, exp, ext, m_fixed, double_partition, "eta_");

    // the uncertainty set, as linear rows (throws for p=2)
    auto ball = norm_ball_constraints(uset);
    std::vector<int> aux;
    for (int i = 0; i < ball.n_aux; ++i)
        aux.push_back(
            m.add_variable("u_" + std::to_string(i), VarKind::Continuous, 0.0, uset.gamma));
    for (const auto& r : ball.rows) {
        LinearConstraint row;
        for (auto [j, c] : r.delta_coeffs) row.coeffs.emplace_back(built.primal[j], c);
        for (auto [j, c] : r.aux_coeffs) row.coeffs.emplace_back(aux[j], c);
        row.sense = r.sense;
        row.rhs = r.rhs;
        row.name = "ball";
        m.add_constraint(std::move(row));
    }

    // maximize tau' - H(delta | eta; x_hat)
    auto lin = linearize_h(model, exp, x_hat);
    m.obj_sense = ObjSense::Max;
    for (int j = 0; j < n; ++j)
        if (lin.cx[j] != 0.0) m.objective.emplace_back(built.primal[j], -lin.cx[j]);
    for (auto& [pair, coef] : lin.cz)
        if (coef != 0.0) m.objective.emplace_back(built.product.at(pair), -coef);
    m.obj_constant = tau_prime - lin.constant;
    m.validate();
    return built;
}

}  // namespace cgnc

#include "cgnc/recourse.hpp"

#include <chrono>
#include <fstream>
#include <random>

namespace cgnc {

namespace {

void maybe_dump_lp(const RecourseConfig& cfg, const MilpModel& m,
                   const std::string& stem) {
    if (cfg.dump_lp_dir.empty()) return;
    std::ofstream out(cfg.dump_lp_dir + "/" + stem + ".lp");
    if (out) out << to_lp_format(m);
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    auto dt = std::chrono::steady_clock::now() - t0;
    return std::chrono::duration<double>(dt).count();
}

void require_finite(const Vec& v, const char* what) {
    for (int j = 0; j < v.size(); ++j)
        if (!std::isfinite(v[j])) throw InputError(std::string(what) + " must be finite");
}

struct ApResult {
    Vec delta;
    double phi = 0.0;
    SolveStats stats;
};

ApResult solve_ap(const CgncModel& model, const ExpandedForm& exp,
                  const UncertaintySet& uset, const Vec& x_hat, double tau_prime,
                  Backend backend, const RecourseConfig& cfg, std::uint64_t salt) {
    ApResult out;
    if (backend == Backend::Milp) {
        auto built = build_ap(model, exp, uset, x_hat, cfg.m_init, tau_prime,
                              cfg.double_partition);
        maybe_dump_lp(cfg, built.model, "ap_t" + std::to_string(salt));
        auto res = solve_milp(built.model, cfg.gap, cfg.node_limit, cfg.time_budget);
        if (res.status != SolveStatus::Optimal && res.status != SolveStatus::IterLimit)
            throw SolverError("adversarial MILP failed: " +
                              std::string(solve_status_name(res.status)));
        if (res.assignment.size() == 0)
            throw SolverError("adversarial MILP returned no incumbent");
        out.delta.resize(model.n());
        for (int j = 0; j < model.n(); ++j)
            out.delta[j] = res.assignment[built.primal[j]];
        out.phi = res.objective;
        out.stats = res.stats;
    } else {
        auto res = solve_local_ap(model, uset, x_hat, tau_prime, cfg.starts,
                                  cfg.seed + salt);
        out.delta = res.assignment;
        out.phi = res.objective;
        out.stats = res.stats;
    }
    return out;
}

// Intersects the search box with the ball of the given metric radius around
// the factual (per-coordinate extent). Used to pass a known feasible distance
// down to the MILP path: shrinking the box this way keeps every point that
// could still beat that distance, while the piecewise partitions over the
// smaller box become dramatically tighter.
FeatureBounds intersect_reachable(const FeatureBounds& box, const WhitenedMetric& metric,
                                  const Vec& x_fac, double radius) {
    FeatureBounds ext = coordinate_extent(UncertaintySet(metric, radius));
    FeatureBounds out = box;
    for (int j = 0; j < x_fac.size(); ++j) {
        out.lower[j] = std::max(box.lower[j], x_fac[j] + ext.lower[j]);
        out.upper[j] = std::min(box.upper[j], x_fac[j] + ext.upper[j]);
    }
    return out;
}

RecourseResult find_counterfactual_impl(const CgncModel& model,
                                        const WhitenedMetric& metric, const Vec& x_fac,
                                        double gamma, double eps, double tau,
                                        Backend backend, const RecourseConfig& config);

}  // namespace

Backend parse_backend(const std::string& s) {
    if (s == "milp") return Backend::Milp;
    if (s == "local") return Backend::Local;
    throw InputError("unknown backend '" + s + "' (expected milp or local)");
}

const char* outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Robust: return "robust";
        case Outcome::EarlyStop: return "early-stop";
        case Outcome::Infeasible: return "infeasible";
        case Outcome::Timeout: return "timeout";
    }
    return "unknown";
}

RecourseResult find_counterfactual(const CgncModel& model, const WhitenedMetric& metric,
                                   const Vec& x_fac, double gamma, double eps,
                                   double tau, Backend backend,
                                   const RecourseConfig& config) {
    if (backend == Backend::Milp) {
        // cheap local pass first: its distance bounds every master optimum
        // from above (masters carry a subset of the robust constraints), so
        // the master box can shrink to the reachable ball. The margin covers
        // local suboptimality near the early-stop tolerance; if the shrunk
        // search still comes back infeasible, fall through to the full box.
        auto probe =
            find_counterfactual_impl(model, metric, x_fac, gamma, eps, tau,
                                     Backend::Local, config);
        if ((probe.outcome == Outcome::Robust || probe.outcome == Outcome::EarlyStop) &&
            std::isfinite(probe.distance)) {
            RecourseConfig shrunk = config;
            shrunk.bounds = intersect_reachable(config.bounds, metric, x_fac,
                                                probe.distance * 1.2 + 1e-6);
            auto res = find_counterfactual_impl(model, metric, x_fac, gamma, eps, tau,
                                                Backend::Milp, shrunk);
            if (res.outcome != Outcome::Infeasible) return res;
        }
    }
    return find_counterfactual_impl(model, metric, x_fac, gamma, eps, tau, backend,
                                    config);
}

namespace {

RecourseResult find_counterfactual_impl(const CgncModel& model,
                                        const WhitenedMetric& metric, const Vec& x_fac,
                                        double gamma, double eps, double tau,
                                        Backend backend, const RecourseConfig& config) {
    require_finite(x_fac, "factual");
    if (!(gamma > 0.0)) throw PreconditionError("gamma must be positive");
    if (!(eps > 0.0)) throw PreconditionError("epsilon must be positive");
    if (model.classify(x_fac, tau) != 0)
        throw PreconditionError("factual is already classified 1 at this threshold");

    const auto t0 = std::chrono::steady_clock::now();
    const double tau_prime = log_threshold(tau);
    const int n = model.n();
    auto exp = build_expansion(model);
    UncertaintySet uset(metric, gamma);

    CuttingSetState state;
    state.scenarios = {Vec::Zero(n)};
    state.tightening = make_tightening(config.bounds, config.m_init, config.nu);

    RecourseResult out;
    auto finish = [&](Outcome o) {
        out.outcome = o;
        out.iterations = state.t;
        out.log = state.log;
        if (state.iterate.size() > 0) {
            out.counterfactual = state.iterate;
            out.distance = metric.distance(state.iterate, x_fac);
            out.violation_final = state.violation;
        }
        return out;
    };

    while (state.t < config.max_iterations) {
        double remaining = config.time_budget - seconds_since(t0);
        if (remaining <= 0.0) return finish(Outcome::Timeout);
        ++state.t;

        IterationRecord rec;
        rec.t = state.t;
        Vec x_hat;
        if (backend == Backend::Milp) {
            auto built = build_mp(model, exp, metric, x_fac, state.scenarios,
                                  state.tightening, tau_prime, config.double_partition);
            maybe_dump_lp(config, built.model, "mp_t" + std::to_string(state.t));
            auto res = solve_milp(built.model, config.gap, config.node_limit, remaining);
            rec.mp_stats = res.stats;
            if (res.status == SolveStatus::Infeasible) return finish(Outcome::Infeasible);
            if (res.assignment.size() == 0) return finish(Outcome::Timeout);
            x_hat.resize(n);
            for (int j = 0; j < n; ++j) x_hat[j] = res.assignment[built.primal[j]];
            rec.objective = res.objective;
            if (built.model.max_violation(res.assignment) > 1e-6)
                throw SolverError("master iterate violates its own relaxation");
        } else {
            // seed the first descent with the previous iterate: the optimum
            // moves continuously as cuts accumulate, and tracking it keeps
            // the loop from hopping to a worse basin mid-sequence
            const Vec* prev = state.iterate.size() > 0 ? &state.iterate : nullptr;
            auto res = solve_local_mp(model, metric, x_fac, state.scenarios,
                                      config.bounds, tau_prime, config.starts,
                                      config.seed + state.t, prev);
            rec.mp_stats = res.stats;
            if (res.status != SolveStatus::Feasible) return finish(Outcome::Infeasible);
            x_hat = res.assignment;
            rec.objective = res.objective;
            // feasibility of history: the iterate satisfies every scenario
            // collected so far
            for (const Vec& sc : state.scenarios)
                if (tau_prime - model.decision_h(x_hat + sc) > 1e-6)
                    throw SolverError("master iterate violates a collected scenario");
        }

        auto ap = solve_ap(model, exp, uset, x_hat, tau_prime, backend, config,
                           1000 + static_cast<std::uint64_t>(state.t));
        rec.violation = ap.phi;
        rec.ap_stats = ap.stats;
        state.log.push_back(rec);
        state.iterate = x_hat;
        state.violation = ap.phi;

        if (ap.phi <= eps) {
            // MILP path: strip relaxation slack with one warm local descent,
            // then re-certify the polished point with a fresh AP solve
            if (backend == Backend::Milp) {
                auto pol = solve_local_mp(model, metric, x_fac, state.scenarios,
                                          config.bounds, tau_prime, 1, config.seed,
                                          &x_hat);
                if (pol.status == SolveStatus::Feasible) {
                    state.iterate = pol.assignment;
                    auto ap2 = solve_ap(model, exp, uset, state.iterate, tau_prime,
                                        backend, config,
                                        5000 + static_cast<std::uint64_t>(state.t));
                    state.violation = ap2.phi;
                    if (ap2.phi > eps) {
                        // polished point lost robustness: fold the new
                        // scenario in and keep cutting
                        state.scenarios.push_back(ap2.delta);
                        state.tightening = tighten(state.tightening, state.iterate);
                        continue;
                    }
                }
            }
            if (state.violation <= 0.0) return finish(Outcome::Robust);
            out.coverage = coverage_ratio(model, metric, state.iterate, gamma,
                                          tau_prime, Backend::Local, config);
            return finish(Outcome::EarlyStop);
        }

        state.scenarios.push_back(ap.delta);
        if (backend == Backend::Milp)
            state.tightening = tighten(state.tightening, x_hat);
    }
    return finish(Outcome::Timeout);
}

RecourseResult baseline_impl(const CgncModel& model, const WhitenedMetric& metric,
                             const Vec& x_fac, double tau, Backend backend,
                             const RecourseConfig& config) {
    require_finite(x_fac, "factual");
    const double tau_prime = log_threshold(tau);
    const int n = model.n();
    auto exp = build_expansion(model);

    RecourseResult out;
    out.iterations = 1;
    if (model.classify(x_fac, tau) == 1) {
        // already past the threshold: the factual itself is the answer
        out.counterfactual = x_fac;
        out.distance = 0.0;
        out.violation_final = tau_prime - model.decision_h(x_fac);
        out.outcome = Outcome::Robust;
        return out;
    }
    IterationRecord rec;
    rec.t = 1;
    if (backend == Backend::Milp) {
        auto state = make_tightening(config.bounds, config.m_init, config.nu);
        auto built = build_mp(model, exp, metric, x_fac, {Vec::Zero(n)}, state,
                              tau_prime, config.double_partition);
        maybe_dump_lp(config, built.model, "mp_baseline");
        auto res = solve_milp(built.model, config.gap, config.node_limit,
                              config.time_budget);
        rec.mp_stats = res.stats;
        if (res.status == SolveStatus::Infeasible) {
            out.outcome = Outcome::Infeasible;
            out.log.push_back(rec);
            return out;
        }
        if (res.assignment.size() == 0) {
            out.outcome = Outcome::Timeout;
            out.log.push_back(rec);
            return out;
        }
        Vec x(n);
        for (int j = 0; j < n; ++j) x[j] = res.assignment[built.primal[j]];
        // remove relaxation slack exactly as the robust path does
        auto pol = solve_local_mp(model, metric, x_fac, {Vec::Zero(n)}, config.bounds,
                                  tau_prime, 1, config.seed, &x);
        if (pol.status == SolveStatus::Feasible) x = pol.assignment;
        out.counterfactual = x;
    } else {
        // seed matches the robust loop's first master solve: with the same
        // zero-scenario program and the same start stream, the baseline can
        // never come out worse than the robust answer it relaxes
        auto res = solve_local_mp(model, metric, x_fac, {Vec::Zero(n)}, config.bounds,
                                  tau_prime, config.starts, config.seed + 1);
        rec.mp_stats = res.stats;
        if (res.status != SolveStatus::Feasible) {
            out.outcome = Outcome::Infeasible;
            out.log.push_back(rec);
            return out;
        }
        out.counterfactual = res.assignment;
    }
    out.distance = metric.distance(out.counterfactual, x_fac);
    out.violation_final = tau_prime - model.decision_h(out.counterfactual);
    out.outcome = Outcome::Robust;  // robust w.r.t. the empty perturbation
    rec.objective = out.distance;
    rec.violation = out.violation_final;
    out.log.push_back(rec);
    return out;
}

}  // namespace

RecourseResult baseline_counterfactual(const CgncModel& model,
                                       const WhitenedMetric& metric, const Vec& x_fac,
                                       double tau, Backend backend,
                                       const RecourseConfig& config) {
    if (backend == Backend::Milp) {
        // same reachable-ball shrink as the robust path: the local baseline
        // point is feasible for the baseline program, so its distance bounds
        // the optimum from above
        auto probe = baseline_impl(model, metric, x_fac, tau, Backend::Local, config);
        if (probe.outcome == Outcome::Robust && std::isfinite(probe.distance) &&
            probe.distance > 0.0) {
            RecourseConfig shrunk = config;
            shrunk.bounds = intersect_reachable(config.bounds, metric, x_fac,
                                                probe.distance * 1.2 + 1e-6);
            auto res = baseline_impl(model, metric, x_fac, tau, Backend::Milp, shrunk);
            if (res.outcome != Outcome::Infeasible) return res;
        }
    }
    return baseline_impl(model, metric, x_fac, tau, backend, config);
}

double coverage_ratio(const CgncModel& model, const WhitenedMetric& metric,
                      const Vec& x_star, double gamma, double tau_prime,
                      Backend backend, const RecourseConfig& config, double tol) {
    require_finite(x_star, "counterfactual");
    if (tau_prime - model.decision_h(x_star) > 0.0) return 0.0;
    auto exp = build_expansion(model);
    auto robust_at = [&](double g) {
        UncertaintySet u(metric, g);
        return solve_ap(model, exp, u, x_star, tau_prime, backend, config, 77).phi <=
               0.0;
    };
    if (robust_at(gamma)) return 1.0;
    double lo = 0.0, hi = gamma;
    while (hi - lo > tol * gamma) {
        double mid = 0.5 * (lo + hi);
        if (robust_at(mid))
            lo = mid;
        else
            hi = mid;
    }
    return lo / gamma;
}

double mc_max_violation(const CgncModel& model, const UncertaintySet& uset,
                        const Vec& x, double tau_prime, int samples,
                        std::uint64_t seed) {
    const int n = model.n();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::exponential_distribution<double> expo(1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double worst = -std::numeric_limits<double>::infinity();
    Vec u(n);
    for (int s = 0; s < samples; ++s) {
        switch (uset.metric.p()) {
            case NormOrder::Linf:
                for (int j = 0; j < n; ++j)
                    u[j] = uset.gamma * (2.0 * unif(rng) - 1.0);
                break;
            case NormOrder::L2: {
                for (int j = 0; j < n; ++j) u[j] = gauss(rng);
                double r = uset.gamma * std::pow(unif(rng), 1.0 / n);
                u *= r / std::max(1e-300, u.norm());
                break;
            }
            case NormOrder::L1: {
                double total = 0.0;
                for (int j = 0; j < n; ++j) {
                    u[j] = expo(rng);
                    total += u[j];
                }
                double r = uset.gamma * std::pow(unif(rng), 1.0 / n);
                for (int j = 0; j < n; ++j)
                    u[j] *= (unif(rng) < 0.5 ? -r : r) / total;
                break;
            }
        }
        worst = std::max(worst,
                         tau_prime - model.decision_h(x + uset.metric.unwhiten(u)));
    }
    return worst;
}

}  // namespace cgnc

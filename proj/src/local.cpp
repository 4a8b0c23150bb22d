#include <algorithm>
#include <chrono>
#include <random>

#include "cgnc/solve.hpp"

namespace cgnc {

namespace {

constexpr int kMaxIters = 400;
constexpr double kStepTol = 1e-12;
constexpr double kFeasTol = 1e-6;

Vec clamp_box(Vec x, const FeatureBounds& bounds) {
    for (int j = 0; j < x.size(); ++j)
        x[j] = std::clamp(x[j], bounds.lower[j], bounds.upper[j]);
    return x;
}

// Subgradient of v -> ||v||_p pulled back through v = W (x - factual).
Vec norm_subgradient(const Mat& w, const Vec& v, NormOrder p) {
    const int n = static_cast<int>(v.size());
    Vec g = Vec::Zero(n);
    switch (p) {
        case NormOrder::L1:
            for (int i = 0; i < n; ++i) g[i] = v[i] > 0 ? 1.0 : (v[i] < 0 ? -1.0 : 0.0);
            break;
        case NormOrder::L2:
            if (v.norm() > 0) g = v / v.norm();
            break;
        case NormOrder::Linf: {
            int arg = 0;
            for (int i = 1; i < n; ++i)
                if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
            g[arg] = v[arg] >= 0 ? 1.0 : -1.0;
            break;
        }
    }
    return w.transpose() * g;
}

}  // namespace

SolveResult solve_local_ap(const CgncModel& model, const UncertaintySet& uset,
                           const Vec& x_hat, double tau_prime, int starts,
                           std::uint64_t seed) {
    if (starts < 1) throw PreconditionError("starts must be at least 1");
    const auto t0 = std::chrono::steady_clock::now();
    const int n = model.n();
    auto exp = build_expansion(model);
    const WhitenedMetric& metric = uset.metric;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    // objective in whitened coordinates u = W delta
    auto value = [&](const Vec& u) {
        return tau_prime - model.decision_h(x_hat + metric.unwhiten(u));
    };
    auto gradient = [&](const Vec& u) {
        Vec gd = -grad_h(model, exp, x_hat + metric.unwhiten(u));
        return Vec(metric.whitener_inverse().transpose() * gd);
    };

    SolveResult out;
    out.status = SolveStatus::Feasible;
    out.objective = -std::numeric_limits<double>::infinity();
    long inner = 0;
    for (int s = 0; s < starts; ++s) {
        Vec u = Vec::Zero(n);
        if (s > 0) {
            for (int j = 0; j < n; ++j) u[j] = gauss(rng);
            u = project_lp_ball(u, metric.p(), uset.gamma * unif(rng));
        }
        double f = value(u);
        double step = 1.0;
        for (int it = 0; it < kMaxIters; ++it) {
            ++inner;
            Vec g = gradient(u);
            // backtracking projected ascent
            bool improved = false;
            for (int bt = 0; bt < 40; ++bt) {
                Vec cand = project_lp_ball(u + step * g, metric.p(), uset.gamma);
                double fc = value(cand);
                if (fc > f + 1e-14) {
                    double moved = (cand - u).norm();
                    u = cand;
                    f = fc;
                    improved = true;
                    step *= 2.0;
                    if (moved < kStepTol) improved = false;
                    break;
                }
                step *= 0.5;
            }
            if (!improved) break;
        }
        if (f > out.objective) {
            out.objective = f;
            out.assignment = metric.unwhiten(u);
        }
    }
    out.stats.nodes = starts;
    out.stats.simplex_iterations = inner;
    auto dt = std::chrono::steady_clock::now() - t0;
    out.stats.wall_seconds = std::chrono::duration<double>(dt).count();
    return out;
}

SolveResult solve_local_mp(const CgncModel& model, const WhitenedMetric& metric,
                           const Vec& factual, const std::vector<Vec>& scenarios,
                           const FeatureBounds& bounds, double tau_prime, int starts,
                           std::uint64_t seed, const Vec* warm_start) {
    if (starts < 1) throw PreconditionError("starts must be at least 1");
    const auto t0 = std::chrono::steady_clock::now();
    const int n = model.n();
    auto exp = build_expansion(model);
    auto [q0, q1] = dc_split(model, exp);
    const Mat hess = q0 - q1;  // constant Hessian of H
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    auto max_violation = [&](const Vec& x) {
        double worst = -std::numeric_limits<double>::infinity();
        for (const Vec& sc : scenarios)
            worst = std::max(worst, tau_prime - model.decision_h(x + sc));
        return worst;
    };
    auto distance = [&](const Vec& x) { return metric.distance(x, factual); };
    auto penalized = [&](const Vec& x, double rho) {
        double pen = 0.0;
        for (const Vec& sc : scenarios) {
            double v = std::max(0.0, tau_prime - model.decision_h(x + sc));
            pen += v * v;
        }
        return distance(x) + rho * pen;
    };
    auto penalty_grad = [&](const Vec& x, double rho) {
        Vec g = norm_subgradient(metric.whitener(), metric.whiten(x - factual),
                                 metric.p());
        for (const Vec& sc : scenarios) {
            double v = tau_prime - model.decision_h(x + sc);
            if (v > 0.0) g += 2.0 * rho * v * (-grad_h(model, exp, x + sc));
        }
        return g;
    };
    // Moves x along direction g until H(x + sc) = tau' exactly (quadratic in
    // the step because the Hessian of H is constant); smallest-magnitude root.
    auto polish_line = [&](const Vec& x, const Vec& sc, const Vec& g) {
        double h0 = model.decision_h(x + sc) - tau_prime;
        double beta = grad_h(model, exp, x + sc).dot(g);
        double alpha = 0.5 * g.dot(hess * g);
        double t;
        if (std::abs(alpha) < 1e-12 * std::max(1.0, std::abs(beta))) {
            if (beta == 0.0) return x;
            t = -h0 / beta;
        } else {
            double disc = beta * beta - 4.0 * alpha * h0;
            if (disc < 0.0) return x;  // H = tau' unreachable along this line
            double r1 = (-beta + std::sqrt(disc)) / (2.0 * alpha);
            double r2 = (-beta - std::sqrt(disc)) / (2.0 * alpha);
            t = std::abs(r1) <= std::abs(r2) ? r1 : r2;
        }
        return Vec(x + t * g);
    };

    // Boundary-crossing starts: every minimizer sits on an H = tau' surface,
    // so probe random rays from the factual for their nearest crossing (one
    // quadratic root each) and seed half the descents at the closest,
    // mutually distinct crossings. The other half stays uniform over the box
    // so distant basins keep getting sampled.
    std::vector<Vec> ray_starts;
    if (warm_start == nullptr && starts > 1) {
        std::normal_distribution<double> gauss;
        const Vec& sc0 = scenarios.front();
        std::vector<std::pair<double, Vec>> crossings;
        for (int k = 0; k < 64 * n; ++k) {
            Vec g(n);
            for (int j = 0; j < n; ++j) g[j] = gauss(rng);
            double len = g.norm();
            if (len < 1e-12) continue;
            Vec cand = clamp_box(polish_line(factual, sc0, g / len), bounds);
            if (model.decision_h(cand + sc0) < tau_prime - 1e-9) continue;
            crossings.emplace_back(metric.distance(cand, factual), cand);
        }
        std::sort(crossings.begin(), crossings.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        const std::size_t want = static_cast<std::size_t>((starts - 1) / 2);
        for (const auto& [d, cand] : crossings) {
            if (ray_starts.size() >= want) break;
            bool fresh = true;
            for (const Vec& prev : ray_starts)
                if (metric.distance(cand, prev) < 0.05 * std::max(1.0, d)) fresh = false;
            if (fresh) ray_starts.push_back(cand);
        }
    }

    SolveResult out;
    out.status = SolveStatus::Infeasible;
    out.objective = std::numeric_limits<double>::infinity();
    double least_violation = std::numeric_limits<double>::infinity();
    Vec least_violated;
    long inner = 0;

    for (int s = 0; s < starts; ++s) {
        Vec x = warm_start != nullptr ? *warm_start : factual;
        if (s > 0) {
            if (static_cast<std::size_t>(s) <= ray_starts.size()) {
                x = ray_starts[s - 1];
            } else {
                for (int j = 0; j < n; ++j)
                    x[j] = bounds.lower[j] +
                           unif(rng) * (bounds.upper[j] - bounds.lower[j]);
            }
        }
        x = clamp_box(std::move(x), bounds);

        for (double rho = 10.0; rho <= 1e6; rho *= 10.0) {
            double f = penalized(x, rho);
            double step = 1.0;
            for (int it = 0; it < kMaxIters; ++it) {
                ++inner;
                Vec g = penalty_grad(x, rho);
                bool improved = false;
                for (int bt = 0; bt < 40; ++bt) {
                    Vec cand = clamp_box(x - step * g, bounds);
                    double fc = penalized(cand, rho);
                    if (fc < f - 1e-14) {
                        double moved = (cand - x).norm();
                        x = cand;
                        f = fc;
                        improved = true;
                        step *= 2.0;
                        if (moved < kStepTol) improved = false;
                        break;
                    }
                    step *= 0.5;
                }
                if (!improved) break;
            }
        }

        // polish: restore exact scenario feasibility along the H gradient
        for (int pass = 0; pass < 8 && max_violation(x) > 0.0; ++pass) {
            for (const Vec& sc : scenarios) {
                if (model.decision_h(x + sc) >= tau_prime) continue;
                Vec g = grad_h(model, exp, x + sc);
                if (g.norm() == 0.0) continue;
                x = clamp_box(polish_line(x, sc, g / g.norm()), bounds);
            }
        }

        // segment shrink: distance along the segment back to the factual is
        // linear in the step, so the nearest feasible point of the segment is
        // optimal on it; bisect for the feasibility boundary
        if (max_violation(x) <= 0.0) {
            if (max_violation(factual) <= 0.0) {
                x = factual;
            } else {
                Vec dir = x - factual;
                double lo_t = 0.0, hi_t = 1.0;
                for (int it = 0; it < 60; ++it) {
                    double mid = 0.5 * (lo_t + hi_t);
                    (max_violation(factual + mid * dir) <= 0.0 ? hi_t : lo_t) = mid;
                }
                x = factual + hi_t * dir;
            }
        }

        double viol = max_violation(x);
        if (viol <= kFeasTol) {
            double d = distance(x);
            if (out.status != SolveStatus::Feasible || d < out.objective) {
                out.status = SolveStatus::Feasible;
                out.objective = d;
                out.assignment = x;
            }
        } else if (viol < least_violation) {
            least_violation = viol;
            least_violated = x;
        }
    }
    if (out.status == SolveStatus::Infeasible) {
        out.objective = least_violation;
        out.assignment = least_violated;
    }
    out.stats.nodes = starts;
    out.stats.simplex_iterations = inner;
    auto dt = std::chrono::steady_clock::now() - t0;
    out.stats.wall_seconds = std::chrono::duration<double>(dt).count();
    return out;
}

}  // namespace cgnc

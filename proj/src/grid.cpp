#include <chrono>

#include "cgnc/solve.hpp"

namespace cgnc {

namespace {

// Visits every point of the axis-aligned grid; calls visit(point).
template <typename F>
long sweep_grid(const FeatureBounds& bounds, int resolution, F&& visit) {
    const int n = static_cast<int>(bounds.lower.size());
    if (n > 4) throw PreconditionError("grid oracle supports at most 4 features");
    if (resolution < 2) throw PreconditionError("grid resolution must be at least 2");
    std::vector<int> idx(n, 0);
    Vec x(n);
    long count = 0;
    while (true) {
        for (int j = 0; j < n; ++j)
            x[j] = bounds.lower[j] + (bounds.upper[j] - bounds.lower[j]) * idx[j] /
                                         (resolution - 1);
        visit(x);
        ++count;
        int j = 0;
        while (j < n && ++idx[j] == resolution) idx[j++] = 0;
        if (j == n) break;
    }
    return count;
}

}  // namespace

SolveResult solve_grid_mp(const CgncModel& model, const WhitenedMetric& metric,
                          const Vec& factual, const std::vector<Vec>& scenarios,
                          const FeatureBounds& bounds, double tau_prime,
                          int resolution) {
    const auto t0 = std::chrono::steady_clock::now();
    const double tol = 1e-12;
    SolveResult out;
    out.status = SolveStatus::Infeasible;
    out.objective = std::numeric_limits<double>::infinity();
    out.stats.nodes = sweep_grid(bounds, resolution, [&](const Vec& x) {
        for (const Vec& sc : scenarios)
            if (model.decision_h(x + sc) < tau_prime - tol) return;
        double d = metric.distance(x, factual);
        if (d < out.objective) {
            out.objective = d;
            out.assignment = x;
            out.status = SolveStatus::Feasible;
        }
    });
    auto dt = std::chrono::steady_clock::now() - t0;
    out.stats.wall_seconds = std::chrono::duration<double>(dt).count();
    return out;
}

SolveResult solve_grid_ap(const CgncModel& model, const UncertaintySet& uset,
                          const Vec& x_hat, double tau_prime, int resolution) {
    const auto t0 = std::chrono::steady_clock::now();
    FeatureBounds ext = coordinate_extent(uset);
    SolveResult out;
    out.status = SolveStatus::Infeasible;
    out.objective = -std::numeric_limits<double>::infinity();
    out.stats.nodes = sweep_grid(ext, resolution, [&](const Vec& delta) {
        if (!uset.contains(delta * (1.0 - 1e-12))) return;
        double v = tau_prime - model.decision_h(x_hat + delta);
        if (v > out.objective) {
            out.objective = v;
            out.assignment = delta;
            out.status = SolveStatus::Feasible;
        }
    });
    auto dt = std::chrono::steady_clock::now() - t0;
    out.stats.wall_seconds = std::chrono::duration<double>(dt).count();
    return out;
}

}  // namespace cgnc

#include <doctest.h>

#include <random>

#include "cgnc/milp_build.hpp"
#include "cgnc/solve.hpp"
#include "helpers.hpp"

using namespace cgnc;
using testutil::random_model;
using testutil::symmetric_model;
using testutil::two_gaussian_1d;

namespace {

FeatureBounds box(int n, double lo, double hi) {
    FeatureBounds b;
    b.lower = Vec::Constant(n, lo);
    b.upper = Vec::Constant(n, hi);
    return b;
}

// Envelope sandbox: x_j, x_k on the unit square tied to z through one block.
struct EnvelopeFixture {
    MilpModel m;
    int xj, xk, z;

    explicit EnvelopeFixture(int segments, bool square = false) {
        xj = m.add_variable("xj", VarKind::Continuous, 0.0, 1.0);
        xk = square ? xj : m.add_variable("xk", VarKind::Continuous, 0.0, 1.0);
        z = m.add_variable("z", VarKind::Continuous, square ? 0.0 : 0.0, 1.0);
        std::vector<int> lambdas;
        LinearConstraint one;
        for (int r = 0; r < segments; ++r) {
            int lam = m.add_variable("lam" + std::to_string(r), VarKind::Binary, 0.0, 1.0);
            lambdas.push_back(lam);
            one.coeffs.emplace_back(lam, 1.0);
        }
        one.sense = Sense::Eq;
        one.rhs = 1.0;
        m.add_constraint(one);
        Vec bp(segments + 1);
        for (int r = 0; r <= segments; ++r)
            bp[r] = static_cast<double>(r) / segments;
        mccormick_block(m, xj, xk, z, bp, lambdas);
    }

    // range of z compatible with x_j, x_k pinned at the given values
    std::pair<double, double> z_range(double vj, double vk) {
        m.variables[xj].lower = m.variables[xj].upper = vj;
        if (xk != xj) m.variables[xk].lower = m.variables[xk].upper = vk;
        m.obj_sense = ObjSense::Min;
        m.objective = {{z, 1.0}};
        auto lo = solve_milp(m, 1e-9);
        m.obj_sense = ObjSense::Max;
        auto hi = solve_milp(m, 1e-9);
        REQUIRE(lo.status == SolveStatus::Optimal);
        REQUIRE(hi.status == SolveStatus::Optimal);
        return {lo.objective, hi.objective};
    }
};

}  // namespace

TEST_CASE("uniform_partition spacing and endpoints") {
    auto b = box(2, -1.0, 3.0);
    auto s = uniform_partition(b, 4);
    CHECK(s.breakpoints[0][0] == -1.0);
    CHECK(s.breakpoints[0][4] == 3.0);
    CHECK(s.breakpoints[1][1] == doctest::Approx(0.0));
    CHECK(s.breakpoints[1][3] == doctest::Approx(2.0));
}

TEST_CASE("mccormick corner exactness at m=1") {
    EnvelopeFixture env(1);
    auto [lo, hi] = env.z_range(1.0, 1.0);
    CHECK(lo == doctest::Approx(1.0));
    CHECK(hi == doctest::Approx(1.0));
    auto [lo0, hi0] = env.z_range(0.0, 0.0);
    CHECK(lo0 == doctest::Approx(0.0));
    CHECK(hi0 == doctest::Approx(0.0));
}

TEST_CASE("mccormick midpoint envelope at m=1") {
    EnvelopeFixture env(1);
    auto [lo, hi] = env.z_range(0.5, 0.5);
    CHECK(lo == doctest::Approx(0.0));
    CHECK(hi == doctest::Approx(0.5));
    CHECK(0.25 >= lo);
    CHECK(0.25 <= hi);
}

TEST_CASE("mccormick square error shrinks as 1/m") {
    for (int m : {1, 4, 20}) {
        EnvelopeFixture env(m, /*square=*/true);
        double worst = 0.0;
        for (int g = 0; g <= 40; ++g) {
            double v = g / 40.0;
            auto [lo, hi] = env.z_range(v, v);
            CHECK(lo <= v * v + 1e-9);
            CHECK(hi >= v * v - 1e-9);
            worst = std::max({worst, v * v - lo, hi - v * v});
        }
        CHECK(worst <= 0.25 / m + 1e-9);
    }
}

TEST_CASE("tighten contracts toward the iterate") {
    auto state = make_tightening(box(1, 0.0, 10.0), 20, 0.5);
    CHECK(state.m_t == 20);
    Vec xhat(1);
    xhat << 4.0;
    auto next = tighten(state, xhat);
    CHECK(next.t == 2);
    CHECK(next.current.lower[0] == doctest::Approx(2.0));
    CHECK(next.current.upper[0] == doctest::Approx(7.0));
    CHECK(next.m_t == 10);
    // full partition-count sequence for m_init = 20, nu = 0.5
    std::vector<int> seq{state.m_t};
    auto s = state;
    for (int i = 0; i < 6; ++i) {
        s = tighten(s, xhat);
        seq.push_back(s.m_t);
    }
    CHECK(seq == std::vector<int>{20, 10, 5, 3, 2, 1, 1});
}

TEST_CASE("tighten never excludes the previous iterate") {
    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto s = make_tightening(box(3, -5.0, 5.0), 20, 0.5);
    for (int t = 0; t < 10; ++t) {
        Vec xhat(3);
        for (int j = 0; j < 3; ++j)
            xhat[j] = s.current.lower[j] +
                      unif(rng) * (s.current.upper[j] - s.current.lower[j]);
        s = tighten(s, xhat);
        for (int j = 0; j < 3; ++j) {
            CHECK(s.current.lower[j] <= xhat[j] + 1e-12);
            CHECK(s.current.upper[j] >= xhat[j] - 1e-12);
            CHECK(s.current.lower[j] >= -5.0 - 1e-12);
            CHECK(s.current.upper[j] <= 5.0 + 1e-12);
        }
    }
}

TEST_CASE("build_mp 1-D matches the analytic boundary distance") {
    auto model = two_gaussian_1d();  // H(x) = 2x - 2
    auto exp = build_expansion(model);
    WhitenedMetric metric(Mat::Identity(1, 1), NormOrder::Linf);
    Vec factual(1);
    factual << 0.0;
    auto state = make_tightening(box(1, -3.0, 3.0), 20, 0.5);
    auto built = build_mp(model, exp, metric, factual, {Vec::Zero(1)}, state, 0.0);
    auto res = solve_milp(built.model, 0.01);
    REQUIRE(res.status == SolveStatus::Optimal);
    // H >= 0 demands x >= 1, so the closest point is x = 1 at distance 1
    CHECK(res.objective == doctest::Approx(1.0).epsilon(0.01));
    CHECK(res.assignment[built.primal[0]] == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("build_mp with identical classes is infeasible for tau above 1/2") {
    auto model = symmetric_model(2);  // H identically zero
    auto exp = build_expansion(model);
    WhitenedMetric metric(Mat::Identity(2, 2), NormOrder::Linf);
    auto state = make_tightening(box(2, -2.0, 2.0), 5, 0.5);
    auto built = build_mp(model, exp, metric, Vec::Zero(2), {Vec::Zero(2)}, state,
                          log_threshold(0.6));
    auto res = solve_milp(built.model);
    CHECK(res.status == SolveStatus::Infeasible);
}

TEST_CASE("build_mp relaxation never exceeds the grid-oracle optimum") {
    std::mt19937_64 rng(52);
    auto bounds = box(2, -2.0, 2.0);
    int tested = 0;
    for (int t = 0; t < 12 && tested < 8; ++t) {
        auto model = random_model(2, rng);
        auto exp = build_expansion(model);
        WhitenedMetric metric(Mat::Identity(2, 2), NormOrder::Linf);
        Vec factual(2);
        factual << -1.0, 0.5;
        std::vector<Vec> scenarios{Vec::Zero(2)};
        auto grid = solve_grid_mp(model, metric, factual, scenarios, bounds, 0.0, 161);
        if (grid.status != SolveStatus::Feasible) continue;
        ++tested;
        auto state = make_tightening(bounds, 5, 0.5);
        auto built = build_mp(model, exp, metric, factual, scenarios, state, 0.0);
        auto res = solve_milp(built.model, 1e-6);
        REQUIRE(res.status == SolveStatus::Optimal);
        CHECK(res.objective <= grid.objective + 1e-6);
    }
    CHECK(tested >= 5);
}

TEST_CASE("build_mp solved envelopes stay near the true products") {
    std::mt19937_64 rng(53);
    auto bounds = box(2, -2.0, 2.0);
    for (int t = 0; t < 5; ++t) {
        auto model = random_model(2, rng);
        auto exp = build_expansion(model);
        WhitenedMetric metric(Mat::Identity(2, 2), NormOrder::Linf);
        auto state = make_tightening(bounds, 8, 0.5);
        auto built =
            build_mp(model, exp, metric, Vec::Zero(2), {Vec::Zero(2)}, state, 0.0);
        auto res = solve_milp(built.model, 1e-6);
        if (res.status != SolveStatus::Optimal) continue;
        for (auto& [pair, zi] : built.product) {
            auto [j, k] = pair;
            double vj = res.assignment[built.primal[j]];
            double vk = res.assignment[built.primal[k]];
            double width_j = (bounds.upper[j] - bounds.lower[j]) / state.m_t;
            double width_k = bounds.upper[k] - bounds.lower[k];
            CHECK(std::abs(res.assignment[zi] - vj * vk) <=
                  0.25 * width_j * width_k + 1e-6);
        }
    }
}

TEST_CASE("build_mp scenario monotonicity") {
    std::mt19937_64 rng(54);
    auto bounds = box(2, -2.0, 2.0);
    for (int t = 0; t < 6; ++t) {
        auto model = random_model(2, rng);
        auto exp = build_expansion(model);
        WhitenedMetric metric(Mat::Identity(2, 2), NormOrder::L1);
        Vec factual(2);
        factual << 0.3, -0.7;
        auto state = make_tightening(bounds, 5, 0.5);
        std::vector<Vec> base{Vec::Zero(2)};
        Vec extra(2);
        extra << 0.1, -0.05;
        std::vector<Vec> more{Vec::Zero(2), extra};
        auto a = solve_milp(build_mp(model, exp, metric, factual, base, state, 0.0).model,
                            1e-6);
        auto b = solve_milp(build_mp(model, exp, metric, factual, more, state, 0.0).model,
                            1e-6);
        if (a.status == SolveStatus::Infeasible) {
            CHECK(b.status == SolveStatus::Infeasible);
            continue;
        }
        if (b.status == SolveStatus::Infeasible) continue;  // region can vanish
        CHECK(b.objective >= a.objective - 1e-6);
    }
}

TEST_CASE("build_ap collapses to the pointwise violation for tiny gamma") {
    std::mt19937_64 rng(55);
    for (int t = 0; t < 5; ++t) {
        auto model = random_model(3, rng);
        auto exp = build_expansion(model);
        UncertaintySet uset(WhitenedMetric(Mat::Identity(3, 3), NormOrder::Linf), 1e-12);
        Vec xhat(3);
        std::normal_distribution<double> gauss;
        for (int j = 0; j < 3; ++j) xhat[j] = gauss(rng);
        double tau_prime = 0.2;
        auto built = build_ap(model, exp, uset, xhat, 3, tau_prime);
        auto res = solve_milp(built.model, 1e-6);
        REQUIRE(res.status == SolveStatus::Optimal);
        CHECK(res.objective ==
              doctest::Approx(tau_prime - model.decision_h(xhat)).epsilon(1e-6));
    }
}

TEST_CASE("build_ap is exactly zero for symmetric classes at tau = 1/2") {
    auto model = symmetric_model(2);
    auto exp = build_expansion(model);
    UncertaintySet uset(WhitenedMetric(Mat::Identity(2, 2), NormOrder::Linf), 0.3);
    Vec xhat(2);
    xhat << 0.4, -1.1;
    auto built = build_ap(model, exp, uset, xhat, 4, 0.0);
    auto res = solve_milp(built.model, 1e-9);
    REQUIRE(res.status == SolveStatus::Optimal);
    CHECK(res.objective == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("build_ap relaxation dominates the grid-oracle maximum") {
    std::mt19937_64 rng(56);
    for (int t = 0; t < 8; ++t) {
        auto model = random_model(2, rng);
        auto exp = build_expansion(model);
        NormOrder p = t % 2 == 0 ? NormOrder::Linf : NormOrder::L1;
        UncertaintySet uset(build_metric(model.class_geometry(0).covariance, p), 0.3);
        Vec xhat(2);
        std::normal_distribution<double> gauss;
        for (int j = 0; j < 2; ++j) xhat[j] = gauss(rng);
        auto grid = solve_grid_ap(model, uset, xhat, 0.0, 201);
        REQUIRE(grid.status == SolveStatus::Feasible);
        auto built = build_ap(model, exp, uset, xhat, 5, 0.0);
        auto res = solve_milp(built.model, 1e-6);
        REQUIRE(res.status == SolveStatus::Optimal);
        CHECK(res.objective >= grid.objective - 1e-6);
    }
}

TEST_CASE("builders reject unsupported settings") {
    auto model = symmetric_model(2);
    auto exp = build_expansion(model);
    WhitenedMetric l2(Mat::Identity(2, 2), NormOrder::L2);
    auto state = make_tightening(box(2, -1.0, 1.0), 5, 0.5);
    CHECK_THROWS_AS(
        build_mp(model, exp, l2, Vec::Zero(2), {Vec::Zero(2)}, state, 0.0), InputError);
    CHECK_THROWS_AS(build_mp(model, exp,
                             WhitenedMetric(Mat::Identity(2, 2), NormOrder::Linf),
                             Vec::Zero(2), {}, state, 0.0),
                    PreconditionError);
    UncertaintySet u2(l2, 0.1);
    CHECK_THROWS_AS(build_ap(model, exp, u2, Vec::Zero(2), 5, 0.0), InputError);
}

TEST_CASE("double partitioning tightens without cutting true solutions") {
    std::mt19937_64 rng(57);
    auto bounds = box(2, -2.0, 2.0);
    for (int t = 0; t < 5; ++t) {
        auto model = random_model(2, rng);
        auto exp = build_expansion(model);
        WhitenedMetric metric(Mat::Identity(2, 2), NormOrder::Linf);
        Vec factual(2);
        factual << -0.5, 0.8;
        std::vector<Vec> scenarios{Vec::Zero(2)};
        auto state = make_tightening(bounds, 4, 0.5);
        auto single =
            solve_milp(build_mp(model, exp, metric, factual, scenarios, state, 0.0).model,
                       1e-6);
        auto both = solve_milp(
            build_mp(model, exp, metric, factual, scenarios, state, 0.0, true).model,
            1e-6);
        auto grid = solve_grid_mp(model, metric, factual, scenarios, bounds, 0.0, 121);
        if (single.status != SolveStatus::Optimal ||
            both.status != SolveStatus::Optimal)
            continue;
        CHECK(both.objective >= single.objective - 1e-6);  // intersection is tighter
        if (grid.status == SolveStatus::Feasible)
            CHECK(both.objective <= grid.objective + 1e-6);  // still a relaxation
    }
}

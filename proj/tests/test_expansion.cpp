#include <doctest.h>

#include <random>
#include <set>

#include "cgnc/expansion.hpp"
#include "helpers.hpp"

using namespace cgnc;
using testutil::random_model;
using testutil::symmetric_model;
using testutil::two_gaussian_1d;

namespace {

Vec random_vec(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = gauss(rng);
    return v;
}

}  // namespace

TEST_CASE("build_expansion for NB keeps squares only") {
    auto model = symmetric_model(3);
    auto exp = build_expansion(model);
    std::vector<std::pair<int, int>> want{{0, 0}, {1, 1}, {2, 2}};
    CHECK(exp.pair_set == want);
    for (int i = 0; i < 3; ++i) CHECK(exp.p_plus[i] == std::vector<int>{i});
}

TEST_CASE("build_expansion chain coefficients") {
    DagStructure g;
    g.n = 2;
    g.parents = {{}, {0}};
    g.edges = {{0, 1}};
    std::array<std::vector<NodeCpd>, 2> cpds;
    for (int c = 0; c < 2; ++c)
        cpds[c] = {NodeCpd{{}, 0.0, 1.0}, NodeCpd{{0.5}, 0.0, 1.0}};
    CgncModel model(g, {0.5, 0.5}, cpds);
    auto exp = build_expansion(model);
    CHECK(exp.p_plus[1] == std::vector<int>{0, 1});
    CHECK(exp.coeff(0, 1, 0) == -0.5);
    CHECK(exp.coeff(0, 1, 1) == 1.0);
    std::set<std::pair<int, int>> q(exp.pair_set.begin(), exp.pair_set.end());
    CHECK(q.count({0, 1}) == 1);
}

TEST_CASE("pair set matches brute-force enumeration on a dense BAN") {
    std::mt19937_64 rng(31);
    auto model = random_model(8, rng);
    auto exp = build_expansion(model);
    // independent enumeration straight from the parent sets
    std::set<std::pair<int, int>> want;
    for (int i = 0; i < 8; ++i) {
        std::vector<int> pp = model.structure().parents[i];
        pp.push_back(i);
        for (int a : pp)
            for (int b : pp)
                if (a <= b) want.emplace(a, b);
    }
    std::set<std::pair<int, int>> got(exp.pair_set.begin(), exp.pair_set.end());
    CHECK(got == want);
}

TEST_CASE("xi closed forms") {
    auto model = two_gaussian_1d();
    auto exp = build_expansion(model);
    Vec v(1);
    v << 0.0;
    CHECK(xi(model, exp, 0, 0, v) == 0.0);
    v << 3.0;
    CHECK(xi(model, exp, 1, 0, v) == doctest::Approx(1.0));  // a=1, b=2
}

TEST_CASE("xi matches the conditional-mean deviation at data points") {
    std::mt19937_64 rng(32);
    auto model = random_model(5, rng);
    auto exp = build_expansion(model);
    for (int t = 0; t < 200; ++t) {
        Vec x = random_vec(5, rng);
        int c = static_cast<int>(rng() % 2);
        int i = static_cast<int>(rng() % 5);
        CHECK(xi(model, exp, c, i, x) ==
              doctest::Approx(x[i] - model.conditional_mean(c, i, x)).epsilon(1e-12));
    }
}

TEST_CASE("deviation_term closed forms") {
    auto model = two_gaussian_1d();
    auto exp = build_expansion(model);
    Vec primal(1), fixed(1);
    primal << 1.0;
    fixed << 0.5;
    CHECK(deviation_term(model, exp, 0, 0, primal, fixed) == doctest::Approx(2.25));
    primal << 0.0;
    fixed << 0.0;
    CHECK(deviation_term(model, exp, 0, 0, primal, fixed) == 0.0);
}

TEST_CASE("expanded polynomial equals the direct square") {
    std::mt19937_64 rng(33);
    auto model = random_model(5, rng);
    auto exp = build_expansion(model);
    for (int t = 0; t < 1000; ++t) {
        Vec primal = random_vec(5, rng), fixed = random_vec(5, rng);
        int c = static_cast<int>(rng() % 2);
        int i = static_cast<int>(rng() % 5);
        auto poly = deviation_poly(model, exp, c, i, fixed);
        double direct = deviation_term(model, exp, c, i, primal, fixed);
        CHECK(poly.eval(primal) == doctest::Approx(direct).epsilon(1e-10));
    }
}

TEST_CASE("expanded constraint form equals tau' - H") {
    std::mt19937_64 rng(34);
    for (int m = 0; m < 10; ++m) {
        auto model = random_model(4, rng);
        auto exp = build_expansion(model);
        for (int t = 0; t < 100; ++t) {
            Vec x = random_vec(4, rng), delta = 0.1 * random_vec(4, rng);
            double tau_prime = 0.3;
            double direct = tau_prime - model.decision_h(x + delta);
            CHECK(violation_expanded(model, exp, x, delta, tau_prime) ==
                  doctest::Approx(direct).epsilon(1e-9));
        }
    }
}

TEST_CASE("grad_h closed forms") {
    auto sym = symmetric_model(3);
    auto exp_sym = build_expansion(sym);
    std::mt19937_64 rng(35);
    Vec x = random_vec(3, rng);
    CHECK(grad_h(sym, exp_sym, x).norm() == doctest::Approx(0.0).epsilon(1e-12));

    auto model = two_gaussian_1d();
    auto exp = build_expansion(model);
    for (double xv : {-1.0, 0.0, 2.0}) {
        Vec p(1);
        p << xv;
        CHECK(grad_h(model, exp, p)[0] == doctest::Approx(2.0));  // d/dx (2x-2)
    }
}

TEST_CASE("grad_h matches central finite differences") {
    std::mt19937_64 rng(36);
    for (int m = 0; m < 5; ++m) {
        auto model = random_model(4, rng);
        auto exp = build_expansion(model);
        const double h = 1e-5;
        for (int t = 0; t < 100; ++t) {
            Vec x = random_vec(4, rng);
            Vec g = grad_h(model, exp, x);
            Vec fd(4);
            for (int j = 0; j < 4; ++j) {
                Vec xp = x, xm = x;
                xp[j] += h;
                xm[j] -= h;
                fd[j] = (model.decision_h(xp) - model.decision_h(xm)) / (2 * h);
            }
            CHECK((g - fd).norm() / std::max(1.0, g.norm()) < 1e-6);
        }
    }
}

TEST_CASE("dc_split closed forms") {
    auto nb = symmetric_model(2);  // unit variances
    auto exp = build_expansion(nb);
    auto [q0, q1] = dc_split(nb, exp);
    CHECK((q0 - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((q1 - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);

    auto one_d = two_gaussian_1d();
    auto exp1 = build_expansion(one_d);
    auto [a0, a1] = dc_split(one_d, exp1);
    CHECK(a0(0, 0) == doctest::Approx(1.0));
    CHECK(a1(0, 0) == doctest::Approx(1.0));  // Hessian 0: H affine
}

TEST_CASE("dc_split matrices are PSD and give the Hessian of H") {
    std::mt19937_64 rng(37);
    for (int m = 0; m < 10; ++m) {
        auto model = random_model(4, rng);
        auto exp = build_expansion(model);
        auto [q0, q1] = dc_split(model, exp);
        Eigen::SelfAdjointEigenSolver<Mat> e0(q0), e1(q1);
        CHECK(e0.eigenvalues().minCoeff() > -1e-10);
        CHECK(e1.eigenvalues().minCoeff() > -1e-10);
        // finite-difference Hessian of H
        Vec x = random_vec(4, rng);
        const double h = 1e-5;
        Mat hess(4, 4);
        for (int j = 0; j < 4; ++j) {
            Vec xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            hess.col(j) = (grad_h(model, exp, xp) - grad_h(model, exp, xm)) / (2 * h);
        }
        Mat want = q0 - q1;
        CHECK((hess - want).cwiseAbs().maxCoeff() /
                  std::max(1.0, want.cwiseAbs().maxCoeff()) <
              1e-6);
    }
}

TEST_CASE("lipschitz constant closed form for the 1-D example") {
    auto model = two_gaussian_1d();
    auto exp = build_expansion(model);
    double g = lipschitz_constant(model, exp, 3.0, NormOrder::Linf);
    CHECK(g == doctest::Approx(8.0));
    // affine in R: doubling R at b=0 contributions scales accordingly
    double g6 = lipschitz_constant(model, exp, 6.0, NormOrder::Linf);
    CHECK(g6 == doctest::Approx(14.0));  // (6+0) + (6+2)
}

TEST_CASE("sampled Lipschitz property never violates G") {
    std::mt19937_64 rng(38);
    std::uniform_real_distribution<double> unif(-1, 1);
    for (int m = 0; m < 20; ++m) {
        auto model = random_model(3, rng);
        auto exp = build_expansion(model);
        const double R = 2.0;
        for (NormOrder p : {NormOrder::L1, NormOrder::L2, NormOrder::Linf}) {
            double g = lipschitz_constant(model, exp, R, p);
            for (int t = 0; t < 500; ++t) {
                Vec x(3), y(3);
                for (int i = 0; i < 3; ++i) {
                    x[i] = R * unif(rng);
                    y[i] = R * unif(rng);
                }
                x = project_lp_ball(x, p, R);
                y = project_lp_ball(y, p, R);
                double lhs = std::abs(model.decision_h(x) - model.decision_h(y));
                double rhs = g * vector_norm(x - y, p);
                CHECK(lhs <= rhs + 1e-9);
            }
        }
    }
}

TEST_CASE("iteration_bound arithmetic") {
    CHECK(iteration_bound(3.0, 8.0, 0.001, 1) == doctest::Approx(24000.0));
    CHECK(iteration_bound(2.0, 3.0, 6.0, 4) == doctest::Approx(1.0));
    CHECK(iteration_bound(1.0, 1.0, 0.5, 2) == doctest::Approx(4.0));
    CHECK(iteration_bound_log(3.0, 8.0, 0.001, 1) ==
          doctest::Approx(std::log(24000.0)));
}

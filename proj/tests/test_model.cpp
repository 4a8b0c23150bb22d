#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cgnc/model.hpp"
#include "helpers.hpp"

using namespace cgnc;
using testutil::random_model;
using testutil::symmetric_model;
using testutil::two_gaussian_1d;

namespace {

Dataset make_dataset(const Mat& x, std::vector<int> labels) {
    Dataset ds;
    ds.features = x;
    ds.labels = std::move(labels);
    for (int j = 0; j < x.cols(); ++j) ds.feature_names.push_back("f" + std::to_string(j));
    return ds;
}

}  // namespace

TEST_CASE("log_threshold") {
    CHECK(log_threshold(0.5) == 0.0);
    CHECK(log_threshold(0.75) == doctest::Approx(std::log(3.0)).epsilon(1e-14));
    CHECK(log_threshold(0.25) == doctest::Approx(-std::log(3.0)).epsilon(1e-14));
    CHECK_THROWS_AS(log_threshold(0.0), PreconditionError);
    CHECK_THROWS_AS(log_threshold(1.0), PreconditionError);
}

TEST_CASE("fit recovers an exact linear relation") {
    // class data with x1 = 2*x0 + 1 exactly, edge 0 -> 1
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> unif(-1, 1);
    const int rows = 100;
    Mat x(rows, 2);
    std::vector<int> labels(rows);
    for (int r = 0; r < rows; ++r) {
        x(r, 0) = unif(rng);
        x(r, 1) = 2.0 * x(r, 0) + 1.0;
        labels[r] = r % 2;
    }
    DagStructure g;
    g.n = 2;
    g.parents = {{}, {0}};
    g.edges = {{0, 1}};
    auto model = fit(make_dataset(x, labels), g);
    for (int c = 0; c < 2; ++c) {
        CHECK(model.cpd(c, 1).weights[0] == doctest::Approx(2.0).epsilon(1e-9));
        CHECK(model.cpd(c, 1).intercept == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(model.cpd(c, 1).variance == kVarianceFloor);
    }
    CHECK(model.prior(0) == 0.5);
    CHECK(model.prior(1) == 0.5);
}

TEST_CASE("fit of a parentless node uses sample mean and unbiased variance") {
    Mat x(4, 1);
    x << 1.0, 3.0, 10.0, 20.0;
    auto model = fit(make_dataset(x, {0, 0, 1, 1}), structure_nb(1));
    CHECK(model.cpd(0, 0).intercept == doctest::Approx(2.0));
    CHECK(model.cpd(0, 0).variance == doctest::Approx(2.0));
}

TEST_CASE("fit rejects insufficient per-class rows") {
    Mat x(5, 2);
    x.setRandom();
    DagStructure g;
    g.n = 2;
    g.parents = {{}, {0}};
    g.edges = {{0, 1}};
    CHECK_THROWS_AS(fit(make_dataset(x, {0, 0, 1, 1, 0}), g), InputError);
}

TEST_CASE("fit falls back to ridge on collinear parents") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> unif(-1, 1);
    const int rows = 60;
    Mat x(rows, 3);
    std::vector<int> labels(rows);
    for (int r = 0; r < rows; ++r) {
        x(r, 0) = unif(rng);
        x(r, 1) = 3.0 * x(r, 0);  // exactly collinear with parent 0
        x(r, 2) = unif(rng);
        labels[r] = r % 2;
    }
    DagStructure g;
    g.n = 3;
    g.parents = {{}, {}, {0, 1}};
    g.edges = {{0, 2}, {1, 2}};
    FitReport report;
    auto model = fit(make_dataset(x, labels), g, &report);
    CHECK(report.ridge_fallbacks > 0);
    CHECK(std::isfinite(model.cpd(0, 2).variance));
}

TEST_CASE("log_density_node closed forms") {
    auto model = two_gaussian_1d();
    Vec x(1);
    x << 0.0;
    CHECK(model.log_density_node(0, 0, x) ==
          doctest::Approx(-0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-12));
    x << 2.0;
    CHECK(model.log_density_node(0, 0, x) ==
          doctest::Approx(-0.5 * std::log(2 * std::numbers::pi) - 2.0).epsilon(1e-12));
}

TEST_CASE("log_density_node matches direct Gaussian density evaluation") {
    std::mt19937_64 rng(4);
    auto model = random_model(4, rng);
    std::normal_distribution<double> gauss;
    for (int t = 0; t < 100; ++t) {
        Vec x(4);
        for (int i = 0; i < 4; ++i) x[i] = gauss(rng);
        int c = static_cast<int>(rng() % 2);
        int i = static_cast<int>(rng() % 4);
        double mu = model.conditional_mean(c, i, x);
        double s2 = model.cpd(c, i).variance;
        double pdf = 1.0 / std::sqrt(2 * std::numbers::pi * s2) *
                     std::exp(-(x[i] - mu) * (x[i] - mu) / (2 * s2));
        CHECK(model.log_density_node(c, i, x) ==
              doctest::Approx(std::log(pdf)).epsilon(1e-12));
    }
}

TEST_CASE("log_joint closed forms") {
    auto model = two_gaussian_1d();
    Vec x(1);
    x << 0.0;
    CHECK(model.log_joint(0, x) ==
          doctest::Approx(std::log(0.5) - 0.5 * std::log(2 * std::numbers::pi))
              .epsilon(1e-12));
}

TEST_CASE("decision_h closed form and tie rule") {
    auto model = two_gaussian_1d();
    Vec x(1);
    x << 1.0;
    CHECK(model.decision_h(x) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(model.classify(x, 0.5) == 1);  // tie -> class 1
    x << 0.0;
    CHECK(model.decision_h(x) == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(model.classify(x, 0.5) == 0);
    x << 2.0;
    CHECK(model.classify(x, 0.5) == 1);
    x << 1.2;
    CHECK(model.decision_h(x) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(model.classify(x, 0.75) == 0);  // 0.4 < ln 3
}

TEST_CASE("identical class parameters give H == 0") {
    auto model = symmetric_model(3);
    std::mt19937_64 rng(6);
    std::normal_distribution<double> gauss;
    for (int t = 0; t < 20; ++t) {
        Vec x(3);
        for (int i = 0; i < 3; ++i) x[i] = gauss(rng);
        CHECK(model.decision_h(x) == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("classify agrees with the posterior rule at tau = 0.5") {
    std::mt19937_64 rng(8);
    auto model = random_model(3, rng);
    std::normal_distribution<double> gauss;
    for (int t = 0; t < 10000; ++t) {
        Vec x(3);
        for (int i = 0; i < 3; ++i) x[i] = 3.0 * gauss(rng);
        double l0 = model.log_joint(0, x), l1 = model.log_joint(1, x);
        // posterior(1|x) >= 0.5  <=>  l1 >= l0
        double post1 = 1.0 / (1.0 + std::exp(l0 - l1));
        int want = post1 >= 0.5 ? 1 : 0;
        CHECK(model.classify(x, 0.5) == want);
    }
}

TEST_CASE("class_geometry for NB is diagonal") {
    auto model = two_gaussian_1d();
    auto geo = model.class_geometry(0);
    CHECK(geo.a_rows(0, 0) == 1.0);
    CHECK(geo.covariance(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("class_geometry chain coefficients") {
    DagStructure g;
    g.n = 2;
    g.parents = {{}, {0}};
    g.edges = {{0, 1}};
    std::array<std::vector<NodeCpd>, 2> cpds;
    for (int c = 0; c < 2; ++c)
        cpds[c] = {NodeCpd{{}, 0.0, 1.0}, NodeCpd{{0.5}, 0.0, 1.0}};
    CgncModel model(g, {0.5, 0.5}, cpds);
    auto geo = model.class_geometry(0);
    CHECK(geo.a_rows(1, 0) == -0.5);
    CHECK(geo.a_rows(1, 1) == 1.0);
    // Sigma = A^-1 diag A^-T for the chain: var(x1) = 0.25 + 1
    CHECK(geo.covariance(1, 1) == doctest::Approx(1.25));
    CHECK(geo.covariance(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("class_geometry covariance matches ancestral sampling") {
    std::mt19937_64 rng(10);
    auto model = random_model(4, rng);
    auto geo = model.class_geometry(0);
    const int rows = 200000;
    Mat sample = model.ancestral_sample(0, rows, rng);
    Vec mean = sample.colwise().mean();
    Mat centered = sample.rowwise() - mean.transpose();
    Mat emp = centered.transpose() * centered / (rows - 1);
    double rel = (emp - geo.covariance).norm() / geo.covariance.norm();
    CHECK(rel < 0.02);
}

TEST_CASE("fit on ancestrally sampled data recovers the parameters") {
    std::mt19937_64 rng(12);
    auto truth = random_model(4, rng);
    const int rows_per_class = 50000;
    Mat x(2 * rows_per_class, 4);
    std::vector<int> labels(2 * rows_per_class);
    for (int c = 0; c < 2; ++c) {
        Mat s = truth.ancestral_sample(c, rows_per_class, rng);
        x.middleRows(c * rows_per_class, rows_per_class) = s;
        for (int r = 0; r < rows_per_class; ++r) labels[c * rows_per_class + r] = c;
    }
    auto fitted = fit(make_dataset(x, labels), truth.structure());
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < 4; ++i) {
            const auto& tc = truth.cpd(c, i);
            const auto& fc = fitted.cpd(c, i);
            for (size_t w = 0; w < tc.weights.size(); ++w)
                CHECK(std::abs(fc.weights[w] - tc.weights[w]) < 0.02);
            CHECK(std::abs(fc.intercept - tc.intercept) < 0.02);
            CHECK(std::abs(fc.variance - tc.variance) / tc.variance < 0.05);
        }
}

TEST_CASE("model JSON round-trip") {
    std::mt19937_64 rng(14);
    auto model = random_model(5, rng);
    auto text = model.to_json();
    auto back = CgncModel::from_json(text);
    CHECK(back.to_json() == text);
    Vec x(5);
    std::normal_distribution<double> gauss;
    for (int i = 0; i < 5; ++i) x[i] = gauss(rng);
    CHECK(back.decision_h(x) == model.decision_h(x));
}

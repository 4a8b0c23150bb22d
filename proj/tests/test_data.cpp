#include <doctest.h>

#include <random>

#include "cgnc/data.hpp"
#include "helpers.hpp"

using namespace cgnc;
using testutil::write_temp;

TEST_CASE("load_csv maps labels by sorted distinct values") {
    auto path = write_temp("labels.csv", "f1,f2,y\n1,2,a\n3,4,b\n5,6,a\n7,8,b\n");
    auto ds = load_csv(path, "y");
    CHECK(ds.n_features() == 2);
    CHECK(ds.labels == std::vector<int>{0, 1, 0, 1});
    CHECK(ds.feature_names == std::vector<std::string>{"f1", "f2"});
}

TEST_CASE("load_csv rejects single-class data") {
    auto path = write_temp("oneclass.csv", "f,y\n1,a\n2,a\n3,a\n");
    CHECK_THROWS_AS(load_csv(path, "y"), InputError);
}

TEST_CASE("load_csv errors") {
    CHECK_THROWS_AS(load_csv("/tmp/definitely_missing_file.csv", "y"), InputError);
    auto path = write_temp("nolabel.csv", "f,y\n1,a\n2,b\n");
    CHECK_THROWS_AS(load_csv(path, "z"), InputError);
}

TEST_CASE("load_csv counts rejected rows with non-numeric cells") {
    auto path = write_temp("bad.csv",
                           "f,y\n1,a\nbogus,b\n2,b\n,a\n3,a\n4,b\n");
    int rejected = 0;
    auto ds = load_csv(path, "y", &rejected);
    CHECK(rejected == 2);
    CHECK(ds.n_rows() == 4);
}

TEST_CASE("load_csv handles numeric labels sorted numerically") {
    auto path = write_temp("numlab.csv", "f,y\n1,10\n2,2\n3,10\n4,2\n");
    auto ds = load_csv(path, "y");
    // 2 < 10 numerically, so 2 -> 0
    CHECK(ds.labels == std::vector<int>{1, 0, 1, 0});
}

namespace {
Dataset single_feature(const std::vector<double>& vals) {
    Dataset ds;
    ds.features.resize(static_cast<int>(vals.size()), 1);
    for (size_t i = 0; i < vals.size(); ++i) ds.features(static_cast<int>(i), 0) = vals[i];
    ds.labels.assign(vals.size(), 0);
    ds.labels[0] = 1;
    ds.feature_names = {"f"};
    return ds;
}
}  // namespace

TEST_CASE("percentile_bounds on 0..100") {
    std::vector<double> vals;
    for (int i = 0; i <= 100; ++i) vals.push_back(i);
    auto b = percentile_bounds(single_feature(vals), 0.05, 0.95);
    CHECK(b.lower[0] == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(b.upper[0] == doctest::Approx(95.0).epsilon(1e-12));
}

TEST_CASE("percentile_bounds widens constant features") {
    auto b = percentile_bounds(single_feature({3.0, 3.0, 3.0}), 0.05, 0.95);
    CHECK(b.lower[0] == doctest::Approx(3.0 - 3e-6));
    CHECK(b.upper[0] == doctest::Approx(3.0 + 3e-6));
}

TEST_CASE("percentile_bounds at 0/1 gives min/max") {
    auto b = percentile_bounds(single_feature({4.0, -1.0, 2.5, 9.0}), 0.0, 1.0);
    CHECK(b.lower[0] == -1.0);
    CHECK(b.upper[0] == 9.0);
}

TEST_CASE("percentile_bounds is monotone in the percentile pair") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss;
    std::vector<double> vals(57);
    for (auto& v : vals) v = gauss(rng);
    auto ds = single_feature(vals);
    auto inner = percentile_bounds(ds, 0.1, 0.9);
    auto outer = percentile_bounds(ds, 0.05, 0.95);
    CHECK(outer.lower[0] <= inner.lower[0]);
    CHECK(outer.upper[0] >= inner.upper[0]);
}

TEST_CASE("equal_frequency_bins splits 1..8 at 4.5") {
    auto e = equal_frequency_bins({1, 2, 3, 4, 5, 6, 7, 8}, 2);
    REQUIRE(e.size() == 3);
    CHECK(e[0] == 1.0);
    CHECK(e[1] == 4.5);
    CHECK(e[2] == 8.0);
}

TEST_CASE("equal_frequency_bins merges identical values to a single bin") {
    auto e = equal_frequency_bins({2.0, 2.0, 2.0, 2.0}, 4);
    CHECK(e.size() <= 1);
}

TEST_CASE("equal_frequency_bins keeps edges strictly increasing under ties") {
    auto e = equal_frequency_bins({1, 1, 1, 2}, 2);
    for (size_t i = 1; i < e.size(); ++i) CHECK(e[i] > e[i - 1]);
}

TEST_CASE("equal_frequency_bins rejects k < 2") {
    CHECK_THROWS_AS(equal_frequency_bins({1, 2, 3}, 1), PreconditionError);
}

TEST_CASE("equal_frequency_bins property: increasing edges, counts sum") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(0, 10);
    std::uniform_int_distribution<int> ksel(2, 8);
    for (int trial = 0; trial < 50; ++trial) {
        int sz = 10 + static_cast<int>(rng() % 90);
        std::vector<double> vals(sz);
        for (auto& v : vals)
            v = (trial % 3 == 0) ? std::floor(unif(rng)) : unif(rng);  // force ties sometimes
        int k = ksel(rng);
        auto e = equal_frequency_bins(vals, k);
        for (size_t i = 1; i < e.size(); ++i) CHECK(e[i] > e[i - 1]);
        // every value falls into exactly one bin
        if (e.size() >= 2) {
            int total = 0;
            for (double v : vals) {
                int hit = 0;
                for (size_t b = 0; b + 1 < e.size(); ++b) {
                    bool last = b + 2 == e.size();
                    if (v >= e[b] && (last ? v <= e[b + 1] : v < e[b + 1])) ++hit;
                }
                total += hit;
                CHECK(hit == 1);
            }
            CHECK(total == sz);
        }
    }
}

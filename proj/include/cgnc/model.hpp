#pragma once

#include <array>
#include <random>
#include <string>
#include <vector>

#include "cgnc/data.hpp"
#include "cgnc/structure.hpp"

namespace cgnc {

inline constexpr double kVarianceFloor = 1e-6;

/// Linear Gaussian conditional of one node for one class:
/// X_i | parents, c  ~  N(sum_j w[j]*x_parent_j + b, variance).
struct NodeCpd {
    std::vector<double> weights;  // aligned with structure.parents[i]
    double intercept = 0.0;
    double variance = 1.0;        // >= kVarianceFloor
};

/// Row representation A_c = I - W_c and the implied covariance of class c.
struct ClassGeometry {
    Mat a_rows;      // row i = dense coefficient vector a_i^c
    Mat covariance;  // Sigma_c, symmetric positive definite
};

class CgncModel {
public:
    CgncModel() = default;
    CgncModel(DagStructure structure, std::array<double, 2> priors,
              std::array<std::vector<NodeCpd>, 2> cpds,
              std::vector<std::string> feature_names = {});

    const DagStructure& structure() const { return structure_; }
    double prior(int c) const { return priors_[c]; }
    const NodeCpd& cpd(int c, int i) const { return cpds_[c][i]; }
    int n() const { return structure_.n; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }

    double conditional_mean(int c, int i, const Vec& x) const;
    double log_density_node(int c, int i, const Vec& x) const;
    double log_joint(int c, const Vec& x) const;
    /// Log-relative likelihood H(x) = log_joint(1,x) - log_joint(0,x).
    double decision_h(const Vec& x) const;
    /// 1 iff H(x) >= log(tau/(1-tau)); ties resolve to class 1.
    int classify(const Vec& x, double tau) const;

    ClassGeometry class_geometry(int c) const;

    /// Draws rows from the generative model for class c, in topological order.
    Mat ancestral_sample(int c, int rows, std::mt19937_64& rng) const;

    std::string to_json() const;
    static CgncModel from_json(const std::string& text);

private:
    DagStructure structure_;
    std::array<double, 2> priors_{0.5, 0.5};
    std::array<std::vector<NodeCpd>, 2> cpds_;
    std::vector<std::string> feature_names_;
};

/// Logit of the decision threshold, log(tau/(1-tau)).
double log_threshold(double tau);

struct FitReport {
    int ridge_fallbacks = 0;  // nodes where singular OLS fell back to ridge
};

/// Per-class, per-node ordinary least squares of x_i on (x_parents, 1).
/// Variance: unbiased residual estimator, floored at kVarianceFloor.
/// Parentless nodes use class sample mean and unbiased variance.
CgncModel fit(const Dataset& ds, const DagStructure& structure,
              FitReport* report = nullptr);

}  // namespace cgnc

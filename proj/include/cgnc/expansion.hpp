#pragma once

#include <array>
#include <tuple>

#include "cgnc/metric.hpp"
#include "cgnc/model.hpp"

namespace cgnc {

/// Index sets and coefficients of the quadratic form behind the decision
/// function: per node the augmented parent set {i} u P_i, the pair set Q of
/// co-occurring indices, and the row coefficients a_i^c.
struct ExpandedForm {
    std::vector<std::vector<int>> p_plus;       // sorted, always contains i
    std::vector<std::pair<int, int>> pair_set;  // Q: (j,k) with j <= k, sorted
    std::array<Mat, 2> coeffs;                  // coeffs[c](i,j) = a_ij^c

    double coeff(int c, int i, int j) const { return coeffs[c](i, j); }
};

ExpandedForm build_expansion(const CgncModel& model);

/// xi_i^c(v) = a_i^c . v - b_i^c.
double xi(const CgncModel& model, const ExpandedForm& exp, int c, int i, const Vec& v);

/// Squared conditional deviation (a_i^c . (primal + fixed) - b_i^c)^2.
double deviation_term(const CgncModel& model, const ExpandedForm& exp, int c, int i,
                      const Vec& primal, const Vec& fixed);

/// The same deviation expanded as a polynomial in the primal variable:
/// sum_q quad * v_j v_k (pair coefficient, symmetric factor folded in)
/// + sum lin * v_j + constant.
struct DeviationPoly {
    std::vector<std::tuple<int, int, double>> quad;  // (j, k, coef), j <= k
    std::vector<std::pair<int, double>> lin;
    double constant = 0.0;

    double eval(const Vec& v) const;
};
DeviationPoly deviation_poly(const CgncModel& model, const ExpandedForm& exp, int c,
                             int i, const Vec& fixed);

/// tau' - H(x) assembled from the expanded constraint form (for oracle checks).
double violation_expanded(const CgncModel& model, const ExpandedForm& exp,
                          const Vec& primal, const Vec& fixed, double tau_prime);

/// Analytic gradient of H.
Vec grad_h(const CgncModel& model, const ExpandedForm& exp, const Vec& x);

/// (Q0, Q1), both PSD, with the constant Hessian of H equal to Q0 - Q1.
std::pair<Mat, Mat> dc_split(const CgncModel& model, const ExpandedForm& exp);

/// Lipschitz constant G of H over the radius-R ball; dual-norm evaluation of
/// the coefficient rows, optionally in the whitened frame (rows mapped by
/// W^-T when `whitener` is given).
double lipschitz_constant(const CgncModel& model, const ExpandedForm& exp, double R,
                          NormOrder p, const Mat* whitener = nullptr);

/// Ball-packing iteration bound (R G / eps)^n; may overflow to +inf.
double iteration_bound(double R, double G, double eps, int n);
/// The same bound in logarithmic form, n (log R + log G - log eps).
double iteration_bound_log(double R, double G, double eps, int n);

}  // namespace cgnc

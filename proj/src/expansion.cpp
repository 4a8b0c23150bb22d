#include "cgnc/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace cgnc {

ExpandedForm build_expansion(const CgncModel& model) {
    const int n = model.n();
    const auto& structure = model.structure();
    ExpandedForm exp;
    exp.p_plus.resize(n);
    std::set<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i) {
        auto& pp = exp.p_plus[i];
        pp = structure.parents[i];
        pp.push_back(i);
        std::sort(pp.begin(), pp.end());
        for (size_t a = 0; a < pp.size(); ++a)
            for (size_t b = a; b < pp.size(); ++b) pairs.emplace(pp[a], pp[b]);
    }
    exp.pair_set.assign(pairs.begin(), pairs.end());
    for (int c = 0; c < 2; ++c) {
        exp.coeffs[c] = Mat::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            exp.coeffs[c](i, i) = 1.0;
            const auto& par = structure.parents[i];
            for (size_t j = 0; j < par.size(); ++j)
                exp.coeffs[c](i, par[j]) = -model.cpd(c, i).weights[j];
        }
    }
    return exp;
}

double xi(const CgncModel& model, const ExpandedForm& exp, int c, int i, const Vec& v) {
    double s = -model.cpd(c, i).intercept;
    for (int j : exp.p_plus[i]) s += exp.coeff(c, i, j) * v[j];
    return s;
}

double deviation_term(const CgncModel& model, const ExpandedForm& exp, int c, int i,
                      const Vec& primal, const Vec& fixed) {
    double s = -model.cpd(c, i).intercept;
    for (int j : exp.p_plus[i]) s += exp.coeff(c, i, j) * (primal[j] + fixed[j]);
    return s * s;
}

DeviationPoly deviation_poly(const CgncModel& model, const ExpandedForm& exp, int c,
                             int i, const Vec& fixed) {
    DeviationPoly poly;
    const double x = xi(model, exp, c, i, fixed);
    const auto& pp = exp.p_plus[i];
    for (size_t a = 0; a < pp.size(); ++a) {
        int j = pp[a];
        double aj = exp.coeff(c, i, j);
        poly.lin.emplace_back(j, 2.0 * x * aj);
        for (size_t b = a; b < pp.size(); ++b) {
            int k = pp[b];
            double ak = exp.coeff(c, i, k);
            poly.quad.emplace_back(j, k, (j == k ? 1.0 : 2.0) * aj * ak);
        }
    }
    poly.constant = x * x;
    return poly;
}

double DeviationPoly::eval(const Vec& v) const {
    double s = constant;
    for (auto [j, k, q] : quad) s += q * v[j] * v[k];
    for (auto [j, l] : lin) s += l * v[j];
    return s;
}

double violation_expanded(const CgncModel& model, const ExpandedForm& exp,
                          const Vec& primal, const Vec& fixed, double tau_prime) {
    double h = 0.0;
    for (int c = 0; c < 2; ++c) {
        double inner = std::log(model.prior(c));
        for (int i = 0; i < model.n(); ++i) {
            const auto& cpd = model.cpd(c, i);
            inner -= 0.5 * std::log(cpd.variance) +
                     deviation_term(model, exp, c, i, primal, fixed) /
                         (2.0 * cpd.variance);
        }
        h += (2 * c - 1) * inner;
    }
    return tau_prime - h;
}

Vec grad_h(const CgncModel& model, const ExpandedForm& exp, const Vec& x) {
    const int n = model.n();
    Vec g = Vec::Zero(n);
    for (int c = 0; c < 2; ++c) {
        double sign = c == 1 ? -1.0 : 1.0;
        for (int i = 0; i < n; ++i) {
            double resid = xi(model, exp, c, i, x) / model.cpd(c, i).variance;
            for (int j : exp.p_plus[i]) g[j] += sign * resid * exp.coeff(c, i, j);
        }
    }
    return g;
}

std::pair<Mat, Mat> dc_split(const CgncModel& model, const ExpandedForm& exp) {
    const int n = model.n();
    std::array<Mat, 2> q{Mat::Zero(n, n), Mat::Zero(n, n)};
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < n; ++i) {
            Vec a = exp.coeffs[c].row(i).transpose();
            q[c] += a * a.transpose() / model.cpd(c, i).variance;
        }
    return {q[0], q[1]};
}

double lipschitz_constant(const CgncModel& model, const ExpandedForm& exp, double R,
                          NormOrder p, const Mat* whitener) {
    if (!(R > 0.0)) throw PreconditionError("domain radius must be positive");
    NormOrder q = dual_norm(p);
    Mat winv_t;
    if (whitener)
        winv_t = whitener->triangularView<Eigen::Lower>()
                     .solve(Mat::Identity(model.n(), model.n()))
                     .transpose();
    double g = 0.0;
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < model.n(); ++i) {
            Vec a = exp.coeffs[c].row(i).transpose();
            if (whitener) a = winv_t * a;
            double an = vector_norm(a, q);
            g += (an * R + std::abs(model.cpd(c, i).intercept)) /
                 model.cpd(c, i).variance * an;
        }
    return g;
}

double iteration_bound(double R, double G, double eps, int n) {
    if (!(R > 0.0 && G > 0.0 && eps > 0.0 && n > 0))
        throw PreconditionError("iteration_bound requires positive arguments");
    return std::pow(R * G / eps, n);
}

double iteration_bound_log(double R, double G, double eps, int n) {
    return n * (std::log(R) + std::log(G) - std::log(eps));
}

}  // namespace cgnc

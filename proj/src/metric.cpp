#include "cgnc/metric.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace cgnc {

double vector_norm(const Vec& v, NormOrder p) {
    switch (p) {
        case NormOrder::L1: return v.lpNorm<1>();
        case NormOrder::L2: return v.norm();
        case NormOrder::Linf: return v.lpNorm<Eigen::Infinity>();
    }
    return 0.0;
}

NormOrder dual_norm(NormOrder p) {
    switch (p) {
        case NormOrder::L1: return NormOrder::Linf;
        case NormOrder::Linf: return NormOrder::L1;
        case NormOrder::L2: return NormOrder::L2;
    }
    return NormOrder::L2;
}

NormOrder parse_norm_order(const std::string& s) {
    if (s == "1") return NormOrder::L1;
    if (s == "2") return NormOrder::L2;
    if (s == "inf") return NormOrder::Linf;
    throw InputError("unknown norm order: " + s + " (expected 1, 2 or inf)");
}

std::string norm_order_name(NormOrder p) {
    switch (p) {
        case NormOrder::L1: return "1";
        case NormOrder::L2: return "2";
        case NormOrder::Linf: return "inf";
    }
    return "?";
}

WhitenedMetric::WhitenedMetric(Mat whitener, NormOrder p)
    : whitener_(std::move(whitener)), p_(p) {
    const int n = static_cast<int>(whitener_.rows());
    if (whitener_.cols() != n) throw InputError("whitener must be square");
    for (int i = 0; i < n; ++i) {
        if (whitener_(i, i) <= 0.0)
            throw InputError("whitener diagonal must be strictly positive");
        for (int j = i + 1; j < n; ++j)
            if (whitener_(i, j) != 0.0)
                throw InputError("whitener must be lower triangular");
    }
    inverse_ = whitener_.triangularView<Eigen::Lower>().solve(Mat::Identity(n, n));
}

double WhitenedMetric::distance(const Vec& x, const Vec& x_ref) const {
    if (x.size() != x_ref.size() || x.size() != whitener_.rows())
        throw PreconditionError("distance: length mismatch");
    return vector_norm(whitener_ * (x - x_ref), p_);
}

WhitenedMetric build_metric(const Mat& sigma0, NormOrder p) {
    Mat sym = 0.5 * (sigma0 + sigma0.transpose());
    Eigen::LLT<Mat> llt(sym);
    if (llt.info() != Eigen::Success) {
        Eigen::SelfAdjointEigenSolver<Mat> es(sym);
        throw InputError("covariance is not positive definite (smallest eigenvalue " +
                         std::to_string(es.eigenvalues().minCoeff()) + ")");
    }
    Mat G = llt.matrixL();
    Mat W = G.triangularView<Eigen::Lower>().solve(
        Mat::Identity(sigma0.rows(), sigma0.cols()));
    return WhitenedMetric(std::move(W), p);
}

FeatureBounds coordinate_extent(const UncertaintySet& uset) {
    const Mat& inv = uset.metric.whitener_inverse();
    const int n = uset.metric.n();
    // delta = W^-1 u over ||u||_p <= gamma, so the extent of delta_j is
    // gamma times the dual norm of row j of W^-1.
    NormOrder q = dual_norm(uset.metric.p());
    FeatureBounds b;
    b.lower.resize(n);
    b.upper.resize(n);
    for (int j = 0; j < n; ++j) {
        double ext = uset.gamma * vector_norm(inv.row(j).transpose(), q);
        b.lower[j] = -ext;
        b.upper[j] = ext;
    }
    return b;
}

NormBallRows norm_ball_constraints(const UncertaintySet& uset) {
    const Mat& W = uset.metric.whitener();
    const int n = uset.metric.n();
    const double gamma = uset.gamma;
    NormBallRows out;
    auto wrow = [&](int i, double sign) {
        std::vector<std::pair<int, double>> coeffs;
        for (int j = 0; j <= i; ++j)  // W lower triangular
            if (W(i, j) != 0.0) coeffs.emplace_back(j, sign * W(i, j));
        return coeffs;
    };
    switch (uset.metric.p()) {
        case NormOrder::Linf:
            for (int i = 0; i < n; ++i)
                for (double sign : {1.0, -1.0})
                    out.rows.push_back({wrow(i, sign), {}, Sense::Le, gamma});
            break;
        case NormOrder::L1: {
            out.n_aux = n;
            for (int i = 0; i < n; ++i)
                for (double sign : {1.0, -1.0})
                    out.rows.push_back({wrow(i, sign), {{i, -1.0}}, Sense::Le, 0.0});
            NormBallRows::Row sum;
            for (int i = 0; i < n; ++i) sum.aux_coeffs.emplace_back(i, 1.0);
            sum.sense = Sense::Le;
            sum.rhs = gamma;
            out.rows.push_back(std::move(sum));
            break;
        }
        case NormOrder::L2:
            throw InputError("quadratic set unsupported in MILP path (p=2)");
    }
    return out;
}

Vec project_lp_ball(Vec u, NormOrder p, double radius) {
    switch (p) {
        case NormOrder::Linf:
            for (int i = 0; i < u.size(); ++i)
                u[i] = std::clamp(u[i], -radius, radius);
            return u;
        case NormOrder::L2: {
            double nrm = u.norm();
            if (nrm > radius) u *= radius / nrm;
            return u;
        }
        case NormOrder::L1: {
            if (u.lpNorm<1>() <= radius) return u;
            // Project |u| onto the simplex of size `radius` (sorted threshold).
            std::vector<double> a(u.size());
            for (int i = 0; i < u.size(); ++i) a[i] = std::abs(u[i]);
            std::sort(a.begin(), a.end(), std::greater<>());
            double cum = 0.0, theta = 0.0;
            for (size_t k = 0; k < a.size(); ++k) {
                cum += a[k];
                double t = (cum - radius) / static_cast<double>(k + 1);
                if (k + 1 == a.size() || a[k + 1] <= t) {
                    theta = t;
                    break;
                }
            }
            for (int i = 0; i < u.size(); ++i) {
                double mag = std::max(std::abs(u[i]) - theta, 0.0);
                u[i] = u[i] < 0 ? -mag : mag;
            }
            return u;
        }
    }
    return u;
}

}  // namespace cgnc

#pragma once

#include "cgnc/data.hpp"
#include "cgnc/milp_ir.hpp"

namespace cgnc {

enum class NormOrder { L1, L2, Linf };

double vector_norm(const Vec& v, NormOrder p);
/// Dual norm pairing: L1 <-> Linf, L2 <-> L2.
NormOrder dual_norm(NormOrder p);
NormOrder parse_norm_order(const std::string& s);  // "1" | "2" | "inf"
std::string norm_order_name(NormOrder p);

/// Mahalanobis-lp geometry: lower-triangular whitener W with W^T W = Sigma0^-1,
/// distances measured as ||W (x - x')||_p.
class WhitenedMetric {
public:
    WhitenedMetric(Mat whitener, NormOrder p);

    const Mat& whitener() const { return whitener_; }
    const Mat& whitener_inverse() const { return inverse_; }
    NormOrder p() const { return p_; }
    int n() const { return static_cast<int>(whitener_.rows()); }

    Vec whiten(const Vec& v) const { return whitener_ * v; }
    Vec unwhiten(const Vec& u) const { return inverse_ * u; }
    double distance(const Vec& x, const Vec& x_ref) const;

private:
    Mat whitener_;
    Mat inverse_;
    NormOrder p_;
};

/// Factors Sigma0 = G G^T (Cholesky) and returns W = G^-1: lower triangular,
/// positive diagonal, W^T W = Sigma0^-1. Throws on non-PD input with the
/// smallest eigenvalue in the message.
WhitenedMetric build_metric(const Mat& sigma0, NormOrder p);

struct UncertaintySet {
    WhitenedMetric metric;
    double gamma;

    UncertaintySet(WhitenedMetric m, double g) : metric(std::move(m)), gamma(g) {
        if (!(gamma > 0.0)) throw PreconditionError("gamma must be positive");
    }
    bool contains(const Vec& delta) const {
        return vector_norm(metric.whiten(delta), metric.p()) <= gamma;
    }
};

/// Tight per-coordinate extent of the uncertainty set, symmetric about zero.
FeatureBounds coordinate_extent(const UncertaintySet& uset);

/// Linear rows equivalent to ||W delta||_p <= gamma, over n delta variables
/// plus `n_aux` nonnegative auxiliaries (p=1 only). p=2 is rejected: the
/// quadratic set has no linear representation for the MILP path.
struct NormBallRows {
    int n_aux = 0;
    struct Row {
        std::vector<std::pair<int, double>> delta_coeffs;  // index in [0,n)
        std::vector<std::pair<int, double>> aux_coeffs;    // index in [0,n_aux)
        Sense sense = Sense::Le;
        double rhs = 0.0;
    };
    std::vector<Row> rows;
};
NormBallRows norm_ball_constraints(const UncertaintySet& uset);

/// Euclidean projection of u onto the lp ball of the given radius
/// (clip for inf, rescale for 2, sorted-threshold for 1).
Vec project_lp_ball(Vec u, NormOrder p, double radius);

}  // namespace cgnc

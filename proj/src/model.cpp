#include "cgnc/model.hpp"

#include <cmath>
#include <numbers>

#include <json.hpp>

namespace cgnc {

using ordered_json = nlohmann::ordered_json;

CgncModel::CgncModel(DagStructure structure, std::array<double, 2> priors,
                     std::array<std::vector<NodeCpd>, 2> cpds,
                     std::vector<std::string> feature_names)
    : structure_(std::move(structure)),
      priors_(priors),
      cpds_(std::move(cpds)),
      feature_names_(std::move(feature_names)) {
    if (priors_[0] <= 0.0 || priors_[1] <= 0.0 ||
        std::abs(priors_[0] + priors_[1] - 1.0) > 1e-12)
        throw InputError("class priors must be positive and sum to 1");
    for (int c = 0; c < 2; ++c) {
        if (static_cast<int>(cpds_[c].size()) != structure_.n)
            throw InputError("cpd count does not match node count");
        for (int i = 0; i < structure_.n; ++i) {
            if (cpds_[c][i].weights.size() != structure_.parents[i].size())
                throw InputError("cpd weights must be keyed exactly by the parent set");
            if (cpds_[c][i].variance < kVarianceFloor)
                throw InputError("variance below floor");
        }
    }
    if (feature_names_.empty()) {
        for (int i = 0; i < structure_.n; ++i)
            feature_names_.push_back("x" + std::to_string(i));
    }
}

double CgncModel::conditional_mean(int c, int i, const Vec& x) const {
    const auto& cpd = cpds_[c][i];
    double mu = cpd.intercept;
    const auto& par = structure_.parents[i];
    for (size_t j = 0; j < par.size(); ++j) mu += cpd.weights[j] * x[par[j]];
    return mu;
}

double CgncModel::log_density_node(int c, int i, const Vec& x) const {
    const auto& cpd = cpds_[c][i];
    double dev = x[i] - conditional_mean(c, i, x);
    return -0.5 * std::log(2.0 * std::numbers::pi * cpd.variance) -
           dev * dev / (2.0 * cpd.variance);
}

double CgncModel::log_joint(int c, const Vec& x) const {
    double s = std::log(priors_[c]);
    for (int i = 0; i < structure_.n; ++i) s += log_density_node(c, i, x);
    return s;
}

double CgncModel::decision_h(const Vec& x) const {
    return log_joint(1, x) - log_joint(0, x);
}

double log_threshold(double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw PreconditionError("tau must lie in (0,1)");
    return std::log(tau / (1.0 - tau));
}

int CgncModel::classify(const Vec& x, double tau) const {
    return decision_h(x) >= log_threshold(tau) ? 1 : 0;
}

ClassGeometry CgncModel::class_geometry(int c) const {
    const int n = structure_.n;
    ClassGeometry g;
    g.a_rows = Mat::Identity(n, n);
    for (int i = 0; i < n; ++i) {
        const auto& par = structure_.parents[i];
        for (size_t j = 0; j < par.size(); ++j)
            g.a_rows(i, par[j]) = -cpds_[c][i].weights[j];
    }
    // Permute to a topological order, where A becomes unit lower triangular,
    // then Sigma = A^-1 diag(sigma^2) A^-T via a forward substitution.
    std::vector<int> order = structure_.topological_order();
    Mat At(n, n);
    Vec sig(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) At(i, j) = g.a_rows(order[i], order[j]);
        sig[i] = std::sqrt(cpds_[c][order[i]].variance);
    }
    Mat M = At.triangularView<Eigen::Lower>().solve(Mat(sig.asDiagonal()));
    Mat St = M * M.transpose();
    g.covariance.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g.covariance(order[i], order[j]) = St(i, j);
    g.covariance = 0.5 * (g.covariance + g.covariance.transpose()).eval();
    return g;
}

Mat CgncModel::ancestral_sample(int c, int rows, std::mt19937_64& rng) const {
    const int n = structure_.n;
    std::vector<int> order = structure_.topological_order();
    std::normal_distribution<double> gauss(0.0, 1.0);
    Mat out(rows, n);
    Vec x(n);
    for (int r = 0; r < rows; ++r) {
        for (int i : order) {
            double mu = conditional_mean(c, i, x);
            x[i] = mu + std::sqrt(cpds_[c][i].variance) * gauss(rng);
        }
        out.row(r) = x;
    }
    return out;
}

CgncModel fit(const Dataset& ds, const DagStructure& structure, FitReport* report) {
    const int n = structure.n;
    if (ds.n_features() != n) throw InputError("structure size does not match dataset");
    const int rows = ds.n_rows();
    std::array<std::vector<int>, 2> idx;
    for (int r = 0; r < rows; ++r) idx[ds.labels[r]].push_back(r);

    int ridge_count = 0;
    std::array<std::vector<NodeCpd>, 2> cpds;
    for (int c = 0; c < 2; ++c) {
        const auto& rowsc = idx[c];
        const int nc = static_cast<int>(rowsc.size());
        for (int i = 0; i < n; ++i) {
            const int p = static_cast<int>(structure.parents[i].size());
            if (nc < p + 2)
                throw InputError("class " + std::to_string(c) + " has " +
                                 std::to_string(nc) + " rows, need at least " +
                                 std::to_string(p + 2) + " for node " + std::to_string(i));
        }
        cpds[c].resize(n);
        for (int i = 0; i < n; ++i) {
            const auto& par = structure.parents[i];
            const int p = static_cast<int>(par.size());
            NodeCpd cpd;
            Vec y(nc);
            for (int r = 0; r < nc; ++r) y[r] = ds.features(rowsc[r], i);
            if (p == 0) {
                double mean = y.mean();
                double var = (y.array() - mean).square().sum() / (nc - 1);
                cpd.intercept = mean;
                cpd.variance = std::max(var, kVarianceFloor);
            } else {
                Mat X(nc, p + 1);
                for (int r = 0; r < nc; ++r) {
                    for (int j = 0; j < p; ++j) X(r, j) = ds.features(rowsc[r], par[j]);
                    X(r, p) = 1.0;
                }
                Eigen::ColPivHouseholderQR<Mat> qr(X);
                Vec beta;
                if (qr.rank() < p + 1) {
                    // Collinear parents: ridge fallback keeps the fit defined.
                    ++ridge_count;
                    Mat G = X.transpose() * X + 1e-8 * Mat::Identity(p + 1, p + 1);
                    beta = G.ldlt().solve(X.transpose() * y);
                } else {
                    beta = qr.solve(y);
                }
                Vec resid = y - X * beta;
                double var = resid.squaredNorm() / (nc - p - 1);
                cpd.weights.assign(beta.data(), beta.data() + p);
                cpd.intercept = beta[p];
                cpd.variance = std::max(var, kVarianceFloor);
            }
            cpds[c][i] = std::move(cpd);
        }
    }
    if (report) report->ridge_fallbacks = ridge_count;
    double rho1 = static_cast<double>(idx[1].size()) / rows;
    return CgncModel(structure, {1.0 - rho1, rho1}, std::move(cpds), ds.feature_names);
}

std::string CgncModel::to_json() const {
    ordered_json j;
    j["n"] = structure_.n;
    j["feature_names"] = feature_names_;
    j["priors"] = {priors_[0], priors_[1]};
    ordered_json edges = ordered_json::array();
    for (auto [a, b] : structure_.edges) {
        const auto& par = structure_.parents[b];
        size_t slot = std::find(par.begin(), par.end(), a) - par.begin();
        edges.push_back({a, b, cpds_[0][b].weights[slot], cpds_[1][b].weights[slot]});
    }
    j["edges"] = edges;
    ordered_json classes = ordered_json::array();
    for (int c = 0; c < 2; ++c) {
        ordered_json arr = ordered_json::array();
        for (int i = 0; i < structure_.n; ++i) {
            ordered_json node;
            node["parents"] = structure_.parents[i];
            node["weights"] = cpds_[c][i].weights;
            node["intercept"] = cpds_[c][i].intercept;
            node["variance"] = cpds_[c][i].variance;
            arr.push_back(node);
        }
        classes.push_back(arr);
    }
    j["cpds"] = classes;
    return j.dump(2);
}

CgncModel CgncModel::from_json(const std::string& text) {
    ordered_json j = ordered_json::parse(text);
    int n = j.at("n").get<int>();
    DagStructure g;
    g.n = n;
    g.parents.assign(n, {});
    std::array<std::vector<NodeCpd>, 2> cpds;
    for (int c = 0; c < 2; ++c) {
        const auto& arr = j.at("cpds").at(c);
        cpds[c].resize(n);
        for (int i = 0; i < n; ++i) {
            const auto& node = arr.at(i);
            if (c == 0) {
                g.parents[i] = node.at("parents").get<std::vector<int>>();
                for (int par : g.parents[i]) g.edges.emplace_back(par, i);
            }
            cpds[c][i].weights = node.at("weights").get<std::vector<double>>();
            cpds[c][i].intercept = node.at("intercept").get<double>();
            cpds[c][i].variance = node.at("variance").get<double>();
        }
    }
    std::sort(g.edges.begin(), g.edges.end());
    auto priors = j.at("priors").get<std::vector<double>>();
    return CgncModel(std::move(g), {priors.at(0), priors.at(1)}, std::move(cpds),
                     j.at("feature_names").get<std::vector<std::string>>());
}

}  // namespace cgnc

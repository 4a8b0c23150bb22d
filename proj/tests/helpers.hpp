#pragma once

#include <cstdio>
#include <fstream>
#include <random>
#include <string>

#include "cgnc/model.hpp"

namespace testutil {

using namespace cgnc;

inline std::string write_temp(const std::string& name, const std::string& content) {
    std::string path = std::string("/tmp/") + name;
    std::ofstream out(path);
    out << content;
    return path;
}

/// 1-D NB model: class 0 ~ N(0,1), class 1 ~ N(2,1), equal priors.
/// Closed form: H(x) = 2x - 2.
inline CgncModel two_gaussian_1d() {
    DagStructure g = structure_nb(1);
    std::array<std::vector<NodeCpd>, 2> cpds;
    cpds[0] = {NodeCpd{{}, 0.0, 1.0}};
    cpds[1] = {NodeCpd{{}, 2.0, 1.0}};
    return CgncModel(g, {0.5, 0.5}, cpds);
}

/// Model whose two classes share all parameters: H is identically zero.
inline CgncModel symmetric_model(int n = 2) {
    DagStructure g = structure_nb(n);
    std::array<std::vector<NodeCpd>, 2> cpds;
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < n; ++i) cpds[c].push_back(NodeCpd{{}, 0.5, 1.0});
    return CgncModel(g, {0.5, 0.5}, cpds);
}

/// Random small model with a random DAG (edge prob ~0.4), weights in
/// [-0.9, 0.9], intercepts in [-1, 1], variances in [0.2, 2].
inline CgncModel random_model(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    DagStructure g;
    g.n = n;
    g.parents.assign(n, {});
    for (int k = 1; k < n; ++k)
        for (int j = 0; j < k; ++j)
            if (unif(rng) < 0.4) {
                g.parents[k].push_back(j);
                g.edges.emplace_back(j, k);
            }
    std::array<std::vector<NodeCpd>, 2> cpds;
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < n; ++i) {
            NodeCpd cpd;
            for (size_t p = 0; p < g.parents[i].size(); ++p)
                cpd.weights.push_back(1.8 * unif(rng) - 0.9);
            cpd.intercept = 2.0 * unif(rng) - 1.0;
            cpd.variance = 0.2 + 1.8 * unif(rng);
            cpds[c].push_back(cpd);
        }
    double rho = 0.3 + 0.4 * unif(rng);
    return CgncModel(g, {1.0 - rho, rho}, cpds);
}

}  // namespace testutil

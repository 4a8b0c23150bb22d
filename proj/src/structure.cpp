#include "cgnc/structure.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <tuple>

namespace cgnc {

std::vector<int> DagStructure::topological_order() const {
    std::vector<int> indeg(n, 0);
    std::vector<std::vector<int>> children(n);
    for (auto [j, k] : edges) {
        children[j].push_back(k);
        ++indeg[k];
    }
    std::vector<int> order;
    std::vector<int> ready;
    for (int i = 0; i < n; ++i)
        if (indeg[i] == 0) ready.push_back(i);
    while (!ready.empty()) {
        std::sort(ready.begin(), ready.end(), std::greater<>());
        int v = ready.back();
        ready.pop_back();
        order.push_back(v);
        for (int c : children[v])
            if (--indeg[c] == 0) ready.push_back(c);
    }
    if (static_cast<int>(order.size()) != n)
        throw InputError("graph contains a cycle");
    return order;
}

namespace {

DagStructure from_edges(int n, std::vector<std::pair<int, int>> edges) {
    DagStructure g;
    g.n = n;
    g.parents.assign(n, {});
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    for (auto [j, k] : edges) g.parents[k].push_back(j);
    for (auto& p : g.parents) std::sort(p.begin(), p.end());
    g.edges = std::move(edges);
    g.topological_order();  // acyclicity check
    return g;
}

int bin_index(const std::vector<double>& edges, double v) {
    if (edges.size() <= 2) return 0;
    // bins: [e0,e1), [e1,e2), ..., last bin closed on the right
    int nb = static_cast<int>(edges.size()) - 1;
    auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, v);
    int idx = static_cast<int>(it - edges.begin()) - 1;
    return std::clamp(idx, 0, nb - 1);
}

}  // namespace

DagStructure structure_nb(int n) {
    if (n < 1) throw PreconditionError("need n >= 1 nodes");
    DagStructure g;
    g.n = n;
    g.parents.assign(n, {});
    return g;
}

Mat tan_mutual_information(const Dataset& ds, int bins) {
    const int n = ds.n_features();
    const int rows = ds.n_rows();
    Mat agg = Mat::Zero(n, n);
    for (int c = 0; c < 2; ++c) {
        std::vector<int> idx;
        for (int r = 0; r < rows; ++r)
            if (ds.labels[r] == c) idx.push_back(r);
        const double prior = static_cast<double>(idx.size()) / rows;
        const int nc = static_cast<int>(idx.size());

        // Per-class equal-frequency discretization of each feature.
        std::vector<std::vector<int>> disc(n, std::vector<int>(nc));
        std::vector<int> nbins(n, 1);
        for (int j = 0; j < n; ++j) {
            std::vector<double> vals(nc);
            for (int r = 0; r < nc; ++r) vals[r] = ds.features(idx[r], j);
            int k = std::min(bins, nc);
            std::vector<double> edges =
                k >= 2 ? equal_frequency_bins(vals, k) : std::vector<double>{};
            nbins[j] = std::max(1, static_cast<int>(edges.size()) - 1);
            for (int r = 0; r < nc; ++r) disc[j][r] = bin_index(edges, vals[r]);
        }

        for (int j = 0; j < n; ++j) {
            for (int k = j + 1; k < n; ++k) {
                Mat joint = Mat::Zero(nbins[j], nbins[k]);
                for (int r = 0; r < nc; ++r) joint(disc[j][r], disc[k][r]) += 1.0;
                joint /= nc;
                Vec pj = joint.rowwise().sum();
                Vec pk = joint.colwise().sum();
                double mi = 0.0;
                for (int a = 0; a < nbins[j]; ++a)
                    for (int b = 0; b < nbins[k]; ++b)
                        if (joint(a, b) > 0.0)
                            mi += joint(a, b) * std::log(joint(a, b) / (pj[a] * pk[b]));
                agg(j, k) += prior * mi;
                agg(k, j) = agg(j, k);
            }
        }
    }
    return agg;
}

DagStructure structure_tan(const Dataset& ds, int bins) {
    const int n = ds.n_features();
    if (n < 2) throw PreconditionError("TAN needs n >= 2 features");
    if (bins < 2) throw PreconditionError("need bins >= 2");
    Mat mi = tan_mutual_information(ds, bins);

    // Kruskal maximum spanning tree; tie-break by lexicographic (min,max).
    struct Cand {
        double w;
        int a, b;
    };
    std::vector<Cand> cands;
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) cands.push_back({mi(a, b), a, b});
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
        if (x.w != y.w) return x.w > y.w;
        return std::tie(x.a, x.b) < std::tie(y.a, y.b);
    });
    std::vector<int> uf(n);
    std::iota(uf.begin(), uf.end(), 0);
    auto find = [&](int v) {
        while (uf[v] != v) v = uf[v] = uf[uf[v]];
        return v;
    };
    std::vector<std::vector<int>> adj(n);
    int taken = 0;
    for (const auto& c : cands) {
        int ra = find(c.a), rb = find(c.b);
        if (ra == rb) continue;
        uf[ra] = rb;
        adj[c.a].push_back(c.b);
        adj[c.b].push_back(c.a);
        if (++taken == n - 1) break;
    }

    // Orient away from the lowest-index root of each component.
    std::vector<std::pair<int, int>> edges;
    std::vector<bool> seen(n, false);
    for (int root = 0; root < n; ++root) {
        if (seen[root]) continue;
        std::vector<int> stack{root};
        seen[root] = true;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int u : adj[v])
                if (!seen[u]) {
                    seen[u] = true;
                    edges.emplace_back(v, u);
                    stack.push_back(u);
                }
        }
    }
    return from_edges(n, std::move(edges));
}

DagStructure structure_ban(const std::vector<std::tuple<int, int, double>>& weighted_edges,
                           int n, std::optional<int> max_in_degree) {
    struct In {
        int parent;
        double w;
    };
    std::vector<std::vector<In>> incoming(n);
    for (auto [j, k, w] : weighted_edges) {
        if (j < 0 || j >= n || k < 0 || k >= n)
            throw InputError("edge index out of range: " + std::to_string(j) + " -> " +
                             std::to_string(k));
        if (j == k) throw InputError("self-loop on node " + std::to_string(j));
        incoming[k].push_back({j, w});
    }
    std::vector<std::pair<int, int>> edges;
    for (int k = 0; k < n; ++k) {
        auto& in = incoming[k];
        std::stable_sort(in.begin(), in.end(), [](const In& a, const In& b) {
            if (std::abs(a.w) != std::abs(b.w)) return std::abs(a.w) > std::abs(b.w);
            return a.parent < b.parent;
        });
        size_t keep = max_in_degree ? std::min<size_t>(in.size(), *max_in_degree)
                                    : in.size();
        for (size_t i = 0; i < keep; ++i) edges.emplace_back(in[i].parent, k);
    }
    return from_edges(n, std::move(edges));
}

DagStructure structure_ban_from_file(const std::string& path, int n,
                                     std::optional<int> max_in_degree) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);
    std::vector<std::tuple<int, int, double>> wedges;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::stringstream ss(line);
        int j, k;
        double w;
        if (!(ss >> j)) continue;  // blank / comment-only line
        if (!(ss >> k >> w)) {
            std::string rest;
            throw InputError("malformed line " + std::to_string(lineno) + " in " + path);
        }
        std::string extra;
        if (ss >> extra)
            throw InputError("malformed line " + std::to_string(lineno) + " in " + path);
        wedges.emplace_back(j, k, w);
    }
    return structure_ban(wedges, n, max_in_degree);
}

}  // namespace cgnc

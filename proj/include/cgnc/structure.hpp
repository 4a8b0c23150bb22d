#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cgnc/data.hpp"

namespace cgnc {

/// Directed acyclic graph over feature indices. `parents[i]` holds the parent
/// index set of node i; `edges` is the matching (parent -> child) list.
struct DagStructure {
    int n = 0;
    std::vector<std::vector<int>> parents;
    std::vector<std::pair<int, int>> edges;  // (j, k) meaning j -> k

    /// Topological order of the nodes; throws if the graph has a cycle.
    std::vector<int> topological_order() const;
    int n_edges() const { return static_cast<int>(edges.size()); }
};

DagStructure structure_nb(int n);

/// Tree-augmented structure: class-weighted conditional mutual information on
/// per-class equal-frequency discretizations, maximum spanning tree (Kruskal,
/// deterministic tie-break by lexicographic (min,max) index), oriented away
/// from the lowest-index node of each component.
DagStructure structure_tan(const Dataset& ds, int bins);

/// Reads a weighted edge list ("parent child weight" per line, '#' comments).
/// With `max_in_degree`, keeps per node the strongest incoming edges by
/// |weight| (ties broken by smaller parent index). Verifies acyclicity.
DagStructure structure_ban_from_file(const std::string& path, int n,
                                     std::optional<int> max_in_degree = std::nullopt);

/// Same as structure_ban_from_file, over an in-memory edge list.
DagStructure structure_ban(const std::vector<std::tuple<int, int, double>>& weighted_edges,
                           int n, std::optional<int> max_in_degree = std::nullopt);

/// Class-conditional mutual information I(X_j;X_k | Y=c) estimates aggregated
/// by class priors; exposed for tests. Symmetric n x n matrix, zero diagonal.
Mat tan_mutual_information(const Dataset& ds, int bins);

}  // namespace cgnc

#pragma once

#include "srdcc/core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace srdcc::mesh {

enum class ProblemKind { linear_neumann, bilinear_dirichlet };

enum class NodeTag : std::uint8_t { dirichlet, neumann, interior };

// Which nodes are eligible as constraint points. `free_nodes` takes every
// non-Dirichlet node; `interior` drops the Neumann edge as well.
enum class ConstraintRegion { free_nodes, interior };

inline std::string to_string(ProblemKind k) {
    return k == ProblemKind::linear_neumann ? "linear_neumann" : "bilinear_dirichlet";
}

// Uniform grid on the unit square. Node (i, j) sits at (i*h, j*h) and has the
// lexicographic index j*n + i, so x1 runs fastest.
struct Grid {
    int n = 0;
    double h = 0.0;
    ProblemKind kind = ProblemKind::bilinear_dirichlet;
    std::vector<NodeTag> tags;
    std::vector<Index> free_nodes;        // free index -> node
    std::vector<Index> free_index;        // node -> free index, -1 for Dirichlet nodes
    std::vector<Index> constraint_points; // node indices
    std::vector<Index> neumann_nodes;     // Neumann edge nodes ordered by x2

    Index num_nodes() const { return static_cast<Index>(n) * n; }
    Index num_free() const { return static_cast<Index>(free_nodes.size()); }
    Index num_constraints() const { return static_cast<Index>(constraint_points.size()); }
    Index node(int i, int j) const { return static_cast<Index>(j) * n + i; }
    int col(Index node) const { return static_cast<int>(node % n); }
    int row(Index node) const { return static_cast<int>(node / n); }
    double x1(Index node) const { return col(node) * h; }
    double x2(Index node) const { return row(node) * h; }

    // Constraint points as indices into the free-node numbering.
    std::vector<Index> constraint_free_indices() const {
        std::vector<Index> out;
        out.reserve(constraint_points.size());
        for (Index p : constraint_points) out.push_back(free_index[p]);
        return out;
    }

    // Scatter a free-node vector into a nodal field with zeros on Dirichlet nodes.
    Vec extend(const Vec& free_values) const {
        Vec out = Vec::Zero(num_nodes());
        for (Index k = 0; k < num_free(); ++k) out[free_nodes[k]] = free_values[k];
        return out;
    }

    Vec restrict_to_free(const Vec& nodal) const {
        Vec out(num_free());
        for (Index k = 0; k < num_free(); ++k) out[k] = nodal[free_nodes[k]];
        return out;
    }
};

inline Grid build_grid(int n, ProblemKind kind, int constraint_stride,
                       ConstraintRegion region = ConstraintRegion::free_nodes) {
    if (n < 3) throw InvalidGridError("grid needs at least 3 nodes per side, got " + std::to_string(n));
    if (constraint_stride < 1)
        throw InvalidGridError("constraint stride must be positive, got " + std::to_string(constraint_stride));

    Grid g;
    g.n = n;
    g.h = 1.0 / static_cast<double>(n - 1);
    g.kind = kind;
    g.tags.assign(static_cast<std::size_t>(n) * n, NodeTag::interior);
    g.free_index.assign(g.tags.size(), -1);

    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const bool on_boundary = i == 0 || j == 0 || i == n - 1 || j == n - 1;
            if (!on_boundary) continue;
            const bool neumann = kind == ProblemKind::linear_neumann && i == 0 && j > 0 && j < n - 1;
            g.tags[g.node(i, j)] = neumann ? NodeTag::neumann : NodeTag::dirichlet;
        }
    }

    for (Index k = 0; k < g.num_nodes(); ++k) {
        if (g.tags[k] == NodeTag::dirichlet) continue;
        g.free_index[k] = static_cast<Index>(g.free_nodes.size());
        g.free_nodes.push_back(k);
    }
    for (int j = 1; j < n - 1; ++j)
        if (g.tags[g.node(0, j)] == NodeTag::neumann) g.neumann_nodes.push_back(g.node(0, j));

    Index eligible = 0;
    for (Index k : g.free_nodes) {
        if (region == ConstraintRegion::interior && g.tags[k] != NodeTag::interior) continue;
        if (eligible % constraint_stride == 0) g.constraint_points.push_back(k);
        ++eligible;
    }
    return g;
}

}  // namespace srdcc::mesh

#pragma once

#include "srdcc/core.hpp"
#include "srdcc/mesh/factorization.hpp"
#include "srdcc/mesh/grid.hpp"

#include <array>
#include <cmath>
#include <ostream>
#include <vector>

namespace srdcc::mesh {

enum class OperatorKind { laplacian_mixed, stiffness, mass, control_mass, boundary_injection, identity_scaled };

inline const char* to_string(OperatorKind k) {
    switch (k) {
        case OperatorKind::laplacian_mixed: return "laplacian_mixed";
        case OperatorKind::stiffness: return "stiffness";
        case OperatorKind::mass: return "mass";
        case OperatorKind::control_mass: return "control_mass";
        case OperatorKind::boundary_injection: return "boundary_injection";
        case OperatorKind::identity_scaled: return "identity_scaled";
    }
    return "unknown";
}

struct DiscreteOperator {
    OperatorKind kind = OperatorKind::identity_scaled;
    SpMat matrix;

    Index rows() const { return matrix.rows(); }
    Index cols() const { return matrix.cols(); }
    Vec apply(const Vec& x) const { return matrix * x; }

    // One "row col value" line per stored entry, zero-based indices.
    void dump_coo(std::ostream& os) const {
        os << "# " << to_string(kind) << ' ' << rows() << ' ' << cols() << '\n';
        os.precision(17);
        for (Index k = 0; k < matrix.outerSize(); ++k)
            for (SpMat::InnerIterator it(matrix, k); it; ++it)
                os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    }
};

inline Factorization factorize(const DiscreteOperator& op) { return Factorization(op.matrix); }

inline DiscreteOperator identity_scaled(Index dim, double c) {
    SpMat m(dim, dim);
    m.reserve(Eigen::VectorXi::Constant(dim, 1));
    for (Index k = 0; k < dim; ++k) m.insert(k, k) = c;
    m.makeCompressed();
    return {OperatorKind::identity_scaled, std::move(m)};
}

// Restrict a node-by-node matrix to the free nodes (Dirichlet elimination).
inline SpMat restrict_to_free(const Grid& g, const SpMat& full) {
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(full.nonZeros()));
    for (Index k = 0; k < full.outerSize(); ++k)
        for (SpMat::InnerIterator it(full, k); it; ++it) {
            const Index r = g.free_index[it.row()];
            const Index c = g.free_index[it.col()];
            if (r >= 0 && c >= 0) t.emplace_back(r, c, it.value());
        }
    SpMat out(g.num_free(), g.num_free());
    out.setFromTriplets(t.begin(), t.end());
    return out;
}

// Five-point stencil on the full node set. Rows of Dirichlet nodes are empty.
// Neumann rows use the ghost-node closure and are halved, which makes the
// reduced operator symmetric.
inline SpMat five_point_full(const Grid& g) {
    const int n = g.n;
    const double s = 1.0 / (g.h * g.h);
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(5 * g.num_nodes()));
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const Index k = g.node(i, j);
            if (g.tags[k] == NodeTag::interior) {
                t.emplace_back(k, k, 4.0 * s);
                t.emplace_back(k, g.node(i - 1, j), -s);
                t.emplace_back(k, g.node(i + 1, j), -s);
                t.emplace_back(k, g.node(i, j - 1), -s);
                t.emplace_back(k, g.node(i, j + 1), -s);
            } else if (g.tags[k] == NodeTag::neumann) {
                t.emplace_back(k, k, 2.0 * s);
                t.emplace_back(k, g.node(i + 1, j), -s);
                t.emplace_back(k, g.node(i, j - 1), -0.5 * s);
                t.emplace_back(k, g.node(i, j + 1), -0.5 * s);
            }
        }
    }
    SpMat m(g.num_nodes(), g.num_nodes());
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

inline DiscreteOperator assemble_laplacian_mixed(const Grid& g) {
    if (g.kind != ProblemKind::linear_neumann)
        throw GridMismatchError("the mixed Laplacian needs a linear_neumann grid");
    return {OperatorKind::laplacian_mixed, restrict_to_free(g, five_point_full(g))};
}

// Row scale that the halved Neumann rows apply to volume sources: 1/2 on the
// Neumann edge, 1 elsewhere (free-node numbering).
inline Vec neumann_row_scale(const Grid& g) {
    Vec d = Vec::Ones(g.num_free());
    for (Index k = 0; k < g.num_free(); ++k)
        if (g.tags[g.free_nodes[k]] == NodeTag::neumann) d[k] = 0.5;
    return d;
}

// Flux injection from the Neumann edge values (ordered by x2) to free rows.
inline DiscreteOperator boundary_injection_operator(const Grid& g) {
    if (g.kind != ProblemKind::linear_neumann)
        throw GridMismatchError("boundary injection needs a linear_neumann grid");
    const Index nb = static_cast<Index>(g.neumann_nodes.size());
    std::vector<Triplet> t;
    for (Index b = 0; b < nb; ++b) t.emplace_back(g.free_index[g.neumann_nodes[b]], b, 1.0 / g.h);
    SpMat m(g.num_free(), nb);
    m.setFromTriplets(t.begin(), t.end());
    return {OperatorKind::boundary_injection, std::move(m)};
}

inline Vec boundary_injection(const Grid& g, const Vec& boundary_field) {
    const DiscreteOperator b = boundary_injection_operator(g);
    if (boundary_field.size() != b.cols())
        throw GridMismatchError("boundary field has " + std::to_string(boundary_field.size()) +
                                " values, the Neumann edge has " + std::to_string(b.cols()));
    return b.apply(boundary_field);
}

// ---------------------------------------------------------------------------
// Piecewise-linear elements. Every cell is split along the diagonal from
// (i, j) to (i+1, j+1).

using Triangle = std::array<Index, 3>;

inline std::vector<Triangle> triangulate(const Grid& g) {
    std::vector<Triangle> tris;
    tris.reserve(static_cast<std::size_t>(2 * (g.n - 1) * (g.n - 1)));
    for (int j = 0; j + 1 < g.n; ++j)
        for (int i = 0; i + 1 < g.n; ++i) {
            tris.push_back({g.node(i, j), g.node(i + 1, j), g.node(i + 1, j + 1)});
            tris.push_back({g.node(i, j), g.node(i + 1, j + 1), g.node(i, j + 1)});
        }
    return tris;
}

struct ElementGeometry {
    double area;
    std::array<std::array<double, 2>, 3> grad;  // gradients of the barycentric coordinates
};

inline ElementGeometry element_geometry(const Grid& g, const Triangle& t) {
    const double x0 = g.x1(t[0]), y0 = g.x2(t[0]);
    const double x1 = g.x1(t[1]), y1 = g.x2(t[1]);
    const double x2 = g.x1(t[2]), y2 = g.x2(t[2]);
    const double det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
    ElementGeometry e;
    e.area = 0.5 * std::abs(det);
    e.grad[0] = {(y1 - y2) / det, (x2 - x1) / det};
    e.grad[1] = {(y2 - y0) / det, (x0 - x2) / det};
    e.grad[2] = {(y0 - y1) / det, (x1 - x0) / det};
    return e;
}

// Exact integral of phi_a phi_b phi_c over a triangle, divided by its area.
inline double triple_product_weight(int a, int b, int c) {
    if (a == b && b == c) return 1.0 / 10.0;
    if (a == b || b == c || a == c) return 1.0 / 30.0;
    return 1.0 / 60.0;
}

struct FemOperators {
    DiscreteOperator stiffness;
    DiscreteOperator mass;
    SpMat mass_factor;  // L with L * L^T = mass
};

inline SpMat assemble_mass_full(const Grid& g, bool lumped) {
    std::vector<Triplet> t;
    for (const Triangle& tri : triangulate(g)) {
        const ElementGeometry e = element_geometry(g, tri);
        for (int a = 0; a < 3; ++a) {
            if (lumped) {
                t.emplace_back(tri[a], tri[a], e.area / 3.0);
                continue;
            }
            for (int b = 0; b < 3; ++b) t.emplace_back(tri[a], tri[b], e.area * (a == b ? 2.0 : 1.0) / 12.0);
        }
    }
    SpMat m(g.num_nodes(), g.num_nodes());
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

inline SpMat assemble_stiffness_full(const Grid& g) {
    std::vector<Triplet> t;
    for (const Triangle& tri : triangulate(g)) {
        const ElementGeometry e = element_geometry(g, tri);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                t.emplace_back(tri[a], tri[b],
                               e.area * (e.grad[a][0] * e.grad[b][0] + e.grad[a][1] * e.grad[b][1]));
    }
    SpMat m(g.num_nodes(), g.num_nodes());
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

// Lower-triangular-up-to-permutation factor L with L * L^T = m.
inline SpMat cholesky_factor(const SpMat& m) {
    const Factorization fac(m);
    const auto& llt = fac.solver();
    const SpMat lower = llt.matrixL();
    return SpMat(llt.permutationPinv() * lower);
}

inline FemOperators assemble_fem(const Grid& g, bool lumped_mass = false) {
    if (g.kind != ProblemKind::bilinear_dirichlet)
        throw GridMismatchError("finite element assembly needs a bilinear_dirichlet grid");
    FemOperators ops;
    ops.stiffness = {OperatorKind::stiffness, restrict_to_free(g, assemble_stiffness_full(g))};
    ops.stiffness.matrix.prune(0.0);
    ops.mass = {OperatorKind::mass, restrict_to_free(g, assemble_mass_full(g, lumped_mass))};
    ops.mass_factor = cholesky_factor(ops.mass.matrix);
    return ops;
}

// Nodal matrix of (y, v) -> integral of u y v, restricted to free nodes.
inline DiscreteOperator assemble_control_mass(const Grid& g, const Vec& u) {
    if (u.size() != g.num_nodes())
        throw GridMismatchError("control must be defined on all " + std::to_string(g.num_nodes()) + " nodes");
    std::vector<Triplet> t;
    for (const Triangle& tri : triangulate(g)) {
        const ElementGeometry e = element_geometry(g, tri);
        for (int a = 0; a < 3; ++a) {
            const Index ra = g.free_index[tri[a]];
            if (ra < 0) continue;
            for (int b = 0; b < 3; ++b) {
                const Index cb = g.free_index[tri[b]];
                if (cb < 0) continue;
                double v = 0.0;
                for (int c = 0; c < 3; ++c) v += u[tri[c]] * triple_product_weight(a, b, c);
                t.emplace_back(ra, cb, e.area * v);
            }
        }
    }
    SpMat m(g.num_free(), g.num_free());
    m.setFromTriplets(t.begin(), t.end());
    return {OperatorKind::control_mass, std::move(m)};
}

// Derivative of q^T M(u) y with respect to the nodal values of u:
// entry k is the integral of phi_k q y. q and y use the free numbering.
inline Vec control_mass_derivative(const Grid& g, const Vec& q, const Vec& y) {
    Vec out = Vec::Zero(g.num_nodes());
    std::array<double, 3> qv{}, yv{};
    for (const Triangle& tri : triangulate(g)) {
        bool any = false;
        for (int a = 0; a < 3; ++a) {
            const Index r = g.free_index[tri[a]];
            qv[a] = r >= 0 ? q[r] : 0.0;
            yv[a] = r >= 0 ? y[r] : 0.0;
            any = any || r >= 0;
        }
        if (!any) continue;
        const ElementGeometry e = element_geometry(g, tri);
        for (int c = 0; c < 3; ++c) {
            double v = 0.0;
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) v += qv[a] * yv[b] * triple_product_weight(a, b, c);
            out[tri[c]] += e.area * v;
        }
    }
    return out;
}

}  // namespace srdcc::mesh

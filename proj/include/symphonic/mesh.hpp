#pragma once

/// @file mesh.hpp
/// Tensor-product quadrature over a source chart. Periodic coordinates use the
/// uniform (trapezoid) rule, bounded ones Gauss-Legendre. Weights are plain
/// coordinate weights; integrals multiply by sqrt(det g) themselves.

#include <cmath>
#include <string>
#include <vector>

#include "symphonic/geometry.hpp"
#include "symphonic/numeric.hpp"

namespace symphonic {

struct Mesh {
    int dim = 0;
    std::vector<Vector> points;
    Vector weights;
    std::string descriptor;

    std::size_t size() const { return points.size(); }
};

/// The integration interval of coordinate c: the domain interval with slab
/// exclusions that touch either end cut away.
inline Interval integration_interval(const ManifoldModel& M, int c) {
    Interval iv = M.domain()[c];
    if (iv.periodic) return iv;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& e : M.exclusions()) {
            if (e.kind != Exclusion::Kind::slab || e.coord != c) continue;
            if (e.value - e.radius <= iv.lo && e.value + e.radius > iv.lo) {
                iv.lo = e.value + e.radius;
                changed = true;
            }
            if (e.value + e.radius >= iv.hi && e.value - e.radius < iv.hi) {
                iv.hi = e.value - e.radius;
                changed = true;
            }
        }
    }
    return iv;
}

/// n nodes per coordinate. Slab exclusions at the ends of an interval shrink
/// it; nodes inside any remaining exclusion are dropped (fields integrated
/// against such a mesh are expected to vanish there). Throws DomainError when
/// a coordinate has no bounded interval.
inline Mesh tensor_mesh(const ManifoldModel& M, int n) {
    if (n < 1) throw std::invalid_argument("mesh resolution must be positive");
    const int m = M.dim();
    std::vector<Vector> nodes(m), wts(m);
    for (int c = 0; c < m; ++c) {
        const Interval iv = integration_interval(M, c);
        if (!iv.bounded() || !(iv.hi > iv.lo))
            throw DomainError("coordinate '" + M.coords()[c] + "' has no bounded integration interval");
        if (iv.periodic) {
            const double h = iv.length() / n;
            for (int k = 0; k < n; ++k) {
                nodes[c].push_back(iv.lo + k * h);
                wts[c].push_back(h);
            }
        } else {
            Vector x, w;
            gauss_legendre(n, x, w);
            const double half = 0.5 * iv.length(), mid = 0.5 * (iv.lo + iv.hi);
            for (int k = 0; k < n; ++k) {
                nodes[c].push_back(mid + half * x[k]);
                wts[c].push_back(half * w[k]);
            }
        }
    }
    Mesh mesh;
    mesh.dim = m;
    std::vector<int> k(m, 0);
    for (;;) {
        Vector p(m);
        double w = 1.0;
        for (int c = 0; c < m; ++c) {
            p[c] = nodes[c][k[c]];
            w *= wts[c][k[c]];
        }
        if (M.contains(p)) {
            mesh.points.push_back(std::move(p));
            mesh.weights.push_back(w);
        }
        int c = m - 1;
        while (c >= 0 && ++k[c] == n) k[c--] = 0;
        if (c < 0) break;
    }
    if (mesh.points.empty()) throw DomainError("every quadrature node lies in an excluded region");
    mesh.descriptor = "tensor " + std::to_string(n) + "^" + std::to_string(m);
    const std::size_t full = std::size_t(std::pow(double(n), m) + 0.5);
    if (mesh.size() != full) mesh.descriptor += " (" + std::to_string(full - mesh.size()) + " excluded)";
    return mesh;
}

/// Deterministic integral: terms computed in parallel, summed pairwise in
/// point order.
template <class Fn>
double integrate(const Mesh& mesh, Fn&& term, unsigned workers = default_workers()) {
    Vector terms(mesh.size());
    parallel_for(mesh.size(), [&](std::size_t p) { terms[p] = mesh.weights[p] * term(mesh.points[p]); }, workers);
    return pairwise_sum(terms);
}

}  // namespace symphonic

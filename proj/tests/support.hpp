#pragma once

// Shared helpers for the test suites and the acceptance runner: seeded
// random analytic maps and fields, and small comparison utilities.

#include <cmath>
#include <string>
#include <vector>

#include "symphonic/spec_file.hpp"

namespace symphonic::testing {

inline std::string num(double v) { return "(" + format_double(v) + ")"; }

inline double rel_diff(std::span<const double> a, std::span<const double> b) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num = std::max(num, std::abs(a[i] - b[i]));
        den = std::max({den, std::abs(a[i]), std::abs(b[i])});
    }
    return den == 0 ? num : num / den;
}

inline double rel(double a, double b) {
    const double d = std::max(std::abs(a), std::abs(b));
    return d == 0 ? 0.0 : std::abs(a - b) / d;
}

/// Random orthogonal matrix: Gram-Schmidt on uniform entries.
inline Matrix random_rotation(Rng& rng, int m) {
    Matrix q(m, m);
    for (double& v : q.data) v = rng.uniform(-1, 1);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < i; ++j) {
            double d = 0;
            for (int k = 0; k < m; ++k) d += q(i, k) * q(j, k);
            for (int k = 0; k < m; ++k) q(i, k) -= d * q(j, k);
        }
        double n = 0;
        for (int k = 0; k < m; ++k) n += q(i, k) * q(i, k);
        n = std::sqrt(n);
        for (int k = 0; k < m; ++k) q(i, k) /= n;
    }
    return q;
}

/// Curved periodic target metric with random mild coefficients.
inline ManifoldModel random_curved_torus(Rng& rng) {
    const double a = rng.uniform(0.1, 0.25), b = rng.uniform(0.1, 0.25), c = rng.uniform(-0.1, 0.1);
    return ManifoldModel({"u", "v"},
                         {"1 + " + num(a) + "*cos(v)", num(c) + "*sin(u + v)", num(c) + "*sin(u + v)",
                          "1 + " + num(b) + "*sin(u)"},
                         {{0, 2 * std::numbers::pi, true}, {0, 2 * std::numbers::pi, true}});
}

inline ManifoldModel flat_torus(std::vector<std::string> coords) {
    return ManifoldModel::euclidean(std::move(coords),
                                    {{0, 2 * std::numbers::pi, true}, {0, 2 * std::numbers::pi, true}});
}

/// phi = A x + small trigonometric terms, A integer so phi descends to tori.
inline MapSpec random_torus_map(Rng& rng, bool curved_target = true) {
    const int a11 = 1, a12 = int(rng.uniform(0, 2)), a22 = 1;
    auto trig = [&] {
        return num(rng.uniform(-0.2, 0.2)) + "*sin(x + " + num(rng.uniform(0, 6)) + ") + " + num(rng.uniform(-0.2, 0.2)) +
               "*cos(2*y + " + num(rng.uniform(0, 6)) + ") + " + num(rng.uniform(-0.1, 0.1)) + "*sin(x - y)";
    };
    const std::string c0 = std::to_string(a11) + "*x + " + std::to_string(a12) + "*y + " + trig();
    const std::string c1 = std::to_string(a22) + "*y + " + trig();
    return MapSpec(flat_torus({"x", "y"}), curved_target ? random_curved_torus(rng) : flat_torus({"u", "v"}), {c0, c1});
}

/// Polar chart of an annulus 0.5 <= r <= 2 (metric dr^2 + r^2 dth^2) into a
/// curved target.
inline MapSpec random_annulus_map(Rng& rng) {
    ManifoldModel src({"r", "th"}, {"1", "0", "0", "r^2"}, {{0.5, 2.0, false}, {0, 2 * std::numbers::pi, true}});
    ManifoldModel tgt({"u", "v", "w"},
                      {"1 + " + num(rng.uniform(0.05, 0.2)) + "*v^2", "0", "0", "0", "exp(" + num(rng.uniform(-0.2, 0.2)) + "*u)",
                       "0", "0", "0", "1"},
                      {});
    return MapSpec(src, tgt,
                   {"r*cos(th) + " + num(rng.uniform(-0.3, 0.3)) + "*r^2",
                    "r*sin(th) + " + num(rng.uniform(-0.3, 0.3)) + "*sin(2*th)",
                    num(rng.uniform(-0.5, 0.5)) + "*r*cos(th + " + num(rng.uniform(0, 3)) + ")"});
}

/// A broad-spectrum periodic field on the torus.
inline TangentField random_torus_field(Rng& rng, const std::string& name) {
    const std::vector<std::string> coords{"x", "y"};
    auto comp = [&] {
        return num(rng.uniform(0.5, 1.5)) + "*exp(" + num(rng.uniform(0.3, 1)) + "*sin(x + " + num(rng.uniform(0, 6)) +
               "))*cos(y + " + num(rng.uniform(0, 6)) + ") + " + num(rng.uniform(-0.5, 0.5)) + "*sin(x + y)";
    };
    return TangentField(name, {comp(), comp()}, coords);
}

}  // namespace symphonic::testing

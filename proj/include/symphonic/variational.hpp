#pragma once

/// @file variational.hpp
/// Symphonic energy and bi-energy integrals, the first-variation pairing, the
/// symphonic-Jacobi operator and the bi-tension field.
///
/// The Jacobi operator is available in two forms. `printed` is the four-group
/// sum exactly as stated for the second variation. `complete` adds
///   sum_ij h(nabla_{e_i} v, S(e_i,e_j)) dphi e_j + h(nabla^2 v(e_j,e_i), dphi e_j) dphi e_i,
/// which is what linearising tau^s produces term by term; finite differences
/// of the energies agree with the complete form (see tests).

#include <cmath>
#include <string>
#include <vector>

#include "symphonic/maps.hpp"
#include "symphonic/mesh.hpp"

namespace symphonic {

enum class JacobiForm { printed, complete };

inline const char* to_string(JacobiForm f) { return f == JacobiForm::printed ? "printed" : "complete"; }

/// A field and its first two coordinate derivatives at a point:
/// v[a], dv[a*m + k], ddv[(a*m + k)*m + l].
struct FieldJet {
    Vector v, dv, ddv;
};

inline FieldJet field_jet(const std::vector<Jet>& comps) {
    FieldJet out;
    for (const auto& c : comps) {
        if (c.order() < 2) throw std::invalid_argument("field jets need order >= 2");
        const int m = c.nvars();
        out.v.push_back(c.value());
        for (int k = 0; k < m; ++k) {
            MultiIndex a{};
            a[k] = 1;
            out.dv.push_back(c.derivative(a));
            for (int l = 0; l < m; ++l) {
                MultiIndex b = a;
                b[l] += 1;
                out.ddv.push_back(c.derivative(b));
            }
        }
    }
    return out;
}

/// (R^N(X,Y)Z)^l at phi(x) from the target Christoffel values and derivatives.
inline Vector target_curvature(const LocalData<double>& d, std::span<const double> X, std::span<const double> Y,
                               std::span<const double> Z) {
    const int n = d.n;
    auto G = [&](int a, int b, int c) { return d.gammaN[idx3(a, b, c, n)]; };
    auto dG = [&](int e, int a, int b, int c) { return d.dgammaN[idx3(a, b, c, n) * n + e]; };
    Vector out(n, 0.0);
    for (int l = 0; l < n; ++l)
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    const double c = Z[k] * X[i] * Y[j];
                    if (c == 0.0) continue;
                    double r = dG(i, l, j, k) - dG(j, l, i, k);
                    for (int p = 0; p < n; ++p) r += G(l, i, p) * G(p, j, k) - G(l, j, p) * G(p, i, k);
                    out[l] += r * c;
                }
    return out;
}

/// The four printed groups of J^s(v) and the completion terms, in target
/// coordinates at phi(x).
struct JacobiTerms {
    Vector g1, g2, g3, g4, completion;

    Vector total(JacobiForm form) const {
        Vector t(g1.size());
        for (std::size_t a = 0; a < t.size(); ++a) {
            t[a] = g1[a] + g2[a] + g3[a] + g4[a];
            if (form == JacobiForm::complete) t[a] += completion[a];
        }
        return t;
    }
};

/// Covariant derivatives of a field along phi: first[a*m + k] = (nabla_k v)^a,
/// second[(a*m + k)*m + l] = (nabla^2 v)(d_k, d_l)^a = nabla_k nabla_l v - nabla_{nabla_k d_l} v.
struct CovariantField {
    Vector first, second;
};

inline CovariantField covariant_field(const LocalData<double>& d, const FieldJet& u) {
    const int m = d.m, n = d.n;
    CovariantField out;
    out.first.assign(std::size_t(n) * m, 0.0);
    for (int a = 0; a < n; ++a)
        for (int k = 0; k < m; ++k) {
            double s = u.dv[idx2(a, k, m)];
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c) s += d.gammaN[idx3(a, b, c, n)] * d.dphi[idx2(b, k, m)] * u.v[c];
            out.first[idx2(a, k, m)] = s;
        }
    out.second.assign(std::size_t(n) * m * m, 0.0);
    for (int a = 0; a < n; ++a)
        for (int k = 0; k < m; ++k)
            for (int l = 0; l < m; ++l) {
                // d_k of (nabla_l v)^a
                double s = u.ddv[idx3(a, l, k, m)];
                for (int b = 0; b < n; ++b)
                    for (int c = 0; c < n; ++c) {
                        double dgk = 0.0;  // d_k [Gamma^a_bc(phi(x))]
                        for (int e = 0; e < n; ++e) dgk += d.dgammaN[idx3(a, b, c, n) * n + e] * d.dphi[idx2(e, k, m)];
                        const double G = d.gammaN[idx3(a, b, c, n)];
                        s += dgk * d.dphi[idx2(b, l, m)] * u.v[c] + G * d.ddphi[idx3(b, l, k, m)] * u.v[c] +
                             G * d.dphi[idx2(b, l, m)] * u.dv[idx2(c, k, m)];
                        s += G * d.dphi[idx2(b, k, m)] * out.first[idx2(c, l, m)];
                    }
                for (int p = 0; p < m; ++p) s -= d.gammaM[idx3(p, k, l, m)] * out.first[idx2(a, p, m)];
                out.second[idx3(a, k, l, m)] = s;
            }
    return out;
}

inline JacobiTerms jacobi_terms(const LocalData<double>& d, const FieldJet& u) {
    const int m = d.m, n = d.n;
    const auto de = push_frame(d);
    const auto se = frame_pair(d, sff_coords(d));
    const auto cov = covariant_field(d, u);
    const auto d2e = frame_pair(d, cov.second);
    std::vector<Vector> De(m, Vector(n, 0.0));
    for (int i = 0; i < m; ++i)
        for (int a = 0; a < n; ++a)
            for (int k = 0; k < m; ++k) De[i][a] += cov.first[idx2(a, k, m)] * d.frame[idx2(i, k, m)];
    auto h = [&](std::span<const double> x, std::span<const double> y) { return h_inner<double>(d, x, y); };

    JacobiTerms t;
    t.g1.assign(n, 0.0);
    t.g2.assign(n, 0.0);
    t.g3.assign(n, 0.0);
    t.g4.assign(n, 0.0);
    t.completion.assign(n, 0.0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const double c1 = 2.0 * h(De[i], de[j]);
            const double c2 = h(d2e[i][i], de[j]) + h(De[j], se[i][i]);
            const double c3 = h(se[i][j], de[j]) + h(de[i], se[j][j]);
            const double c4 = h(de[i], de[j]);
            const Vector r = target_curvature(d, u.v, de[j], de[i]);
            const double c5 = h(De[i], se[i][j]);
            const double c6 = h(d2e[j][i], de[j]);
            for (int a = 0; a < n; ++a) {
                t.g1[a] += c1 * se[i][j][a];
                t.g2[a] += c2 * de[j][a];
                t.g3[a] += c3 * De[i][a];
                t.g4[a] += c4 * (d2e[j][i][a] + r[a]);
                t.completion[a] += c5 * de[j][a] + c6 * de[i][a];
            }
        }
    return t;
}

inline JacobiTerms jacobi_terms(const MapSpec& f, std::span<const double> x, const TangentField& v,
                                const Matrix* rotation = nullptr) {
    return jacobi_terms(values(local_jets(f, x, 2, rotation)), field_jet(v.jets(x, 2)));
}

/// J^s_phi(v) at x.
inline Vector jacobi_operator(const MapSpec& f, std::span<const double> x, const TangentField& v,
                              JacobiForm form = JacobiForm::printed, const Matrix* rotation = nullptr) {
    return jacobi_terms(f, x, v, rotation).total(form);
}

/// Group terms of J^s_phi(tau^s(phi)) at x; their total is the bi-tension.
inline JacobiTerms bi_tension_terms(const MapSpec& f, std::span<const double> x, const Matrix* rotation = nullptr) {
    const auto lj = local_jets(f, x, 4, rotation);
    const auto tau = symphonic_tension(lj);  // jets of order 2
    return jacobi_terms(values(lj), field_jet(tau));
}

inline Vector bi_tension(const MapSpec& f, std::span<const double> x, JacobiForm form = JacobiForm::printed,
                         const Matrix* rotation = nullptr) {
    return bi_tension_terms(f, x, rotation).total(form);
}

// ---------------------------------------------------------------------------
// Integrals.

inline double symphonic_energy(const MapSpec& f, const Mesh& mesh) {
    return integrate(mesh, [&](const Vector& x) {
        const auto d = values(local_jets(f, x, 1));
        return d.sqrt_det * energy_density(d);
    });
}

/// Integral of h(tau^s, tau^s).
inline double bi_energy(const MapSpec& f, const Mesh& mesh) {
    return integrate(mesh, [&](const Vector& x) {
        const auto d = values(local_jets(f, x, 2));
        const auto t = symphonic_tension(d);
        return d.sqrt_det * h_inner<double>(d, t, t);
    });
}

/// -4 * integral of h(tau^s, v).
inline double first_variation_pairing(const MapSpec& f, const TangentField& v, const Mesh& mesh) {
    return -4.0 * integrate(mesh, [&](const Vector& x) {
               const auto d = values(local_jets(f, x, 2));
               const auto t = symphonic_tension(d);
               const auto vv = v.value(x);
               return d.sqrt_det * h_inner<double>(d, t, vv);
           });
}

/// Integral of h(J^s(v), w).
inline double index_form(const MapSpec& f, const TangentField& v, const TangentField& w, const Mesh& mesh,
                         JacobiForm form = JacobiForm::printed) {
    return integrate(mesh, [&](const Vector& x) {
        const auto d = values(local_jets(f, x, 2));
        const auto j = jacobi_terms(d, field_jet(v.jets(x, 2))).total(form);
        const auto ww = w.value(x);
        return d.sqrt_det * h_inner<double>(d, j, ww);
    });
}

/// -4 * integral of h(J^s(v), w).
inline double second_variation_pairing(const MapSpec& f, const TangentField& v, const TangentField& w,
                                       const Mesh& mesh, JacobiForm form = JacobiForm::printed) {
    return -4.0 * index_form(f, v, w, mesh, form);
}

/// Integral of h(v, tau^s_2).
inline double bi_tension_integral(const MapSpec& f, const TangentField& v, const Mesh& mesh,
                                  JacobiForm form = JacobiForm::printed) {
    return integrate(mesh, [&](const Vector& x) {
        const auto lj = local_jets(f, x, 4);
        const auto d = values(lj);
        const auto t2 = jacobi_terms(d, field_jet(symphonic_tension(lj))).total(form);
        const auto vv = v.value(x);
        return d.sqrt_det * h_inner<double>(d, vv, t2);
    });
}

/// -1 * integral of h(v, tau^s_2): the bi-energy first-variation pairing as stated.
inline double bi_variation_pairing(const MapSpec& f, const TangentField& v, const Mesh& mesh,
                                   JacobiForm form = JacobiForm::printed) {
    return -bi_tension_integral(f, v, mesh, form);
}

/// Analytic value against an oracle value.
struct VariationReport {
    double analytic = 0.0;
    double oracle = 0.0;
    double abs_error = 0.0;
    double rel_error = 0.0;
    std::string mesh;
    double step = 0.0;

    static VariationReport make(double analytic, double oracle, std::string mesh, double step) {
        VariationReport r{analytic, oracle, std::abs(analytic - oracle), 0.0, std::move(mesh), step};
        r.rel_error = r.abs_error / std::max(std::abs(analytic), std::abs(oracle));
        if (!std::isfinite(r.rel_error)) r.rel_error = r.abs_error == 0.0 ? 0.0 : r.abs_error;
        return r;
    }
};

}  // namespace symphonic

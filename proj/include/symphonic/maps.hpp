#pragma once

/// @file maps.hpp
/// First- and second-order data of a smooth map between charts: differential,
/// pullback metric, second fundamental form, tension, symphonic stress and
/// symphonic tension.
///
/// Frame traces use the Gram-Schmidt frame of the source metric, optionally
/// turned by a constant rotation. Kernels are written once over a scalar type
/// T (double or Jet) so the same formulas also yield Taylor jets of tau^s.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "symphonic/error.hpp"
#include "symphonic/expr.hpp"
#include "symphonic/geometry.hpp"
#include "symphonic/jet.hpp"
#include "symphonic/numeric.hpp"

namespace symphonic {

/// Polynomial window (1 - |x - c|^2 / R^2)^5, clamped at zero. It is C^4 and
/// vanishes outside the coordinate ball.
struct Bump {
    Vector center;
    double radius = 1.0;

    double operator()(std::span<const double> x) const {
        double q = 1.0;
        for (std::size_t i = 0; i < center.size(); ++i) q -= (x[i] - center[i]) * (x[i] - center[i]) / (radius * radius);
        return q > 0.0 ? std::pow(q, 5) : 0.0;
    }

    Jet jet(std::span<const double> x, int order) const {
        auto vars = Jet::variables(x, order);
        Jet q = Jet::constant(vars[0].layout(), 1.0);
        for (std::size_t i = 0; i < center.size(); ++i) {
            Jet d = vars[i] - center[i];
            q -= d * d * (1.0 / (radius * radius));
        }
        if (q.value() <= 0.0) return Jet(vars[0].layout());
        return pow(q, 5.0);
    }
};

/// A section of the pullback bundle: target-coordinate components written in
/// source coordinates, optionally windowed by a bump.
struct TangentField {
    std::string name;
    std::vector<Expr> components;
    std::optional<Bump> bump;

    TangentField() = default;
    TangentField(std::string nm, const std::vector<std::string>& sources, std::span<const std::string> coords,
                 std::optional<Bump> b = std::nullopt)
        : name(std::move(nm)), bump(std::move(b)) {
        for (const auto& s : sources) components.push_back(Expr::parse(s, coords));
    }

    std::vector<Jet> jets(std::span<const double> x, int order) const {
        auto vars = Jet::variables(x, order);
        std::vector<Jet> out;
        out.reserve(components.size());
        for (const auto& c : components) out.push_back(c.evaluate_jet(vars));
        if (bump) {
            const Jet b = bump->jet(x, order);
            for (auto& o : out) o = o * b;
        }
        return out;
    }

    Vector value(std::span<const double> x) const {
        Vector out;
        for (const auto& c : components) out.push_back(c(x));
        if (bump) {
            const double b = (*bump)(x);
            for (auto& o : out) o *= b;
        }
        return out;
    }
};

/// A smooth map from `source` into `target`, plus optional additive
/// perturbations sum_k coeff_k * field_k (used for deformations).
class MapSpec {
public:
    struct Perturbation {
        double coeff = 0.0;
        TangentField field;
    };

    ManifoldModel source;
    ManifoldModel target;
    std::vector<Expr> components;
    std::vector<Perturbation> perturbations;

    MapSpec() = default;
    MapSpec(ManifoldModel src, ManifoldModel tgt, const std::vector<std::string>& comps)
        : source(std::move(src)), target(std::move(tgt)) {
        if (int(comps.size()) != target.dim()) throw std::invalid_argument("map needs one component per target coordinate");
        for (const auto& c : comps) components.push_back(Expr::parse(c, source.coords()));
    }

    int m() const { return source.dim(); }
    int n() const { return target.dim(); }

    /// The map x -> phi(x) + sum_k c_k field_k(x).
    MapSpec perturbed(std::vector<Perturbation> extra) const {
        MapSpec out = *this;
        for (auto& p : extra) out.perturbations.push_back(std::move(p));
        return out;
    }

    std::vector<Jet> jets(std::span<const double> x, int order) const {
        auto vars = Jet::variables(x, order);
        std::vector<Jet> out;
        out.reserve(components.size());
        for (const auto& c : components) out.push_back(c.evaluate_jet(vars));
        for (const auto& p : perturbations) {
            if (p.coeff == 0.0) continue;
            const auto f = p.field.jets(x, order);
            for (std::size_t a = 0; a < out.size(); ++a) out[a].add_scaled(f[a], p.coeff);
        }
        return out;
    }

    Vector value(std::span<const double> x) const {
        Vector out;
        for (const auto& c : components) out.push_back(c(x));
        for (const auto& p : perturbations) {
            if (p.coeff == 0.0) continue;
            const auto f = p.field.value(x);
            for (std::size_t a = 0; a < out.size(); ++a) out[a] += p.coeff * f[a];
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Local data at one source point.

/// Everything the pointwise formulas consume at x. Index layouts:
///   dphi[a*m + i], ddphi[(a*m + i)*m + j], gammaM[(k*m + i)*m + j],
///   frame[i*m + k], h[a*n + b], gammaN[(a*n + b)*n + c],
///   dgammaN[((a*n + b)*n + c)*n + d] = d/dy_d Gamma^a_bc at phi(x).
template <class T>
struct LocalData {
    int m = 0, n = 0;
    std::vector<T> phi, dphi, ddphi, gammaM, frame, h, gammaN;
    Vector dgammaN;
    Matrix g;              ///< source metric value
    double sqrt_det = 1.0; ///< source volume density
};

/// Builds local data as x-jets. `levels` is the highest derivative of phi
/// used (1: first-order quantities, 2: tau^s at the point, 4: tau^s jets of
/// order 2). `rotation` turns the Gram-Schmidt frame.
inline LocalData<Jet> local_jets(const MapSpec& f, std::span<const double> x, int levels,
                                 const Matrix* rotation = nullptr) {
    if (levels < 1 || levels > 4) throw std::invalid_argument("levels must be in 1..4");
    const int m = f.m(), n = f.n();
    const auto md = metric_at(f.source, x);
    LocalData<Jet> d;
    d.m = m;
    d.n = n;
    d.g = md.g;
    d.sqrt_det = md.sqrt_det;
    d.phi = f.jets(x, levels);
    Vector y0(n);
    for (int a = 0; a < n; ++a) y0[a] = d.phi[a].value();
    f.target.require_contains(y0, "image point");

    for (int a = 0; a < n; ++a)
        for (int i = 0; i < m; ++i) d.dphi.push_back(d.phi[a].partial(i));
    if (levels >= 2)
        for (int a = 0; a < n; ++a)
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) d.ddphi.push_back(d.dphi[idx2(a, i, m)].partial(j));

    const int frame_order = std::max(0, levels - 2);
    if (levels >= 2) {
        const auto gj = f.source.metric_jets(x, levels - 1);
        d.gammaM = christoffel_from_jets(gj, m);
        std::vector<Jet> gt;
        for (const auto& j : gj) gt.push_back(j.truncated(frame_order));
        d.frame = gram_schmidt(gt, m);
    } else {
        const auto gj = f.source.metric_jets(x, 0);
        d.frame = gram_schmidt(gj, m);
    }
    if (rotation) d.frame = rotate_frame(d.frame, *rotation, m);

    JetComposer along(d.phi);
    if (levels >= 2) {
        const auto hy = f.target.metric_jets(y0, std::max(levels - 1, 2));
        for (const auto& j : hy) d.h.push_back(along(j.truncated(levels - 1)));
        const auto gy = christoffel_from_jets(hy, n);
        for (const auto& j : gy) {
            d.gammaN.push_back(along(j.truncated(levels - 2)));
            for (int dd = 0; dd < n; ++dd) {
                MultiIndex a{};
                a[dd] = 1;
                d.dgammaN.push_back(j.coefficient(a));
            }
        }
    } else {
        const auto hy = f.target.metric_jets(y0, 0);
        for (const auto& j : hy) d.h.push_back(along(j));
    }
    return d;
}

inline LocalData<double> values(const LocalData<Jet>& j) {
    LocalData<double> d;
    d.m = j.m;
    d.n = j.n;
    auto v = [](const std::vector<Jet>& src) {
        Vector out;
        out.reserve(src.size());
        for (const auto& x : src) out.push_back(x.value());
        return out;
    };
    d.phi = v(j.phi);
    d.dphi = v(j.dphi);
    d.ddphi = v(j.ddphi);
    d.gammaM = v(j.gammaM);
    d.frame = v(j.frame);
    d.h = v(j.h);
    d.gammaN = v(j.gammaN);
    d.dgammaN = j.dgammaN;
    d.g = j.g;
    d.sqrt_det = j.sqrt_det;
    return d;
}

// ---------------------------------------------------------------------------
// Pointwise kernels.

template <class T>
T h_inner(const LocalData<T>& d, std::span<const T> u, std::span<const T> v) {
    T s = zero_like(d.h[0]);
    for (int a = 0; a < d.n; ++a)
        for (int b = 0; b < d.n; ++b) s = s + d.h[idx2(a, b, d.n)] * u[a] * v[b];
    return s;
}

/// dphi(v) for a coordinate vector v (any scalar type).
template <class T, class V>
std::vector<T> push(const LocalData<T>& d, std::span<const V> v) {
    std::vector<T> out(d.n, zero_like(d.dphi[0]));
    for (int a = 0; a < d.n; ++a)
        for (int i = 0; i < d.m; ++i) out[a] = out[a] + d.dphi[idx2(a, i, d.m)] * v[i];
    return out;
}

/// dphi(e_i) for each frame vector, as de[i][a].
template <class T>
std::vector<std::vector<T>> push_frame(const LocalData<T>& d) {
    std::vector<std::vector<T>> de;
    for (int i = 0; i < d.m; ++i)
        de.push_back(push<T, T>(d, std::span<const T>(d.frame.data() + std::size_t(i) * d.m, d.m)));
    return de;
}

/// Coordinate components of the second fundamental form, S[(a*m + k)*m + l].
template <class T>
std::vector<T> sff_coords(const LocalData<T>& d) {
    const int m = d.m, n = d.n;
    std::vector<T> s;
    s.reserve(std::size_t(n) * m * m);
    for (int a = 0; a < n; ++a)
        for (int k = 0; k < m; ++k)
            for (int l = 0; l < m; ++l) {
                T v = d.ddphi[idx3(a, k, l, m)];
                for (int p = 0; p < m; ++p) v = v - d.gammaM[idx3(p, k, l, m)] * d.dphi[idx2(a, p, m)];
                for (int b = 0; b < n; ++b)
                    for (int c = 0; c < n; ++c)
                        v = v + d.gammaN[idx3(a, b, c, n)] * d.dphi[idx2(b, k, m)] * d.dphi[idx2(c, l, m)];
                s.push_back(v);
            }
    return s;
}

/// Contracts a vector-valued coordinate 2-tensor t[(a*m + k)*m + l] with the
/// frame: out[i][j][a] = t(e_i, e_j)^a.
template <class T>
std::vector<std::vector<std::vector<T>>> frame_pair(const LocalData<T>& d, const std::vector<T>& t) {
    const int m = d.m, n = d.n;
    const T zero = zero_like(t[0]);
    std::vector<std::vector<std::vector<T>>> out(m, std::vector<std::vector<T>>(m, std::vector<T>(n, zero)));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int a = 0; a < n; ++a) {
                T v = zero;
                for (int k = 0; k < m; ++k)
                    for (int l = 0; l < m; ++l)
                        v = v + t[idx3(a, k, l, m)] * d.frame[idx2(i, k, m)] * d.frame[idx2(j, l, m)];
                out[i][j][a] = v;
            }
    return out;
}

template <class T>
T energy_density(const LocalData<T>& d) {
    const auto de = push_frame(d);
    T s = zero_like(d.h[0]);
    for (int i = 0; i < d.m; ++i)
        for (int j = 0; j < d.m; ++j) {
            const T p = h_inner<T>(d, de[i], de[j]);
            s = s + p * p;
        }
    return s;
}

template <class T>
std::vector<T> tension(const LocalData<T>& d) {
    const auto se = frame_pair(d, sff_coords(d));
    std::vector<T> out(d.n, zero_like(se[0][0][0]));
    for (int i = 0; i < d.m; ++i)
        for (int a = 0; a < d.n; ++a) out[a] = out[a] + se[i][i][a];
    return out;
}

/// Eq. (1): sum_ij h(S(e_i,e_i), dphi e_j) dphi e_j + h(dphi e_i, S(e_i,e_j)) dphi e_j
///          + h(dphi e_i, dphi e_j) S(e_i,e_j).
template <class T>
std::vector<T> symphonic_tension(const LocalData<T>& d) {
    const int m = d.m, n = d.n;
    const auto de = push_frame(d);
    const auto se = frame_pair(d, sff_coords(d));
    std::vector<T> out(n, zero_like(se[0][0][0]));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const T c1 = h_inner<T>(d, se[i][i], de[j]) + h_inner<T>(d, de[i], se[i][j]);
            const T c2 = h_inner<T>(d, de[i], de[j]);
            for (int a = 0; a < n; ++a) out[a] = out[a] + c1 * de[j][a] + c2 * se[i][j][a];
        }
    return out;
}

// ---------------------------------------------------------------------------
// Public point operations.

/// (dphi)^a_i = d phi^a / d x^i as an n x m matrix.
inline Matrix differential(const MapSpec& f, std::span<const double> x) {
    const auto d = values(local_jets(f, x, 1));
    Matrix out(f.n(), f.m());
    out.data = d.dphi;
    return out;
}

inline Matrix pullback_metric(const MapSpec& f, std::span<const double> x) {
    const auto d = values(local_jets(f, x, 1));
    const int m = d.m, n = d.n;
    Matrix out(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            double s = 0.0;
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) s += d.h[idx2(a, b, n)] * d.dphi[idx2(a, i, m)] * d.dphi[idx2(b, j, m)];
            out(i, j) = s;
        }
    return out;
}

inline double symphonic_energy_density(const MapSpec& f, std::span<const double> x, const Matrix* rotation = nullptr) {
    return energy_density(values(local_jets(f, x, 1, rotation)));
}

inline Vector second_fundamental_form(const MapSpec& f, std::span<const double> x, std::span<const double> X,
                                      std::span<const double> Y) {
    const auto d = values(local_jets(f, x, 2));
    const auto s = sff_coords(d);
    Vector out(d.n, 0.0);
    for (int a = 0; a < d.n; ++a)
        for (int k = 0; k < d.m; ++k)
            for (int l = 0; l < d.m; ++l) out[a] += s[idx3(a, k, l, d.m)] * X[k] * Y[l];
    return out;
}

inline Vector tension_field(const MapSpec& f, std::span<const double> x, const Matrix* rotation = nullptr) {
    return tension(values(local_jets(f, x, 2, rotation)));
}

/// sigma(X) = sum_j h(dphi X, dphi e_j) dphi e_j.
inline Vector symphonic_stress(const MapSpec& f, std::span<const double> x, std::span<const double> X) {
    const auto d = values(local_jets(f, x, 1));
    const auto de = push_frame(d);
    const auto px = push<double, double>(d, X);
    Vector out(d.n, 0.0);
    for (int j = 0; j < d.m; ++j) {
        const double c = h_inner<double>(d, px, de[j]);
        for (int a = 0; a < d.n; ++a) out[a] += c * de[j][a];
    }
    return out;
}

inline Vector symphonic_tension(const MapSpec& f, std::span<const double> x, const Matrix* rotation = nullptr) {
    return symphonic_tension(values(local_jets(f, x, 2, rotation)));
}

/// Target norm sqrt(h(v, v)) at phi(x).
inline double target_norm(const MapSpec& f, std::span<const double> x, std::span<const double> v) {
    const auto y = f.value(x);
    const auto h = metric_at(f.target, y);
    const Vector hv = h.g * v;
    return std::sqrt(std::max(0.0, dot(hv, v)));
}

/// tau^s in coordinate divergence form, as x-jets of order `order` (0..2):
///   sqrt(g) h_ab tau^b = d_i(sqrt(g) Q^ij h_ab d_j phi^b) - 1/2 sqrt(g) Q^ij (d_a h_bc) d_i phi^b d_j phi^c,
/// Q^ij = g^ik g^jl (phi*h)_kl. Uses neither frames nor Christoffel symbols,
/// so it cross-checks the covariant three-term sum.
inline std::vector<Jet> symphonic_tension_divergence(const MapSpec& f, std::span<const double> x, int order = 0) {
    if (order < 0 || order > 2) throw std::invalid_argument("order must be in 0..2");
    const int m = f.m(), n = f.n();
    const int top = order + 2;
    f.source.require_contains(x);
    const auto phi = f.jets(x, top);
    Vector y0(n);
    for (int a = 0; a < n; ++a) y0[a] = phi[a].value();
    f.target.require_contains(y0, "image point");
    std::vector<Jet> dphi;  // order top-1
    for (int a = 0; a < n; ++a)
        for (int i = 0; i < m; ++i) dphi.push_back(phi[a].partial(i));
    const auto g = f.source.metric_jets(x, top - 1);
    const auto ginv = invert(g, m);
    Jet det = g[0];
    if (m > 1) {
        // determinant by elimination over jets
        std::vector<Jet> a = g;
        det = constant_like(g[0], 1.0);
        for (int c = 0; c < m; ++c) {
            det = det * a[idx2(c, c, m)];
            for (int r = c + 1; r < m; ++r) {
                const Jet fct = a[idx2(r, c, m)] / a[idx2(c, c, m)];
                for (int k = c; k < m; ++k) a[idx2(r, k, m)] -= fct * a[idx2(c, k, m)];
            }
        }
    }
    const Jet sg = sqrt(det);
    const auto hy = f.target.metric_jets(y0, top);
    JetComposer along(phi);
    std::vector<Jet> h, dh;  // h_ab (order top-1), d_c h_ab at [(c*n + a)*n + b] (order top-2)
    for (const auto& j : hy) h.push_back(along(j.truncated(top - 1)));
    for (int c = 0; c < n; ++c)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) dh.push_back(along(hy[idx2(a, b, n)].partial(c).truncated(top - 2)));
    const Jet zero = zero_like(dphi[0]);
    std::vector<Jet> P(std::size_t(m) * m, zero), Q(std::size_t(m) * m, zero);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    P[idx2(i, j, m)] += h[idx2(a, b, n)] * dphi[idx2(a, i, m)] * dphi[idx2(b, j, m)];
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k)
                for (int l = 0; l < m; ++l) Q[idx2(i, j, m)] += ginv[idx2(i, k, m)] * ginv[idx2(j, l, m)] * P[idx2(k, l, m)];
    std::vector<Jet> lowered(n, zero_like(dh[0]));
    for (int a = 0; a < n; ++a) {
        for (int i = 0; i < m; ++i) {
            Jet flux = zero;
            for (int j = 0; j < m; ++j)
                for (int b = 0; b < n; ++b) flux += Q[idx2(i, j, m)] * h[idx2(a, b, n)] * dphi[idx2(b, j, m)];
            lowered[a] += (sg * flux).partial(i) / sg;
        }
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                for (int b = 0; b < n; ++b)
                    for (int c = 0; c < n; ++c)
                        lowered[a] -= 0.5 * Q[idx2(i, j, m)] * dh[idx3(a, b, c, n)] * dphi[idx2(b, i, m)] * dphi[idx2(c, j, m)];
    }
    std::vector<Jet> hl;
    for (const auto& j : h) hl.push_back(j.truncated(order));
    const auto hinv = invert(hl, n);
    std::vector<Jet> tau(n, zero_like(hinv[0]));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) tau[a] += hinv[idx2(a, b, n)] * lowered[b];
    return tau;
}

/// Delta f |grad f|^2 + 2 Hess f (grad f, grad f).
inline double scalar_symphonic_residual(const ManifoldModel& M, const Expr& f, std::span<const double> x) {
    const auto c = scalar_calculus(M, f, x);
    return c.laplacian * c.grad_norm2 + 2.0 * c.hess_form(c.grad, c.grad);
}

}  // namespace symphonic

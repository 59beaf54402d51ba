#pragma once

/// @file geometry.hpp
/// Single-chart Riemannian geometry: metric data, Levi-Civita connection,
/// curvature, orthonormal frames and scalar calculus.
///
/// Index conventions used throughout the library:
///   metric g_ij               -> g[i*m + j]
///   Christoffel Gamma^k_ij    -> gamma[(k*m + i)*m + j]
///   frame vector e_i, comp. k -> frame[i*m + k]
/// Curvature: R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z,
/// with R^l_kij = d_i Gamma^l_jk - d_j Gamma^l_ik + Gamma^l_ip Gamma^p_jk
/// - Gamma^l_jp Gamma^p_ik and (R(X,Y)Z)^l = R^l_kij Z^k X^i Y^j.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "symphonic/error.hpp"
#include "symphonic/expr.hpp"
#include "symphonic/jet.hpp"
#include "symphonic/numeric.hpp"

namespace symphonic {

inline std::size_t idx2(int i, int j, int n) { return std::size_t(i) * n + j; }
inline std::size_t idx3(int a, int b, int c, int n) { return (std::size_t(a) * n + b) * n + c; }

struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool periodic = false;

    double length() const { return hi - lo; }
    bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
};

/// Region removed from a chart: a coordinate ball, or a slab |x_coord - value| < radius
/// (the chart image of a singular half-line or pole).
struct Exclusion {
    enum class Kind { ball, slab };
    Kind kind = Kind::ball;
    Vector center;  // ball
    int coord = 0;  // slab
    double value = 0.0;
    double radius = 0.1;

    bool contains(std::span<const double> x) const {
        if (kind == Kind::slab) return std::abs(x[coord] - value) < radius;
        double r2 = 0.0;
        for (std::size_t i = 0; i < center.size(); ++i) r2 += (x[i] - center[i]) * (x[i] - center[i]);
        return r2 < radius * radius;
    }
};

/// A Riemannian manifold described by one chart.
class ManifoldModel {
public:
    ManifoldModel() = default;

    /// `metric` holds dim*dim expression sources, row-major.
    ManifoldModel(std::vector<std::string> coords, const std::vector<std::string>& metric,
                  std::vector<Interval> domain, std::vector<Exclusion> exclusions = {})
        : coords_(std::move(coords)), domain_(std::move(domain)), exclusions_(std::move(exclusions)) {
        const std::size_t m = coords_.size();
        if (m == 0 || m > std::size_t(kMaxJetVars)) throw std::invalid_argument("chart dimension out of range");
        if (metric.size() != m * m) throw std::invalid_argument("metric needs dim*dim entries");
        if (domain_.empty()) domain_.assign(m, Interval{});
        if (domain_.size() != m) throw std::invalid_argument("domain needs one interval per coordinate");
        metric_.reserve(m * m);
        for (const auto& src : metric) metric_.push_back(Expr::parse(src, coords_));
        source_ = metric;
    }

    /// Flat metric delta_ij on the given domain.
    static ManifoldModel euclidean(std::vector<std::string> coords, std::vector<Interval> domain = {}) {
        const std::size_t m = coords.size();
        std::vector<std::string> g(m * m, "0");
        for (std::size_t i = 0; i < m; ++i) g[i * m + i] = "1";
        return ManifoldModel(std::move(coords), g, std::move(domain));
    }

    int dim() const { return int(coords_.size()); }
    const std::vector<std::string>& coords() const { return coords_; }
    const std::vector<Interval>& domain() const { return domain_; }
    const std::vector<Exclusion>& exclusions() const { return exclusions_; }
    const Expr& metric(int i, int j) const { return metric_[idx2(i, j, dim())]; }
    const std::vector<std::string>& metric_sources() const { return source_; }

    bool fully_periodic() const {
        return std::all_of(domain_.begin(), domain_.end(), [](const Interval& d) { return d.periodic; });
    }

    bool metric_is_constant() const {
        return std::all_of(metric_.begin(), metric_.end(), [](const Expr& e) { return e.is_constant(); });
    }

    /// Inside the chart: within every non-periodic interval and outside every exclusion.
    bool contains(std::span<const double> x) const {
        for (int i = 0; i < dim(); ++i) {
            if (!std::isfinite(x[i])) return false;
            if (!domain_[i].periodic && (x[i] < domain_[i].lo || x[i] > domain_[i].hi)) return false;
        }
        for (const auto& e : exclusions_)
            if (e.contains(x)) return false;
        return true;
    }

    void require_contains(std::span<const double> x, const char* what = "point") const {
        if (!contains(x)) {
            std::string p = "(";
            for (int i = 0; i < dim(); ++i) p += (i ? ", " : "") + format_double(x[i]);
            throw DomainError(std::string(what) + " " + p + ") is outside the chart domain");
        }
    }

    /// Uniform sample inside the chart; unbounded coordinates draw from [-1, 1].
    Vector sample(Rng& rng) const {
        for (int attempt = 0; attempt < 10000; ++attempt) {
            Vector x(dim());
            for (int i = 0; i < dim(); ++i) {
                const auto& d = domain_[i];
                x[i] = d.bounded() ? rng.uniform(d.lo, d.hi) : rng.uniform(-1.0, 1.0);
            }
            if (contains(x)) return x;
        }
        throw DomainError("could not sample a point inside the chart");
    }

    /// Metric component jets g_ij at x, row-major.
    std::vector<Jet> metric_jets(std::span<const double> x, int order) const {
        auto vars = Jet::variables(x, order);
        std::vector<Jet> out;
        out.reserve(metric_.size());
        for (const auto& e : metric_) out.push_back(e.evaluate_jet(vars));
        return out;
    }

    /// Checks that the metric table is symmetric, by text or numerically at
    /// 100 seeded points. Throws std::invalid_argument naming the pair.
    void validate_symmetry(std::uint64_t seed = 7) const {
        const int m = dim();
        Rng rng(seed);
        std::vector<Vector> pts;
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j) {
                if (source_[idx2(i, j, m)] == source_[idx2(j, i, m)]) continue;
                if (pts.empty())
                    for (int k = 0; k < 100; ++k) pts.push_back(sample(rng));
                for (const auto& p : pts) {
                    const double a = metric(i, j)(p), b = metric(j, i)(p);
                    if (std::abs(a - b) > 1e-12 * (1.0 + std::abs(a)))
                        throw std::invalid_argument("metric entries (" + std::to_string(i) + "," + std::to_string(j) +
                                                    ") and (" + std::to_string(j) + "," + std::to_string(i) +
                                                    ") differ");
                }
            }
    }

private:
    std::vector<std::string> coords_;
    std::vector<Expr> metric_;
    std::vector<std::string> source_;
    std::vector<Interval> domain_;
    std::vector<Exclusion> exclusions_;
};

// ---------------------------------------------------------------------------
// Generic dense kernels for double and Jet entries.

/// Gauss-Jordan inverse of an n*n row-major matrix; pivots by value.
template <class T>
std::vector<T> invert(const std::vector<T>& a, int n) {
    std::vector<T> m = a;
    std::vector<T> inv;
    inv.reserve(a.size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) inv.push_back(constant_like(a[0], i == j ? 1.0 : 0.0));
    for (int c = 0; c < n; ++c) {
        int p = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(value_of(m[idx2(r, c, n)])) > std::abs(value_of(m[idx2(p, c, n)]))) p = r;
        if (std::abs(value_of(m[idx2(p, c, n)])) < 1e-300) throw DomainError("singular matrix");
        if (p != c)
            for (int j = 0; j < n; ++j) {
                std::swap(m[idx2(p, j, n)], m[idx2(c, j, n)]);
                std::swap(inv[idx2(p, j, n)], inv[idx2(c, j, n)]);
            }
        const T piv = m[idx2(c, c, n)];
        for (int j = 0; j < n; ++j) {
            m[idx2(c, j, n)] = m[idx2(c, j, n)] / piv;
            inv[idx2(c, j, n)] = inv[idx2(c, j, n)] / piv;
        }
        for (int r = 0; r < n; ++r) {
            if (r == c) continue;
            const T f = m[idx2(r, c, n)];
            for (int j = 0; j < n; ++j) {
                m[idx2(r, j, n)] = m[idx2(r, j, n)] - f * m[idx2(c, j, n)];
                inv[idx2(r, j, n)] = inv[idx2(r, j, n)] - f * inv[idx2(c, j, n)];
            }
        }
    }
    return inv;
}

/// Orthonormal frame by Gram-Schmidt on d/dx_1, ..., d/dx_m in that order.
template <class T>
std::vector<T> gram_schmidt(const std::vector<T>& g, int m) {
    const T zero = zero_like(g[0]);
    std::vector<T> e(std::size_t(m) * m, zero);
    auto inner = [&](std::span<const T> u, std::span<const T> v) {
        T s = zero;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) s = s + g[idx2(i, j, m)] * u[i] * v[j];
        return s;
    };
    for (int i = 0; i < m; ++i) {
        std::vector<T> v(m, zero);
        v[i] = constant_like(g[0], 1.0);
        for (int j = 0; j < i; ++j) {
            std::span<const T> ej(e.data() + std::size_t(j) * m, m);
            const T c = inner(v, ej);
            for (int k = 0; k < m; ++k) v[k] = v[k] - c * ej[k];
        }
        const T n2 = inner(v, v);
        if (!(value_of(n2) > 1e-20)) throw DomainError("metric is not positive definite");
        using std::sqrt;
        const T inv = 1.0 / sqrt(n2);
        for (int k = 0; k < m; ++k) e[idx2(i, k, m)] = v[k] * inv;
    }
    return e;
}

/// Applies a constant orthogonal matrix: e'_i = sum_j R_ij e_j.
template <class T>
std::vector<T> rotate_frame(const std::vector<T>& e, const Matrix& r, int m) {
    std::vector<T> out(e.size(), zero_like(e[0]));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k) out[idx2(i, k, m)] = out[idx2(i, k, m)] + r(i, j) * e[idx2(j, k, m)];
    return out;
}

/// Christoffel symbols from metric jets of order >= 1. The result has one
/// order less than the metric jets.
inline std::vector<Jet> christoffel_from_jets(const std::vector<Jet>& g, int m) {
    std::vector<Jet> dg;  // dg[(l*m + i)*m + j] = d_l g_ij
    dg.reserve(std::size_t(m) * m * m);
    for (int l = 0; l < m; ++l)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) dg.push_back(g[idx2(i, j, m)].partial(l));
    std::vector<Jet> ginv = invert(g, m);
    const Jet zero = zero_like(dg[0]);
    std::vector<Jet> gamma(std::size_t(m) * m * m, zero);
    for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j) {
            std::vector<Jet> lowered(m, zero);  // Gamma_{l,ij}
            for (int l = 0; l < m; ++l)
                lowered[l] = 0.5 * (dg[idx3(i, j, l, m)] + dg[idx3(j, i, l, m)] - dg[idx3(l, i, j, m)]);
            for (int k = 0; k < m; ++k) {
                Jet s = zero;
                for (int l = 0; l < m; ++l) s += ginv[idx2(k, l, m)] * lowered[l];
                gamma[idx3(k, i, j, m)] = s;
                gamma[idx3(k, j, i, m)] = s;
            }
        }
    return gamma;
}

/// Riemann tensor R^l_kij (index [((l*m + k)*m + i)*m + j]) from Christoffel
/// jets of order >= 1.
inline Vector riemann_from_christoffel(const std::vector<Jet>& gamma, int m) {
    Vector r(std::size_t(m) * m * m * m, 0.0);
    auto G = [&](int a, int b, int c) { return gamma[idx3(a, b, c, m)].value(); };
    auto dG = [&](int d, int a, int b, int c) {
        MultiIndex mi{};
        mi[d] = 1;
        return gamma[idx3(a, b, c, m)].coefficient(mi);
    };
    for (int l = 0; l < m; ++l)
        for (int k = 0; k < m; ++k)
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) {
                    double s = dG(i, l, j, k) - dG(j, l, i, k);
                    for (int p = 0; p < m; ++p) s += G(l, i, p) * G(p, j, k) - G(l, j, p) * G(p, i, k);
                    r[((std::size_t(l) * m + k) * m + i) * m + j] = s;
                }
    return r;
}

// ---------------------------------------------------------------------------
// Point operations.

struct MetricAtPoint {
    Matrix g;
    Matrix ginv;
    double sqrt_det = 0.0;
    std::vector<Jet> jets;  ///< g_ij jets when requested with order >= 1
};

/// Metric value, inverse and volume density at x (plus jets for order >= 1).
inline MetricAtPoint metric_at(const ManifoldModel& M, std::span<const double> x, int order = 0) {
    if (order < 0 || order > 3) throw std::invalid_argument("metric jet order must be in 0..3");
    M.require_contains(x);
    const int m = M.dim();
    MetricAtPoint out;
    out.jets = M.metric_jets(x, order);
    out.g = Matrix(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) out.g(i, j) = out.jets[idx2(i, j, m)].value();
    Matrix sym = out.g;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) sym(i, j) = 0.5 * (out.g(i, j) + out.g(j, i));
    const Vector ev = symmetric_eigenvalues(sym);
    if (!(ev.front() > 1e-10)) throw DomainError("metric is not positive definite at this point");
    out.ginv = inverse(out.g);
    out.sqrt_det = std::sqrt(determinant(out.g));
    if (order == 0) out.jets.clear();
    return out;
}

/// Christoffel symbols at x, with first derivatives when `with_derivatives`.
struct Christoffel {
    int m = 0;
    Vector gamma;   ///< Gamma^k_ij at [(k*m + i)*m + j]
    Vector dgamma;  ///< d_l Gamma^k_ij at [((k*m + i)*m + j)*m + l], when requested
    double operator()(int k, int i, int j) const { return gamma[idx3(k, i, j, m)]; }
};

inline Christoffel christoffel(const ManifoldModel& M, std::span<const double> x, bool with_derivatives = false) {
    M.require_contains(x);
    const int m = M.dim();
    auto jets = christoffel_from_jets(M.metric_jets(x, with_derivatives ? 2 : 1), m);
    Christoffel out;
    out.m = m;
    for (const auto& j : jets) out.gamma.push_back(j.value());
    if (with_derivatives)
        for (const auto& j : jets)
            for (int l = 0; l < m; ++l) {
                MultiIndex a{};
                a[l] = 1;
                out.dgamma.push_back(j.coefficient(a));
            }
    return out;
}

/// R(X,Y)Z in coordinate components.
inline Vector riemann(const ManifoldModel& M, std::span<const double> x, std::span<const double> X,
                      std::span<const double> Y, std::span<const double> Z) {
    M.require_contains(x);
    const int m = M.dim();
    const Vector r = riemann_from_christoffel(christoffel_from_jets(M.metric_jets(x, 2), m), m);
    Vector out(m, 0.0);
    for (int l = 0; l < m; ++l)
        for (int k = 0; k < m; ++k)
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    out[l] += r[((std::size_t(l) * m + k) * m + i) * m + j] * Z[k] * X[i] * Y[j];
    return out;
}

/// Gram-Schmidt orthonormal frame at x; e_i is row i.
struct Frame {
    int m = 0;
    Vector e;
    std::span<const double> operator[](int i) const { return {e.data() + std::size_t(i) * m, std::size_t(m)}; }
};

inline Frame frame_at(const ManifoldModel& M, std::span<const double> x) {
    const auto md = metric_at(M, x);
    Frame f;
    f.m = M.dim();
    f.e = gram_schmidt(md.g.data, f.m);
    return f;
}

/// Gradient vector, Hessian form and Laplacian of a scalar field.
struct ScalarCalculus {
    Vector grad;    ///< g^ij d_j f
    Matrix hess;    ///< d_i d_j f - Gamma^k_ij d_k f
    double laplacian = 0.0;
    double grad_norm2 = 0.0;

    double hess_form(std::span<const double> X, std::span<const double> Y) const {
        double s = 0.0;
        for (int i = 0; i < hess.rows; ++i)
            for (int j = 0; j < hess.cols; ++j) s += hess(i, j) * X[i] * Y[j];
        return s;
    }
};

inline ScalarCalculus scalar_calculus(const ManifoldModel& M, const Expr& f, std::span<const double> x) {
    const int m = M.dim();
    const auto md = metric_at(M, x);
    const auto gam = christoffel(M, x);
    const Jet fj = eval_jet(f, x, 2);
    Vector df(m);
    Matrix ddf(m, m);
    for (int i = 0; i < m; ++i) {
        MultiIndex a{};
        a[i] = 1;
        df[i] = fj.derivative(a);
        for (int j = 0; j < m; ++j) {
            MultiIndex b = a;
            b[j] += 1;
            ddf(i, j) = fj.derivative(b);
        }
    }
    ScalarCalculus out;
    out.grad = md.ginv * std::span<const double>(df);
    out.hess = Matrix(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            double h = ddf(i, j);
            for (int k = 0; k < m; ++k) h -= gam(k, i, j) * df[k];
            out.hess(i, j) = h;
        }
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) out.laplacian += md.ginv(i, j) * out.hess(i, j);
    out.grad_norm2 = dot(out.grad, df);
    return out;
}

inline Vector grad(const ManifoldModel& M, const Expr& f, std::span<const double> x) {
    return scalar_calculus(M, f, x).grad;
}
inline Matrix hessian(const ManifoldModel& M, const Expr& f, std::span<const double> x) {
    return scalar_calculus(M, f, x).hess;
}
inline double laplacian(const ManifoldModel& M, const Expr& f, std::span<const double> x) {
    return scalar_calculus(M, f, x).laplacian;
}

}  // namespace symphonic

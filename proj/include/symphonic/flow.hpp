#pragma once

/// @file flow.hpp
/// Explicit gradient flow d(phi)/dt = tau^s(phi) on a periodic grid over a
/// fully periodic source chart, with energy-monotone step control.
///
/// The sampled map is phi(x) = W (x - lo) / L + u(x) with a constant winding
/// W and a periodic part u. Derivatives use fourth-order central differences.
/// The grid tension is written in divergence form,
///   sqrt(g) h_ab tau^b = D_i(sqrt(g) Q^ij h_ab D_j phi^b) - 1/2 sqrt(g) Q^ij d_a h_bc D_i phi^b D_j phi^c,
/// with Q^ij = g^ik g^jl P_kl, which makes it exactly -1/4 of the gradient of
/// the discrete energy. Every step with a small enough epsilon therefore
/// lowers the energy.

#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "symphonic/variational.hpp"

namespace symphonic {

enum class FlowStatus { running, converged, stalled, budget_exhausted, left_chart };

inline const char* to_string(FlowStatus s) {
    switch (s) {
        case FlowStatus::running: return "running";
        case FlowStatus::converged: return "converged-symphonic";
        case FlowStatus::stalled: return "stalled";
        case FlowStatus::budget_exhausted: return "budget-exhausted";
        case FlowStatus::left_chart: return "left-chart";
    }
    return "unknown";
}

enum class FlowEnergy { sym, bisym };

struct FlowState {
    MapSpec spec;
    int resolution = 0;
    int m = 0, n = 0;
    std::size_t points = 0;
    Vector lo, period, spacing;
    Vector winding;  ///< W[a*m + k]: increment of phi^a over one period of x_k
    Vector u;        ///< periodic part, u[p*n + a]
    double epsilon = 0.0;
    int iteration = 0;
    int rejections = 0;  ///< halvings in the most recent step
    Vector energy_history;
    Vector bienergy_history;
    FlowStatus status = FlowStatus::running;
    FlowEnergy energy = FlowEnergy::sym;
    JacobiForm form = JacobiForm::complete;

    // Fixed source data per grid point.
    std::vector<Vector> x;
    Vector sqrt_det;
    std::vector<Vector> ginv;  ///< m*m per point
};

namespace flow_detail {

inline std::size_t shift(const FlowState& s, std::size_t p, int k, int by) {
    // row-major, last coordinate fastest
    std::size_t stride = 1;
    for (int c = s.m - 1; c > k; --c) stride *= std::size_t(s.resolution);
    const std::size_t ik = (p / stride) % std::size_t(s.resolution);
    const long r = s.resolution;
    const std::size_t nk = std::size_t(((long(ik) + by) % r + r) % r);
    return p - ik * stride + nk * stride;
}

/// Fourth-order central difference of a periodic per-point field f[p*w + c].
inline Vector diff(const FlowState& s, const Vector& f, int w, int k) {
    Vector out(f.size());
    const double inv = 1.0 / (12.0 * s.spacing[k]);
    for (std::size_t p = 0; p < s.points; ++p) {
        const std::size_t p1 = shift(s, p, k, 1), p2 = shift(s, p, k, 2);
        const std::size_t m1 = shift(s, p, k, -1), m2 = shift(s, p, k, -2);
        for (int c = 0; c < w; ++c)
            out[p * w + c] =
                (-f[p2 * w + c] + 8.0 * f[p1 * w + c] - 8.0 * f[m1 * w + c] + f[m2 * w + c]) * inv;
    }
    return out;
}

/// dphi[k][p*n + a] = D_k phi^a including the winding slope.
inline std::vector<Vector> grad_phi(const FlowState& s, const Vector& u) {
    std::vector<Vector> d(s.m);
    for (int k = 0; k < s.m; ++k) {
        d[k] = diff(s, u, s.n, k);
        for (std::size_t p = 0; p < s.points; ++p)
            for (int a = 0; a < s.n; ++a) d[k][p * s.n + a] += s.winding[idx2(a, k, s.m)] / s.period[k];
    }
    return d;
}

inline Vector phi_at(const FlowState& s, const Vector& u, std::size_t p) {
    Vector y(s.n);
    for (int a = 0; a < s.n; ++a) {
        double v = u[p * s.n + a];
        for (int k = 0; k < s.m; ++k) v += s.winding[idx2(a, k, s.m)] * (s.x[p][k] - s.lo[k]) / s.period[k];
        y[a] = v;
    }
    return y;
}

struct TargetAtPoints {
    std::vector<Vector> h;   ///< n*n
    std::vector<Vector> dh;  ///< d_c h_ab at [(c*n + a)*n + b], only when requested
};

inline TargetAtPoints target_metric(const FlowState& s, const Vector& u, bool with_derivatives) {
    TargetAtPoints t;
    t.h.resize(s.points);
    if (with_derivatives) t.dh.resize(s.points);
    const auto& T = s.spec.target;
    const bool constant = T.metric_is_constant();
    parallel_for(s.points, [&](std::size_t p) {
        const Vector y = phi_at(s, u, p);
        T.require_contains(y, "image point");
        const int n = s.n;
        if (constant || !with_derivatives) {
            Vector h(std::size_t(n) * n);
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) h[idx2(a, b, n)] = T.metric(a, b)(y);
            t.h[p] = std::move(h);
            if (with_derivatives) t.dh[p].assign(std::size_t(n) * n * n, 0.0);
            return;
        }
        const auto jets = T.metric_jets(y, 1);
        Vector h(std::size_t(n) * n), dh(std::size_t(n) * n * n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                const Jet& j = jets[idx2(a, b, n)];
                h[idx2(a, b, n)] = j.value();
                for (int c = 0; c < n; ++c) {
                    MultiIndex mi{};
                    mi[c] = 1;
                    dh[idx3(c, a, b, n)] = j.coefficient(mi);
                }
            }
        t.h[p] = std::move(h);
        t.dh[p] = std::move(dh);
    });
    return t;
}

/// P_ij and Q^ij at every point.
inline void pullbacks(const FlowState& s, const std::vector<Vector>& d, const TargetAtPoints& t,
                      std::vector<Vector>& P, std::vector<Vector>& Q) {
    const int m = s.m, n = s.n;
    P.assign(s.points, Vector(std::size_t(m) * m, 0.0));
    Q.assign(s.points, Vector(std::size_t(m) * m, 0.0));
    for (std::size_t p = 0; p < s.points; ++p) {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                double v = 0.0;
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b)
                        v += t.h[p][idx2(a, b, n)] * d[i][p * n + a] * d[j][p * n + b];
                P[p][idx2(i, j, m)] = v;
            }
        const Vector& gi = s.ginv[p];
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                double v = 0.0;
                for (int k = 0; k < m; ++k)
                    for (int l = 0; l < m; ++l) v += gi[idx2(i, k, m)] * gi[idx2(j, l, m)] * P[p][idx2(k, l, m)];
                Q[p][idx2(i, j, m)] = v;
            }
    }
}

inline double cell_volume(const FlowState& s) {
    double v = 1.0;
    for (double h : s.spacing) v *= h;
    return v;
}

}  // namespace flow_detail

/// Discrete symphonic energy of a periodic part u.
inline double grid_energy(const FlowState& s, const Vector& u) {
    using namespace flow_detail;
    const auto d = grad_phi(s, u);
    const auto t = target_metric(s, u, false);
    std::vector<Vector> P, Q;
    pullbacks(s, d, t, P, Q);
    Vector terms(s.points);
    for (std::size_t p = 0; p < s.points; ++p) terms[p] = s.sqrt_det[p] * dot(Q[p], P[p]);
    return cell_volume(s) * pairwise_sum(terms);
}

/// Grid tension tau^s[p*n + a] of a periodic part u.
inline Vector grid_tension(const FlowState& s, const Vector& u) {
    using namespace flow_detail;
    const int m = s.m, n = s.n;
    const auto d = grad_phi(s, u);
    const auto t = target_metric(s, u, true);
    std::vector<Vector> P, Q;
    pullbacks(s, d, t, P, Q);
    Vector lowered(s.points * n, 0.0);
    for (int i = 0; i < m; ++i) {
        Vector flux(s.points * n, 0.0);  // sqrt(g) Q^ij h_ab D_j phi^b
        for (std::size_t p = 0; p < s.points; ++p)
            for (int a = 0; a < n; ++a) {
                double v = 0.0;
                for (int j = 0; j < m; ++j)
                    for (int b = 0; b < n; ++b) v += Q[p][idx2(i, j, m)] * t.h[p][idx2(a, b, n)] * d[j][p * n + b];
                flux[p * n + a] = s.sqrt_det[p] * v;
            }
        const Vector div = diff(s, flux, n, i);
        for (std::size_t k = 0; k < lowered.size(); ++k) lowered[k] += div[k];
    }
    Vector tau(s.points * n);
    for (std::size_t p = 0; p < s.points; ++p) {
        for (int a = 0; a < n; ++a) {
            double v = 0.0;
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    for (int b = 0; b < n; ++b)
                        for (int c = 0; c < n; ++c)
                            v += Q[p][idx2(i, j, m)] * t.dh[p][idx3(a, b, c, n)] * d[i][p * n + b] * d[j][p * n + c];
            lowered[p * n + a] = lowered[p * n + a] / s.sqrt_det[p] - 0.5 * v;
        }
        std::vector<double> hm(t.h[p].begin(), t.h[p].end());
        const auto hinv = invert(hm, n);
        for (int a = 0; a < n; ++a) {
            double v = 0.0;
            for (int b = 0; b < n; ++b) v += hinv[idx2(a, b, n)] * lowered[p * n + b];
            tau[p * n + a] = v;
        }
    }
    return tau;
}

/// Grid bi-tension J^s(tau^s) from finite-difference derivatives of the grid
/// tension. Experimental.
inline Vector grid_bi_tension(const FlowState& s, const Vector& u, JacobiForm form) {
    using namespace flow_detail;
    const int m = s.m, n = s.n;
    const Vector tau = grid_tension(s, u);
    const auto d = grad_phi(s, u);
    std::vector<std::vector<Vector>> dd(m, std::vector<Vector>(m));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) dd[i][j] = diff(s, d[i], n, j);
    std::vector<Vector> dt(m);
    std::vector<std::vector<Vector>> ddt(m, std::vector<Vector>(m));
    for (int k = 0; k < m; ++k) dt[k] = diff(s, tau, n, k);
    for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l) ddt[k][l] = diff(s, dt[k], n, l);
    Vector out(s.points * n);
    parallel_for(s.points, [&](std::size_t p) {
        LocalData<double> ld;
        ld.m = m;
        ld.n = n;
        ld.phi = phi_at(s, u, p);
        for (int a = 0; a < n; ++a)
            for (int i = 0; i < m; ++i) ld.dphi.push_back(d[i][p * n + a]);
        for (int a = 0; a < n; ++a)
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) ld.ddphi.push_back(dd[i][j][p * n + a]);
        const auto gj = s.spec.source.metric_jets(s.x[p], 1);
        for (const auto& j : christoffel_from_jets(gj, m)) ld.gammaM.push_back(j.value());
        Vector g0;
        for (const auto& j : gj) g0.push_back(j.value());
        ld.frame = gram_schmidt(g0, m);
        const auto hy = s.spec.target.metric_jets(ld.phi, 2);
        for (const auto& j : hy) ld.h.push_back(j.value());
        for (const auto& j : christoffel_from_jets(hy, n)) {
            ld.gammaN.push_back(j.value());
            for (int e = 0; e < n; ++e) {
                MultiIndex mi{};
                mi[e] = 1;
                ld.dgammaN.push_back(j.coefficient(mi));
            }
        }
        FieldJet fj;
        for (int a = 0; a < n; ++a) {
            fj.v.push_back(tau[p * n + a]);
            for (int k = 0; k < m; ++k) {
                fj.dv.push_back(dt[k][p * n + a]);
                for (int l = 0; l < m; ++l) fj.ddv.push_back(ddt[k][l][p * n + a]);
            }
        }
        const Vector t2 = jacobi_terms(ld, fj).total(form);
        for (int a = 0; a < n; ++a) out[p * n + a] = t2[a];
    });
    return out;
}

inline double grid_bi_energy(const FlowState& s, const Vector& u) {
    using namespace flow_detail;
    const Vector tau = grid_tension(s, u);
    const auto t = target_metric(s, u, false);
    Vector terms(s.points);
    for (std::size_t p = 0; p < s.points; ++p) {
        std::span<const double> tp(tau.data() + p * s.n, s.n);
        double v = 0.0;
        for (int a = 0; a < s.n; ++a)
            for (int b = 0; b < s.n; ++b) v += t.h[p][idx2(a, b, s.n)] * tp[a] * tp[b];
        terms[p] = s.sqrt_det[p] * v;
    }
    return cell_volume(s) * pairwise_sum(terms);
}

/// Largest target norm of a per-point vector field.
inline double grid_max_norm(const FlowState& s, const Vector& field, const Vector& u) {
    const auto t = flow_detail::target_metric(s, u, false);
    double best = 0.0;
    for (std::size_t p = 0; p < s.points; ++p) {
        double v = 0.0;
        for (int a = 0; a < s.n; ++a)
            for (int b = 0; b < s.n; ++b) v += t.h[p][idx2(a, b, s.n)] * field[p * s.n + a] * field[p * s.n + b];
        best = std::max(best, std::sqrt(std::max(0.0, v)));
    }
    return best;
}

/// Current map values phi[p*n + a] on the grid.
inline Vector grid_map(const FlowState& s) {
    Vector out(s.points * s.n);
    for (std::size_t p = 0; p < s.points; ++p) {
        const Vector y = flow_detail::phi_at(s, s.u, p);
        std::copy(y.begin(), y.end(), out.begin() + p * s.n);
    }
    return out;
}

/// Samples phi0 on an N^m grid. Requires a fully periodic source and N >= 8.
/// Winding must be a whole number of periods for periodic target
/// coordinates and zero otherwise.
inline FlowState flow_init(const MapSpec& phi0, int resolution, double epsilon = 0.0,
                           FlowEnergy energy = FlowEnergy::sym, JacobiForm form = JacobiForm::complete) {
    const auto& S = phi0.source;
    if (!S.fully_periodic()) throw std::invalid_argument("flow needs a fully periodic source chart");
    if (resolution < 8) throw std::invalid_argument("grid resolution " + std::to_string(resolution) +
                                                    " is too coarse (minimum 8 per periodic dimension)");
    FlowState s;
    s.spec = phi0;
    s.resolution = resolution;
    s.m = phi0.m();
    s.n = phi0.n();
    s.energy = energy;
    s.form = form;
    s.points = 1;
    for (int k = 0; k < s.m; ++k) {
        const auto& iv = S.domain()[k];
        if (!iv.bounded()) throw std::invalid_argument("periodic coordinate needs a finite period");
        s.lo.push_back(iv.lo);
        s.period.push_back(iv.length());
        s.spacing.push_back(iv.length() / resolution);
        s.points *= std::size_t(resolution);
    }
    // Winding from two base points, checked for consistency.
    s.winding.assign(std::size_t(s.n) * s.m, 0.0);
    Vector x0 = s.lo, x1 = s.lo;
    for (int k = 0; k < s.m; ++k) x1[k] += 0.37 * s.spacing[k] + 0.1;
    for (int k = 0; k < s.m; ++k)
        for (int which = 0; which < 2; ++which) {
            const Vector& base = which == 0 ? x0 : x1;
            Vector xe = base;
            xe[k] += s.period[k];
            const Vector a = phi0.value(base), b = phi0.value(xe);
            for (int c = 0; c < s.n; ++c) {
                const double w = b[c] - a[c];
                if (which == 0) s.winding[idx2(c, k, s.m)] = w;
                else if (std::abs(w - s.winding[idx2(c, k, s.m)]) > 1e-9 * (1.0 + std::abs(w)))
                    throw DomainError("map is not compatible with the periodic source");
            }
        }
    for (int a = 0; a < s.n; ++a) {
        const auto& iv = phi0.target.domain()[a];
        for (int k = 0; k < s.m; ++k) {
            const double w = s.winding[idx2(a, k, s.m)];
            if (iv.periodic && iv.bounded()) {
                const double r = w / iv.length();
                if (std::abs(r - std::round(r)) > 1e-9) throw DomainError("winding is not a whole number of target periods");
                s.winding[idx2(a, k, s.m)] = std::round(r) * iv.length();
            } else if (std::abs(w) > 1e-9) {
                throw DomainError("map does not close up over the periodic source");
            } else {
                s.winding[idx2(a, k, s.m)] = 0.0;
            }
        }
    }
    // Grid points and source data.
    std::vector<int> idx(s.m, 0);
    for (std::size_t p = 0; p < s.points; ++p) {
        Vector x(s.m);
        for (int k = 0; k < s.m; ++k) x[k] = s.lo[k] + idx[k] * s.spacing[k];
        const auto md = metric_at(S, x);
        s.sqrt_det.push_back(md.sqrt_det);
        s.ginv.push_back(md.ginv.data);
        s.x.push_back(x);
        int c = s.m - 1;
        while (c >= 0 && ++idx[c] == resolution) idx[c--] = 0;
    }
    s.u.assign(s.points * s.n, 0.0);
    for (std::size_t p = 0; p < s.points; ++p) {
        const Vector y = phi0.value(s.x[p]);
        for (int a = 0; a < s.n; ++a) {
            double lin = 0.0;
            for (int k = 0; k < s.m; ++k) lin += s.winding[idx2(a, k, s.m)] * (s.x[p][k] - s.lo[k]) / s.period[k];
            s.u[p * s.n + a] = y[a] - lin;
        }
    }
    // Default step: a fraction of the explicit stability bound dx^2 / |dphi|^2.
    if (epsilon <= 0.0) {
        const auto d = flow_detail::grad_phi(s, s.u);
        double big = 1e-12;
        for (std::size_t p = 0; p < s.points; ++p) {
            double f = 0.0;
            for (int k = 0; k < s.m; ++k)
                for (int a = 0; a < s.n; ++a) f += d[k][p * s.n + a] * d[k][p * s.n + a];
            big = std::max(big, f);
        }
        double h2 = s.spacing[0] * s.spacing[0];
        for (double h : s.spacing) h2 = std::min(h2, h * h);
        epsilon = 0.2 * h2 / big;
        if (energy == FlowEnergy::bisym) epsilon *= 0.1 * h2 / big;
    }
    s.epsilon = epsilon;
    s.energy_history.push_back(grid_energy(s, s.u));
    if (energy == FlowEnergy::bisym) s.bienergy_history.push_back(grid_bi_energy(s, s.u));
    return s;
}

/// Descent direction: tau^s for the symphonic energy; for the bi-energy the
/// sign follows the pairing of the selected Jacobi form.
inline Vector flow_direction(const FlowState& s) {
    if (s.energy == FlowEnergy::sym) return grid_tension(s, s.u);
    Vector t2 = grid_bi_tension(s, s.u, s.form);
    if (s.form == JacobiForm::complete)
        for (auto& v : t2) v = -v;
    return t2;
}

/// One explicit Euler step, accepted only if the tracked energy does not
/// increase; epsilon halves on each rejection, at most 20 times.
inline FlowState flow_step(FlowState s) {
    if (s.status != FlowStatus::running) return s;
    const Vector dir = flow_direction(s);
    const bool bisym = s.energy == FlowEnergy::bisym;
    const double e_old = bisym ? s.bienergy_history.back() : s.energy_history.back();
    s.rejections = 0;
    for (int attempt = 0; attempt <= 20; ++attempt) {
        Vector cand = s.u;
        for (std::size_t k = 0; k < cand.size(); ++k) cand[k] += s.epsilon * dir[k];
        double e_new;
        try {
            e_new = bisym ? grid_bi_energy(s, cand) : grid_energy(s, cand);
        } catch (const DomainError&) {
            s.status = FlowStatus::left_chart;
            return s;
        }
        if (e_new <= e_old) {
            s.u = std::move(cand);
            ++s.iteration;
            if (bisym) {
                s.bienergy_history.push_back(e_new);
                s.energy_history.push_back(grid_energy(s, s.u));
            } else {
                s.energy_history.push_back(e_new);
            }
            return s;
        }
        if (attempt == 20) break;
        s.epsilon *= 0.5;
        ++s.rejections;
    }
    s.status = FlowStatus::stalled;
    return s;
}

struct FlowTraceRow {
    int step;
    double epsilon;
    double energy;
    double max_tau;
    double bienergy;
};

/// Iterates until max |tau^s| <= tol (max |tau^s_2| for the bi-energy flow),
/// a stall, leaving the chart, or `max_steps` accepted steps.
inline FlowState flow_run(FlowState s, int max_steps, double tol,
                          const std::function<void(const FlowTraceRow&)>& trace = {}) {
    if (s.status == FlowStatus::budget_exhausted || s.status == FlowStatus::converged) s.status = FlowStatus::running;
    const int start = s.iteration;
    for (;;) {
        const Vector residual = s.energy == FlowEnergy::sym ? grid_tension(s, s.u) : grid_bi_tension(s, s.u, s.form);
        const double r = grid_max_norm(s, residual, s.u);
        if (trace)
            trace({s.iteration, s.epsilon, s.energy_history.back(), s.energy == FlowEnergy::sym ? r : grid_max_norm(s, grid_tension(s, s.u), s.u),
                   s.bienergy_history.empty() ? std::nan("") : s.bienergy_history.back()});
        if (r <= tol) {
            s.status = FlowStatus::converged;
            return s;
        }
        if (s.iteration - start >= max_steps) {
            s.status = FlowStatus::budget_exhausted;
            return s;
        }
        s = flow_step(std::move(s));
        if (s.status != FlowStatus::running) return s;
    }
}

}  // namespace symphonic

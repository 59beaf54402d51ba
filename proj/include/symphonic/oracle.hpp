#pragma once

/// @file oracle.hpp
/// Finite-difference ground truth for the variation formulas. Deformations
/// are coordinate-additive: phi_{s,t} = phi + t v + s w in target coordinates.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "symphonic/variational.hpp"

namespace symphonic {

enum class Energy { sym, bisym };

inline const char* to_string(Energy e) { return e == Energy::sym ? "sym" : "bisym"; }

inline double energy_of(const MapSpec& f, const Mesh& mesh, Energy e) {
    return e == Energy::sym ? symphonic_energy(f, mesh) : bi_energy(f, mesh);
}

/// phi + t v (+ s w).
inline MapSpec deform(const MapSpec& f, const TangentField& v, double t, const TangentField* w = nullptr,
                      double s = 0.0) {
    MapSpec out = f;
    out.perturbations.reserve(out.perturbations.size() + 2);
    out.perturbations.push_back(MapSpec::Perturbation{t, v});
    if (w) out.perturbations.push_back(MapSpec::Perturbation{s, *w});
    return out;
}

namespace detail {

inline double deformed_energy(const MapSpec& f, const Mesh& mesh, Energy e, const TangentField& v, double t,
                              const TangentField* w = nullptr, double s = 0.0) {
    try {
        return energy_of(deform(f, v, t, w, s), mesh, e);
    } catch (const StepTooLarge&) {
        throw;
    } catch (const DomainError& err) {
        if (t == 0.0 && s == 0.0) throw;
        throw StepTooLarge(std::string("finite-difference step too large: ") + err.what());
    }
}

}  // namespace detail

/// (-E(2h) + 8E(h) - 8E(-h) + E(-2h)) / (12h) along phi + t v.
inline double fd_first_variation(const MapSpec& f, const TangentField& v, const Mesh& mesh, double h,
                                 Energy e = Energy::sym) {
    if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
    const double ep2 = detail::deformed_energy(f, mesh, e, v, 2 * h);
    const double ep1 = detail::deformed_energy(f, mesh, e, v, h);
    const double em1 = detail::deformed_energy(f, mesh, e, v, -h);
    const double em2 = detail::deformed_energy(f, mesh, e, v, -2 * h);
    return (-ep2 + 8.0 * ep1 - 8.0 * em1 + em2) / (12.0 * h);
}

/// [E(h,h) - E(h,-h) - E(-h,h) + E(-h,-h)] / (4h^2) along phi + t v + s w.
inline double fd_second_variation(const MapSpec& f, const TangentField& v, const TangentField& w, const Mesh& mesh,
                                  double h, Energy e = Energy::sym) {
    if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
    const double pp = detail::deformed_energy(f, mesh, e, v, h, &w, h);
    const double pm = detail::deformed_energy(f, mesh, e, v, h, &w, -h);
    const double mp = detail::deformed_energy(f, mesh, e, v, -h, &w, h);
    const double mm = detail::deformed_energy(f, mesh, e, v, -h, &w, -h);
    return (pp - pm - mp + mm) / (4.0 * h * h);
}

/// Observed convergence order from estimates at steps h, h/2, h/4:
/// log2(|D(h) - D(h/2)| / |D(h/2) - D(h/4)|). Undefined (nullopt) when either
/// difference is at or below `noise_floor`.
inline std::optional<double> richardson_order(double d1, double d2, double d3, double noise_floor = 0.0) {
    const double a = std::abs(d1 - d2), b = std::abs(d2 - d3);
    if (!(a > noise_floor) || !(b > noise_floor)) return std::nullopt;
    return std::log2(a / b);
}

struct RichardsonResult {
    double steps[3]{};
    double values[3]{};
    std::optional<double> order;
};

/// First-variation FD at h, h/2, h/4 with an order estimate. The noise floor
/// is the rounding level of the stencil, about 1e3 * eps * |E| / (h/4).
inline RichardsonResult fd_first_variation_order(const MapSpec& f, const TangentField& v, const Mesh& mesh,
                                                 double h, Energy e = Energy::sym) {
    RichardsonResult r;
    for (int k = 0; k < 3; ++k) {
        r.steps[k] = h / double(1 << k);
        r.values[k] = fd_first_variation(f, v, mesh, r.steps[k], e);
    }
    const double e0 = std::abs(energy_of(f, mesh, e));
    const double floor = 1e3 * std::numeric_limits<double>::epsilon() * std::max(e0, 1e-300) / r.steps[2];
    r.order = richardson_order(r.values[0], r.values[1], r.values[2], floor);
    return r;
}

inline RichardsonResult fd_second_variation_order(const MapSpec& f, const TangentField& v, const TangentField& w,
                                                  const Mesh& mesh, double h, Energy e = Energy::sym) {
    RichardsonResult r;
    for (int k = 0; k < 3; ++k) {
        r.steps[k] = h / double(1 << k);
        r.values[k] = fd_second_variation(f, v, w, mesh, r.steps[k], e);
    }
    const double e0 = std::abs(energy_of(f, mesh, e));
    const double floor =
        1e3 * std::numeric_limits<double>::epsilon() * std::max(e0, 1e-300) / (r.steps[2] * r.steps[2]);
    r.order = richardson_order(r.values[0], r.values[1], r.values[2], floor);
    return r;
}

}  // namespace symphonic

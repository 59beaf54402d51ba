#pragma once

/// @file jet.hpp
/// Truncated multivariate Taylor jets.
///
/// A Jet stores the Taylor coefficients c_a = (d^a f)(x0) / a! of a function
/// of `nvars` variables for every multi-index |a| <= order. Arithmetic on jets
/// is exact truncated power-series arithmetic, so every partial derivative up
/// to the jet order is available without symbolic differentiation.
///
/// Coefficients are laid out in graded order (all degree-0 terms, then degree
/// 1, ...). Because the order within a degree does not depend on the
/// truncation order, truncating a jet is taking a prefix of its coefficients.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "symphonic/error.hpp"

namespace symphonic {

inline constexpr int kMaxJetVars = 8;
inline constexpr int kMaxJetOrder = 6;

using MultiIndex = std::array<std::uint8_t, kMaxJetVars>;

inline int total_degree(const MultiIndex& a) {
    int d = 0;
    for (auto v : a) d += v;
    return d;
}

inline double multi_factorial(const MultiIndex& a) {
    double f = 1.0;
    for (auto v : a)
        for (int k = 2; k <= v; ++k) f *= k;
    return f;
}

/// Immutable monomial table shared by every jet with the same (nvars, order).
class JetLayout {
public:
    struct Product {
        std::uint32_t lhs, rhs, out;
    };
    struct Shift {
        std::uint32_t src, dst;
        double factor;
    };

    static std::shared_ptr<const JetLayout> get(int nvars, int order) {
        if (nvars < 1 || nvars > kMaxJetVars)
            throw std::invalid_argument("jet variable count out of range: " + std::to_string(nvars));
        if (order < 0 || order > kMaxJetOrder)
            throw std::invalid_argument("jet order out of range: " + std::to_string(order));
        static std::mutex mutex;
        static std::map<std::pair<int, int>, std::shared_ptr<const JetLayout>> cache;
        std::lock_guard lock(mutex);
        auto& slot = cache[{nvars, order}];
        if (!slot) slot = std::shared_ptr<const JetLayout>(new JetLayout(nvars, order));
        return slot;
    }

    int nvars() const noexcept { return nvars_; }
    int order() const noexcept { return order_; }
    std::size_t size() const noexcept { return monomials_.size(); }
    const MultiIndex& monomial(std::size_t k) const { return monomials_[k]; }

    /// Number of monomials of total degree <= d.
    std::size_t prefix(int d) const { return degree_end_[std::min(d, order_)]; }

    /// Index of a monomial; throws if its degree exceeds the order.
    std::size_t index(const MultiIndex& a) const {
        auto it = lookup_.find(a);
        if (it == lookup_.end()) throw std::out_of_range("multi-index beyond jet order");
        return it->second;
    }

    std::span<const Product> products() const noexcept { return products_; }

    /// Coefficient map of d/dx_v into the layout of order - 1.
    std::span<const Shift> partial_map(int v) const { return shifts_[v]; }

private:
    JetLayout(int nvars, int order) : nvars_(nvars), order_(order) {
        for (int d = 0; d <= order; ++d) {
            MultiIndex a{};
            enumerate(a, 0, d);
            degree_end_.push_back(monomials_.size());
        }
        for (std::size_t k = 0; k < monomials_.size(); ++k) lookup_[monomials_[k]] = k;
        for (std::size_t i = 0; i < monomials_.size(); ++i)
            for (std::size_t j = 0; j < monomials_.size(); ++j) {
                MultiIndex s{};
                int deg = 0;
                for (int v = 0; v < kMaxJetVars; ++v) {
                    s[v] = monomials_[i][v] + monomials_[j][v];
                    deg += s[v];
                }
                if (deg <= order)
                    products_.push_back({std::uint32_t(i), std::uint32_t(j), std::uint32_t(lookup_[s])});
            }
        shifts_.resize(nvars);
        if (order > 0) {
            // The lower layout shares the graded prefix, so indices coincide.
            for (int v = 0; v < nvars; ++v)
                for (std::size_t k = 0; k < degree_end_[order - 1]; ++k) {
                    MultiIndex up = monomials_[k];
                    up[v] += 1;
                    shifts_[v].push_back({std::uint32_t(lookup_[up]), std::uint32_t(k), double(up[v])});
                }
        }
    }

    // Degree-d monomials in descending lexicographic order.
    void enumerate(MultiIndex& a, int var, int remaining) {
        if (var == nvars_ - 1) {
            a[var] = std::uint8_t(remaining);
            monomials_.push_back(a);
            a[var] = 0;
            return;
        }
        for (int k = remaining; k >= 0; --k) {
            a[var] = std::uint8_t(k);
            enumerate(a, var + 1, remaining - k);
        }
        a[var] = 0;
    }

    int nvars_;
    int order_;
    std::vector<MultiIndex> monomials_;
    std::vector<std::size_t> degree_end_;
    std::map<MultiIndex, std::size_t> lookup_;
    std::vector<Product> products_;
    std::vector<std::vector<Shift>> shifts_;
};

using JetLayoutPtr = std::shared_ptr<const JetLayout>;

class Jet {
public:
    Jet() = default;
    explicit Jet(JetLayoutPtr layout) : layout_(std::move(layout)), c_(layout_->size(), 0.0) {}

    static Jet constant(JetLayoutPtr layout, double value) {
        Jet j(std::move(layout));
        j.c_[0] = value;
        return j;
    }

    /// The coordinate function x_v expanded at base value `base`.
    static Jet variable(JetLayoutPtr layout, int v, double base) {
        Jet j(layout);
        j.c_[0] = base;
        if (layout->order() > 0) {
            MultiIndex a{};
            a[v] = 1;
            j.c_[layout->index(a)] = 1.0;
        }
        return j;
    }

    /// Independent variables x_v expanded at `base`, one jet per coordinate.
    static std::vector<Jet> variables(std::span<const double> base, int order) {
        auto layout = JetLayout::get(int(base.size()), order);
        std::vector<Jet> out;
        out.reserve(base.size());
        for (std::size_t v = 0; v < base.size(); ++v) out.push_back(variable(layout, int(v), base[v]));
        return out;
    }

    bool valid() const noexcept { return layout_ != nullptr; }
    const JetLayoutPtr& layout() const noexcept { return layout_; }
    int order() const noexcept { return layout_->order(); }
    int nvars() const noexcept { return layout_->nvars(); }

    double value() const { return c_[0]; }
    std::span<const double> coefficients() const noexcept { return c_; }
    std::span<double> coefficients() noexcept { return c_; }

    double coefficient(const MultiIndex& a) const { return c_[layout_->index(a)]; }

    /// Partial derivative d^a f at the base point.
    double derivative(const MultiIndex& a) const { return coefficient(a) * multi_factorial(a); }

    /// Same function with terms of degree > k dropped.
    Jet truncated(int k) const {
        if (k >= order()) return *this;
        Jet out(JetLayout::get(nvars(), k));
        std::copy_n(c_.begin(), out.c_.size(), out.c_.begin());
        return out;
    }

    /// d/dx_v, one order lower.
    Jet partial(int v) const {
        if (order() == 0) throw std::logic_error("partial derivative of an order-0 jet");
        Jet out(JetLayout::get(nvars(), order() - 1));
        for (const auto& s : layout_->partial_map(v)) out.c_[s.dst] = s.factor * c_[s.src];
        return out;
    }

    Jet operator-() const {
        Jet out = *this;
        for (auto& x : out.c_) x = -x;
        return out;
    }

    Jet& operator+=(const Jet& o) { return accumulate(o, 1.0); }
    Jet& operator-=(const Jet& o) { return accumulate(o, -1.0); }
    Jet& operator*=(double s) {
        for (auto& x : c_) x *= s;
        return *this;
    }
    Jet& operator+=(double s) {
        c_[0] += s;
        return *this;
    }

    /// this += s * o, truncating to the lower of the two orders.
    Jet& add_scaled(const Jet& o, double s) { return accumulate(o, s); }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator+(Jet a, double s) { return a += s; }
    friend Jet operator+(double s, Jet a) { return a += s; }
    friend Jet operator-(Jet a, double s) { return a += -s; }
    friend Jet operator-(double s, const Jet& a) { return (-a) += s; }
    friend Jet operator*(Jet a, double s) { return a *= s; }
    friend Jet operator*(double s, Jet a) { return a *= s; }
    friend Jet operator/(Jet a, double s) { return a *= 1.0 / s; }

    friend Jet operator*(const Jet& a, const Jet& b) {
        check_compatible(a, b);
        const Jet& lo = a.order() <= b.order() ? a : b;
        Jet out(lo.layout_);
        const auto& L = *lo.layout_;
        for (const auto& p : L.products()) out.c_[p.out] += a.c_[p.lhs] * b.c_[p.rhs];
        return out;
    }

    friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
    friend Jet operator/(double s, const Jet& b) { return reciprocal(b) *= s; }

    /// Sum of c_k * (u - u0)^k for k = 0..order, i.e. composition of a
    /// univariate function with known Taylor coefficients at u0.
    static Jet compose_univariate(const Jet& u, std::span<const double> taylor) {
        Jet delta = u;
        delta.c_[0] = 0.0;
        const int k = u.order();
        Jet r = Jet::constant(u.layout_, taylor[k]);
        for (int i = k - 1; i >= 0; --i) {
            r = r * delta;
            r.c_[0] += taylor[i];
        }
        return r;
    }

    friend Jet reciprocal(const Jet& u) {
        const double u0 = u.value();
        if (std::abs(u0) < 1e-300) throw DomainError("division by a value below 1e-300");
        std::vector<double> t(u.order() + 1);
        double p = 1.0 / u0;
        for (int k = 0; k <= u.order(); ++k) {
            t[k] = (k % 2 ? -p : p);
            p /= u0;
        }
        return compose_univariate(u, t);
    }

    friend Jet sin(const Jet& u) {
        const double s = std::sin(u.value()), c = std::cos(u.value());
        std::vector<double> t(u.order() + 1);
        const double cyc[4] = {s, c, -s, -c};
        double fact = 1.0;
        for (int k = 0; k <= u.order(); ++k) {
            if (k > 0) fact *= k;
            t[k] = cyc[k % 4] / fact;
        }
        return compose_univariate(u, t);
    }

    friend Jet cos(const Jet& u) {
        const double s = std::sin(u.value()), c = std::cos(u.value());
        std::vector<double> t(u.order() + 1);
        const double cyc[4] = {c, -s, -c, s};
        double fact = 1.0;
        for (int k = 0; k <= u.order(); ++k) {
            if (k > 0) fact *= k;
            t[k] = cyc[k % 4] / fact;
        }
        return compose_univariate(u, t);
    }

    friend Jet exp(const Jet& u) {
        const double e = std::exp(u.value());
        std::vector<double> t(u.order() + 1);
        double fact = 1.0;
        for (int k = 0; k <= u.order(); ++k) {
            if (k > 0) fact *= k;
            t[k] = e / fact;
        }
        return compose_univariate(u, t);
    }

    friend Jet log(const Jet& u) {
        const double u0 = u.value();
        if (!(u0 > 0.0)) throw DomainError("log of non-positive value");
        std::vector<double> t(u.order() + 1);
        t[0] = std::log(u0);
        double p = 1.0;
        for (int k = 1; k <= u.order(); ++k) {
            p /= u0;
            t[k] = (k % 2 ? p : -p) / k;
        }
        return compose_univariate(u, t);
    }

    /// u^c for a real constant c. Non-negative integer powers use repeated
    /// multiplication and accept any base; other powers need a positive base.
    friend Jet pow(const Jet& u, double c) {
        const double rc = std::round(c);
        if (rc == c && std::abs(c) <= 64.0) {
            long n = long(rc);
            if (n < 0) return reciprocal(pow(u, double(-n)));
            Jet result = Jet::constant(u.layout_, 1.0);
            Jet base = u;
            while (n > 0) {
                if (n & 1) result = result * base;
                n >>= 1;
                if (n) base = base * base;
            }
            return result;
        }
        const double u0 = u.value();
        if (!(u0 > 0.0)) throw DomainError("non-integer power of non-positive value");
        std::vector<double> t(u.order() + 1);
        double coef = 1.0;  // c (c-1) ... (c-k+1) / k!
        for (int k = 0; k <= u.order(); ++k) {
            t[k] = coef * std::pow(u0, c - k);
            coef *= (c - k) / (k + 1);
        }
        return compose_univariate(u, t);
    }

    friend Jet sqrt(const Jet& u) {
        if (u.order() == 0) {
            if (u.value() < 0.0) throw DomainError("sqrt of negative value");
            return Jet::constant(u.layout_, std::sqrt(u.value()));
        }
        if (!(u.value() > 0.0)) throw DomainError("sqrt of non-positive value");
        return pow(u, 0.5);
    }

private:
    static void check_compatible(const Jet& a, const Jet& b) {
        if (a.nvars() != b.nvars()) throw std::invalid_argument("jets over different variable counts");
    }

    Jet& accumulate(const Jet& o, double s) {
        check_compatible(*this, o);
        if (o.order() < order()) *this = truncated(o.order());
        for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += s * o.c_[k];
        return *this;
    }

    JetLayoutPtr layout_;
    std::vector<double> c_;
};

/// Value-like helpers so kernels can be written once for double and Jet.
inline double value_of(double x) { return x; }
inline double value_of(const Jet& x) { return x.value(); }
inline double zero_like(double) { return 0.0; }
inline Jet zero_like(const Jet& x) { return Jet(x.layout()); }
inline double constant_like(double, double c) { return c; }
inline Jet constant_like(const Jet& x, double c) { return Jet::constant(x.layout(), c); }

/// Substitutes x-jets into y-jets: f(y0 + delta(x)) where f is a jet in n
/// variables around y0 and `delta` holds n x-jets whose constant terms are
/// ignored. Powers of delta are built once and reused across many f.
class JetComposer {
public:
    explicit JetComposer(std::span<const Jet> delta) {
        if (delta.empty()) throw std::invalid_argument("compose: no substitution jets");
        order_ = delta[0].order();
        for (const auto& d : delta) order_ = std::min(order_, d.order());
        layout_ = JetLayout::get(delta[0].nvars(), order_);
        powers_.resize(delta.size());
        for (std::size_t v = 0; v < delta.size(); ++v) {
            Jet d = delta[v].truncated(order_);
            d.coefficients()[0] = 0.0;
            powers_[v].push_back(Jet::constant(layout_, 1.0));
            for (int p = 1; p <= order_; ++p) powers_[v].push_back(powers_[v].back() * d);
        }
    }

    /// The result has the lower of f's order and the substitution order.
    Jet operator()(const Jet& f) const {
        if (std::size_t(f.nvars()) != powers_.size()) throw std::invalid_argument("compose: variable count mismatch");
        const int order = std::min(order_, f.order());
        Jet out(JetLayout::get(layout_->nvars(), order));
        const auto& F = *f.layout();
        const auto fc = f.coefficients();
        for (std::size_t k = 0; k < F.prefix(order); ++k) {
            if (fc[k] == 0.0) continue;
            const auto& a = F.monomial(k);
            Jet term = Jet::constant(out.layout(), fc[k]);
            for (std::size_t v = 0; v < powers_.size(); ++v)
                if (a[v]) term = term * powers_[v][a[v]];
            out += term;
        }
        return out;
    }

private:
    int order_ = 0;
    JetLayoutPtr layout_;
    std::vector<std::vector<Jet>> powers_;
};

inline Jet compose(const Jet& f, std::span<const Jet> delta) { return JetComposer(delta)(f); }

}  // namespace symphonic

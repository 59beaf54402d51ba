#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "symphonic/jet.hpp"
#include "symphonic/numeric.hpp"

using namespace symphonic;

namespace {

MultiIndex mi(std::initializer_list<int> v) {
    MultiIndex a{};
    int k = 0;
    for (int x : v) a[k++] = std::uint8_t(x);
    return a;
}

// A sparse polynomial sum c * x^a, differentiated term by term as the oracle.
struct Poly {
    std::vector<std::pair<double, MultiIndex>> terms;

    double derivative(const MultiIndex& d, std::span<const double> x, int nvars) const {
        double s = 0.0;
        for (const auto& [c, a] : terms) {
            double t = c;
            for (int v = 0; v < nvars; ++v) {
                if (d[v] > a[v]) {
                    t = 0.0;
                    break;
                }
                for (int k = 0; k < d[v]; ++k) t *= a[v] - k;
                t *= std::pow(x[v], a[v] - d[v]);
            }
            s += t;
        }
        return s;
    }

    Jet eval(std::span<const Jet> x) const {
        Jet s = zero_like(x[0]);
        for (const auto& [c, a] : terms) {
            Jet t = constant_like(x[0], c);
            for (std::size_t v = 0; v < x.size(); ++v)
                for (int k = 0; k < a[v]; ++k) t = t * x[v];
            s += t;
        }
        return s;
    }
};

}  // namespace

TEST(Jet, LayoutCountsMonomials) {
    // binomial(n + k, k)
    EXPECT_EQ(JetLayout::get(1, 4)->size(), 5u);
    EXPECT_EQ(JetLayout::get(2, 4)->size(), 15u);
    EXPECT_EQ(JetLayout::get(3, 2)->size(), 10u);
    EXPECT_EQ(JetLayout::get(2, 0)->size(), 1u);
}

TEST(Jet, SquareAtThree) {
    auto t = Jet::variables(std::vector<double>{3.0}, 2);
    Jet y = t[0] * t[0];
    EXPECT_DOUBLE_EQ(y.coefficient(mi({0})), 9.0);
    EXPECT_DOUBLE_EQ(y.coefficient(mi({1})), 6.0);
    EXPECT_DOUBLE_EQ(y.coefficient(mi({2})), 1.0);
}

TEST(Jet, FractionalPowerDerivatives) {
    auto t = Jet::variables(std::vector<double>{1.0}, 4);
    Jet y = pow(t[0], 4.0 / 3.0);
    EXPECT_NEAR(y.derivative(mi({1})), 4.0 / 3.0, 1e-14);
    EXPECT_NEAR(y.derivative(mi({2})), 4.0 / 9.0, 1e-14);
    EXPECT_NEAR(y.derivative(mi({3})), -8.0 / 27.0, 1e-14);
    EXPECT_NEAR(y.derivative(mi({4})), 40.0 / 81.0, 1e-13);
}

TEST(Jet, ProductRuleAtOrigin) {
    auto x = Jet::variables(std::vector<double>{0.0, 2.0}, 2);
    Jet y = sin(x[0]) * x[1];
    EXPECT_NEAR(y.derivative(mi({1, 0})), 2.0, 1e-15);
    EXPECT_NEAR(y.derivative(mi({0, 1})), 0.0, 1e-15);
    EXPECT_NEAR(y.derivative(mi({1, 1})), 1.0, 1e-15);
    EXPECT_NEAR(y.derivative(mi({2, 0})), 0.0, 1e-15);
}

TEST(Jet, ElementaryFunctionsMatchClosedForms) {
    const double x0 = 0.7;
    auto x = Jet::variables(std::vector<double>{x0}, 4);
    Jet e = exp(x[0]), l = log(x[0]), c = cos(x[0]), r = 1.0 / x[0], s = sqrt(x[0]);
    for (int k = 0; k <= 4; ++k) {
        const MultiIndex a = mi({k});
        EXPECT_NEAR(e.derivative(a), std::exp(x0), 1e-13);
        const double cyc[4] = {std::cos(x0), -std::sin(x0), -std::cos(x0), std::sin(x0)};
        EXPECT_NEAR(c.derivative(a), cyc[k % 4], 1e-13);
        // d^k (1/x) = (-1)^k k! x^-(k+1)
        double fk = 1.0;
        for (int i = 2; i <= k; ++i) fk *= i;
        EXPECT_NEAR(r.derivative(a), (k % 2 ? -1.0 : 1.0) * fk * std::pow(x0, -(k + 1)), 1e-11);
        if (k >= 1) {  // d^k log x = (-1)^(k-1) (k-1)! x^-k
            EXPECT_NEAR(l.derivative(a), (k % 2 ? 1.0 : -1.0) * (fk / k) * std::pow(x0, -k), 1e-11);
        }
    }
    // d^2 sqrt(x) = -1/4 x^-3/2
    EXPECT_NEAR(s.derivative(mi({2})), -0.25 * std::pow(x0, -1.5), 1e-13);
}

TEST(Jet, RandomPolynomialsMatchHandDifferentiation) {
    Rng rng(42);
    for (int trial = 0; trial < 40; ++trial) {
        const int nvars = 1 + int(rng.uniform() * 3);
        Poly p;
        for (int t = 0; t < 6; ++t) {
            MultiIndex a{};
            int budget = 4;
            for (int v = 0; v < nvars; ++v) {
                const int d = int(rng.uniform() * (budget + 1));
                a[v] = std::uint8_t(d);
                budget -= d;
            }
            p.terms.push_back({rng.uniform(-2.0, 2.0), a});
        }
        std::vector<double> base(nvars);
        for (auto& b : base) b = rng.uniform(-1.5, 1.5);
        auto x = Jet::variables(base, 4);
        Jet y = p.eval(x);
        const auto& L = *y.layout();
        for (std::size_t k = 0; k < L.size(); ++k) {
            const double want = p.derivative(L.monomial(k), base, nvars);
            EXPECT_NEAR(y.derivative(L.monomial(k)), want, 1e-12 * (1.0 + std::abs(want)));
        }
    }
}

TEST(Jet, TruncationIsConsistentAcrossOrders) {
    const std::vector<double> base{0.4, -0.3};
    auto f = [](std::span<const Jet> x) { return exp(x[0] * x[1]) / (2.0 + sin(x[0])) + pow(x[1] + 2.0, 1.5); };
    auto lo = Jet::variables(base, 2);
    auto hi = Jet::variables(base, 4);
    Jet a = f(lo), b = f(hi).truncated(2);
    ASSERT_EQ(a.coefficients().size(), b.coefficients().size());
    for (std::size_t k = 0; k < a.coefficients().size(); ++k)
        EXPECT_NEAR(a.coefficients()[k], b.coefficients()[k], 1e-14);
}

TEST(Jet, PartialDropsOneOrder) {
    auto x = Jet::variables(std::vector<double>{1.0, 2.0}, 3);
    Jet y = x[0] * x[0] * x[1];  // d/dx0 = 2 x0 x1
    Jet d = y.partial(0);
    EXPECT_EQ(d.order(), 2);
    EXPECT_DOUBLE_EQ(d.value(), 4.0);
    EXPECT_DOUBLE_EQ(d.derivative(mi({0, 1})), 2.0);
    EXPECT_DOUBLE_EQ(d.derivative(mi({1, 0})), 4.0);
    EXPECT_THROW(Jet::constant(JetLayout::get(1, 0), 1.0).partial(0), std::logic_error);
}

TEST(Jet, CompositionMatchesDirectEvaluation) {
    // f(y) = y0^2 * sin(y1) composed with y = (x0 + x1, x0 * x1)
    const std::vector<double> xb{0.3, 0.8};
    auto x = Jet::variables(xb, 4);
    Jet y0 = x[0] + x[1], y1 = x[0] * x[1];
    Jet direct = y0 * y0 * sin(y1);
    auto y = Jet::variables(std::vector<double>{y0.value(), y1.value()}, 4);
    Jet f = y[0] * y[0] * sin(y[1]);
    std::vector<Jet> delta{y0, y1};
    Jet composed = compose(f, delta);
    for (std::size_t k = 0; k < direct.coefficients().size(); ++k)
        EXPECT_NEAR(direct.coefficients()[k], composed.coefficients()[k], 1e-13);
}

TEST(Jet, DomainErrors) {
    auto x = Jet::variables(std::vector<double>{0.0}, 2);
    EXPECT_THROW(1.0 / x[0], DomainError);
    EXPECT_THROW(log(x[0]), DomainError);
    EXPECT_THROW(pow(x[0] - 1.0, 0.5), DomainError);
    EXPECT_NO_THROW(pow(x[0] - 1.0, 3.0));
}

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"

using namespace symphonic;
using namespace symphonic::testing;

namespace {

const double kPi = std::numbers::pi;

MapSpec sphere_inclusion(int m = 2) { return load_spec("builtin:sphere-" + std::to_string(m)).map; }

/// A curved source and a curved target with off-diagonal metrics.
MapSpec curved_map() {
    ManifoldModel src({"a", "b"}, {"1 + 0.3*sin(a)*cos(b)", "0.2*cos(a + b)", "0.2*cos(a + b)", "2 + 0.5*sin(b)"},
                      {{-1, 1, false}, {-1, 1, false}});
    ManifoldModel tgt({"u", "v", "w"},
                      {"1 + 0.2*cos(v)", "0.1*sin(w)", "0", "0.1*sin(w)", "1 + 0.2*sin(u)", "0.05*u", "0", "0.05*u",
                       "2 + cos(u*v)"},
                      {});
    return MapSpec(src, tgt, {"sin(a) + a*b", "exp(0.3*b)*cos(a)", "a^2 - b + 0.1*a*b^2"});
}

}  // namespace

TEST(Differential, IdentityPowerAndConstant) {
    const auto E = ManifoldModel::euclidean({"x", "y"});
    const auto T = ManifoldModel::euclidean({"u", "v"});
    const Vector x{0.4, 1.3};
    const auto d = differential(MapSpec(E, T, {"x", "y"}), x);
    EXPECT_EQ(d.data, (Vector{1, 0, 0, 1}));
    const auto c = differential(MapSpec(E, T, {"3", "-2"}), x);
    EXPECT_EQ(c.data, (Vector{0, 0, 0, 0}));
    const MapSpec curve(ManifoldModel::euclidean({"t"}), ManifoldModel::euclidean({"y"}), {"pow(t, 4/3)"});
    const Vector one{1.0};
    EXPECT_NEAR(differential(curve, one)(0, 0), 4.0 / 3.0, 1e-15);
}

TEST(Pullback, IdentityScalingAndSphere) {
    const auto S = load_spec("builtin:torus-test").map.target;
    const MapSpec id(S, S, {"u", "v"});
    const Vector x{0.7, 2.1};
    const auto p = pullback_metric(id, x);
    const auto g = metric_at(S, x).g;
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(p.data[k], g.data[k], 1e-15);

    const auto E = ManifoldModel::euclidean({"x", "y", "z"});
    const auto s2 = pullback_metric(MapSpec(E, E, {"2*x", "2*y", "2*z"}), Vector{0.1, 0.2, 0.3});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(s2(i, j), i == j ? 4.0 : 0.0);

    const auto f = sphere_inclusion();
    Rng rng(2);
    for (int k = 0; k < 20; ++k) {
        const auto q = f.source.sample(rng);
        const auto pb = pullback_metric(f, q);
        EXPECT_NEAR(pb(0, 0), 1.0, 1e-12);
        EXPECT_NEAR(pb(0, 1), 0.0, 1e-12);
        EXPECT_NEAR(pb(1, 1), std::sin(q[0]) * std::sin(q[0]), 1e-12);
    }
}

TEST(EnergyDensity, IdentityScalingAndSphere) {
    for (int m = 1; m <= 4; ++m) {
        std::vector<std::string> c, id, sc;
        for (int i = 0; i < m; ++i) {
            c.push_back("x" + std::to_string(i));
            id.push_back(c.back());
            sc.push_back("1.5*" + c.back());
        }
        const auto E = ManifoldModel::euclidean(c);
        const Vector x(m, 0.25);
        EXPECT_NEAR(symphonic_energy_density(MapSpec(E, E, id), x), m, 1e-14);
        EXPECT_NEAR(symphonic_energy_density(MapSpec(E, E, sc), x), std::pow(1.5, 4) * m, 1e-12);
    }
    for (int m = 2; m <= 4; ++m) {
        const auto f = sphere_inclusion(m);
        Rng rng(m);
        const auto x = f.source.sample(rng);
        EXPECT_NEAR(symphonic_energy_density(f, x), m, 1e-12);
    }
}

TEST(SecondFundamentalForm, LinearSphereAndCurve) {
    const auto E = ManifoldModel::euclidean({"x", "y"});
    const MapSpec lin(E, E, {"2*x + y", "x - 3*y"});
    const Vector x{0.3, 0.4}, X{1, 2}, Y{-1, 0.5};
    for (double v : second_fundamental_form(lin, x, X, Y)) EXPECT_EQ(v, 0.0);

    const auto f = sphere_inclusion();
    Rng rng(4);
    for (int k = 0; k < 20; ++k) {
        const auto q = f.source.sample(rng);
        const Vector A{rng.uniform(-1, 1), rng.uniform(-1, 1)}, B{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const auto P = f.value(q);
        const double ab = dot(A, metric_at(f.source, q).g * B);
        const auto s = second_fundamental_form(f, q, A, B);
        for (int a = 0; a < 3; ++a) EXPECT_NEAR(s[a], -ab * P[a], 1e-12);
    }
    const MapSpec curve(ManifoldModel::euclidean({"t"}), ManifoldModel::euclidean({"y"}), {"t^2"});
    const Vector t{1.7}, e{1.0};
    EXPECT_NEAR(second_fundamental_form(curve, t, e, e)[0], 2.0, 1e-14);
}

TEST(SecondFundamentalForm, SymmetricOnCurvedCharts) {
    const auto f = curved_map();
    Rng rng(6);
    for (int k = 0; k < 20; ++k) {
        const auto x = f.source.sample(rng);
        const Vector X{rng.uniform(-1, 1), rng.uniform(-1, 1)}, Y{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const auto a = second_fundamental_form(f, x, X, Y), b = second_fundamental_form(f, x, Y, X);
        for (int i = 0; i < 3; ++i) EXPECT_NEAR(a[i], b[i], 1e-10);
    }
}

TEST(Tension, IdentitySphereAndScalar) {
    const auto S = load_spec("builtin:torus-test").map.target;
    const MapSpec id(S, S, {"u", "v"});
    const Vector x{0.7, 2.1};
    for (double v : tension_field(id, x)) EXPECT_NEAR(v, 0.0, 1e-14);
    for (int m = 2; m <= 4; ++m) {
        const auto f = sphere_inclusion(m);
        Rng rng(10 + m);
        const auto q = f.source.sample(rng);
        const auto t = tension_field(f, q);
        const auto P = f.value(q);
        for (int a = 0; a <= m; ++a) EXPECT_NEAR(t[a], -m * P[a], 1e-12);
    }
    const auto sc = load_spec("builtin:scalar-symphonic").map;
    const Vector p{1.0, 0.0};
    EXPECT_GT(std::abs(tension_field(sc, p)[0]), 1e-3);
}

TEST(Stress, Tensorial) {
    const auto f = curved_map();
    Rng rng(8);
    for (int k = 0; k < 20; ++k) {
        const auto x = f.source.sample(rng);
        const Vector X{rng.uniform(-1, 1), rng.uniform(-1, 1)}, Y{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
        Vector Z(2);
        for (int i = 0; i < 2; ++i) Z[i] = a * X[i] + b * Y[i];
        const auto sx = symphonic_stress(f, x, X), sy = symphonic_stress(f, x, Y), sz = symphonic_stress(f, x, Z);
        for (int i = 0; i < 3; ++i) EXPECT_NEAR(sz[i], a * sx[i] + b * sy[i], 1e-10);
    }
}

TEST(SymphonicTension, LinearMapsVanish) {
    const auto E = ManifoldModel::euclidean({"x", "y"});
    const auto T = ManifoldModel::euclidean({"u", "v", "w"});
    const MapSpec lin(E, T, {"2*x + y", "x - 3*y", "0.5*x"});
    const Vector x{0.3, -0.4};
    for (double v : symphonic_tension(lin, x)) EXPECT_EQ(v, 0.0);
}

TEST(SymphonicTension, CurveFormula) {
    // For a curve into Euclidean space tau^s = (|gamma'|^2 gamma')' = 2 <gamma', gamma''> gamma' + |gamma'|^2 gamma'',
    // which reduces to 3 gamma'^2 gamma'' for n = 1 only.
    const MapSpec c1(ManifoldModel::euclidean({"t"}), ManifoldModel::euclidean({"y"}), {"t^3"});
    const Vector t{1.3};
    EXPECT_NEAR(symphonic_tension(c1, t)[0], 3 * std::pow(3 * 1.3 * 1.3, 2) * 6 * 1.3, 1e-10);
    const MapSpec c2(ManifoldModel::euclidean({"t"}), ManifoldModel::euclidean({"y1", "y2"}), {"t^2", "t^3"});
    const Vector one{1.0};
    const auto ts = symphonic_tension(c2, one);
    // gamma' = (2, 3), gamma'' = (2, 6): 2*22*(2, 3) + 13*(2, 6).
    EXPECT_NEAR(ts[0], 114.0, 1e-12);
    EXPECT_NEAR(ts[1], 210.0, 1e-12);
}

TEST(SymphonicTension, SphereInclusion) {
    for (int m = 2; m <= 4; ++m) {
        const auto f = sphere_inclusion(m);
        Rng rng(20 + m);
        for (int k = 0; k < 10; ++k) {
            const auto q = f.source.sample(rng);
            const auto t = symphonic_tension(f, q);
            const auto P = f.value(q);
            for (int a = 0; a <= m; ++a) EXPECT_NEAR(t[a], -m * P[a], 1e-12);
        }
    }
}

TEST(SymphonicTension, CovariantSumMatchesDivergenceForm) {
    const auto f = curved_map();
    Rng rng(12);
    for (int k = 0; k < 20; ++k) {
        const auto x = f.source.sample(rng);
        const auto div = symphonic_tension_divergence(f, x, 2);
        const auto cov = symphonic_tension(local_jets(f, x, 4));
        for (int a = 0; a < 3; ++a) {
            const auto& p = div[a].coefficients();
            const auto& q = cov[a].coefficients();
            ASSERT_EQ(p.size(), q.size());
            EXPECT_LT(rel_diff(p, q), 1e-12);
        }
    }
}

TEST(SymphonicTension, FrameIndependence) {
    const auto f = curved_map();
    Rng rng(14);
    for (int k = 0; k < 50; ++k) {
        const auto x = f.source.sample(rng);
        const Matrix R = random_rotation(rng, 2);
        EXPECT_LT(rel_diff(symphonic_tension(f, x), symphonic_tension(f, x, &R)), 1e-9);
        EXPECT_LT(rel_diff(tension_field(f, x), tension_field(f, x, &R)), 1e-9);
        const double e0 = symphonic_energy_density(f, x), e1 = symphonic_energy_density(f, x, &R);
        EXPECT_LT(std::abs(e0 - e1) / e0, 1e-9);
    }
}

TEST(ScalarResidual, AffineSquaredNormAndExample) {
    const auto E2 = ManifoldModel::euclidean({"x", "y"});
    const Vector x{0.4, -1.1};
    EXPECT_NEAR(scalar_symphonic_residual(E2, Expr::parse("3*x - 2*y + 1", E2.coords()), x), 0.0, 1e-14);
    for (int n = 1; n <= 4; ++n) {
        std::vector<std::string> c;
        std::string f;
        for (int i = 0; i < n; ++i) {
            c.push_back("x" + std::to_string(i));
            f += (i ? " + " : "") + c.back() + "^2";
        }
        const auto E = ManifoldModel::euclidean(c);
        Rng rng(n);
        Vector p(n);
        double r2 = 0;
        for (double& v : p) {
            v = rng.uniform(-1, 1);
            r2 += v * v;
        }
        EXPECT_NEAR(scalar_symphonic_residual(E, Expr::parse(f, E.coords()), p), 8.0 * (n + 2) * r2, 1e-11);
    }
    const auto f = Expr::parse("pow(x^2 + y^2, 1/3)", E2.coords());
    Rng rng(3);
    for (int k = 0; k < 50; ++k) {
        const double r = rng.uniform(0.2, 3), a = rng.uniform(0, 2 * kPi);
        const Vector p{r * std::cos(a), r * std::sin(a)};
        EXPECT_LE(std::abs(scalar_symphonic_residual(E2, f, p)), 1e-9);
    }
}

TEST(ScalarResidual, EqualsSymphonicTensionIntoTheLine) {
    const ManifoldModel src({"a", "b"}, {"1 + 0.3*sin(a)*cos(b)", "0.2*cos(a + b)", "0.2*cos(a + b)", "2 + 0.5*sin(b)"},
                            {{-1, 1, false}, {-1, 1, false}});
    const auto line = ManifoldModel::euclidean({"s"});
    const std::vector<std::string> fs = {"sin(a)*exp(b)", "a^3 - a*b + cos(2*b)", "log(3 + a + b^2)"};
    Rng rng(9);
    for (const auto& fsrc : fs) {
        const MapSpec f(src, line, {fsrc});
        for (int k = 0; k < 10; ++k) {
            const auto x = src.sample(rng);
            const double r = scalar_symphonic_residual(src, f.components[0], x);
            const double t = symphonic_tension(f, x)[0];
            EXPECT_LE(std::abs(r - t), 1e-9 * std::max(1.0, std::abs(r)));
        }
    }
}

TEST(Maps, ImageOutsideTargetIsADomainError) {
    const auto E = ManifoldModel::euclidean({"x"});
    const ManifoldModel T = ManifoldModel::euclidean({"y"}, {{-1, 1, false}});
    const MapSpec f(E, T, {"5*x"});
    const Vector x{0.5};
    EXPECT_THROW(symphonic_tension(f, x), DomainError);
}

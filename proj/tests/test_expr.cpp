#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "symphonic/expr.hpp"

using namespace symphonic;

namespace {
const std::vector<std::string> kXY{"x", "y"};
const std::vector<std::string> kT{"t"};

double at(const std::string& src, std::vector<double> p, const std::vector<std::string>& c = kXY) {
    return Expr::parse(src, c)(p);
}
}  // namespace

TEST(Expr, SumOfSquaresTree) {
    Expr e = Expr::parse("x^2 + y^2", kXY);
    const auto& r = *e.root();
    ASSERT_EQ(r.kind, Expr::Kind::add);
    EXPECT_EQ(r.lhs->kind, Expr::Kind::pow);
    EXPECT_EQ(r.lhs->value, 2.0);
    EXPECT_EQ(r.lhs->lhs->var, 0);
    EXPECT_EQ(r.rhs->lhs->var, 1);
}

TEST(Expr, FractionalPowerOfRadius) {
    Expr a = Expr::parse("pow(x^2 + y^2, 1/3)", kXY);
    Expr b = Expr::parse("(x^2+y^2)^(1/3)", kXY);
    EXPECT_TRUE(a == b);
    EXPECT_NEAR(a(std::vector<double>{3.0, 4.0}), std::cbrt(25.0), 1e-14);
}

TEST(Expr, Precedence) {
    EXPECT_DOUBLE_EQ(at("-x^2", {3, 0}), -9.0);
    EXPECT_DOUBLE_EQ(at("2*x^2", {3, 0}), 18.0);
    EXPECT_DOUBLE_EQ(at("x - y - 1", {5, 2}), 2.0);
    EXPECT_DOUBLE_EQ(at("x / y / 2", {8, 2}), 2.0);
    EXPECT_DOUBLE_EQ(at("x^3^2", {2, 0}), 512.0);  // right-associative
    EXPECT_DOUBLE_EQ(at("t^4/3", {8}, kT), 16.0);
    EXPECT_DOUBLE_EQ(at("t^-1", {4}, kT), 0.25);
    EXPECT_DOUBLE_EQ(at("t^(15/11)", {1}, kT), 1.0);
    EXPECT_NEAR(at("2*pi", {0, 0}), 2 * std::numbers::pi, 1e-15);
    EXPECT_DOUBLE_EQ(at("1.5e2 + .5", {0, 0}), 150.5);
}

TEST(Expr, SyntaxErrorsCarryPosition) {
    try {
        Expr::parse("sin(t", kT);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 1);
        EXPECT_EQ(e.column(), 6);
        EXPECT_NE(std::string(e.what()).find("')'"), std::string::npos);
    }
    try {
        Expr::parse("x +\n  * y", kXY);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2);
        EXPECT_EQ(e.column(), 3);
    }
    EXPECT_THROW(Expr::parse("x^y", kXY), ParseError);
    EXPECT_THROW(Expr::parse("pow(x, y)", kXY), ParseError);
    EXPECT_THROW(Expr::parse("abs(x)", kXY), ParseError);
    EXPECT_THROW(Expr::parse("x y", kXY), ParseError);
    EXPECT_THROW(Expr::parse("", kXY), ParseError);
}

TEST(Expr, UndeclaredVariableIsNamed) {
    try {
        Expr::parse("x + z", kXY);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("'z'"), std::string::npos);
        EXPECT_EQ(e.column(), 5);
    }
}

TEST(Expr, JetOfSquare) {
    Jet j = eval_jet(Expr::parse("t^2", kT), std::vector<double>{3.0}, 2);
    EXPECT_DOUBLE_EQ(j.coefficients()[0], 9.0);
    EXPECT_DOUBLE_EQ(j.coefficients()[1], 6.0);
    EXPECT_DOUBLE_EQ(j.coefficients()[2], 1.0);
}

TEST(Expr, JetOfFractionalPower) {
    Jet j = eval_jet(Expr::parse("pow(t, 4/3)", kT), std::vector<double>{1.0}, 4);
    const double want[] = {4.0 / 3.0, 4.0 / 9.0, -8.0 / 27.0, 40.0 / 81.0};
    for (int k = 1; k <= 4; ++k) {
        MultiIndex a{};
        a[0] = std::uint8_t(k);
        EXPECT_NEAR(j.derivative(a), want[k - 1], 1e-13);
    }
}

TEST(Expr, DomainErrorNamesNode) {
    Expr e = Expr::parse("x + log(y - 1)", kXY);
    try {
        e(std::vector<double>{0.0, 0.5});
        FAIL();
    } catch (const DomainError& err) {
        EXPECT_NE(std::string(err.what()).find("log((y - 1))"), std::string::npos) << err.what();
    }
    EXPECT_THROW(eval_jet(e, std::vector<double>{0.0, 1.0}, 2), DomainError);
    EXPECT_THROW(at("1/(x-y)", {1, 1}), DomainError);
    EXPECT_THROW(at("(x)^(1/2)", {-1, 0}), DomainError);
    EXPECT_THROW(at("x^-1", {0, 0}), DomainError);
}

TEST(Expr, PrintParseRoundTrip) {
    const char* sources[] = {"x^2 + y^2", "pow(x^2 + y^2, 1/3)", "-sin(x)*cos(y)/(1 + exp(x))",
                             "sqrt(2 + x^2) - log(3 + y) * -x", "x^3^0.5 - 0.1*y", "(x - (y - 1)) - -2"};
    for (const char* s : sources) {
        Expr a = Expr::parse(s, kXY);
        Expr b = Expr::parse(a.to_string(), kXY);
        EXPECT_TRUE(a == b) << s << " -> " << a.to_string();
        EXPECT_EQ(a.to_string(), b.to_string());
    }
}

TEST(Expr, JetAgreesWithPointEvaluation) {
    Expr e = Expr::parse("sin(x*y) + (x^2 + 1)^(2/3) / (2 + cos(y))", kXY);
    const std::vector<double> p{0.4, 1.1};
    EXPECT_NEAR(eval_jet(e, p, 4).value(), e(p), 1e-15);
}

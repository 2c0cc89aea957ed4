#include "fkan/error.hpp"
#include "fkan/jacobi.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace fkan;
using namespace fkan::jacobi;

namespace {

double j(Basis b, unsigned n, double z)
{
    const double pts[] = {z};
    return eval_all(b, n, pts)(n, 0);
}

} // namespace

TEST(Pochhammer, Examples)
{
    EXPECT_EQ(pochhammer(7.3, 0), 1.0);
    EXPECT_EQ(pochhammer(-4.0, 0), 1.0);
    EXPECT_EQ(pochhammer(3.0, 2), 12.0);
    EXPECT_EQ(pochhammer(-2.0, 4), 0.0);
}

TEST(Hyp2f1, Examples)
{
    EXPECT_EQ(hyp2f1_polynomial(0, 3.1, 0.7, 0.9), 1.0);
    EXPECT_NEAR(jacobi_via_hyp2f1({0, 0}, 1, 0.3), 0.3, 1e-15);
    EXPECT_NEAR(hyp2f1_polynomial(-1, 2, 1, 0.35), 0.3, 1e-15);
    EXPECT_NEAR(jacobi_via_hyp2f1({0, 0}, 2, 0.5), -0.125, 1e-15);
    EXPECT_THROW((void)hyp2f1_polynomial(-1.5, 1, 1, 0.2), DomainError);
    EXPECT_THROW((void)hyp2f1_polynomial(2, 1, 1, 0.2), DomainError);
}

TEST(EvalAll, Examples)
{
    const double pts[] = {-1.0, -0.3, 0.5, 1.0};
    const ad::Tensor rows = eval_all({0.4, 1.7}, 4, pts);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(rows(0, k), 1.0);
    EXPECT_NEAR(j({0, 0}, 2, 0.5), -0.125, 1e-15);
    EXPECT_NEAR(j({1, 0.5}, 5, 0.7), jacobi_via_hyp2f1({1, 0.5}, 5, 0.7), 1e-10);
}

TEST(EvalAll, DomainErrors)
{
    const double pts[] = {0.1};
    EXPECT_THROW((void)eval_all({-1.0, 0}, 2, pts), DomainError);
    EXPECT_THROW((void)eval_all({0, -1.5}, 2, pts), DomainError);
    const double out[] = {1.1};
    EXPECT_THROW((void)eval_all({0, 0}, 2, out), DomainError);
    const double graze[] = {1.0 + 5e-13, -1.0 - 5e-13};
    const ad::Tensor rows = eval_all({0, 0}, 3, graze);
    EXPECT_NEAR(rows(3, 0), 1.0, 1e-15);
    EXPECT_NEAR(rows(3, 1), -1.0, 1e-15);
}

TEST(Derivative, Examples)
{
    const double pts[] = {-0.8, 0.1, 0.5};
    const ad::Tensor rows = eval_all({0.3, 0.6}, 4, pts);
    const auto d0 = derivative({0.3, 0.6}, 4, 0, pts);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(d0[k], rows(4, k));
    const double half[] = {0.5};
    EXPECT_NEAR(derivative({0, 0}, 2, 1, half)[0], 1.5, 1e-15);
    for (double v : derivative({0.3, 0.6}, 4, 5, pts)) EXPECT_EQ(v, 0.0);
}

TEST(FractionalMap, Examples)
{
    const double s1[] = {1.0, 0.25};
    const auto r = FractionalMap{0, 1, 0.5}.apply(s1);
    EXPECT_DOUBLE_EQ(r[0], 1.0);
    EXPECT_DOUBLE_EQ(r[1], 0.0);
    const double s2[] = {0.5};
    const FractionalMap affine{0, 1, 1.0};
    EXPECT_DOUBLE_EQ(affine.apply(s2)[0], 0.0);
    const double bad[] = {0.2, 0.0};
    EXPECT_THROW((void)FractionalMap{}.apply(bad), DomainError);
}

TEST(FractionalMap, EndpointsMapToUnitInterval)
{
    const FractionalMap fm{0.2, 0.9, 0.4};
    const double s[] = {std::pow(0.2, 1 / 0.4), std::pow(0.9, 1 / 0.4)};
    const auto r = fm.apply(s);
    EXPECT_NEAR(r[0], -1.0, 1e-14);
    EXPECT_NEAR(r[1], 1.0, 1e-14);
}

TEST(BoundaryValue, Examples)
{
    EXPECT_EQ(boundary_value({0.7, 0.2}, 0, -1), 1.0);
    EXPECT_EQ(boundary_value({0.7, 0.2}, 0, 1), 1.0);
    EXPECT_NEAR(boundary_value({0, 0}, 3, -1), -1.0, 1e-15);
    EXPECT_NEAR(boundary_value({0, 0.5}, 2, -1), 1.875, 1e-15);
}

TEST(BoundaryValue, MatchesEvaluation)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.9, 3.0);
    for (int t = 0; t < 20; ++t) {
        const Basis b{u(rng), u(rng)};
        for (unsigned n = 0; n <= 8; ++n) {
            EXPECT_NEAR(j(b, n, 1.0), boundary_value(b, n, 1), 1e-9 * (1 + std::abs(boundary_value(b, n, 1))));
            EXPECT_NEAR(j(b, n, -1.0), boundary_value(b, n, -1), 1e-9 * (1 + std::abs(boundary_value(b, n, -1))));
        }
    }
}

TEST(InnerProduct, Examples)
{
    EXPECT_LT(std::abs(inner_product({0, 0}, 1, 2, 64)), 1e-8);
    EXPECT_NEAR(inner_product({0, 0}, 0, 0, 64), 2.0, 1e-12);
    EXPECT_NEAR(inner_product({0, 0}, 1, 1, 64), 2.0 / 3.0, 1e-12);
}

TEST(InnerProduct, NormMatchesClosedForm)
{
    // ||J_n||^2 = 2^{a+b+1} / (2n+a+b+1) * G(n+a+1) G(n+b+1) / (G(n+a+b+1) n!)
    const Basis b{-0.6, 1.3};
    for (unsigned n = 0; n <= 5; ++n) {
        const double expect = std::pow(2.0, b.alpha + b.beta + 1) / (2 * n + b.alpha + b.beta + 1) *
                              std::exp(std::lgamma(n + b.alpha + 1) + std::lgamma(n + b.beta + 1) -
                                       std::lgamma(n + b.alpha + b.beta + 1) - std::lgamma(n + 1.0));
        EXPECT_NEAR(inner_product(b, n, n, 200), expect, 1e-9 * expect);
    }
}

TEST(GaussLegendre, IntegratesPolynomialsExactly)
{
    std::vector<double> x;
    std::vector<double> w;
    gauss_legendre(7, x, w);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], 12);
    EXPECT_NEAR(s, 2.0 / 13.0, 1e-15);
}

// Properties also covered by the acceptance suite, at a smaller sample.
TEST(JacobiProperties, SymmetryAndSturmLiouville)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-0.9, 3.0);
    std::uniform_real_distribution<double> zd(-1.0, 1.0);
    for (int t = 0; t < 10; ++t) {
        const Basis b{u(rng), u(rng)};
        for (unsigned n = 0; n <= 8; ++n) {
            const double z = zd(rng);
            const double pt[] = {z};
            const double lhs = j(b, n, -z);
            const double rhs = (n % 2 ? -1.0 : 1.0) * j({b.beta, b.alpha}, n, z);
            EXPECT_NEAR(lhs, rhs, 1e-10 * (1 + std::abs(rhs)));
            const double d1 = derivative(b, n, 1, pt)[0];
            const double d2 = derivative(b, n, 2, pt)[0];
            const double sl = (z * z - 1) * d2 + (b.alpha - b.beta + (b.alpha + b.beta + 2) * z) * d1;
            EXPECT_NEAR(sl, n * (n + 1 + b.alpha + b.beta) * j(b, n, z), 1e-8 * (1 + std::abs(sl)));
        }
    }
}

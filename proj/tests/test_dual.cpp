#include <doctest.h>
#include "helpers.hpp"
#include <cmath>

using namespace nomafd;
using namespace nomafd::testing;

namespace {

ChannelRealization<double> tiny_channel(int F)
{
    mat up = mat::Ones(1, F), down = mat::Ones(1, F);
    std::vector<mat> cross(F, mat::Constant(1, 1, 0.1));
    return make_channel(up, down, cross, vec::Constant(F, 0.01), 1.0, 1.0, 2.0);
}

/// Runs the ellipsoid method on f(mu) = |mu - target|^2 over mu >= 0.
vec minimize_quadratic(const vec& target, const vec& upper, int iters)
{
    auto s = make_dual_state(upper);
    for (int t = 0; t < iters; ++t) {
        Subgradient<double> g{2.0 * (s.mu - target)};
        record_dual_value(s, (s.mu - target).squaredNorm());
        s = ellipsoid_step(s, g);
    }
    return s.best_mu;
}

} // namespace

TEST_CASE("budget slack subgradients")
{
    const auto chan = tiny_channel(2);
    AllocationState a(1, 1, 2);
    a.assign(Slot::strong_up, 0, 0);
    a.assign(Slot::strong_up, 1, 0);
    a.assign(Slot::strong_down, 1, 1);
    PowerMatrix<double> P = PowerMatrix<double>::Zero(2, 2);
    P(0, 0) = 0.3;
    P(0, 1) = 0.5;
    P(1, 1) = 0.5;

    ResidualBudgets<double> r{vec::Constant(1, 1.0), 2.0};
    const auto g = subgradient_sa_wa(chan, a, P, r, true);
    CHECK(g.d(1) == doctest::Approx(0.2));
    CHECK(g.d(0) == doctest::Approx(1.5));

    // Weak block holds nothing, so its slack is the full residual.
    const auto gw = subgradient_sa_wa(chan, a, P, r, false);
    CHECK(gw.d(1) == 1.0);
    CHECK(gw.d(0) == 2.0);

    const auto gp = subgradient_pra(chan, a, P);
    CHECK(gp.d(1) == doctest::Approx(0.2));
    CHECK(gp.d(0) == doctest::Approx(1.5));
}

TEST_CASE("price upper bound")
{
    const auto chan = tiny_channel(2);
    ResidualBudgets<double> r{vec::Constant(1, 0.5), 2.0};
    const auto up = price_upper_bound(chan, r, 0.25);
    CHECK(up(0) == doctest::Approx(2.0 / (2.0 * std::log(2.0)) + 2 * 0.25 * 2.0));
    CHECK(up(1) == doctest::Approx(2.0 / (0.5 * std::log(2.0)) + 2 * 0.25 * 0.5));

    // Exhausted budgets fall back to a millionth of the full budget.
    ResidualBudgets<double> z{vec::Constant(1, 0.0), 0.0};
    CHECK(price_upper_bound(chan, z, 0.0)(1) == doctest::Approx(2.0 / (1e-6 * std::log(2.0))));
}

TEST_CASE("dual state covers the price box")
{
    const vec upper = (vec(3) << 2.0, 4.0, 6.0).finished();
    const auto s = make_dual_state(upper);
    CHECK(s.center.isApprox(upper / 2));
    CHECK(s.mu.isApprox(upper / 2));
    // Every corner of the box lies inside the ellipsoid.
    const Eigen::LLT<mat> llt(s.shape);
    for (int m = 0; m < 8; ++m) {
        vec z(3);
        for (int i = 0; i < 3; ++i) z(i) = (m >> i) & 1 ? upper(i) : 0.0;
        const vec d = z - s.center;
        CHECK(d.dot(llt.solve(d)) <= 1.0 + 1e-12);
    }
}

TEST_CASE("central cut")
{
    SUBCASE("hand example in two dimensions")
    {
        DualState<double> s;
        s.center = vec::Ones(2);
        s.shape = 4.0 * mat::Identity(2, 2);
        REQUIRE(central_cut(s, (vec(2) << 1.0, 0.0).finished()));
        CHECK(s.center(0) == doctest::Approx(1.0 / 3.0));
        CHECK(s.center(1) == doctest::Approx(1.0));
        CHECK(s.shape(0, 0) == doctest::Approx(16.0 / 9.0));
        CHECK(s.shape(1, 1) == doctest::Approx(16.0 / 3.0));
        CHECK(s.shape(0, 1) == doctest::Approx(0.0));
    }
    SUBCASE("volume shrinks by the standard factor")
    {
        std::mt19937_64 gen(31);
        std::normal_distribution<double> nd;
        for (int n : {2, 3, 7}) {
            DualState<double> s;
            s.center = vec::Zero(n);
            mat A(n, n);
            for (int i = 0; i < n * n; ++i) A.data()[i] = nd(gen);
            s.shape = A * A.transpose() + mat::Identity(n, n);
            vec c(n);
            for (int i = 0; i < n; ++i) c(i) = nd(gen);
            const double before = s.shape.determinant();
            REQUIRE(central_cut(s, c));
            const double nn = n;
            const double factor = std::pow(nn * nn / (nn * nn - 1.0), nn) * (nn - 1.0) / (nn + 1.0);
            CHECK(s.shape.determinant() / before == doctest::Approx(factor).epsilon(1e-9));
        }
    }
    SUBCASE("one dimension halves the interval")
    {
        DualState<double> s;
        s.center = vec::Constant(1, 2.0);
        s.shape = mat::Constant(1, 1, 4.0);
        REQUIRE(central_cut(s, vec(vec::Constant(1, 1.0))));
        CHECK(s.center(0) == doctest::Approx(1.0));
        CHECK(s.shape(0, 0) == doctest::Approx(1.0));
    }
    SUBCASE("degenerate direction is rejected")
    {
        DualState<double> s;
        s.center = vec::Zero(2);
        s.shape = mat::Identity(2, 2);
        CHECK_FALSE(central_cut(s, vec(vec::Zero(2))));
    }
}

TEST_CASE("ellipsoid steps")
{
    SUBCASE("feasibility cuts keep multipliers nonnegative")
    {
        auto s = make_dual_state(vec(vec::Constant(3, 1.0)));
        Subgradient<double> g{vec::Constant(3, 5.0)};
        for (int t = 0; t < 20; ++t) {
            s = ellipsoid_step(s, g);
            CHECK((s.center.array() >= 0.0).all());
            CHECK((s.mu.array() >= 0.0).all());
            CHECK(s.iteration == t + 1);
        }
    }
    SUBCASE("zero subgradient leaves the center in place")
    {
        auto s = make_dual_state(vec(vec::Constant(2, 1.0)));
        const auto t = ellipsoid_step(s, Subgradient<double>{vec::Zero(2)});
        CHECK(t.center.isApprox(s.center));
        CHECK(t.iteration == 1);
    }
    SUBCASE("converges on an interior minimizer")
    {
        const vec target = (vec(3) << 0.7, 2.5, 0.1).finished();
        const vec mu = minimize_quadratic(target, vec(vec::Constant(3, 4.0)), 150);
        CHECK((mu - target).norm() <= 1e-4);
    }
    SUBCASE("converges to the projection of an infeasible minimizer")
    {
        const vec target = (vec(2) << -1.0, 1.5).finished();
        const vec mu = minimize_quadratic(target, vec(vec::Constant(2, 4.0)), 150);
        CHECK(std::abs(mu(0)) <= 1e-4);
        CHECK(mu(1) == doctest::Approx(1.5).epsilon(1e-4));
    }
}

TEST_CASE("dual stopping rule and running minimum")
{
    DualState<double> a;
    a.mu = vec::Ones(2);
    a.iteration = 3;
    auto b = a;
    b.iteration = 4;
    b.mu(1) += 1e-6;
    CHECK(dual_converged(a, b, 1e-5, 150));
    b.mu(1) += 1e-3;
    CHECK_FALSE(dual_converged(a, b, 1e-5, 150));
    b.iteration = 150;
    CHECK(dual_converged(a, b, 1e-5, 150));

    DualState<double> s;
    s.mu = vec::Constant(1, 1.0);
    record_dual_value(s, 5.0);
    s.mu(0) = 2.0;
    record_dual_value(s, 7.0);
    CHECK(s.best_value == 5.0);
    CHECK(s.best_mu(0) == 1.0);
    s.mu(0) = 3.0;
    record_dual_value(s, 4.0);
    CHECK(s.best_value == 4.0);
    CHECK(s.best_mu(0) == 3.0);
}

#include <doctest.h>
#include "helpers.hpp"
#include <algorithm>
#include <cmath>

using namespace nomafd;
using namespace nomafd::testing;

TEST_CASE("grid levels")
{
    GridSpec g;
    g.geometric_points = 3;
    g.min_ratio = 1e-2;
    const auto lv = g.levels(2.0);
    REQUIRE(lv.size() == 4);
    CHECK(lv[0] == 0.0);
    CHECK(lv[1] == doctest::Approx(0.02));
    CHECK(lv[2] == doctest::Approx(0.2));
    CHECK(lv[3] == 2.0);

    // Every coarse level survives refinement.
    const auto fine = g.refined().levels(2.0);
    CHECK(fine.size() == 6);
    for (double v : lv) {
        CHECK(std::any_of(fine.begin(), fine.end(), [&](double x) { return std::abs(x - v) <= 1e-15 * (1 + v); }));
    }

    GridSpec one;
    one.geometric_points = 1;
    CHECK(one.levels(3.0) == std::vector<double>{0.0, 3.0});
    GridSpec none;
    none.geometric_points = 0;
    CHECK_THROWS_AS(none.levels(1.0), std::invalid_argument);
}

TEST_CASE("one uplink and one downlink user on one subcarrier by hand")
{
    mat up(1, 1), down(1, 1);
    up << 2.0;
    down << 3.0;
    std::vector<mat> cross(1, mat::Constant(1, 1, 0.5));
    const auto chan = make_channel(up, down, cross, vec::Constant(1, 0.25), 0.5, 1.0, 2.0,
                                   (vec(2) << 1.0, 0.5).finished());
    GridSpec g;
    g.geometric_points = 1;
    const auto r = brute_force(chan, g);

    const double up_only = std::log2(1.0 + 2.0 * 1.0 / 0.5);
    const double down_only = 0.5 * std::log2(1.0 + 3.0 * 2.0 / 0.5);
    const double both = std::log2(1.0 + 2.0 / (0.5 + 0.25 * 2.0)) + 0.5 * std::log2(1.0 + 6.0 / (0.5 + 0.5 * 1.0));
    CHECK(r.utility == doctest::Approx(std::max({up_only, down_only, both})).epsilon(1e-14));
    CHECK(grid_gap_bound(chan, GridSpec{1, 1e-3}) >= 0.0);
}

TEST_CASE("oracle result is consistent and feasible")
{
    for (std::uint64_t s = 1; s <= 4; ++s) {
        const auto chan = generate_scenario(cell_config(2, 2, 2, 14, 20, s));
        GridSpec g;
        g.geometric_points = 4;
        const auto r = brute_force(chan, g);
        CHECK(check_feasible(chan, r.alloc, r.power).feasible());
        CHECK(utility(chan, r.alloc, r.power) == doctest::Approx(r.utility).epsilon(1e-12));
        CHECK(r.evaluations > 0);
        const auto fine = brute_force(chan, g.refined());
        CHECK(fine.utility >= r.utility - 1e-12 * r.utility);
        CHECK(grid_gap_bound(chan, g) == doctest::Approx(fine.utility - r.utility));
    }
}

TEST_CASE("no grid allocation beats the oracle")
{
    std::mt19937_64 gen(51);
    const auto chan = generate_scenario(cell_config(2, 2, 2, 14, 20, 9));
    GridSpec g;
    g.geometric_points = 3;
    const auto best = brute_force(chan, g).utility;
    const auto up = g.levels(chan.uplink_budget);
    const auto dn = g.levels(chan.downlink_budget);
    std::uniform_int_distribution<int> lvl(0, g.geometric_points);
    std::uniform_int_distribution<int> coin(0, 1);
    int tried = 0;
    for (int t = 0; t < 3000; ++t) {
        AllocationState a(2, 2, 2);
        PowerMatrix<double> P = PowerMatrix<double>::Zero(4, 2);
        for (int f = 0; f < 2; ++f) {
            const int j = coin(gen);
            const int k = 2 + coin(gen);
            a.assign(Slot::strong_up, f, j);
            a.assign(Slot::strong_down, f, k);
            P(j, f) = up[lvl(gen)];
            P(k, f) = dn[lvl(gen)];
            if (coin(gen)) {
                a.assign(Slot::weak_up, f, 1 - j);
                P(1 - j, f) = up[lvl(gen)];
            }
            if (coin(gen)) {
                a.assign(Slot::weak_down, f, 5 - k);
                P(5 - k, f) = dn[lvl(gen)];
            }
        }
        if (!check_feasible(chan, a, P).feasible()) continue;
        ++tried;
        CHECK(utility(chan, a, P) <= best * (1 + 1e-12));
    }
    CHECK(tried > 100);
}

TEST_CASE("oracle guards")
{
    std::mt19937_64 gen(52);
    CHECK_THROWS_AS(brute_force(random_channel(gen, 3, 1, 1)), std::invalid_argument);
    CHECK_THROWS_AS(brute_force(random_channel(gen, 1, 1, 3)), std::invalid_argument);
    CHECK_THROWS_AS(brute_force(random_channel(gen, 2, 2, 2), GridSpec{}, 1000), std::length_error);
}

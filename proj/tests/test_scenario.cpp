#include <doctest.h>
#include "helpers.hpp"
#include <cmath>

using namespace nomafd;
using namespace nomafd::testing;

TEST_CASE("dbm_to_watts")
{
    CHECK(dbm_to_watts(30.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(dbm_to_watts(0.0) == doctest::Approx(1e-3).epsilon(1e-15));
    CHECK(dbm_to_watts(-121.0) == doctest::Approx(7.943282347242789e-16).epsilon(1e-12));
}

TEST_CASE("residual self-interference gain follows the cancellation level")
{
    ScenarioConfig c;
    c.si_cancellation_db = 110.0;
    const auto chan = generate_scenario(c);
    for (int f = 0; f < chan.num_subcarriers; ++f) {
        CHECK(chan.si_gain(f) == doctest::Approx(1e-11).epsilon(1e-12));
        // every downlink interferer at an uplink receiver sees the SI gain
        CHECK(chan.gain[f](chan.num_uplink, 0) == chan.si_gain(f));
    }
}

TEST_CASE("path loss scales with distance to the fourth power")
{
    ScenarioConfig c = cell_config(2, 1, 1, 14, 20, 5);
    c.shadowing_sigma_db = 0.0;
    ScenarioHooks hooks;
    hooks.unit_fading = true;
    hooks.positions = std::vector<Eigen::Vector2d>{{50.0, 0.0}, {0.0, 100.0}};
    const auto chan = generate_scenario(c, hooks);
    for (int f = 0; f < 2; ++f) {
        CHECK(chan.direct_gain(0, f) / chan.direct_gain(1, f) == doctest::Approx(16.0).epsilon(1e-12));
        const double d = std::hypot(50.0, 100.0);
        CHECK(chan.gain[f](0, 1) == doctest::Approx(std::pow(d, -4.0)).epsilon(1e-12));
    }
    CHECK(chan.weights(1) == 1.0);
    CHECK(chan.weights(0) == doctest::Approx(0.25));
}

TEST_CASE("scenario generation is deterministic per seed")
{
    const auto c = cell_config(6, 6, 6, 14, 20, 42);
    const auto a = generate_scenario(c);
    const auto b = generate_scenario(c);
    for (int f = 0; f < c.num_subcarriers; ++f) CHECK((a.gain[f].array() == b.gain[f].array()).all());
    CHECK((a.distances.array() == b.distances.array()).all());

    auto c2 = c;
    c2.rng_seed = 43;
    const auto d = generate_scenario(c2);
    CHECK((a.distances.array() != d.distances.array()).any());
}

TEST_CASE("unified gain tensor matches the physical links")
{
    const auto chan = generate_scenario(cell_config(3, 2, 2, 14, 20, 7));
    const int M = chan.num_uplink;
    for (int f = 0; f < 3; ++f) {
        const auto& g = chan.gain[f];
        // uplink signals reach every uplink receiver (the BS) with the same gain
        CHECK(g(0, 1) == g(0, 0));
        CHECK(g(1, 0) == g(1, 1));
        // downlink signals reach downlink user i through the BS -> i channel
        CHECK(g(M, M + 1) == g(M + 1, M + 1));
        CHECK(g(M + 1, M) == g(M, M));
        CHECK(g(M, 0) == chan.si_gain(f));
        CHECK((g.array() > 0.0).all());
    }
}

TEST_CASE("weights and distances")
{
    for (std::uint64_t s = 1; s <= 20; ++s) {
        const auto chan = generate_scenario(cell_config(6, 6, 6, 14, 20, s));
        CHECK(chan.weights.maxCoeff() == 1.0);
        CHECK(chan.weights.minCoeff() > 0.0);
        CHECK(chan.distances.minCoeff() >= 10.0);
        CHECK(chan.distances.maxCoeff() <= 100.0);
    }
}

TEST_CASE("shadowing and fading statistics")
{
    const int n = 100000;
    double s1 = 0, s2 = 0, fm = 0;
    for (int i = 0; i < n; ++i) {
        const double x = sample_shadowing_db(11, static_cast<std::uint64_t>(i), 8.0);
        s1 += x;
        s2 += x * x;
        fm += sample_fading_power(11, static_cast<std::uint64_t>(i), i % 6);
    }
    const double mean = s1 / n;
    const double sd = std::sqrt(s2 / n - mean * mean);
    CHECK(std::abs(sd - 8.0) / 8.0 < 0.02);
    CHECK(std::abs(fm / n - 1.0) < 0.02);
}

TEST_CASE("positions are uniform over the annulus")
{
    // The fraction of users inside radius r is (r^2 - r0^2) / (R^2 - r0^2).
    const int n = 20000;
    int inside = 0;
    for (int i = 0; i < n; ++i) inside += sample_position(3, i, 10.0, 100.0).norm() <= 55.0 ? 1 : 0;
    const double expected = (55.0 * 55.0 - 100.0) / (10000.0 - 100.0);
    CHECK(std::abs(static_cast<double>(inside) / n - expected) < 0.015);
}

TEST_CASE("invalid scenario configs are rejected")
{
    ScenarioConfig c;
    c.num_subcarriers = 0;
    CHECK_THROWS_AS(generate_scenario(c), std::invalid_argument);
    c = {};
    c.min_bs_distance_m = 200.0;
    CHECK_THROWS_AS(generate_scenario(c), std::invalid_argument);
    c = {};
    c.pathloss_exponent = 0.0;
    CHECK_THROWS_AS(generate_scenario(c), std::invalid_argument);
    c = {};
    c.noise_power_dbm = std::nan("");
    CHECK_THROWS_AS(generate_scenario(c), std::invalid_argument);
}

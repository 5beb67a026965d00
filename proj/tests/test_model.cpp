#include <doctest.h>
#include "helpers.hpp"
#include <algorithm>
#include <set>

using namespace nomafd;
using namespace nomafd::testing;

namespace {

std::set<int> as_set(const std::vector<int>& v) { return {v.begin(), v.end()}; }

/// Random allocation respecting one user per slot and one role per user.
AllocationState random_allocation(std::mt19937_64& gen, int M, int N, int F)
{
    AllocationState a(M, N, F);
    std::uniform_int_distribution<int> coin(0, 2);
    for (int f = 0; f < F; ++f) {
        std::vector<int> ups, downs;
        for (int i = 0; i < M; ++i) ups.push_back(i);
        for (int i = M; i < M + N; ++i) downs.push_back(i);
        std::shuffle(ups.begin(), ups.end(), gen);
        std::shuffle(downs.begin(), downs.end(), gen);
        if (coin(gen)) a.assign(Slot::strong_up, f, ups[0]);
        if (M > 1 && coin(gen)) a.assign(Slot::weak_up, f, ups[1]);
        if (coin(gen)) a.assign(Slot::strong_down, f, downs[0]);
        if (N > 1 && coin(gen)) a.assign(Slot::weak_down, f, downs[1]);
    }
    return a;
}

} // namespace

TEST_CASE("interference sets")
{
    AllocationState a = full_subcarrier();
    // users: 0 strong up (j), 1 weak up (j'), 2 strong down (k), 3 weak down (k')
    CHECK(as_set(interference_set(a, 0, 0)) == std::set<int>{2, 3});
    CHECK(as_set(interference_set(a, 3, 0)) == std::set<int>{0, 1, 2});
    CHECK(as_set(interference_set(a, 2, 0)) == std::set<int>{0, 1});
    CHECK(as_set(interference_set(a, 1, 0)) == std::set<int>{0, 2, 3});

    AllocationState b(2, 2, 1);
    b.assign(Slot::strong_up, 0, 0);
    CHECK(interference_set(b, 0, 0).empty());
    CHECK_THROWS_AS(interference_set(b, 1, 0), std::invalid_argument);
}

TEST_CASE("interfered sets")
{
    AllocationState a = full_subcarrier();
    CHECK(as_set(interfered_set(a, 2, 0)) == std::set<int>{0, 1, 3});
    CHECK(as_set(interfered_set(a, 1, 0)) == std::set<int>{2, 3});
    CHECK(as_set(interfered_set(a, 0, 0)) == std::set<int>{1, 2, 3});

    AllocationState b(2, 2, 1);
    b.assign(Slot::weak_down, 0, 3);
    CHECK(interfered_set(b, 3, 0).empty());
}

TEST_CASE("interference and interfered sets are mutually consistent")
{
    std::mt19937_64 gen(1);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = random_allocation(gen, 2, 2, 3);
        for (int f = 0; f < 3; ++f) {
            for (int i : a.users_on(f)) {
                for (int n : a.users_on(f)) {
                    if (n == i) continue;
                    const auto I = interference_set(a, i, f);
                    const auto C = interfered_set(a, n, f);
                    const bool in_i = std::find(I.begin(), I.end(), n) != I.end();
                    const bool in_c = std::find(C.begin(), C.end(), i) != C.end();
                    CHECK(in_i == in_c);
                }
            }
        }
    }
}

TEST_CASE("sinr and rate by hand")
{
    // uplink user 0 with direct gain 4, downlink user 1 interfering through SI gain 1
    const auto chan = make_channel(mat::Constant(1, 1, 4.0), mat::Constant(1, 1, 1.0), {mat::Constant(1, 1, 1.0)},
                                   vec::Constant(1, 1.0), 1.0, 10.0, 10.0);
    AllocationState a(1, 1, 1);
    a.assign(Slot::strong_up, 0, 0);
    a.assign(Slot::strong_down, 0, 1);
    PowerMatrix<double> P(2, 1);
    P << 2.0, 3.0;
    CHECK(sinr(chan, a, P, 0, 0) == doctest::Approx(2.0));
    CHECK(rate(chan, a, P, 0, 0) == doctest::Approx(std::log2(3.0)));

    P << 0.0, 3.0;
    CHECK(sinr(chan, a, P, 0, 0) == 0.0);
    CHECK(rate(chan, a, P, 0, 0) == 0.0);

    // unit SNR without interferers
    AllocationState solo(1, 1, 1);
    solo.assign(Slot::strong_up, 0, 0);
    P << 0.25, 0.0;
    CHECK(sinr(chan, solo, P, 0, 0) == doctest::Approx(1.0));
    CHECK(rate(chan, solo, P, 0, 0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(sinr(chan, solo, P, 1, 0), std::invalid_argument);
}

TEST_CASE("cross sinr")
{
    // downlink users 1 (strong, gain 2) and 2 (weak, gain 1); uplink user unallocated
    mat down(2, 1);
    down << 2.0, 1.0;
    const auto chan = make_channel(mat::Constant(1, 1, 1.0), down, {mat::Constant(1, 2, 0.5)}, vec::Constant(1, 0.1));
    AllocationState a(1, 2, 1);
    a.assign(Slot::strong_down, 0, 1);
    a.assign(Slot::weak_down, 0, 2);
    PowerMatrix<double> P(3, 1);
    P << 0.0, 1.0, 1.0;
    CHECK(cross_sinr(chan, a, P, 2, 1, 0) == doctest::Approx(2.0 / 3.0));
    P(2, 0) = 0.0;
    CHECK(cross_sinr(chan, a, P, 2, 1, 0) == 0.0);
    CHECK_THROWS(cross_sinr(chan, a, P, 1, 2, 0));
}

TEST_CASE("cancellation is tight for identical downlink channels")
{
    mat down(2, 1);
    down << 1.5, 1.5;
    const auto chan = make_channel(mat::Constant(1, 1, 1.0), down, {mat::Constant(1, 2, 0.5)}, vec::Constant(1, 0.1));
    AllocationState a(1, 2, 1);
    a.assign(Slot::strong_down, 0, 1);
    a.assign(Slot::weak_down, 0, 2);
    PowerMatrix<double> P(3, 1);
    P << 0.0, 0.3, 0.7;
    CHECK(cross_sinr(chan, a, P, 2, 1, 0) == doctest::Approx(sinr(chan, a, P, 2, 0)));
    const auto c = noma_coefficients(chan, 2, 1, {}, 0);
    CHECK(c.delta == 0.0);
}

TEST_CASE("decodability coefficients by hand")
{
    // |h_kk|^2 = 4, |h_k'k'|^2 = 1, |h_jk'|^2 = 1, |h_jk|^2 = 2, noise 1
    mat down(2, 1);
    down << 4.0, 1.0;
    mat cross(1, 2);
    cross << 2.0, 1.0;
    const auto chan = make_channel(mat::Constant(1, 1, 1.0), down, {cross}, vec::Constant(1, 0.1));
    const auto c = noma_coefficients(chan, 2, 1, {0}, 0);
    CHECK(c.theta(0) == doctest::Approx(2.0));
    CHECK(c.delta == doctest::Approx(3.0));

    const auto none = noma_coefficients(chan, 2, 1, {}, 0);
    CHECK(gamma_constraint(none, vec()) == doctest::Approx(3.0));

    NomaCoefficients<double> neg;
    neg.theta = vec::Constant(1, 2.0);
    neg.delta = -3.0;
    CHECK(gamma_constraint(neg, vec(vec::Constant(1, 1.0))) == doctest::Approx(-1.0));
}

TEST_CASE("decodability coefficients are antisymmetric")
{
    std::mt19937_64 gen(3);
    for (int t = 0; t < 100; ++t) {
        const auto chan = random_channel(gen, 2, 2, 1);
        const auto a = noma_coefficients(chan, 3, 2, {0, 1}, 0);
        const auto b = noma_coefficients(chan, 2, 3, {0, 1}, 0);
        CHECK((a.theta + b.theta).cwiseAbs().maxCoeff() <= 1e-12 * a.theta.cwiseAbs().maxCoeff());
        CHECK(std::abs(a.delta + b.delta) <= 1e-12 * std::abs(a.delta));
    }
}

TEST_CASE("linearized constraint matches the SINR comparison")
{
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    int disagreements = 0;
    for (int t = 0; t < 2000; ++t) {
        const auto chan = random_channel(gen, 2, 2, 1);
        const auto a = full_subcarrier();
        PowerMatrix<double> P(4, 1);
        P << u(gen), u(gen), u(gen), u(gen);
        const auto c = noma_coefficients(chan, 3, 2, {0, 1}, 0);
        const double g = gamma_constraint(c, P);
        const double diff = cross_sinr(chan, a, P, 3, 2, 0) - sinr(chan, a, P, 3, 0);
        const double scale = cross_sinr(chan, a, P, 3, 2, 0) + sinr(chan, a, P, 3, 0);
        if (std::abs(diff) <= 1e-9 * scale || std::abs(g) <= 1e-9 * gamma_scale(c, P)) continue;
        disagreements += (g > 0) != (diff > 0);
    }
    CHECK(disagreements == 0);
}

TEST_CASE("rate is monotone in own power and interferer power")
{
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    const auto a = full_subcarrier();
    for (int t = 0; t < 200; ++t) {
        const auto chan = random_channel(gen, 2, 2, 1);
        PowerMatrix<double> P(4, 1);
        P << u(gen), u(gen), u(gen), u(gen);
        for (int i = 0; i < 4; ++i) {
            auto Q = P;
            Q(i, 0) *= 1.01;
            CHECK(rate(chan, a, Q, i, 0) >= rate(chan, a, P, i, 0));
            for (int n : interference_set(a, i, 0)) {
                auto R = P;
                R(n, 0) *= 1.01;
                CHECK(rate(chan, a, R, i, 0) <= rate(chan, a, P, i, 0));
            }
        }
    }
}

TEST_CASE("utility")
{
    std::mt19937_64 gen(2);
    const auto chan = random_channel(gen, 2, 2, 3);
    AllocationState empty(2, 2, 3);
    CHECK(utility(chan, empty, mat(mat::Ones(4, 3))) == 0.0);

    // single strong uplink at unit SINR with weight 1
    const auto solo = make_channel(mat::Constant(1, 1, 2.0), mat::Constant(1, 1, 1.0), {mat::Constant(1, 1, 1.0)},
                                   vec::Constant(1, 1.0), 0.5);
    AllocationState a(1, 1, 1);
    a.assign(Slot::strong_up, 0, 0);
    PowerMatrix<double> P(2, 1);
    P << 0.25, 0.0;
    CHECK(utility(solo, a, P) == doctest::Approx(1.0));
}

TEST_CASE("utility is invariant under subcarrier relabeling")
{
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(0.0, 0.3);
    for (int t = 0; t < 20; ++t) {
        const auto chan = random_channel(gen, 2, 2, 3);
        const auto a = random_allocation(gen, 2, 2, 3);
        PowerMatrix<double> P = PowerMatrix<double>::Zero(4, 3);
        for (int f = 0; f < 3; ++f) for (int i : a.users_on(f)) P(i, f) = u(gen);
        const int perm[3] = {2, 0, 1};
        auto chan2 = chan;
        AllocationState a2(2, 2, 3);
        PowerMatrix<double> P2(4, 3);
        for (int f = 0; f < 3; ++f) {
            chan2.gain[perm[f]] = chan.gain[f];
            chan2.si_gain(perm[f]) = chan.si_gain(f);
            a2.strong.col(perm[f]) = a.strong.col(f);
            a2.weak.col(perm[f]) = a.weak.col(f);
            P2.col(perm[f]) = P.col(f);
        }
        CHECK(utility(chan2, a2, P2) == doctest::Approx(utility(chan, a, P)).epsilon(1e-13));
    }
}

TEST_CASE("utility agrees with the oracle's independent rate evaluation")
{
    std::mt19937_64 gen(6);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    const auto a = full_subcarrier();
    for (int t = 0; t < 100; ++t) {
        const auto chan = random_channel(gen, 2, 2, 1);
        PowerMatrix<double> P(4, 1);
        P << u(gen), u(gen), u(gen), u(gen);
        const double ref = detail::oracle_subcarrier_rate(chan, 0, {0, 1, 2, 3},
                                                          std::array<double, 4>{P(0, 0), P(1, 0), P(2, 0), P(3, 0)});
        CHECK(utility(chan, a, P) == doctest::Approx(ref).epsilon(1e-13));
    }
}

TEST_CASE("feasibility report")
{
    std::mt19937_64 gen(8);
    const auto chan = random_channel(gen, 2, 2, 2, 1.0, 2.0);
    auto a = full_subcarrier(2);
    a.assign(Slot::strong_up, 1, 1);

    CHECK(check_feasible(chan, a, mat(mat::Zero(4, 2))).feasible());

    PowerMatrix<double> P = PowerMatrix<double>::Zero(4, 2);
    P(1, 0) = 0.51;
    P(1, 1) = 0.50;
    const auto rep = check_feasible(chan, a, P);
    CHECK(rep.has(ViolationKind::uplink_budget));

    P.setZero();
    P(0, 1) = 0.1;  // user 0 holds no role on subcarrier 1
    CHECK(check_feasible(chan, a, P).has(ViolationKind::unallocated_power));

    AllocationState bad = a;
    bad.strong(3, 0) = true;  // second strong downlink, and user 3 both roles
    const auto rep2 = check_feasible(chan, bad, mat(mat::Zero(4, 2)));
    CHECK(rep2.has(ViolationKind::slot_cardinality));
    CHECK(rep2.has(ViolationKind::role_overlap));

    P.setZero();
    P(2, 0) = -1e-3;
    CHECK(check_feasible(chan, a, P).has(ViolationKind::negative_power));
    P.setZero();
    P(2, 0) = 1.5;
    P(3, 1) = 0.0;
    P(2, 1) = 0.0;
    P(3, 0) = 0.6;
    CHECK(check_feasible(chan, a, P).has(ViolationKind::downlink_budget));
}

TEST_CASE("decodability binds only when both downlink powers are positive")
{
    // The weak user has the better channel: θ = 1 - 1.5 = -0.5, δ = -0.5, so Γ = -0.5 at P_j = 0.
    mat down(2, 1);
    down << 1.0, 1.5;
    mat cross(1, 2);
    cross << 1.0, 1.0;
    const auto chan = make_channel(mat::Constant(1, 1, 1.0), down, {cross}, vec::Constant(1, 0.1), 1.0, 1.0, 2.0);
    AllocationState a(1, 2, 1);
    a.assign(Slot::strong_up, 0, 0);
    a.assign(Slot::strong_down, 0, 1);
    a.assign(Slot::weak_down, 0, 2);
    PowerMatrix<double> P(3, 1);
    P << 0.0, 0.5, 0.5;
    const auto c = noma_coefficients(chan, 2, 1, {0}, 0);
    CHECK(gamma_constraint(c, P) == doctest::Approx(-0.5));
    CHECK(check_feasible(chan, a, P).has(ViolationKind::noma));
    P(2, 0) = 0.0;
    CHECK(check_feasible(chan, a, P).feasible());
    P(2, 0) = 1e-13;  // below the positive-power threshold
    CHECK(check_feasible(chan, a, P).feasible());
}

#pragma once
#include <random>
#include <nomafd/nomafd.hpp>

namespace nomafd::testing {

using vec = util::vec_type<double>;
using mat = util::mat_type<double>;
using vec4 = util::vec4_type<double>;

/// Channel with hand-set link gains; weights default to 1.
inline ChannelRealization<double> make_channel(const mat& uplink, const mat& downlink,
                                               const std::vector<mat>& cross, const vec& si,
                                               double noise = 1.0, double pu = 1.0, double pd = 1.0,
                                               vec weights = {})
{
    LinkGains<double> g{uplink, downlink, cross, si};
    const int users = static_cast<int>(uplink.rows() + downlink.rows());
    if (weights.size() == 0) weights = vec::Ones(users);
    return assemble_channel<double>(g, noise, weights, pu, pd);
}

/// Random gains on a log scale so that strong/weak orderings vary across draws.
inline ChannelRealization<double> random_channel(std::mt19937_64& gen, int M, int N, int F,
                                                 double pu = 1.0, double pd = 2.0)
{
    std::uniform_real_distribution<double> lg(-2.0, 2.0);
    std::uniform_real_distribution<double> w(0.1, 1.0);
    auto draw = [&] { return std::pow(10.0, lg(gen)); };
    mat up(M, F), down(N, F);
    std::vector<mat> cross(F, mat(M, N));
    vec si(F);
    for (int f = 0; f < F; ++f) {
        for (int j = 0; j < M; ++j) up(j, f) = draw();
        for (int k = 0; k < N; ++k) down(k, f) = draw();
        for (int j = 0; j < M; ++j) for (int k = 0; k < N; ++k) cross[f](j, k) = 0.1 * draw();
        si(f) = 0.01 * draw();
    }
    vec weights(M + N);
    for (int i = 0; i < M + N; ++i) weights(i) = w(gen);
    weights /= weights.maxCoeff();
    return make_channel(up, down, cross, si, 0.1, pu, pd, weights);
}

/// Desk-scale cell with the default propagation constants.
inline ScenarioConfig cell_config(int F, int M, int N, double pu_dbm, double pd_dbm, std::uint64_t seed)
{
    ScenarioConfig c;
    c.num_subcarriers = F;
    c.num_uplink = M;
    c.num_downlink = N;
    c.uplink_budget_dbm = pu_dbm;
    c.downlink_budget_dbm = pd_dbm;
    c.rng_seed = seed;
    return c;
}

/// Four occupied slots on subcarrier 0 of a random 2x2 channel (users 0, 1 uplink; 2, 3 downlink).
inline AllocationState full_subcarrier(int F = 1)
{
    AllocationState a(2, 2, F);
    a.assign(Slot::strong_up, 0, 0);
    a.assign(Slot::weak_up, 0, 1);
    a.assign(Slot::strong_down, 0, 2);
    a.assign(Slot::weak_down, 0, 3);
    return a;
}

/// Couple (0, 2) in a random role on a 2x2 single-subcarrier channel; users 1 and 3 hold the other role.
inline CoupleProblem<double> random_couple(std::mt19937_64& gen, const ChannelRealization<double>& chan)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    CoupleProblem<double> p;
    p.subcarrier = 0;
    p.mode = u(gen) < 0.5 ? StepMode::strong : StepMode::weak;
    p.uplink = 0;
    p.downlink = 2;
    p.fixed_uplink = 1;
    p.fixed_downlink = 3;
    p.fixed_uplink_power = 0.5 * u(gen);
    p.fixed_downlink_power = u(gen) < 0.3 ? 0.0 : 0.5 * u(gen);
    p.mu_uplink = 2.0 * u(gen);
    p.mu_downlink = 2.0 * u(gen);
    p.reg = u(gen) < 0.5 ? 0.0 : 3.0 * u(gen);
    p.anchor_uplink = 0.5 * u(gen);
    p.anchor_downlink = u(gen);
    p.cap_uplink = chan.uplink_budget;
    p.cap_downlink = chan.downlink_budget;
    return p;
}

/// Random interior powers for the free couple, fixed slots at their problem values.
inline vec4 random_point(std::mt19937_64& gen, const CoupleProblem<double>& p)
{
    std::uniform_real_distribution<double> u(0.05, 1.0);
    vec4 x = p.fixed_powers();
    x(slot_index(p.uplink_slot())) = u(gen) * p.cap_uplink;
    x(slot_index(p.downlink_slot())) = u(gen) * p.cap_downlink;
    return x;
}

} // namespace nomafd::testing

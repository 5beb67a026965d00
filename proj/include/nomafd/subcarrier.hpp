#pragma once
#include <array>
#include <cmath>
#include <nomafd/model.hpp>

namespace nomafd {

/// interferes[n][i]: the signal in slot n is interference at the receiver of slot i.
inline constexpr bool slot_interferes[num_slots][num_slots] = {
    {false, true, true, true},   // strong_up
    {false, false, true, true},  // weak_up: cancelled by the strong uplink
    {true, true, false, true},   // strong_down
    {true, true, false, false},  // weak_down: cancelled by the strong downlink
};

/**
 * Gains of one subcarrier in slot coordinates. Empty slots have zero weight
 * and zero gain rows/columns, so formulas can always run over all four slots.
 */
template <class ValueType>
struct SubcarrierLinks
{
    using value_t = ValueType;
    using vec_t = util::vec4_type<value_t>;
    using mat_t = util::mat4_type<value_t>;

    int subcarrier = 0;
    std::array<int, num_slots> user{no_user, no_user, no_user, no_user};
    vec_t weight = vec_t::Zero();
    vec_t direct = vec_t::Zero();
    /// cross(n, i): gain of slot n's signal at slot i's receiver, zero unless n interferes with i.
    mat_t cross = mat_t::Zero();
    value_t noise = 1;

    bool occupied(int s) const { return user[s] != no_user; }
    bool occupied(Slot s) const { return occupied(slot_index(s)); }

    /// Coefficients of the received power (signal + interference) of slot i in the power vector.
    vec_t received_coeff(int i) const
    {
        vec_t c = cross.col(i);
        c(i) += direct(i);
        return c;
    }

    value_t received(const vec_t& p, int i) const
    {
        return direct(i) * p(i) + cross.col(i).dot(p) + noise;
    }

    value_t interference(const vec_t& p, int i) const { return cross.col(i).dot(p) + noise; }

    value_t rate(const vec_t& p, int i) const
    {
        return std::log2(received(p, i) / interference(p, i));
    }

    value_t weighted_rate(const vec_t& p) const
    {
        value_t acc = 0;
        for (int i = 0; i < num_slots; ++i) {
            if (occupied(i) && weight(i) != value_t(0)) acc += weight(i) * rate(p, i);
        }
        return acc;
    }
};

template <class T>
SubcarrierLinks<T> make_links(const ChannelRealization<T>& chan, int f,
                              const std::array<int, num_slots>& users)
{
    SubcarrierLinks<T> s;
    s.subcarrier = f;
    s.user = users;
    s.noise = chan.noise_power;
    const auto& g = chan.gain[f];
    for (int i = 0; i < num_slots; ++i) {
        const int ui = users[i];
        if (ui == no_user) continue;
        s.weight(i) = chan.weights(ui);
        s.direct(i) = g(ui, ui);
        for (int n = 0; n < num_slots; ++n) {
            const int un = users[n];
            if (un != no_user && slot_interferes[n][i]) s.cross(n, i) = g(un, ui);
        }
    }
    return s;
}

inline std::array<int, num_slots> slot_users(const AllocationState& alloc, int f)
{
    return {alloc.occupant(Slot::strong_up, f), alloc.occupant(Slot::weak_up, f),
            alloc.occupant(Slot::strong_down, f), alloc.occupant(Slot::weak_down, f)};
}

template <class T>
SubcarrierLinks<T> make_links(const ChannelRealization<T>& chan, const AllocationState& alloc, int f)
{
    return make_links(chan, f, slot_users(alloc, f));
}

/// Powers of subcarrier f gathered into slot order (zero for empty slots).
template <class T>
util::vec4_type<T> gather_slots(const PowerMatrix<T>& P, const std::array<int, num_slots>& users, int f)
{
    util::vec4_type<T> p = util::vec4_type<T>::Zero();
    for (int s = 0; s < num_slots; ++s) {
        if (users[s] != no_user) p(s) = P(users[s], f);
    }
    return p;
}

template <class T>
void scatter_slots(PowerMatrix<T>& P, const std::array<int, num_slots>& users, int f,
                   const util::vec4_type<T>& p)
{
    for (int s = 0; s < num_slots; ++s) {
        if (users[s] != no_user) P(users[s], f) = p(s);
    }
}

/// Γ for the downlink pair on this subcarrier as an affine function of the uplink slot powers.
template <class T>
struct GammaAffine
{
    T theta_strong = 0;
    T theta_weak = 0;
    T delta = 0;

    T operator()(T p_strong_up, T p_weak_up) const
    {
        return theta_strong * p_strong_up + theta_weak * p_weak_up + delta;
    }
};

/// Requires both downlink slots occupied.
template <class T>
GammaAffine<T> gamma_affine(const ChannelRealization<T>& chan, const std::array<int, num_slots>& users, int f)
{
    const int k = users[slot_index(Slot::strong_down)];
    const int kw = users[slot_index(Slot::weak_down)];
    const auto& g = chan.gain[f];
    GammaAffine<T> a;
    auto theta = [&](int j) { return g(k, k) * g(j, kw) - g(kw, kw) * g(j, k); };
    const int js = users[slot_index(Slot::strong_up)];
    const int jw = users[slot_index(Slot::weak_up)];
    if (js != no_user) a.theta_strong = theta(js);
    if (jw != no_user) a.theta_weak = theta(jw);
    a.delta = chan.noise_power * (g(k, k) - g(kw, kw));
    return a;
}

} // namespace nomafd

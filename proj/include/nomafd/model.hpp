#pragma once
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>
#include <nomafd/scenario.hpp>
#include <nomafd/util/types.hpp>

namespace nomafd {

/// Per-subcarrier roles. A subcarrier hosts at most one user per slot.
enum class Slot : int
{
    strong_up = 0,
    weak_up = 1,
    strong_down = 2,
    weak_down = 3,
};

inline constexpr int num_slots = 4;

inline constexpr bool is_uplink_slot(Slot s) { return s == Slot::strong_up || s == Slot::weak_up; }
inline constexpr bool is_strong_slot(Slot s) { return s == Slot::strong_up || s == Slot::strong_down; }
inline constexpr int slot_index(Slot s) { return static_cast<int>(s); }

inline const char* slot_name(Slot s)
{
    switch (s) {
        case Slot::strong_up: return "strong uplink";
        case Slot::weak_up: return "weak uplink";
        case Slot::strong_down: return "strong downlink";
        case Slot::weak_down: return "weak downlink";
    }
    return "?";
}

/**
 * Binary strong/weak assignment per (user, subcarrier). Whether a slot is
 * uplink or downlink follows from the user index.
 */
struct AllocationState
{
    int num_uplink = 0;
    int num_downlink = 0;
    int num_subcarriers = 0;
    util::bool_mat_type strong;
    util::bool_mat_type weak;

    AllocationState() = default;
    AllocationState(int M, int N, int F)
        : num_uplink(M), num_downlink(N), num_subcarriers(F),
          strong(util::bool_mat_type::Constant(M + N, F, false)),
          weak(util::bool_mat_type::Constant(M + N, F, false))
    {}

    template <class T>
    static AllocationState empty_for(const ChannelRealization<T>& chan)
    {
        return {chan.num_uplink, chan.num_downlink, chan.num_subcarriers};
    }

    int num_users() const { return num_uplink + num_downlink; }
    bool is_uplink(int user) const { return user < num_uplink; }
    bool allocated(int user, int f) const { return strong(user, f) || weak(user, f); }

    /// User holding slot s on f, or no_user. Returns the first match if the state is malformed.
    int occupant(Slot s, int f) const
    {
        const bool up = is_uplink_slot(s);
        const auto& m = is_strong_slot(s) ? strong : weak;
        const int lo = up ? 0 : num_uplink;
        const int hi = up ? num_uplink : num_users();
        for (int i = lo; i < hi; ++i) {
            if (m(i, f)) return i;
        }
        return no_user;
    }

    Slot slot_of(int user, int f) const
    {
        if (!allocated(user, f)) {
            throw std::invalid_argument("user " + std::to_string(user) + " not allocated on subcarrier "
                                        + std::to_string(f));
        }
        const bool up = is_uplink(user);
        if (strong(user, f)) return up ? Slot::strong_up : Slot::strong_down;
        return up ? Slot::weak_up : Slot::weak_down;
    }

    /// Puts `user` (or nobody) in slot s on f, evicting the previous holder of that slot.
    void assign(Slot s, int f, int user)
    {
        const int prev = occupant(s, f);
        auto& m = is_strong_slot(s) ? strong : weak;
        if (prev != no_user) m(prev, f) = false;
        if (user != no_user) {
            if (is_uplink(user) != is_uplink_slot(s)) {
                throw std::invalid_argument("assign: user direction does not match slot");
            }
            m(user, f) = true;
        }
    }

    void clear_subcarrier(int f)
    {
        strong.col(f).setConstant(false);
        weak.col(f).setConstant(false);
    }

    std::vector<int> users_on(int f) const
    {
        std::vector<int> out;
        for (int i = 0; i < num_users(); ++i) {
            if (allocated(i, f)) out.push_back(i);
        }
        return out;
    }

    std::vector<int> uplink_on(int f) const
    {
        std::vector<int> out;
        for (int i = 0; i < num_uplink; ++i) {
            if (allocated(i, f)) out.push_back(i);
        }
        return out;
    }

    std::vector<int> downlink_on(int f) const
    {
        std::vector<int> out;
        for (int i = num_uplink; i < num_users(); ++i) {
            if (allocated(i, f)) out.push_back(i);
        }
        return out;
    }

    bool operator==(const AllocationState& o) const
    {
        return num_uplink == o.num_uplink && num_downlink == o.num_downlink
            && num_subcarriers == o.num_subcarriers && (strong == o.strong).all()
            && (weak == o.weak).all();
    }
};

/// Users whose signal interferes at the receiver of user i on f.
inline std::vector<int> interference_set(const AllocationState& alloc, int i, int f)
{
    const Slot s = alloc.slot_of(i, f);
    std::vector<int> out;
    if (is_strong_slot(s)) {
        out = is_uplink_slot(s) ? alloc.downlink_on(f) : alloc.uplink_on(f);
    } else {
        for (int n : alloc.users_on(f)) {
            if (n != i) out.push_back(n);
        }
    }
    return out;
}

/// Users whose receivers see interference from user i on f.
inline std::vector<int> interfered_set(const AllocationState& alloc, int i, int f)
{
    const Slot s = alloc.slot_of(i, f);
    if (is_strong_slot(s)) {
        std::vector<int> out;
        for (int n : alloc.users_on(f)) {
            if (n != i) out.push_back(n);
        }
        return out;
    }
    return is_uplink_slot(s) ? alloc.downlink_on(f) : alloc.uplink_on(f);
}

/// Interference plus noise at the receiver of user i on f.
template <class T>
T interference_power(const ChannelRealization<T>& chan, const AllocationState& alloc,
                     const PowerMatrix<T>& P, int i, int f)
{
    T acc = chan.noise_power;
    for (int n : interference_set(alloc, i, f)) acc += chan.gain[f](n, i) * P(n, f);
    return acc;
}

template <class T>
T sinr(const ChannelRealization<T>& chan, const AllocationState& alloc,
       const PowerMatrix<T>& P, int i, int f)
{
    const T intf = interference_power(chan, alloc, P, i, f);
    return chan.gain[f](i, i) * P(i, f) / intf;
}

template <class T>
T rate(const ChannelRealization<T>& chan, const AllocationState& alloc,
       const PowerMatrix<T>& P, int i, int f)
{
    return std::log2(T(1) + sinr(chan, alloc, P, i, f));
}

/// SINR of weak downlink k' decoded at the receiver of strong downlink k.
template <class T>
T cross_sinr(const ChannelRealization<T>& chan, const AllocationState& alloc,
             const PowerMatrix<T>& P, int weak, int strong, int f)
{
    if (alloc.slot_of(weak, f) != Slot::weak_down || alloc.slot_of(strong, f) != Slot::strong_down) {
        throw std::invalid_argument("cross_sinr: expects (weak downlink, strong downlink)");
    }
    const T gkk = chan.gain[f](strong, strong);
    T den = gkk * P(strong, f) + chan.noise_power;
    for (int n : alloc.uplink_on(f)) den += chan.gain[f](n, strong) * P(n, f);
    return gkk * P(weak, f) / den;
}

/// Coefficients of the linear decodability condition for the downlink pair (weak, strong) on f.
template <class T>
struct NomaCoefficients
{
    std::vector<int> uplink;
    util::vec_type<T> theta;
    T delta = 0;
    int strong = no_user;
    int weak = no_user;
    int subcarrier = 0;
};

/// theta_j = g(k,k) g(j,k') - g(k',k') g(j,k), delta = noise (g(k,k) - g(k',k')).
template <class T>
NomaCoefficients<T> noma_coefficients(const ChannelRealization<T>& chan, int weak, int strong,
                                      const std::vector<int>& uplink, int f)
{
    const auto& g = chan.gain[f];
    NomaCoefficients<T> c;
    c.uplink = uplink;
    c.theta.resize(static_cast<Eigen::Index>(uplink.size()));
    for (std::size_t a = 0; a < uplink.size(); ++a) {
        const int j = uplink[a];
        c.theta(static_cast<Eigen::Index>(a)) = g(strong, strong) * g(j, weak) - g(weak, weak) * g(j, strong);
    }
    c.delta = chan.noise_power * (g(strong, strong) - g(weak, weak));
    c.strong = strong;
    c.weak = weak;
    c.subcarrier = f;
    return c;
}

template <class T>
T gamma_constraint(const NomaCoefficients<T>& c, const util::vec_type<T>& uplink_power)
{
    return c.theta.dot(uplink_power) + c.delta;
}

template <class T>
T gamma_constraint(const NomaCoefficients<T>& c, const PowerMatrix<T>& P)
{
    T acc = c.delta;
    for (std::size_t a = 0; a < c.uplink.size(); ++a) {
        acc += c.theta(static_cast<Eigen::Index>(a)) * P(c.uplink[a], c.subcarrier);
    }
    return acc;
}

/// Scale used to judge Γ ≥ 0 with a relative tolerance.
template <class T>
T gamma_scale(const NomaCoefficients<T>& c, const PowerMatrix<T>& P)
{
    T acc = std::abs(c.delta);
    for (std::size_t a = 0; a < c.uplink.size(); ++a) {
        acc += std::abs(c.theta(static_cast<Eigen::Index>(a))) * P(c.uplink[a], c.subcarrier);
    }
    return acc;
}

template <class T>
T subcarrier_utility(const ChannelRealization<T>& chan, const AllocationState& alloc,
                     const PowerMatrix<T>& P, int f)
{
    T acc = 0;
    for (int i : alloc.users_on(f)) acc += chan.weights(i) * rate(chan, alloc, P, i, f);
    return acc;
}

/// Weighted sum rate over all allocated (user, subcarrier) pairs.
template <class T>
T utility(const ChannelRealization<T>& chan, const AllocationState& alloc, const PowerMatrix<T>& P)
{
    T acc = 0;
    for (int f = 0; f < chan.num_subcarriers; ++f) acc += subcarrier_utility(chan, alloc, P, f);
    return acc;
}

struct FeasibilityTolerances
{
    double budget_abs = 1e-9;
    double budget_rel = 1e-9;
    double gamma_rel = 1e-9;
    double positive_power = 1e-12;
};

enum class ViolationKind
{
    shape,
    negative_power,
    uplink_budget,
    downlink_budget,
    slot_cardinality,
    role_overlap,
    unallocated_power,
    noma,
};

inline const char* violation_name(ViolationKind k)
{
    switch (k) {
        case ViolationKind::shape: return "shape";
        case ViolationKind::negative_power: return "negative_power";
        case ViolationKind::uplink_budget: return "uplink_budget";
        case ViolationKind::downlink_budget: return "downlink_budget";
        case ViolationKind::slot_cardinality: return "slot_cardinality";
        case ViolationKind::role_overlap: return "role_overlap";
        case ViolationKind::unallocated_power: return "unallocated_power";
        case ViolationKind::noma: return "noma";
    }
    return "?";
}

struct Violation
{
    ViolationKind kind;
    int user = no_user;
    int subcarrier = -1;
    double amount = 0.0;
};

struct FeasibilityReport
{
    std::vector<Violation> violations;

    bool feasible() const { return violations.empty(); }
    explicit operator bool() const { return feasible(); }

    bool has(ViolationKind k) const
    {
        for (const auto& v : violations) {
            if (v.kind == k) return true;
        }
        return false;
    }

    std::string describe() const
    {
        std::ostringstream os;
        for (std::size_t a = 0; a < violations.size(); ++a) {
            const auto& v = violations[a];
            if (a) os << "; ";
            os << violation_name(v.kind);
            if (v.user != no_user) os << " user=" << v.user;
            if (v.subcarrier >= 0) os << " f=" << v.subcarrier;
            os << " by=" << v.amount;
        }
        return os.str();
    }
};

template <class T>
FeasibilityReport check_feasible(const ChannelRealization<T>& chan, const AllocationState& alloc,
                                 const PowerMatrix<T>& P, const FeasibilityTolerances& tol = {})
{
    FeasibilityReport rep;
    const int U = chan.num_users();
    const int F = chan.num_subcarriers;
    auto add = [&](ViolationKind k, int user, int f, double amount) {
        rep.violations.push_back({k, user, f, amount});
    };

    if (P.rows() != U || P.cols() != F || alloc.num_uplink != chan.num_uplink
        || alloc.num_downlink != chan.num_downlink || alloc.num_subcarriers != F
        || alloc.strong.rows() != U || alloc.strong.cols() != F
        || alloc.weak.rows() != U || alloc.weak.cols() != F) {
        add(ViolationKind::shape, no_user, -1, 0.0);
        return rep;
    }

    for (int i = 0; i < U; ++i) {
        for (int f = 0; f < F; ++f) {
            const double p = static_cast<double>(P(i, f));
            if (!std::isfinite(p) || p < 0.0) add(ViolationKind::negative_power, i, f, p);
            if (alloc.strong(i, f) && alloc.weak(i, f)) add(ViolationKind::role_overlap, i, f, 1.0);
            if (!alloc.allocated(i, f) && p > tol.positive_power) {
                add(ViolationKind::unallocated_power, i, f, p);
            }
        }
    }

    const double pu = static_cast<double>(chan.uplink_budget);
    const double pd = static_cast<double>(chan.downlink_budget);
    for (int j = 0; j < chan.num_uplink; ++j) {
        const double used = static_cast<double>(P.row(j).sum());
        if (used > pu + tol.budget_abs + tol.budget_rel * pu) {
            add(ViolationKind::uplink_budget, j, -1, used - pu);
        }
    }
    const double used_d = static_cast<double>(P.bottomRows(chan.num_downlink).sum());
    if (used_d > pd + tol.budget_abs + tol.budget_rel * pd) {
        add(ViolationKind::downlink_budget, no_user, -1, used_d - pd);
    }

    for (int f = 0; f < F; ++f) {
        for (Slot s : {Slot::strong_up, Slot::weak_up, Slot::strong_down, Slot::weak_down}) {
            const bool up = is_uplink_slot(s);
            const auto& m = is_strong_slot(s) ? alloc.strong : alloc.weak;
            const int lo = up ? 0 : chan.num_uplink;
            const int hi = up ? chan.num_uplink : U;
            int count = 0;
            for (int i = lo; i < hi; ++i) count += m(i, f) ? 1 : 0;
            if (count > 1) add(ViolationKind::slot_cardinality, no_user, f, count);
        }
        const int k = alloc.occupant(Slot::strong_down, f);
        const int kw = alloc.occupant(Slot::weak_down, f);
        if (k == no_user || kw == no_user) continue;
        if (!(P(k, f) > tol.positive_power && P(kw, f) > tol.positive_power)) continue;
        const auto c = noma_coefficients(chan, kw, k, alloc.uplink_on(f), f);
        const T g = gamma_constraint(c, P);
        if (static_cast<double>(g) < -tol.gamma_rel * static_cast<double>(gamma_scale(c, P))) {
            add(ViolationKind::noma, kw, f, static_cast<double>(g));
        }
    }
    return rep;
}

} // namespace nomafd

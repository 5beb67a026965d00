#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>
#include <nomafd/dcsolver.hpp>
#include <nomafd/dual.hpp>
#include <nomafd/model.hpp>

namespace nomafd {

struct AllocatorOptions
{
    CccpOptions cccp;
    DualOptions dual;
    EllipsoidOptions ellipsoid;
    /// Keep the input block when the best recovered primal point does not improve the block objective.
    bool keep_incumbent = true;
};

/// Allocation plus powers; each (user, subcarrier) holds at most one role.
template <class T>
struct AllocationPoint
{
    AllocationState alloc;
    PowerMatrix<T> power;

    static AllocationPoint empty_for(const ChannelRealization<T>& chan)
    {
        return {AllocationState::empty_for(chan),
                PowerMatrix<T>::Zero(chan.num_users(), chan.num_subcarriers)};
    }
};

/// Powers of the users holding `role` (strong or weak), zero elsewhere.
template <class T>
PowerMatrix<T> role_powers(const AllocationPoint<T>& pt, bool strong_role)
{
    const auto& mask = strong_role ? pt.alloc.strong : pt.alloc.weak;
    return mask.select(pt.power, PowerMatrix<T>::Zero(pt.power.rows(), pt.power.cols()));
}

/// Budgets left for `strong_role` after the complementary role's consumption.
template <class T>
ResidualBudgets<T> residual_budgets(const ChannelRealization<T>& chan, const AllocationPoint<T>& pt, bool strong_role)
{
    const PowerMatrix<T> other = role_powers(pt, !strong_role);
    ResidualBudgets<T> r;
    r.uplink = (util::vec_type<T>::Constant(chan.num_uplink, chan.uplink_budget)
                - other.topRows(chan.num_uplink).rowwise().sum()).cwiseMax(T(0));
    r.downlink = std::max(T(0), chan.downlink_budget - other.bottomRows(chan.num_downlink).sum());
    return r;
}

template <class T>
struct HalfStepResult
{
    AllocationPoint<T> point;
    /// Utility minus the proximal term of the optimized block.
    T objective = 0;
    T utility = 0;
    int dual_iterations = 0;
    long cccp_iterations = 0;
    int fallbacks = 0;
    bool accepted = true;
    std::vector<T> dual_values;
};

namespace detail {

template <class T>
T proximal_penalty(const PowerMatrix<T>& block, const PowerMatrix<T>& anchors, T reg)
{
    return reg == T(0) ? T(0) : reg * (block - anchors).squaredNorm();
}

/**
 * Makes a primal point feasible: over-budget uplink users and the downlink
 * block are scaled down, then on any subcarrier where decodability fails the
 * downlink power of `drop_slot` is switched off.
 */
template <class T>
void repair_point(const ChannelRealization<T>& chan, AllocationPoint<T>& pt, const util::bool_mat_type& block,
                  const ResidualBudgets<T>& budget, Slot drop_slot)
{
    const int M = chan.num_uplink;
    const int F = chan.num_subcarriers;
    for (int j = 0; j < M; ++j) {
        T used = 0;
        for (int f = 0; f < F; ++f) if (block(j, f)) used += pt.power(j, f);
        if (used > budget.uplink(j)) {
            const T scale = used > T(0) ? budget.uplink(j) / used : T(0);
            for (int f = 0; f < F; ++f) if (block(j, f)) pt.power(j, f) *= scale;
        }
    }
    T used_d = 0;
    for (int k = M; k < chan.num_users(); ++k) {
        for (int f = 0; f < F; ++f) if (block(k, f)) used_d += pt.power(k, f);
    }
    if (used_d > budget.downlink) {
        const T scale = used_d > T(0) ? budget.downlink / used_d : T(0);
        for (int k = M; k < chan.num_users(); ++k) {
            for (int f = 0; f < F; ++f) if (block(k, f)) pt.power(k, f) *= scale;
        }
    }
    for (int f = 0; f < F; ++f) {
        const int k = pt.alloc.occupant(Slot::strong_down, f);
        const int kw = pt.alloc.occupant(Slot::weak_down, f);
        if (k == no_user || kw == no_user) continue;
        if (!(pt.power(k, f) > T(positive_power_threshold) && pt.power(kw, f) > T(positive_power_threshold))) continue;
        const auto c = noma_coefficients(chan, kw, k, pt.alloc.uplink_on(f), f);
        if (gamma_constraint(c, pt.power) < -T(1e-10) * gamma_scale(c, pt.power)) {
            const int victim = pt.alloc.occupant(drop_slot, f);
            pt.power(victim, f) = 0;
        }
    }
}

/// Keeps the best feasible point seen by a dual loop.
template <class T>
struct Incumbent
{
    AllocationPoint<T> point;
    T objective = -std::numeric_limits<T>::infinity();
    bool found = false;

    void offer(const AllocationPoint<T>& pt, T obj)
    {
        if (!found || obj > objective) {
            point = pt;
            objective = obj;
            found = true;
        }
    }
};

} // namespace detail

/**
 * One block of the alternating scheme: the strong (or weak) users and their
 * powers are re-optimized through the Lagrangian dual while the other block
 * stays fixed. Per dual iterate, each subcarrier picks the candidate couple
 * maximizing its auxiliary Lagrangian; the best feasible primal point seen is
 * returned, or the input when nothing improves the block objective.
 */
template <class T>
HalfStepResult<T> block_allocation(const ChannelRealization<T>& chan, const AllocationPoint<T>& current,
                                   const PowerMatrix<T>& anchors, T reg, bool strong_mode,
                                   const AllocatorOptions& opt = {})
{
    const int M = chan.num_uplink;
    const int F = chan.num_subcarriers;
    const int U = chan.num_users();
    const auto& other_mask = strong_mode ? current.alloc.weak : current.alloc.strong;
    const auto budgets = residual_budgets(chan, current, strong_mode);
    const StepMode mode = strong_mode ? StepMode::strong : StepMode::weak;
    const Slot up_slot = strong_mode ? Slot::strong_up : Slot::weak_up;
    const Slot down_slot = strong_mode ? Slot::strong_down : Slot::weak_down;
    const Slot fixed_up_slot = strong_mode ? Slot::weak_up : Slot::strong_up;
    const Slot fixed_down_slot = strong_mode ? Slot::weak_down : Slot::strong_down;

    // Start from the fixed block only.
    AllocationPoint<T> base = current;
    auto& own_mask = strong_mode ? base.alloc.strong : base.alloc.weak;
    for (int i = 0; i < U; ++i) {
        for (int f = 0; f < F; ++f) {
            if (own_mask(i, f)) {
                own_mask(i, f) = false;
                base.power(i, f) = 0;
            }
        }
    }

    struct Candidates
    {
        std::vector<int> up;
        std::vector<int> down;
    };
    std::vector<Candidates> cands(F);
    for (int f = 0; f < F; ++f) {
        for (int i = 0; i < U; ++i) {
            if (other_mask(i, f)) continue;
            (i < M ? cands[f].up : cands[f].down).push_back(i);
        }
        if (cands[f].up.empty()) cands[f].up.push_back(no_user);
        if (cands[f].down.empty()) cands[f].down.push_back(no_user);
    }

    HalfStepResult<T> out;
    const PowerMatrix<T> incumbent_block = role_powers(current, strong_mode);
    const T incumbent_obj = utility(chan, current.alloc, current.power)
                          - detail::proximal_penalty(incumbent_block, anchors, reg);

    detail::Incumbent<T> best;
    auto state = make_dual_state(price_upper_bound(chan, budgets, reg));
    const auto b = budgets.stacked();

    for (int it = 0; it < opt.dual.max_iter; ++it) {
        const T mu0 = state.mu(0);
        AllocationPoint<T> cand = base;
        T lagr = 0;
        for (int f = 0; f < F; ++f) {
            const int fu = base.alloc.occupant(fixed_up_slot, f);
            const int fd = base.alloc.occupant(fixed_down_slot, f);
            T anchor_mass = 0;
            for (int i = 0; i < U; ++i) anchor_mass += anchors(i, f) * anchors(i, f);

            CoupleSolution<T> best_sol;
            int best_j = no_user;
            int best_k = no_user;
            bool have = false;
            for (int j : cands[f].up) {
                for (int k : cands[f].down) {
                    CoupleProblem<T> prob;
                    prob.subcarrier = f;
                    prob.mode = mode;
                    prob.uplink = j;
                    prob.downlink = k;
                    prob.fixed_uplink = fu;
                    prob.fixed_downlink = fd;
                    if (fu != no_user) prob.fixed_uplink_power = base.power(fu, f);
                    if (fd != no_user) prob.fixed_downlink_power = base.power(fd, f);
                    prob.mu_uplink = j != no_user ? state.mu(1 + j) : T(0);
                    prob.mu_downlink = mu0;
                    prob.reg = reg;
                    T a_j = 0;
                    T a_k = 0;
                    if (j != no_user) a_j = anchors(j, f);
                    if (k != no_user) a_k = anchors(k, f);
                    prob.anchor_uplink = a_j;
                    prob.anchor_downlink = a_k;
                    prob.anchor_offset = std::max(T(0), anchor_mass - a_j * a_j - a_k * a_k);
                    prob.cap_uplink = j != no_user ? budgets.uplink(j) : T(0);
                    prob.cap_downlink = budgets.downlink;
                    const auto sol = solve_couple(chan, prob, opt.cccp);
                    out.cccp_iterations += sol.cccp_iterations;
                    const T tie = T(1e-12) * std::max(std::abs(sol.value), std::abs(best_sol.value));
                    if (!have || sol.value > best_sol.value + tie) {
                        best_sol = sol;
                        best_j = j;
                        best_k = k;
                        have = true;
                    }
                }
            }
            lagr += best_sol.value;
            if (best_sol.fallback) ++out.fallbacks;
            if (best_j != no_user) {
                cand.alloc.assign(up_slot, f, best_j);
                cand.power(best_j, f) = best_sol.power(slot_index(up_slot));
            }
            if (best_k != no_user) {
                cand.alloc.assign(down_slot, f, best_k);
                cand.power(best_k, f) = best_sol.power(slot_index(down_slot));
            }
        }

        const auto g = subgradient_sa_wa(chan, cand.alloc, cand.power, budgets, strong_mode);
        const T dual_value = lagr + state.mu.dot(b);
        record_dual_value(state, dual_value);
        out.dual_values.push_back(dual_value);

        detail::repair_point(chan, cand, strong_mode ? cand.alloc.strong : cand.alloc.weak, budgets,
                             down_slot);
        if (check_feasible(chan, cand.alloc, cand.power)) {
            const T obj = utility(chan, cand.alloc, cand.power)
                        - detail::proximal_penalty(role_powers(cand, strong_mode), anchors, reg);
            best.offer(cand, obj);
        }

        const auto next = ellipsoid_step(state, g, opt.ellipsoid);
        out.dual_iterations = it + 1;
        const bool stop = dual_converged(state, next, opt.dual.eps, opt.dual.max_iter)
                       || g.d.norm() == T(0);
        state = next;
        if (stop) break;
    }

    if (best.found && (!opt.keep_incumbent || best.objective >= incumbent_obj)) {
        out.point = best.point;
        out.objective = best.objective;
    } else {
        out.point = current;
        out.objective = incumbent_obj;
        out.accepted = false;
    }
    out.utility = utility(chan, out.point.alloc, out.point.power);
    return out;
}

/// Strong-user block with the weak users of `current` held fixed.
template <class T>
HalfStepResult<T> strong_allocation(const ChannelRealization<T>& chan, const AllocationPoint<T>& current,
                                    const PowerMatrix<T>& anchors, T reg, const AllocatorOptions& opt = {})
{
    return block_allocation(chan, current, anchors, reg, true, opt);
}

/// Weak-user block with the strong users of `current` held fixed.
template <class T>
HalfStepResult<T> weak_allocation(const ChannelRealization<T>& chan, const AllocationPoint<T>& current,
                                  const PowerMatrix<T>& anchors, T reg, const AllocatorOptions& opt = {})
{
    return block_allocation(chan, current, anchors, reg, false, opt);
}

struct BcdOptions
{
    AllocatorOptions inner;
    int max_outer = 30;
    double eps = 1e-4;
    /// Cap on dual iterations summed over all half-steps.
    int dual_budget = 3600;
    /// Proximal weight K_l = max(k0 decay^l, floor k0); k0 < 0 selects the default scale.
    double k0 = -1.0;
    double decay = 0.8;
    double floor = 1e-6;
    bool regularize = true;
};

/// Default proximal scale: 0.1 alpha_max / (per-subcarrier power scale)^2.
template <class T>
T default_k0(const ChannelRealization<T>& chan)
{
    const T per_channel = (chan.uplink_budget + chan.downlink_budget) / static_cast<T>(chan.num_subcarriers);
    return T(0.1) * chan.weights.maxCoeff() / (per_channel * per_channel);
}

template <class T>
T regularization_weight(const ChannelRealization<T>& chan, const BcdOptions& opt, int outer)
{
    if (!opt.regularize) return T(0);
    const T k0 = opt.k0 >= 0.0 ? T(opt.k0) : default_k0(chan);
    return std::max(k0 * std::pow(T(opt.decay), T(outer)), T(opt.floor) * k0);
}

template <class T>
struct BcdResult
{
    AllocationPoint<T> point;
    T utility = 0;
    /// Utility after every half-step (strong, weak, strong, ...).
    std::vector<T> trace;
    std::vector<T> reg_trace;
    int outer_iterations = 0;
    int half_steps = 0;
    int dual_iterations = 0;
    long cccp_iterations = 0;
    bool converged = false;
    /// Squared change of the powers over the last outer iteration.
    T last_step_sq = 0;
    T last_reg = 0;
};

/// Alternates strong and weak blocks with a decaying proximal term, starting from the empty allocation.
template <class T>
BcdResult<T> bcd(const ChannelRealization<T>& chan, const BcdOptions& opt = {})
{
    BcdResult<T> res;
    auto point = AllocationPoint<T>::empty_for(chan);
    T u_prev = 0;
    for (int l = 0; l < opt.max_outer; ++l) {
        const T reg = regularization_weight(chan, opt, l);
        const PowerMatrix<T> start = point.power;
        bool out_of_budget = false;
        for (bool strong : {true, false}) {
            const int remaining = opt.dual_budget - res.dual_iterations;
            if (remaining <= 0) {
                out_of_budget = true;
                break;
            }
            AllocatorOptions inner = opt.inner;
            inner.dual.max_iter = std::min(inner.dual.max_iter, remaining);
            const PowerMatrix<T> anchors = role_powers(point, strong);
            auto step = block_allocation(chan, point, anchors, reg, strong, inner);
            point = std::move(step.point);
            res.dual_iterations += step.dual_iterations;
            res.cccp_iterations += step.cccp_iterations;
            res.trace.push_back(step.utility);
            res.reg_trace.push_back(reg);
            ++res.half_steps;
        }
        res.outer_iterations = l + 1;
        res.last_step_sq = (point.power - start).squaredNorm();
        res.last_reg = reg;
        const T u = utility(chan, point.alloc, point.power);
        const T gain = u - u_prev;
        const bool small = l > 0 && gain <= T(opt.eps) * std::max(std::abs(u_prev), std::numeric_limits<T>::min());
        u_prev = u;
        if (small) {
            res.converged = true;
            break;
        }
        if (out_of_budget) break;
    }
    res.point = point;
    res.utility = u_prev;
    return res;
}

template <class T>
struct PraResult
{
    AllocationPoint<T> point;
    T utility = 0;
    int dual_iterations = 0;
    long cccp_iterations = 0;
    bool accepted = true;
    int dropped_weak = 0;
};

/**
 * Power redistribution for a fixed allocation: per dual iterate, each
 * subcarrier runs the alternating downlink/uplink CCCP from the input powers;
 * the best feasible point seen (or the input) is returned.
 */
template <class T>
PraResult<T> pra(const ChannelRealization<T>& chan, const AllocationPoint<T>& input, const AllocatorOptions& opt = {})
{
    const int F = chan.num_subcarriers;
    PraResult<T> res;
    const T input_utility = utility(chan, input.alloc, input.power);
    const auto budgets = full_budgets(chan);
    const auto b = budgets.stacked();
    auto state = make_dual_state(price_upper_bound(chan, budgets, T(0)));
    detail::Incumbent<T> best;
    const util::bool_mat_type all = input.alloc.strong || input.alloc.weak;

    std::vector<std::array<int, num_slots>> users(F);
    for (int f = 0; f < F; ++f) users[f] = slot_users(input.alloc, f);

    for (int it = 0; it < opt.dual.max_iter; ++it) {
        AllocationPoint<T> cand = input;
        const util::vec_type<T> mu_up = state.mu_uplink();
        T lagr = 0;
        for (int f = 0; f < F; ++f) {
            const auto sub = make_pra_subproblem(chan, input.alloc, f, state.mu(0), mu_up);
            const auto p0 = gather_slots(input.power, users[f], f);
            const auto r = pra_subcarrier(sub, p0, opt.cccp);
            res.cccp_iterations += r.sweeps;
            lagr += r.value;
            scatter_slots(cand.power, users[f], f, r.power);
        }
        const auto g = subgradient_pra(chan, cand.alloc, cand.power);
        record_dual_value(state, lagr + state.mu.dot(b));

        detail::repair_point(chan, cand, all, budgets, Slot::weak_down);
        if (check_feasible(chan, cand.alloc, cand.power)) {
            best.offer(cand, utility(chan, cand.alloc, cand.power));
        }

        const auto next = ellipsoid_step(state, g, opt.ellipsoid);
        res.dual_iterations = it + 1;
        const bool stop = dual_converged(state, next, opt.dual.eps, opt.dual.max_iter) || g.d.norm() == T(0);
        state = next;
        if (stop) break;
    }

    if (best.found && (!opt.keep_incumbent || best.objective >= input_utility)) {
        res.point = best.point;
        res.utility = best.objective;
    } else {
        res.point = input;
        res.utility = input_utility;
        res.accepted = false;
    }
    return res;
}

template <class T>
struct LcResult
{
    AllocationPoint<T> point;
    T utility = 0;
    T utility_sa = 0;
    T utility_wa = 0;
    int dual_sa = 0;
    int dual_wa = 0;
    int dual_pra = 0;
    long cccp_iterations = 0;

    int dual_iterations() const { return dual_sa + dual_wa + dual_pra; }
    int max_stage_dual() const { return std::max({dual_sa, dual_wa, dual_pra}); }
};

/// Strong allocation (no weak users, no proximal term), then weak allocation, then power redistribution.
template <class T>
LcResult<T> lc_pipeline(const ChannelRealization<T>& chan, const AllocatorOptions& opt = {})
{
    LcResult<T> res;
    const PowerMatrix<T> zero = PowerMatrix<T>::Zero(chan.num_users(), chan.num_subcarriers);
    auto sa = strong_allocation(chan, AllocationPoint<T>::empty_for(chan), zero, T(0), opt);
    res.dual_sa = sa.dual_iterations;
    res.utility_sa = sa.utility;
    auto wa = weak_allocation(chan, sa.point, zero, T(0), opt);
    res.dual_wa = wa.dual_iterations;
    res.utility_wa = wa.utility;
    auto pr = pra(chan, wa.point, opt);
    res.dual_pra = pr.dual_iterations;
    res.cccp_iterations = sa.cccp_iterations + wa.cccp_iterations + pr.cccp_iterations;
    res.point = std::move(pr.point);
    res.utility = pr.utility;
    return res;
}

/// Full-duplex orthogonal baseline: one uplink and one downlink user per subcarrier, no weak users.
template <class T>
LcResult<T> oma_baseline(const ChannelRealization<T>& chan, const AllocatorOptions& opt = {})
{
    LcResult<T> res;
    const PowerMatrix<T> zero = PowerMatrix<T>::Zero(chan.num_users(), chan.num_subcarriers);
    auto sa = strong_allocation(chan, AllocationPoint<T>::empty_for(chan), zero, T(0), opt);
    res.dual_sa = sa.dual_iterations;
    res.utility_sa = sa.utility;
    res.utility_wa = sa.utility;
    auto pr = pra(chan, sa.point, opt);
    res.dual_pra = pr.dual_iterations;
    res.cccp_iterations = sa.cccp_iterations + pr.cccp_iterations;
    res.point = std::move(pr.point);
    res.utility = pr.utility;
    return res;
}

} // namespace nomafd

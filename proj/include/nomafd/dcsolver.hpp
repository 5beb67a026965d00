#pragma once
#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>
#include <nomafd/detail/concave_max.hpp>
#include <nomafd/model.hpp>
#include <nomafd/subcarrier.hpp>

namespace nomafd {

/// Power below which a user does not activate the downlink decodability constraint.
inline constexpr double positive_power_threshold = 1e-12;

/**
 * Per-subcarrier Lagrangian auxiliary function, split as L = L_cav + L_vex:
 *
 *   L_cav = sum_i w_i log2(received_i) - sum_s reg_s (p_s - anchor_s)^2 - penalty_offset
 *   L_vex = -sum_i w_i log2(interference_i) - price . p
 *
 * `penalty_offset` carries regularization mass of anchors that belong to users
 * not present in this configuration.
 */
template <class ValueType>
struct DcObjective
{
    using value_t = ValueType;
    using vec_t = util::vec4_type<value_t>;
    using mat_t = util::mat4_type<value_t>;

    SubcarrierLinks<value_t> links;
    vec_t price = vec_t::Zero();
    vec_t reg = vec_t::Zero();
    vec_t anchor = vec_t::Zero();
    value_t penalty_offset = 0;

    value_t l_cav(const vec_t& p) const
    {
        value_t acc = 0;
        for (int i = 0; i < num_slots; ++i) {
            if (links.weight(i) != value_t(0)) acc += links.weight(i) * std::log2(links.received(p, i));
        }
        return acc - reg.dot((p - anchor).cwiseAbs2()) - penalty_offset;
    }

    value_t l_vex(const vec_t& p) const
    {
        value_t acc = 0;
        for (int i = 0; i < num_slots; ++i) {
            if (links.weight(i) != value_t(0)) acc -= links.weight(i) * std::log2(links.interference(p, i));
        }
        return acc - price.dot(p);
    }

    value_t value(const vec_t& p) const
    {
        value_t acc = 0;
        for (int i = 0; i < num_slots; ++i) {
            if (links.weight(i) != value_t(0)) {
                acc += links.weight(i) * std::log2(links.received(p, i) / links.interference(p, i));
            }
        }
        return acc - price.dot(p) - reg.dot((p - anchor).cwiseAbs2()) - penalty_offset;
    }

    vec_t grad_l_vex(const vec_t& p) const
    {
        vec_t g = -price;
        for (int i = 0; i < num_slots; ++i) {
            if (links.weight(i) == value_t(0)) continue;
            g -= (links.weight(i) / (util::ln2<value_t> * links.interference(p, i))) * links.cross.col(i);
        }
        return g;
    }

    vec_t grad_l_cav(const vec_t& p) const
    {
        vec_t g = value_t(-2) * reg.cwiseProduct(p - anchor);
        for (int i = 0; i < num_slots; ++i) {
            if (links.weight(i) == value_t(0)) continue;
            g += (links.weight(i) / (util::ln2<value_t> * links.received(p, i))) * links.received_coeff(i);
        }
        return g;
    }

    mat_t hess_l_cav(const vec_t& p) const
    {
        mat_t h = mat_t::Zero();
        h.diagonal() = value_t(-2) * reg;
        for (int i = 0; i < num_slots; ++i) {
            if (links.weight(i) == value_t(0)) continue;
            const vec_t c = links.received_coeff(i);
            const value_t r = links.received(p, i);
            h -= (links.weight(i) / (util::ln2<value_t> * r * r)) * (c * c.transpose());
        }
        return h;
    }
};

/// L_cav plus the linearization of L_vex at a reference point (up to a constant).
template <class T>
struct LinearizedObjective
{
    const DcObjective<T>* dc;
    util::vec4_type<T> lin;

    T value(const util::vec4_type<T>& p) const { return dc->l_cav(p) + lin.dot(p); }
    util::vec4_type<T> grad(const util::vec4_type<T>& p) const { return dc->grad_l_cav(p) + lin; }
    util::mat4_type<T> hess(const util::vec4_type<T>& p) const { return dc->hess_l_cav(p); }
};

template <class T>
struct DcValue
{
    T cav = 0;
    T vex = 0;
    T total = 0;
};

template <class T>
DcValue<T> eval_dc(const DcObjective<T>& obj, const util::vec4_type<T>& p)
{
    if (!p.allFinite() || (p.array() < T(0)).any()) {
        throw std::invalid_argument("eval_dc: powers must be finite and nonnegative");
    }
    DcValue<T> v;
    v.cav = obj.l_cav(p);
    v.vex = obj.l_vex(p);
    v.total = v.cav + v.vex;
    return v;
}

template <class T>
util::vec4_type<T> grad_l_vex(const DcObjective<T>& obj, const util::vec4_type<T>& p)
{
    return obj.grad_l_vex(p);
}

enum class StepMode
{
    strong,
    weak,
};

/**
 * One candidate couple on one subcarrier: an uplink and a downlink user for
 * the block being optimized (strong or weak slots), with the other block's
 * users held at fixed powers.
 */
template <class ValueType>
struct CoupleProblem
{
    using value_t = ValueType;

    int subcarrier = 0;
    StepMode mode = StepMode::strong;
    int uplink = no_user;
    int downlink = no_user;
    int fixed_uplink = no_user;
    int fixed_downlink = no_user;
    value_t fixed_uplink_power = 0;
    value_t fixed_downlink_power = 0;
    value_t mu_uplink = 0;
    value_t mu_downlink = 0;
    value_t reg = 0;
    value_t anchor_uplink = 0;
    value_t anchor_downlink = 0;
    value_t anchor_offset = 0;
    value_t cap_uplink = 0;
    value_t cap_downlink = 0;

    Slot uplink_slot() const { return mode == StepMode::strong ? Slot::strong_up : Slot::weak_up; }
    Slot downlink_slot() const { return mode == StepMode::strong ? Slot::strong_down : Slot::weak_down; }
    Slot fixed_uplink_slot() const { return mode == StepMode::strong ? Slot::weak_up : Slot::strong_up; }
    Slot fixed_downlink_slot() const { return mode == StepMode::strong ? Slot::weak_down : Slot::strong_down; }

    std::array<int, num_slots> users() const
    {
        std::array<int, num_slots> u{no_user, no_user, no_user, no_user};
        u[slot_index(uplink_slot())] = uplink;
        u[slot_index(downlink_slot())] = downlink;
        u[slot_index(fixed_uplink_slot())] = fixed_uplink;
        u[slot_index(fixed_downlink_slot())] = fixed_downlink;
        return u;
    }

    util::vec4_type<value_t> fixed_powers() const
    {
        util::vec4_type<value_t> p = util::vec4_type<value_t>::Zero();
        if (fixed_uplink != no_user) p(slot_index(fixed_uplink_slot())) = fixed_uplink_power;
        if (fixed_downlink != no_user) p(slot_index(fixed_downlink_slot())) = fixed_downlink_power;
        return p;
    }

    void validate() const
    {
        if (mu_uplink < 0 || mu_downlink < 0 || reg < 0 || anchor_uplink < 0 || anchor_downlink < 0
            || cap_uplink < 0 || cap_downlink < 0) {
            throw std::invalid_argument("CoupleProblem: multipliers, weights, anchors and caps must be nonnegative");
        }
    }
};

template <class T>
DcObjective<T> make_objective(const ChannelRealization<T>& chan, const CoupleProblem<T>& prob)
{
    prob.validate();
    DcObjective<T> obj;
    obj.links = make_links(chan, prob.subcarrier, prob.users());
    const int su = slot_index(prob.uplink_slot());
    const int sd = slot_index(prob.downlink_slot());
    if (prob.uplink != no_user) {
        obj.price(su) = prob.mu_uplink;
        obj.reg(su) = prob.reg;
        obj.anchor(su) = prob.anchor_uplink;
    }
    if (prob.downlink != no_user) {
        obj.price(sd) = prob.mu_downlink;
        obj.reg(sd) = prob.reg;
        obj.anchor(sd) = prob.anchor_downlink;
    }
    obj.penalty_offset = prob.reg * prob.anchor_offset;
    return obj;
}

enum class BoxCase
{
    unconstrained,
    upper_cut,
    lower_cut,
    zero_theta,
    empty,
};

inline const char* box_case_name(BoxCase c)
{
    switch (c) {
        case BoxCase::unconstrained: return "unconstrained";
        case BoxCase::upper_cut: return "upper_cut";
        case BoxCase::lower_cut: return "lower_cut";
        case BoxCase::zero_theta: return "zero_theta";
        case BoxCase::empty: return "empty";
    }
    return "?";
}

template <class T>
struct FeasibleBox
{
    T uplink_lo = 0;
    T uplink_hi = 0;
    T downlink_lo = 0;
    T downlink_hi = 0;
    bool empty = false;
    BoxCase kind = BoxCase::unconstrained;
    /// Threshold where theta * P + remainder changes sign (NaN when theta = 0 or the cut is inactive).
    T threshold = std::numeric_limits<T>::quiet_NaN();
};

/**
 * Interval of uplink powers P in [0, cap] with theta*P + remainder >= 0, when
 * `binding`; otherwise the whole [0, cap].
 */
template <class T>
FeasibleBox<T> feasible_box(T theta, T remainder, bool binding, T cap_uplink, T cap_downlink)
{
    FeasibleBox<T> box;
    box.uplink_hi = cap_uplink;
    box.downlink_hi = cap_downlink;
    if (!binding) return box;
    if (theta == T(0)) {
        box.kind = BoxCase::zero_theta;
        if (remainder < T(0)) {
            box.empty = true;
            box.kind = BoxCase::empty;
        }
        return box;
    }
    const T bar = -remainder / theta;
    box.threshold = bar;
    if (theta < T(0)) {
        box.kind = BoxCase::upper_cut;
        if (bar < T(0)) {
            box.empty = true;
            box.kind = BoxCase::empty;
        } else {
            box.uplink_hi = std::min(cap_uplink, bar);
        }
    } else {
        box.kind = BoxCase::lower_cut;
        if (bar > cap_uplink) {
            box.empty = true;
            box.kind = BoxCase::empty;
        } else {
            box.uplink_lo = std::max(T(0), bar);
        }
    }
    return box;
}

/**
 * Box for the free couple, including the decodability cut on the candidate
 * uplink power. In strong mode the constraint binds when the fixed weak
 * downlink user holds positive power; in weak mode when the fixed strong
 * downlink user does.
 */
template <class T>
FeasibleBox<T> build_feasible_box(const ChannelRealization<T>& chan, const CoupleProblem<T>& prob)
{
    const int f = prob.subcarrier;
    const bool strong_mode = prob.mode == StepMode::strong;
    const int strong_dl = strong_mode ? prob.downlink : prob.fixed_downlink;
    const int weak_dl = strong_mode ? prob.fixed_downlink : prob.downlink;
    const bool binding = strong_dl != no_user && weak_dl != no_user
                      && prob.fixed_downlink_power > T(positive_power_threshold);
    if (!binding) return feasible_box<T>(0, 0, false, prob.cap_uplink, prob.cap_downlink);

    std::vector<int> ups;
    if (prob.uplink != no_user) ups.push_back(prob.uplink);
    if (prob.fixed_uplink != no_user) ups.push_back(prob.fixed_uplink);
    const auto c = noma_coefficients(chan, weak_dl, strong_dl, ups, f);
    T theta = 0;
    T remainder = c.delta;
    int a = 0;
    if (prob.uplink != no_user) theta = c.theta(a++);
    if (prob.fixed_uplink != no_user) remainder += c.theta(a) * prob.fixed_uplink_power;
    return feasible_box<T>(theta, remainder, true, prob.cap_uplink, prob.cap_downlink);
}

struct CccpOptions
{
    double eps = 1e-7;
    int max_iter = 200;
    bool record_trace = false;
    bool extrapolate = true;
};

template <class T>
struct CccpResult
{
    util::vec4_type<T> power = util::vec4_type<T>::Zero();
    T value = 0;
    std::vector<T> trace;
    int iterations = 0;
    bool converged = false;
};

/**
 * Concave-convex procedure: repeatedly maximizes L_cav plus L_vex linearized
 * at a point z over `region`. The surrogate minorizes L and is tight at z, so
 * L(next) >= L(z). With `extrapolate`, z is the current iterate pushed along
 * the last step (Nesterov weights) and is used only if it is feasible and
 * L(z) >= L(p); otherwise z = p and the momentum restarts.
 */
template <class T>
CccpResult<T> cccp(const DcObjective<T>& obj, const detail::Region<T>& region,
                   const util::vec4_type<T>& init, const CccpOptions& opt = {})
{
    CccpResult<T> res;
    util::vec4_type<T> p = region.clamp(init);
    util::vec4_type<T> prev = p;
    T val = obj.value(p);
    if (!std::isfinite(val)) throw std::runtime_error("cccp: non-finite objective");
    if (opt.record_trace) res.trace.push_back(val);
    T momentum = 1;
    for (int t = 0; t < opt.max_iter; ++t) {
        util::vec4_type<T> z = p;
        if (opt.extrapolate && t > 0) {
            const T next_momentum = (T(1) + std::sqrt(T(1) + T(4) * momentum * momentum)) / T(2);
            const util::vec4_type<T> cand = region.clamp(p + ((momentum - T(1)) / next_momentum) * (p - prev));
            if (region.in_halfspace(cand, T(0)) && obj.value(cand) >= val) {
                z = cand;
                momentum = next_momentum;
            } else {
                momentum = 1;
            }
        }
        LinearizedObjective<T> sur{&obj, obj.grad_l_vex(z)};
        const util::vec4_type<T> next = detail::concave_maximize<T>(sur, region, z);
        const T next_val = obj.value(next);
        if (!std::isfinite(next_val)) throw std::runtime_error("cccp: non-finite objective");
        const T step = std::max((next - p).norm(), (z - p).norm());
        const T scale = T(1) + p.norm();
        prev = p;
        p = next;
        val = next_val;
        res.iterations = t + 1;
        if (opt.record_trace) res.trace.push_back(val);
        if (step <= T(opt.eps) * scale) {
            res.converged = true;
            break;
        }
    }
    res.power = p;
    res.value = val;
    return res;
}

template <class T>
detail::Region<T> couple_region(const CoupleProblem<T>& prob, const FeasibleBox<T>& box)
{
    detail::Region<T> r;
    const int su = slot_index(prob.uplink_slot());
    const int sd = slot_index(prob.downlink_slot());
    if (prob.uplink != no_user) {
        r.add_free(su);
        r.lo(su) = box.uplink_lo;
        r.hi(su) = box.uplink_hi;
    }
    if (prob.downlink != no_user) {
        r.add_free(sd);
        r.lo(sd) = box.downlink_lo;
        r.hi(sd) = box.downlink_hi;
    }
    return r;
}

template <class T>
util::vec4_type<T> couple_anchor_point(const CoupleProblem<T>& prob)
{
    util::vec4_type<T> p = prob.fixed_powers();
    if (prob.uplink != no_user) p(slot_index(prob.uplink_slot())) = prob.anchor_uplink;
    if (prob.downlink != no_user) p(slot_index(prob.downlink_slot())) = prob.anchor_downlink;
    return p;
}

/// CCCP for a couple on a non-empty box, started from `init` projected onto the box.
template <class T>
CccpResult<T> cccp_couple(const ChannelRealization<T>& chan, const CoupleProblem<T>& prob,
                          const FeasibleBox<T>& box, const util::vec4_type<T>& init,
                          const CccpOptions& opt = {})
{
    if (box.empty) throw std::invalid_argument("cccp_couple: empty feasible box");
    const auto obj = make_objective(chan, prob);
    util::vec4_type<T> start = init;
    const auto fixed = prob.fixed_powers();
    start(slot_index(prob.fixed_uplink_slot())) = fixed(slot_index(prob.fixed_uplink_slot()));
    start(slot_index(prob.fixed_downlink_slot())) = fixed(slot_index(prob.fixed_downlink_slot()));
    return cccp(obj, couple_region(prob, box), start, opt);
}

/// Empty-box fallback: the downlink candidate is switched off and only the uplink power is optimized.
template <class T>
CccpResult<T> oma_fallback(const ChannelRealization<T>& chan, const CoupleProblem<T>& prob,
                           const CccpOptions& opt = {})
{
    CoupleProblem<T> oma = prob;
    oma.downlink = no_user;
    const auto obj = make_objective(chan, oma);
    // Anchor mass of the dropped downlink candidate stays in the objective.
    auto obj_full = obj;
    obj_full.penalty_offset += prob.reg * prob.anchor_downlink * prob.anchor_downlink;
    detail::Region<T> r;
    const int su = slot_index(prob.uplink_slot());
    if (prob.uplink != no_user) {
        r.add_free(su);
        r.hi(su) = prob.cap_uplink;
    }
    auto res = cccp(obj_full, r, couple_anchor_point(oma), opt);
    return res;
}

/// Anchor point followed by the distinct corners of the box.
template <class T>
std::vector<util::vec4_type<T>> couple_starts(const CoupleProblem<T>& prob, const FeasibleBox<T>& box)
{
    std::vector<util::vec4_type<T>> starts{couple_anchor_point(prob)};
    const int su = slot_index(prob.uplink_slot());
    const int sd = slot_index(prob.downlink_slot());
    for (T u : {box.uplink_lo, box.uplink_hi}) {
        for (T d : {box.downlink_lo, box.downlink_hi}) {
            util::vec4_type<T> x = prob.fixed_powers();
            if (prob.uplink != no_user) x(su) = u;
            if (prob.downlink != no_user) x(sd) = d;
            if (std::find(starts.begin(), starts.end(), x) == starts.end()) starts.push_back(x);
        }
    }
    return starts;
}

template <class T>
struct CoupleSolution
{
    util::vec4_type<T> power = util::vec4_type<T>::Zero();
    T value = 0;
    int cccp_iterations = 0;
    bool fallback = false;
    BoxCase box_kind = BoxCase::unconstrained;
};

/// Builds the box and keeps the best CCCP run over the starting points, or the fallback on an empty box.
template <class T>
CoupleSolution<T> solve_couple(const ChannelRealization<T>& chan, const CoupleProblem<T>& prob,
                               const CccpOptions& opt = {})
{
    CoupleSolution<T> sol;
    const auto box = build_feasible_box(chan, prob);
    sol.box_kind = box.kind;
    CccpResult<T> res;
    if (box.empty) {
        res = oma_fallback(chan, prob, opt);
        sol.fallback = true;
        sol.power = res.power;
        sol.value = res.value;
        sol.cccp_iterations = res.iterations;
        return sol;
    }
    bool have = false;
    for (const auto& start : couple_starts(prob, box)) {
        res = cccp_couple(chan, prob, box, start, opt);
        sol.cccp_iterations += res.iterations;
        if (!have || res.value > sol.value) {
            sol.power = res.power;
            sol.value = res.value;
            have = true;
        }
    }
    return sol;
}

/**
 * Power optimization of one subcarrier with a fixed allocation (all four
 * slots may be occupied), no regularization, per-slot caps.
 */
template <class ValueType>
struct PraSubproblem
{
    using value_t = ValueType;

    DcObjective<value_t> objective;
    util::vec4_type<value_t> cap = util::vec4_type<value_t>::Zero();
    bool has_pair = false;
    GammaAffine<value_t> gamma;

    bool pair_active(const util::vec4_type<value_t>& p) const
    {
        return has_pair && p(slot_index(Slot::strong_down)) > value_t(positive_power_threshold)
            && p(slot_index(Slot::weak_down)) > value_t(positive_power_threshold);
    }

    value_t gamma_at(const util::vec4_type<value_t>& p) const
    {
        return gamma(p(slot_index(Slot::strong_up)), p(slot_index(Slot::weak_up)));
    }

    value_t gamma_tol(const util::vec4_type<value_t>& p) const
    {
        return value_t(1e-9) * (std::abs(gamma.delta) + std::abs(gamma.theta_strong) * p(slot_index(Slot::strong_up))
                                + std::abs(gamma.theta_weak) * p(slot_index(Slot::weak_up)));
    }
};

template <class T>
PraSubproblem<T> make_pra_subproblem(const ChannelRealization<T>& chan, const AllocationState& alloc, int f,
                                     T mu_downlink, const util::vec_type<T>& mu_uplink)
{
    PraSubproblem<T> sub;
    const auto users = slot_users(alloc, f);
    sub.objective.links = make_links(chan, f, users);
    for (int s = 0; s < num_slots; ++s) {
        if (users[s] == no_user) continue;
        const bool up = is_uplink_slot(static_cast<Slot>(s));
        sub.objective.price(s) = up ? mu_uplink(users[s]) : mu_downlink;
        sub.cap(s) = up ? chan.uplink_budget : chan.downlink_budget;
    }
    sub.has_pair = users[slot_index(Slot::strong_down)] != no_user && users[slot_index(Slot::weak_down)] != no_user;
    if (sub.has_pair) sub.gamma = gamma_affine(chan, users, f);
    return sub;
}

enum class PowerBlock
{
    downlink,
    uplink,
};

template <class T>
struct BlockStepResult
{
    util::vec4_type<T> power = util::vec4_type<T>::Zero();
    T value = 0;
    /// Downlink step solved with one of the two downlink powers pinned at zero.
    bool restricted = false;
    /// Uplink half-space was empty on the box; the weak downlink power was zeroed.
    bool dropped_weak = false;
};

/**
 * One block update of the sequential CCCP: L_vex is linearized at `p` and the
 * block's powers maximize the concave surrogate with the other block fixed.
 */
template <class T>
BlockStepResult<T> pra_block_step(const PraSubproblem<T>& sub, const util::vec4_type<T>& p, PowerBlock block)
{
    using vec_t = util::vec4_type<T>;
    const auto& obj = sub.objective;
    const auto& links = obj.links;
    LinearizedObjective<T> sur{&obj, obj.grad_l_vex(p)};
    BlockStepResult<T> out;
    out.power = p;

    auto region_for = [&](std::initializer_list<Slot> slots) {
        detail::Region<T> r;
        for (Slot s : slots) {
            const int i = slot_index(s);
            if (!links.occupied(i)) continue;
            r.add_free(i);
            r.lo(i) = 0;
            r.hi(i) = sub.cap(i);
        }
        return r;
    };

    if (block == PowerBlock::downlink) {
        const int sd = slot_index(Slot::strong_down);
        const int wd = slot_index(Slot::weak_down);
        if (sub.has_pair && sub.gamma_at(p) < -sub.gamma_tol(p)) {
            // Both downlink powers positive would violate decodability: keep one of them at zero.
            out.restricted = true;
            vec_t best = p;
            T best_val = -std::numeric_limits<T>::infinity();
            for (int pinned : {wd, sd}) {
                const int other = pinned == wd ? sd : wd;
                vec_t start = p;
                start(pinned) = 0;
                detail::Region<T> r;
                r.add_free(other);
                r.hi(other) = sub.cap(other);
                const vec_t cand = detail::concave_maximize<T>(sur, r, start);
                const T v = sur.value(cand);
                if (v > best_val) {
                    best_val = v;
                    best = cand;
                }
            }
            out.power = best;
        } else {
            out.power = detail::concave_maximize<T>(sur, region_for({Slot::strong_down, Slot::weak_down}), p);
        }
    } else {
        auto r = region_for({Slot::strong_up, Slot::weak_up});
        vec_t start = p;
        if (sub.pair_active(p)) {
            r.has_halfspace = true;
            r.normal(slot_index(Slot::strong_up)) = sub.gamma.theta_strong;
            r.normal(slot_index(Slot::weak_up)) = sub.gamma.theta_weak;
            r.rhs = -sub.gamma.delta;
            if (r.halfspace_max() < r.rhs - r.halfspace_tol() || !r.in_halfspace(p, r.halfspace_tol())) {
                out.dropped_weak = true;
                r.has_halfspace = false;
                start(slot_index(Slot::weak_down)) = 0;
            }
        }
        out.power = detail::concave_maximize<T>(sur, r, start);
    }
    out.value = obj.value(out.power);
    return out;
}

template <class T>
struct PraSubcarrierResult
{
    util::vec4_type<T> power = util::vec4_type<T>::Zero();
    T value = 0;
    std::vector<T> trace;
    int sweeps = 0;
    bool converged = false;
};

/// Alternating downlink/uplink block steps until the powers settle.
template <class T>
PraSubcarrierResult<T> pra_subcarrier(const PraSubproblem<T>& sub, const util::vec4_type<T>& init,
                                      const CccpOptions& opt = {})
{
    PraSubcarrierResult<T> res;
    util::vec4_type<T> p = init.cwiseMax(util::vec4_type<T>::Zero()).cwiseMin(sub.cap);
    if (opt.record_trace) res.trace.push_back(sub.objective.value(p));
    for (int t = 0; t < opt.max_iter; ++t) {
        const auto prev = p;
        auto d = pra_block_step(sub, p, PowerBlock::downlink);
        if (opt.record_trace) res.trace.push_back(d.value);
        auto u = pra_block_step(sub, d.power, PowerBlock::uplink);
        if (opt.record_trace) res.trace.push_back(u.value);
        p = u.power;
        res.sweeps = t + 1;
        if ((p - prev).norm() <= T(opt.eps) * (T(1) + prev.norm())) {
            res.converged = true;
            break;
        }
    }
    res.power = p;
    res.value = sub.objective.value(p);
    return res;
}

} // namespace nomafd

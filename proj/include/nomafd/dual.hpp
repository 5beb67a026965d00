#pragma once
#include <cmath>
#include <limits>
#include <Eigen/Cholesky>
#include <nomafd/model.hpp>

namespace nomafd {

/**
 * Multipliers of the power budgets: index 0 prices the downlink total,
 * index 1 + j prices uplink user j. The ellipsoid (center, shape) localizes
 * the minimizer of the dual function.
 */
template <class ValueType>
struct DualState
{
    using value_t = ValueType;
    using vec_t = util::vec_type<value_t>;
    using mat_t = util::mat_type<value_t>;

    vec_t mu;
    vec_t center;
    mat_t shape;
    int iteration = 0;
    int restarts = 0;
    value_t best_value = std::numeric_limits<value_t>::infinity();
    vec_t best_mu;

    int dim() const { return static_cast<int>(center.size()); }
    value_t mu_downlink() const { return mu(0); }
    vec_t mu_uplink() const { return mu.tail(mu.size() - 1); }
};

template <class T>
struct Subgradient
{
    util::vec_type<T> d;
};

/// Budgets left for the block being optimized after the other block's consumption.
template <class T>
struct ResidualBudgets
{
    util::vec_type<T> uplink;
    T downlink = 0;

    util::vec_type<T> stacked() const
    {
        util::vec_type<T> b(uplink.size() + 1);
        b(0) = downlink;
        b.tail(uplink.size()) = uplink;
        return b;
    }
};

template <class T>
ResidualBudgets<T> full_budgets(const ChannelRealization<T>& chan)
{
    return {util::vec_type<T>::Constant(chan.num_uplink, chan.uplink_budget), chan.downlink_budget};
}

/**
 * Per-coordinate bound on useful prices: with budget b spread over F
 * subcarriers, the marginal weighted rate is at most alpha_max F / (b ln 2);
 * a proximal term with weight K adds at most 2 K b.
 */
template <class T>
util::vec_type<T> price_upper_bound(const ChannelRealization<T>& chan, const ResidualBudgets<T>& budgets, T reg)
{
    const T amax = chan.weights.maxCoeff();
    const T F = static_cast<T>(chan.num_subcarriers);
    const auto b = budgets.stacked();
    util::vec_type<T> full(b.size());
    full(0) = chan.downlink_budget;
    full.tail(b.size() - 1).setConstant(chan.uplink_budget);
    util::vec_type<T> up(b.size());
    for (Eigen::Index i = 0; i < b.size(); ++i) {
        const T bi = std::max(b(i), T(1e-6) * full(i));
        up(i) = amax * F / (bi * util::ln2<T>) + T(2) * reg * bi;
    }
    return up;
}

/// Ellipsoid circumscribing the box [0, upper]: centered at upper/2 with semi-axes sqrt(n) upper/2.
template <class T>
DualState<T> make_dual_state(const util::vec_type<T>& upper)
{
    DualState<T> s;
    const T n = static_cast<T>(upper.size());
    s.center = upper / T(2);
    s.shape = (n * (upper / T(2)).cwiseAbs2()).asDiagonal();
    s.mu = s.center;
    s.best_mu = s.mu;
    return s;
}

template <class T>
Subgradient<T> budget_slack(const util::vec_type<T>& budgets, const ChannelRealization<T>& chan,
                            const PowerMatrix<T>& P, const util::bool_mat_type& counted)
{
    Subgradient<T> g;
    g.d = budgets;
    const int M = chan.num_uplink;
    for (int i = 0; i < chan.num_users(); ++i) {
        T used = 0;
        for (int f = 0; f < chan.num_subcarriers; ++f) {
            if (counted(i, f)) used += P(i, f);
        }
        if (i < M) g.d(1 + i) -= used;
        else g.d(0) -= used;
    }
    return g;
}

/// Budget slack of the block `mode` (strong or weak roles only) against residual budgets.
template <class T>
Subgradient<T> subgradient_sa_wa(const ChannelRealization<T>& chan, const AllocationState& alloc,
                                 const PowerMatrix<T>& P, const ResidualBudgets<T>& residual, bool strong_mode)
{
    return budget_slack(residual.stacked(), chan, P, strong_mode ? alloc.strong : alloc.weak);
}

/// Budget slack of all allocated powers against the full budgets.
template <class T>
Subgradient<T> subgradient_pra(const ChannelRealization<T>& chan, const AllocationState& alloc,
                               const PowerMatrix<T>& P)
{
    const util::bool_mat_type any = alloc.strong || alloc.weak;
    return budget_slack(full_budgets(chan).stacked(), chan, P, any);
}

/**
 * Central cut keeping {z : c.(z - center) <= 0}. Returns false when the
 * shape matrix is degenerate along c.
 */
template <class T>
bool central_cut(DualState<T>& s, const util::vec_type<T>& c)
{
    const T n = static_cast<T>(s.dim());
    const util::vec_type<T> Ac = s.shape * c;
    const T denom = c.dot(Ac);
    if (!(denom > T(0)) || !std::isfinite(denom)) return false;
    const util::vec_type<T> b = Ac / std::sqrt(denom);
    if (n == T(1)) {
        s.center -= b / T(2);
        s.shape *= T(0.25);
    } else {
        s.center -= b / (n + T(1));
        s.shape = (n * n / (n * n - T(1))) * (s.shape - (T(2) / (n + T(1))) * (b * b.transpose()));
        s.shape = T(0.5) * (s.shape + s.shape.transpose());
    }
    return s.center.allFinite() && s.shape.allFinite();
}

template <class T>
bool shape_ok(const DualState<T>& s)
{
    if (!s.shape.allFinite()) return false;
    Eigen::LLT<util::mat_type<T>> llt(s.shape);
    if (llt.info() != Eigen::Success) return false;
    const util::vec_type<T> d = llt.matrixL().toDenseMatrix().diagonal();
    const T lo = d.minCoeff();
    const T hi = d.maxCoeff();
    return lo > T(0) && hi / lo < T(1e7);
}

/// Replaces the ellipsoid by a ball around the clamped center.
template <class T>
void restart_ball(DualState<T>& s, T radius)
{
    s.center = s.center.cwiseMax(T(0));
    const T r = std::max(radius, T(1e-12) * (T(1) + s.center.norm()));
    s.shape = util::mat_type<T>::Identity(s.dim(), s.dim()) * (r * r);
    ++s.restarts;
}

struct EllipsoidOptions
{
    int max_feasibility_cuts = 64;
};

/**
 * Objective cut along the subgradient d of the dual function, followed by
 * feasibility cuts -e_i while any center coordinate is negative.
 */
template <class T>
DualState<T> ellipsoid_step(DualState<T> s, const Subgradient<T>& g, const EllipsoidOptions& opt = {})
{
    ++s.iteration;
    if (g.d.norm() == T(0)) {
        s.mu = s.center.cwiseMax(T(0));
        return s;
    }
    const T radius = std::sqrt(std::max(s.shape.diagonal().maxCoeff(), T(0)));
    if (!central_cut(s, g.d) || !shape_ok(s)) {
        restart_ball(s, T(0.5) * radius);
    }
    for (int cut = 0; cut < opt.max_feasibility_cuts; ++cut) {
        Eigen::Index i;
        const T most_negative = s.center.minCoeff(&i);
        if (most_negative >= T(0)) break;
        util::vec_type<T> c = util::vec_type<T>::Zero(s.dim());
        c(i) = T(-1);
        if (!central_cut(s, c) || !shape_ok(s)) {
            restart_ball(s, T(0.5) * radius);
            break;
        }
    }
    if ((s.center.array() < T(0)).any()) {
        const T r = std::sqrt(std::max(s.shape.diagonal().maxCoeff(), T(0)));
        restart_ball(s, r);
    }
    s.mu = s.center.cwiseMax(T(0));
    return s;
}

/// Records the dual value observed at the current multipliers.
template <class T>
void record_dual_value(DualState<T>& s, T value)
{
    if (value < s.best_value) {
        s.best_value = value;
        s.best_mu = s.mu;
    }
}

struct DualOptions
{
    double eps = 1e-5;
    int max_iter = 150;
};

template <class T>
bool dual_converged(const DualState<T>& prev, const DualState<T>& next, double eps, int max_iter)
{
    if (next.iteration >= max_iter) return true;
    return (next.mu - prev.mu).norm() <= T(eps) * (T(1) + next.mu.norm());
}

} // namespace nomafd

#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <Eigen/Dense>
#include <nomafd/util/types.hpp>

namespace nomafd {
namespace detail {

/**
 * Feasible region for the free coordinates of a 4-vector: box [lo, hi] on
 * `free` coordinates, other coordinates fixed at their current value, and an
 * optional half-space normal·p >= rhs restricted to the free coordinates.
 */
template <class T>
struct Region
{
    using vec_t = util::vec4_type<T>;

    int free[2] = {-1, -1};
    int num_free = 0;
    vec_t lo = vec_t::Zero();
    vec_t hi = vec_t::Zero();
    bool has_halfspace = false;
    vec_t normal = vec_t::Zero();
    T rhs = 0;

    void add_free(int s)
    {
        free[num_free++] = s;
    }

    T halfspace_value(const vec_t& p) const
    {
        T acc = 0;
        for (int a = 0; a < num_free; ++a) acc += normal(free[a]) * p(free[a]);
        return acc;
    }

    bool in_halfspace(const vec_t& p, T tol) const
    {
        return !has_halfspace || halfspace_value(p) >= rhs - tol;
    }

    /// Largest value of normal·p over the box.
    T halfspace_max() const
    {
        T acc = 0;
        for (int a = 0; a < num_free; ++a) {
            const int s = free[a];
            acc += std::max(normal(s) * lo(s), normal(s) * hi(s));
        }
        return acc;
    }

    T halfspace_tol() const
    {
        T acc = std::abs(rhs);
        for (int a = 0; a < num_free; ++a) {
            const int s = free[a];
            acc += std::abs(normal(s)) * std::max(std::abs(lo(s)), std::abs(hi(s)));
        }
        return T(1e-12) * acc;
    }

    vec_t clamp(vec_t p) const
    {
        for (int a = 0; a < num_free; ++a) {
            const int s = free[a];
            p(s) = std::clamp(p(s), lo(s), hi(s));
        }
        return p;
    }
};

/**
 * Maximizes a concave function of one parameter along p(s) = base + s*dir for
 * s in [s_lo, s_hi]. The derivative is decreasing, so a bracketed Newton
 * iteration with bisection fallback finds the stationary point.
 */
template <class T, class Objective>
util::vec4_type<T> line_maximize(const Objective& obj,
                                 const util::vec4_type<T>& base,
                                 const util::vec4_type<T>& dir,
                                 T s_lo, T s_hi, T s_start)
{
    auto point = [&](T s) -> util::vec4_type<T> { return base + s * dir; };
    auto slope = [&](T s) { return obj.grad(point(s)).dot(dir); };

    if (!(s_hi > s_lo)) return point(s_lo);
    const T d_lo = slope(s_lo);
    if (d_lo <= T(0)) return point(s_lo);
    const T d_hi = slope(s_hi);
    if (d_hi >= T(0)) return point(s_hi);

    T a = s_lo;
    T b = s_hi;
    T s = std::clamp(s_start, s_lo, s_hi);
    if (!(s > a && s < b)) s = T(0.5) * (a + b);
    const T width = s_hi - s_lo;
    for (int it = 0; it < 100; ++it) {
        const auto p = point(s);
        const T d1 = obj.grad(p).dot(dir);
        if (d1 > T(0)) a = s; else b = s;
        if (d1 == T(0) || b - a <= T(4) * std::numeric_limits<T>::epsilon() * width) break;
        const T d2 = dir.dot(obj.hess(p) * dir);
        T next = d2 < T(0) ? s - d1 / d2 : T(0.5) * (a + b);
        if (!(next > a && next < b)) next = T(0.5) * (a + b);
        if (std::abs(next - s) <= T(1e-15) * width) {
            s = next;
            break;
        }
        s = next;
    }
    return point(s);
}

/// Projected Newton with an active set on the box, two free coordinates.
template <class T, class Objective>
util::vec4_type<T> box_newton(const Objective& obj, const Region<T>& region, util::vec4_type<T> p)
{
    using vec_t = util::vec4_type<T>;
    const int a = region.free[0];
    const int b = region.free[1];
    const T wa = std::max(region.hi(a) - region.lo(a), T(0));
    const T wb = std::max(region.hi(b) - region.lo(b), T(0));
    const T eps_a = T(1e-13) * (wa + std::numeric_limits<T>::min());
    const T eps_b = T(1e-13) * (wb + std::numeric_limits<T>::min());

    T f = obj.value(p);
    for (int it = 0; it < 60; ++it) {
        const vec_t g = obj.grad(p);
        const auto H = obj.hess(p);
        const bool act_a = (p(a) <= region.lo(a) + eps_a && g(a) <= T(0))
                        || (p(a) >= region.hi(a) - eps_a && g(a) >= T(0)) || wa == T(0);
        const bool act_b = (p(b) <= region.lo(b) + eps_b && g(b) <= T(0))
                        || (p(b) >= region.hi(b) - eps_b && g(b) >= T(0)) || wb == T(0);
        if (act_a && act_b) break;

        vec_t d = vec_t::Zero();
        if (!act_a && !act_b) {
            util::mat2_type<T> h2;
            h2 << H(a, a), H(a, b), H(b, a), H(b, b);
            const T shift = T(1e-12) * (std::abs(h2(0, 0)) + std::abs(h2(1, 1))) + std::numeric_limits<T>::min();
            h2.diagonal().array() -= shift;
            util::vec2_type<T> g2(g(a), g(b));
            const util::vec2_type<T> step = -h2.ldlt().solve(g2);
            if (step.allFinite() && step.dot(g2) > T(0)) {
                d(a) = step(0);
                d(b) = step(1);
            } else {
                d(a) = g(a) * wa * wa;
                d(b) = g(b) * wb * wb;
            }
        } else {
            const int s = act_a ? b : a;
            const T hss = H(s, s);
            d(s) = hss < T(0) ? -g(s) / hss : g(s);
        }

        T step = 1;
        bool moved = false;
        vec_t next = p;
        T f_next = f;
        for (int ls = 0; ls < 50; ++ls) {
            next = region.clamp(p + step * d);
            f_next = obj.value(next);
            if (f_next >= f + T(1e-4) * g.dot(next - p) && f_next >= f) {
                moved = true;
                break;
            }
            step *= T(0.5);
        }
        if (!moved) break;
        const T change = std::abs(next(a) - p(a)) / (wa + std::numeric_limits<T>::min())
                       + std::abs(next(b) - p(b)) / (wb + std::numeric_limits<T>::min());
        p = next;
        f = f_next;
        if (change <= T(1e-13)) break;
    }
    return p;
}

/**
 * Maximizes a smooth concave objective over `region`, starting from a feasible
 * p0. Never returns a point with a lower objective than p0.
 */
template <class T, class Objective>
util::vec4_type<T> concave_maximize(const Objective& obj, const Region<T>& region,
                                    const util::vec4_type<T>& p0)
{
    using vec_t = util::vec4_type<T>;
    vec_t best = p0;
    if (region.num_free == 0) return best;
    const T hs_tol = region.halfspace_tol();

    vec_t cand;
    if (region.num_free == 1) {
        const int a = region.free[0];
        T s_lo = region.lo(a);
        T s_hi = region.hi(a);
        if (region.has_halfspace && region.normal(a) != T(0)) {
            const T bound = region.rhs / region.normal(a);
            if (region.normal(a) > T(0)) s_lo = std::max(s_lo, bound);
            else s_hi = std::min(s_hi, bound);
        }
        if (s_hi < s_lo) return best;
        vec_t base = p0;
        base(a) = 0;
        vec_t dir = vec_t::Zero();
        dir(a) = 1;
        cand = line_maximize<T>(obj, base, dir, s_lo, s_hi, p0(a));
    } else {
        cand = box_newton<T>(obj, region, region.clamp(p0));
        if (!region.in_halfspace(cand, hs_tol)) {
            // The optimum of the box problem violates the half-space, so the
            // constrained optimum lies on the half-space boundary.
            const int a = region.free[0];
            const int b = region.free[1];
            const bool param_a = std::abs(region.normal(b)) >= std::abs(region.normal(a));
            const int x = param_a ? a : b;
            const int y = param_a ? b : a;
            const T ny = region.normal(y);
            const T nx = region.normal(x);
            vec_t base = p0;
            base(x) = 0;
            base(y) = region.rhs / ny;
            vec_t dir = vec_t::Zero();
            dir(x) = 1;
            dir(y) = -nx / ny;
            T s_lo = region.lo(x);
            T s_hi = region.hi(x);
            if (dir(y) != T(0)) {
                T t1 = (region.lo(y) - base(y)) / dir(y);
                T t2 = (region.hi(y) - base(y)) / dir(y);
                if (t1 > t2) std::swap(t1, t2);
                s_lo = std::max(s_lo, t1);
                s_hi = std::min(s_hi, t2);
            } else if (base(y) < region.lo(y) || base(y) > region.hi(y)) {
                return best;
            }
            if (s_hi < s_lo) {
                const T mid = T(0.5) * (s_lo + s_hi);
                s_lo = s_hi = mid;
            }
            cand = line_maximize<T>(obj, base, dir, s_lo, s_hi, cand(x));
            cand = region.clamp(cand);
        }
    }

    if (region.in_halfspace(cand, hs_tol) && obj.value(cand) >= obj.value(best)) best = cand;
    return best;
}

} // namespace detail
} // namespace nomafd

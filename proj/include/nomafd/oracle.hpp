#pragma once
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>
#include <nomafd/model.hpp>

namespace nomafd {

/**
 * Power levels per user per subcarrier: zero plus `geometric_points` points
 * spaced geometrically on [min_ratio * cap, cap].
 */
struct GridSpec
{
    int geometric_points = 8;
    double min_ratio = 1e-3;

    int num_levels() const { return geometric_points + 1; }

    /// Halves the geometric step; the refined grid contains every level of this one.
    GridSpec refined() const { return {2 * geometric_points - 1, min_ratio}; }

    template <class T>
    std::vector<T> levels(T cap) const
    {
        if (geometric_points < 1) throw std::invalid_argument("GridSpec: need at least one nonzero level");
        std::vector<T> out{T(0)};
        const int g = geometric_points;
        for (int i = 0; i < g; ++i) {
            if (g == 1) {
                out.push_back(cap);
                break;
            }
            const T e = T(1) - T(i) / T(g - 1);
            out.push_back(i == g - 1 ? cap : cap * std::pow(T(min_ratio), e));
        }
        return out;
    }
};

template <class T>
struct OracleResult
{
    T utility = 0;
    AllocationState alloc;
    PowerMatrix<T> power;
    long long evaluations = 0;
};

namespace detail {

/// Slot occupants of one subcarrier (strong up, weak up, strong down, weak down).
using RoleOption = std::array<int, 4>;

inline std::vector<RoleOption> role_options(int M, int N)
{
    std::vector<std::array<int, 2>> ups{{no_user, no_user}};
    for (int a = 0; a < M; ++a) {
        ups.push_back({a, no_user});
        for (int b = 0; b < M; ++b) if (b != a) ups.push_back({a, b});
    }
    std::vector<std::array<int, 2>> downs{{no_user, no_user}};
    for (int a = M; a < M + N; ++a) {
        downs.push_back({a, no_user});
        for (int b = M; b < M + N; ++b) if (b != a) downs.push_back({a, b});
    }
    std::vector<RoleOption> out;
    for (const auto& u : ups) {
        for (const auto& d : downs) out.push_back({u[0], u[1], d[0], d[1]});
    }
    return out;
}

/**
 * Weighted rate of one subcarrier computed straight from the gain tensor.
 * Interferers: strong uplink hears the downlink users, strong downlink hears
 * the uplink users, a weak user hears everybody else on the subcarrier.
 */
template <class T>
T oracle_subcarrier_rate(const ChannelRealization<T>& chan, int f, const RoleOption& who,
                         const std::array<T, 4>& pw)
{
    const auto& g = chan.gain[f];
    T total = 0;
    for (int s = 0; s < 4; ++s) {
        const int i = who[s];
        if (i == no_user) continue;
        T intf = chan.noise_power;
        for (int n = 0; n < 4; ++n) {
            if (n == s || who[n] == no_user) continue;
            const bool hears = s == 0 ? n >= 2 : s == 2 ? n <= 1 : true;
            if (hears) intf += g(who[n], i) * pw[n];
        }
        total += chan.weights(i) * std::log2(T(1) + g(i, i) * pw[s] / intf);
    }
    return total;
}

struct OracleCell
{
    int option = -1;
    std::array<int, 4> level{0, 0, 0, 0};
};

} // namespace detail

/**
 * Exhaustive search over role assignments and grid powers for F, M, N <= 2.
 * Weak-only slots are skipped (a lone weak user is equivalent to a strong one)
 * and occupied slots take nonzero levels. Each subcarrier is tabulated by the
 * uplink levels and the downlink power sum; subcarriers are combined under the
 * budgets with a prefix-maximum table.
 */
template <class T>
OracleResult<T> brute_force(const ChannelRealization<T>& chan, const GridSpec& grid = {},
                            long long max_evaluations = 100000000LL)
{
    const int F = chan.num_subcarriers;
    const int M = chan.num_uplink;
    const int N = chan.num_downlink;
    if (F > 2 || M > 2 || N > 2) throw std::invalid_argument("brute_force: instance exceeds F, M, N <= 2");

    const auto up_levels = grid.levels(chan.uplink_budget);
    const auto down_levels = grid.levels(chan.downlink_budget);
    const int L = static_cast<int>(up_levels.size());
    const auto options = detail::role_options(M, N);

    // Distinct downlink sums (one or two downlink users per subcarrier).
    std::vector<T> dsums;
    for (int a = 0; a < L; ++a) {
        for (int b = 0; b < L; ++b) dsums.push_back(down_levels[a] + down_levels[b]);
    }
    std::sort(dsums.begin(), dsums.end());
    dsums.erase(std::unique(dsums.begin(), dsums.end()), dsums.end());
    const int D = static_cast<int>(dsums.size());
    auto dsum_index = [&](T v) {
        return static_cast<int>(std::lower_bound(dsums.begin(), dsums.end(), v) - dsums.begin());
    };

    long long estimate = 0;
    for (const auto& o : options) {
        long long c = 1;
        for (int s = 0; s < 4; ++s) if (o[s] != no_user) c *= (L - 1);
        estimate += c;
    }
    estimate *= F;
    if (estimate > max_evaluations) throw std::length_error("brute_force: enumeration budget exceeded");

    const int L0 = M >= 1 ? L : 1;
    const int L1 = M >= 2 ? L : 1;
    const std::size_t table_size = static_cast<std::size_t>(L0) * L1 * D;
    auto cell_index = [&](int a, int b, int d) {
        return (static_cast<std::size_t>(a) * L1 + b) * D + d;
    };

    OracleResult<T> res;
    const T neg_inf = -std::numeric_limits<T>::infinity();
    std::vector<std::vector<T>> value(F, std::vector<T>(table_size, neg_inf));
    std::vector<std::vector<detail::OracleCell>> arg(F, std::vector<detail::OracleCell>(table_size));

    for (int f = 0; f < F; ++f) {
        auto& val = value[f];
        for (int oi = 0; oi < static_cast<int>(options.size()); ++oi) {
            const auto& who = options[oi];
            std::array<int, 4> lo{}, hi{};
            for (int s = 0; s < 4; ++s) {
                lo[s] = who[s] == no_user ? 0 : 1;
                hi[s] = who[s] == no_user ? 0 : L - 1;
            }
            const bool pair = who[2] != no_user && who[3] != no_user;
            NomaCoefficients<T> coef;
            if (pair) {
                std::vector<int> ups;
                for (int s = 0; s < 2; ++s) if (who[s] != no_user) ups.push_back(who[s]);
                coef = noma_coefficients(chan, who[3], who[2], ups, f);
            }
            std::array<int, 4> lv{};
            for (lv[0] = lo[0]; lv[0] <= hi[0]; ++lv[0])
            for (lv[1] = lo[1]; lv[1] <= hi[1]; ++lv[1])
            for (lv[2] = lo[2]; lv[2] <= hi[2]; ++lv[2])
            for (lv[3] = lo[3]; lv[3] <= hi[3]; ++lv[3]) {
                const std::array<T, 4> pw{up_levels[lv[0]], up_levels[lv[1]], down_levels[lv[2]], down_levels[lv[3]]};
                ++res.evaluations;
                if (pair) {
                    util::vec_type<T> up_p(coef.uplink.size());
                    int a = 0;
                    for (int s = 0; s < 2; ++s) if (who[s] != no_user) up_p(a++) = pw[s];
                    if (gamma_constraint(coef, up_p) < T(0)) continue;
                }
                const T u = detail::oracle_subcarrier_rate(chan, f, who, pw);
                int ul[2] = {0, 0};
                for (int s = 0; s < 2; ++s) if (who[s] != no_user) ul[who[s]] = lv[s];
                const int d = dsum_index(pw[2] + pw[3]);
                const auto ci = cell_index(ul[0], M >= 2 ? ul[1] : 0, d);
                if (u > val[ci]) {
                    val[ci] = u;
                    arg[f][ci] = {oi, lv};
                }
            }
        }
    }

    const T slack = T(1e-12);
    auto fits = [&](T used, T cap) { return used <= cap * (T(1) + slack); };

    int best_cells[2] = {-1, -1};
    T best = neg_inf;
    if (F == 1) {
        for (std::size_t ci = 0; ci < table_size; ++ci) {
            if (value[0][ci] > best) {
                best = value[0][ci];
                best_cells[0] = static_cast<int>(ci);
            }
        }
    } else {
        // Prefix maximum of subcarrier 1 over (level0 <= a, level1 <= b, dsum <= d).
        std::vector<T> pm(table_size, neg_inf);
        std::vector<int> pa(table_size, -1);
        for (int a = 0; a < L0; ++a)
        for (int b = 0; b < L1; ++b)
        for (int d = 0; d < D; ++d) {
            const auto ci = cell_index(a, b, d);
            T v = value[1][ci];
            int w = v > neg_inf ? static_cast<int>(ci) : -1;
            auto take = [&](std::size_t other) {
                if (pm[other] > v) {
                    v = pm[other];
                    w = pa[other];
                }
            };
            if (a > 0) take(cell_index(a - 1, b, d));
            if (b > 0) take(cell_index(a, b - 1, d));
            if (d > 0) take(cell_index(a, b, d - 1));
            pm[ci] = v;
            pa[ci] = w;
        }
        auto last_fit = [&](const std::vector<T>& lv, int n, T used, T cap) {
            int idx = -1;
            for (int i = 0; i < n; ++i) if (fits(used + lv[i], cap)) idx = i;
            return idx;
        };
        for (int a = 0; a < L0; ++a)
        for (int b = 0; b < L1; ++b)
        for (int d = 0; d < D; ++d) {
            const auto ci = cell_index(a, b, d);
            if (value[0][ci] == neg_inf) continue;
            const int ra = M >= 1 ? last_fit(up_levels, L0, up_levels[a], chan.uplink_budget) : 0;
            const int rb = M >= 2 ? last_fit(up_levels, L1, up_levels[b], chan.uplink_budget) : 0;
            const int rd = last_fit(dsums, D, dsums[d], chan.downlink_budget);
            if (ra < 0 || rb < 0 || rd < 0) continue;
            const auto cj = cell_index(ra, rb, rd);
            if (pa[cj] < 0) continue;
            const T v = value[0][ci] + pm[cj];
            if (v > best) {
                best = v;
                best_cells[0] = static_cast<int>(ci);
                best_cells[1] = pa[cj];
            }
        }
    }
    if (best_cells[0] < 0) throw std::logic_error("brute_force: no feasible grid point");

    res.utility = best;
    res.alloc = AllocationState::empty_for(chan);
    res.power = PowerMatrix<T>::Zero(chan.num_users(), F);
    for (int f = 0; f < F; ++f) {
        const auto& cell = arg[f][best_cells[f]];
        const auto& who = options[cell.option];
        const std::array<T, 4> pw{up_levels[cell.level[0]], up_levels[cell.level[1]],
                                  down_levels[cell.level[2]], down_levels[cell.level[3]]};
        const Slot slots[4] = {Slot::strong_up, Slot::weak_up, Slot::strong_down, Slot::weak_down};
        for (int s = 0; s < 4; ++s) {
            if (who[s] == no_user) continue;
            res.alloc.assign(slots[s], f, who[s]);
            res.power(who[s], f) = pw[s];
        }
    }
    if (!check_feasible(chan, res.alloc, res.power)) {
        throw std::logic_error("brute_force: optimum failed the feasibility check");
    }
    return res;
}

/// Utility gained by refining the grid once (levels g -> 2g - 1); an empirical discretization slack.
template <class T>
T grid_gap_bound(const ChannelRealization<T>& chan, const GridSpec& grid = {})
{
    const T coarse = brute_force(chan, grid).utility;
    const T fine = brute_force(chan, grid.refined()).utility;
    return std::max(T(0), fine - coarse);
}

} // namespace nomafd

#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>
#include <nomafd/util/types.hpp>

namespace nomafd {

template <class T>
inline T dbm_to_watts(T dbm)
{
    return std::pow(T(10), (dbm - T(30)) / T(10));
}

template <class T>
inline T db_to_linear(T db)
{
    return std::pow(T(10), db / T(10));
}

/**
 * Parameters of one single-cell scenario. Powers and noise are absolute (dBm);
 * path loss is normalized to unit gain at 1 m, so utilities are comparable only
 * between runs that share a config.
 */
struct ScenarioConfig
{
    int num_subcarriers = 6;
    int num_uplink = 6;
    int num_downlink = 6;
    double cell_radius_m = 100.0;
    double min_bs_distance_m = 10.0;
    double pathloss_exponent = 4.0;
    double shadowing_sigma_db = 8.0;
    double si_cancellation_db = 110.0;
    double noise_power_dbm = -121.0;
    double uplink_budget_dbm = 14.0;
    double downlink_budget_dbm = 20.0;
    std::uint64_t rng_seed = 1;

    void validate() const
    {
        if (num_subcarriers < 1 || num_uplink < 1 || num_downlink < 1) {
            throw std::invalid_argument("scenario: F, M and N must be at least 1");
        }
        if (!(min_bs_distance_m > 0.0) || !(cell_radius_m > min_bs_distance_m)) {
            throw std::invalid_argument("scenario: need cell_radius_m > min_bs_distance_m > 0");
        }
        if (!(pathloss_exponent > 0.0)) {
            throw std::invalid_argument("scenario: pathloss_exponent must be positive");
        }
        for (double v : {shadowing_sigma_db, si_cancellation_db, noise_power_dbm,
                         uplink_budget_dbm, downlink_budget_dbm}) {
            if (!std::isfinite(v)) {
                throw std::invalid_argument("scenario: dB/dBm fields must be finite");
            }
        }
        if (shadowing_sigma_db < 0.0) {
            throw std::invalid_argument("scenario: shadowing_sigma_db must be nonnegative");
        }
    }
};

/**
 * All propagation gains of one cell instance in the unified notation:
 * gain[f](n, i) = |h_{n,i}(f)|^2 is the power gain of user n's signal at the
 * receiver that decodes user i. Uplink receivers are the base station, so
 * gain(n, i) for two uplink users is the direct gain of n, and a downlink
 * interferer at an uplink receiver sees the residual self-interference gain.
 */
template <class ValueType>
struct ChannelRealization
{
    using value_t = ValueType;
    using vec_t = util::vec_type<value_t>;
    using mat_t = util::mat_type<value_t>;

    int num_uplink = 0;
    int num_downlink = 0;
    int num_subcarriers = 0;
    std::vector<mat_t> gain;
    vec_t si_gain;
    value_t noise_power = 0;
    vec_t weights;
    value_t uplink_budget = 0;
    value_t downlink_budget = 0;
    vec_t distances;

    int num_users() const { return num_uplink + num_downlink; }
    bool is_uplink(int user) const { return user < num_uplink; }
    bool is_downlink(int user) const { return user >= num_uplink; }

    value_t link_gain(int from, int to, int f) const { return gain[f](from, to); }
    value_t direct_gain(int user, int f) const { return gain[f](user, user); }
};

/**
 * Per-link gains before assembly: beta (M x F) uplink user -> BS, eps (N x F)
 * BS -> downlink user, cross[f] (M x N) uplink user -> downlink user, and the
 * residual SI gain per subcarrier.
 */
template <class ValueType>
struct LinkGains
{
    using vec_t = util::vec_type<ValueType>;
    using mat_t = util::mat_type<ValueType>;

    mat_t uplink;
    mat_t downlink;
    std::vector<mat_t> cross;
    vec_t si;
};

template <class T>
void validate(const ChannelRealization<T>& chan)
{
    const int users = chan.num_users();
    if (chan.num_uplink < 1 || chan.num_downlink < 1 || chan.num_subcarriers < 1) {
        throw std::invalid_argument("channel: empty dimensions");
    }
    if (static_cast<int>(chan.gain.size()) != chan.num_subcarriers
        || chan.si_gain.size() != chan.num_subcarriers
        || chan.weights.size() != users) {
        throw std::invalid_argument("channel: inconsistent sizes");
    }
    for (const auto& g : chan.gain) {
        if (g.rows() != users || g.cols() != users) {
            throw std::invalid_argument("channel: gain matrix has wrong shape");
        }
        if (!g.allFinite() || (g.array() <= T(0)).any()) {
            throw std::invalid_argument("channel: gains must be positive and finite");
        }
    }
    if (!chan.si_gain.allFinite() || (chan.si_gain.array() <= T(0)).any()) {
        throw std::invalid_argument("channel: SI gains must be positive and finite");
    }
    if (!(chan.noise_power > T(0)) || !std::isfinite(chan.noise_power)) {
        throw std::invalid_argument("channel: noise power must be positive");
    }
    if ((chan.weights.array() < T(0)).any() || (chan.weights.array() > T(1)).any()) {
        throw std::invalid_argument("channel: weights must lie in [0, 1]");
    }
    if (!(chan.uplink_budget > T(0)) || !(chan.downlink_budget > T(0))) {
        throw std::invalid_argument("channel: budgets must be positive");
    }
}

/**
 * Fills the unified gain tensor from per-link gains so that every entry
 * needed by the SINR expressions is consistent with the physical links.
 */
template <class T>
ChannelRealization<T> assemble_channel(const LinkGains<T>& links,
                                       T noise_power,
                                       const util::vec_type<T>& weights,
                                       T uplink_budget,
                                       T downlink_budget,
                                       const util::vec_type<T>& distances = {})
{
    ChannelRealization<T> chan;
    chan.num_uplink = static_cast<int>(links.uplink.rows());
    chan.num_downlink = static_cast<int>(links.downlink.rows());
    chan.num_subcarriers = static_cast<int>(links.uplink.cols());
    const int M = chan.num_uplink;
    const int N = chan.num_downlink;
    const int F = chan.num_subcarriers;
    if (links.downlink.cols() != F || static_cast<int>(links.cross.size()) != F
        || links.si.size() != F) {
        throw std::invalid_argument("assemble_channel: subcarrier counts disagree");
    }

    chan.gain.assign(F, util::mat_type<T>::Zero(M + N, M + N));
    for (int f = 0; f < F; ++f) {
        auto& g = chan.gain[f];
        const auto& cross = links.cross[f];
        if (cross.rows() != M || cross.cols() != N) {
            throw std::invalid_argument("assemble_channel: cross gain shape");
        }
        for (int n = 0; n < M; ++n) {
            // uplink signal at an uplink receiver (the BS)
            for (int i = 0; i < M; ++i) g(n, i) = links.uplink(n, f);
            // uplink signal at a downlink user
            for (int k = 0; k < N; ++k) g(n, M + k) = cross(n, k);
        }
        for (int k = 0; k < N; ++k) {
            // downlink signal at the BS receiver: residual self-interference
            for (int i = 0; i < M; ++i) g(M + k, i) = links.si(f);
            // downlink signal at downlink user i travels the BS -> i channel
            for (int i = 0; i < N; ++i) g(M + k, M + i) = links.downlink(i, f);
        }
    }
    chan.si_gain = links.si;
    chan.noise_power = noise_power;
    chan.weights = weights;
    chan.uplink_budget = uplink_budget;
    chan.downlink_budget = downlink_budget;
    chan.distances = distances.size() ? distances : util::vec_type<T>::Zero(M + N);
    validate(chan);
    return chan;
}

namespace rng {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

enum class Stream : std::uint64_t
{
    position = 1,
    shadowing = 2,
    fading = 3,
};

/// Seed of an independent mt19937_64 stream for (instance seed, stream, link, subcarrier).
inline std::uint64_t stream_seed(std::uint64_t seed, Stream stream,
                                 std::uint64_t link, std::uint64_t subcarrier = 0)
{
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
    h = splitmix64(h ^ link);
    return splitmix64(h ^ subcarrier);
}

inline std::uint64_t combine(std::uint64_t a, std::uint64_t b)
{
    return splitmix64(splitmix64(a) ^ (b + 0x632be59bd9b4e019ULL));
}

} // namespace rng

/// Link identifiers used for stream splitting.
struct LinkId
{
    static std::uint64_t uplink(int j) { return 3ULL * static_cast<std::uint64_t>(j); }
    static std::uint64_t downlink(int k) { return 3ULL * static_cast<std::uint64_t>(k) + 1; }
    static std::uint64_t cross(int j, int k, int num_downlink)
    {
        return 3ULL * static_cast<std::uint64_t>(j * num_downlink + k) + 2;
    }
};

/// Shadowing of one link in dB, N(0, sigma^2); constant over subcarriers.
inline double sample_shadowing_db(std::uint64_t seed, std::uint64_t link, double sigma_db)
{
    std::mt19937_64 gen(rng::stream_seed(seed, rng::Stream::shadowing, link));
    std::normal_distribution<double> normal(0.0, 1.0);
    return sigma_db * normal(gen);
}

/// |h|^2 for h ~ CN(0, 1), independent per (link, subcarrier).
inline double sample_fading_power(std::uint64_t seed, std::uint64_t link, int f)
{
    std::mt19937_64 gen(rng::stream_seed(seed, rng::Stream::fading, link,
                                         static_cast<std::uint64_t>(f)));
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    const double re = normal(gen);
    const double im = normal(gen);
    return re * re + im * im;
}

/// Position uniform over the annulus [r_min, r_max] around the BS at the origin.
inline Eigen::Vector2d sample_position(std::uint64_t seed, int user, double r_min, double r_max)
{
    std::mt19937_64 gen(rng::stream_seed(seed, rng::Stream::position,
                                         static_cast<std::uint64_t>(user)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double r = std::sqrt(r_min * r_min + unit(gen) * (r_max * r_max - r_min * r_min));
    const double phi = 2.0 * std::numbers::pi * unit(gen);
    return {r * std::cos(phi), r * std::sin(phi)};
}

struct ScenarioHooks
{
    /// Replace every small-scale fading draw by |h|^2 = 1.
    bool unit_fading = false;
    /// Use these user positions (BS at origin) instead of random draws.
    std::optional<std::vector<Eigen::Vector2d>> positions;
};

/// Closest user-to-user distance used in the path-loss law (the law is normalized at 1 m).
inline constexpr double min_user_distance_m = 1.0;

template <class T = double>
ChannelRealization<T> generate_scenario(const ScenarioConfig& config,
                                        const ScenarioHooks& hooks = {})
{
    config.validate();
    const int M = config.num_uplink;
    const int N = config.num_downlink;
    const int F = config.num_subcarriers;
    const std::uint64_t seed = config.rng_seed;

    std::vector<Eigen::Vector2d> pos;
    if (hooks.positions) {
        if (static_cast<int>(hooks.positions->size()) != M + N) {
            throw std::invalid_argument("generate_scenario: wrong number of positions");
        }
        pos = *hooks.positions;
    } else {
        pos.reserve(M + N);
        for (int i = 0; i < M + N; ++i) {
            pos.push_back(sample_position(seed, i, config.min_bs_distance_m, config.cell_radius_m));
        }
    }

    util::vec_type<T> dist(M + N);
    for (int i = 0; i < M + N; ++i) {
        dist(i) = static_cast<T>(std::clamp(pos[i].norm(), config.min_bs_distance_m,
                                            config.cell_radius_m));
    }

    auto large_scale = [&](double d, std::uint64_t link) {
        const double shadow = config.shadowing_sigma_db > 0.0
            ? sample_shadowing_db(seed, link, config.shadowing_sigma_db) : 0.0;
        return std::pow(d, -config.pathloss_exponent) * db_to_linear(shadow);
    };
    auto fading = [&](std::uint64_t link, int f) {
        return hooks.unit_fading ? 1.0 : sample_fading_power(seed, link, f);
    };

    LinkGains<T> links;
    links.uplink.resize(M, F);
    links.downlink.resize(N, F);
    links.cross.assign(F, util::mat_type<T>(M, N));
    links.si = util::vec_type<T>::Constant(F, db_to_linear(-static_cast<T>(config.si_cancellation_db)));

    for (int j = 0; j < M; ++j) {
        const double ls = large_scale(static_cast<double>(dist(j)), LinkId::uplink(j));
        for (int f = 0; f < F; ++f) links.uplink(j, f) = static_cast<T>(ls * fading(LinkId::uplink(j), f));
    }
    for (int k = 0; k < N; ++k) {
        const double ls = large_scale(static_cast<double>(dist(M + k)), LinkId::downlink(k));
        for (int f = 0; f < F; ++f) links.downlink(k, f) = static_cast<T>(ls * fading(LinkId::downlink(k), f));
    }
    for (int j = 0; j < M; ++j) {
        for (int k = 0; k < N; ++k) {
            const auto id = LinkId::cross(j, k, N);
            const double d = std::max((pos[j] - pos[M + k]).norm(), min_user_distance_m);
            const double ls = large_scale(d, id);
            for (int f = 0; f < F; ++f) links.cross[f](j, k) = static_cast<T>(ls * fading(id, f));
        }
    }

    const T dmax = dist.maxCoeff();
    util::vec_type<T> weights = (dist / dmax).array().square().matrix();

    return assemble_channel<T>(links, dbm_to_watts(static_cast<T>(config.noise_power_dbm)), weights,
                               dbm_to_watts(static_cast<T>(config.uplink_budget_dbm)),
                               dbm_to_watts(static_cast<T>(config.downlink_budget_dbm)), dist);
}

} // namespace nomafd

#include <nomafd/experiment.hpp>
#include <nomafd/allocators.hpp>
#include <nomafd/oracle.hpp>
#include <spdlog/spdlog.h>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

namespace nomafd {

bool ResultRecord::same_result(const ResultRecord& o) const
{
    return seed == o.seed && point == o.point && algorithm == o.algorithm && utility == o.utility
        && outer_iters == o.outer_iters && dual_iters == o.dual_iters && cccp_iters == o.cccp_iters
        && feasible == o.feasible && oracle_ratio == o.oracle_ratio;
}

bool ExperimentResult::all_feasible() const
{
    return failures.empty()
        && std::all_of(records.begin(), records.end(), [](const ResultRecord& r) { return r.feasible; });
}

namespace {

using clock_type = std::chrono::steady_clock;

double elapsed_ms(clock_type::time_point t0)
{
    return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
}

void finish(ResultRecord& rec, const ChannelRealization<double>& chan, const AllocationState& alloc,
            const PowerMatrix<double>& P, std::optional<double> oracle_utility)
{
    const auto rep = check_feasible(chan, alloc, P);
    rec.feasible = rep.feasible();
    rec.violations = rep.describe();
    if (oracle_utility && *oracle_utility > 0.0) rec.oracle_ratio = rec.utility / *oracle_utility;
}

bool oracle_fits(const ScenarioConfig& sc)
{
    return sc.num_subcarriers <= 2 && sc.num_uplink <= 2 && sc.num_downlink <= 2;
}

} // namespace

ResultRecord run_single(const ExperimentConfig& cfg, double point, int instance, Algorithm algo,
                        std::optional<double> oracle_utility)
{
    ResultRecord rec;
    rec.seed = instance_seed(cfg.seed_base, instance);
    rec.point = point;
    rec.algorithm = to_string(algo);
    rec.instance = instance;
    const auto sc = scenario_for(cfg, point, rec.seed);
    const auto chan = generate_scenario<double>(sc);

    const auto t0 = clock_type::now();
    switch (algo) {
        case Algorithm::lc:
        case Algorithm::oma: {
            const auto r = algo == Algorithm::lc ? lc_pipeline(chan) : oma_baseline(chan);
            rec.wall_ms = elapsed_ms(t0);
            rec.utility = r.utility;
            rec.outer_iters = algo == Algorithm::lc ? 3 : 2;
            rec.dual_iters = r.dual_iterations();
            rec.max_stage_dual_iters = r.max_stage_dual();
            rec.cccp_iters = r.cccp_iterations;
            finish(rec, chan, r.point.alloc, r.point.power, oracle_utility);
            break;
        }
        case Algorithm::bcd: {
            const auto r = bcd(chan);
            rec.wall_ms = elapsed_ms(t0);
            rec.utility = r.utility;
            rec.outer_iters = r.outer_iterations;
            rec.dual_iters = r.dual_iterations;
            rec.max_stage_dual_iters = r.dual_iterations;
            rec.cccp_iters = r.cccp_iterations;
            finish(rec, chan, r.point.alloc, r.point.power, oracle_utility);
            break;
        }
        case Algorithm::oracle: {
            if (!oracle_fits(sc)) throw std::invalid_argument("oracle needs F, M, N <= 2");
            GridSpec grid;
            grid.geometric_points = cfg.oracle_grid_points;
            const auto r = brute_force(chan, grid);
            rec.wall_ms = elapsed_ms(t0);
            rec.utility = r.utility;
            finish(rec, chan, r.alloc, r.power, r.utility);
            break;
        }
    }
    return rec;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt)
{
    cfg.validate();
    const int P = static_cast<int>(cfg.values.size());
    const int I = cfg.instances;
    const int A = static_cast<int>(cfg.algorithms.size());
    const bool with_oracle = std::find(cfg.algorithms.begin(), cfg.algorithms.end(), Algorithm::oracle)
                          != cfg.algorithms.end();

    struct Slot
    {
        std::optional<ResultRecord> record;
        std::optional<RunFailure> failure;
    };
    std::vector<Slot> slots(static_cast<std::size_t>(P) * I * A);
    std::atomic<int> next{0};
    std::mutex mtx;

    auto work = [&]() {
        for (;;) {
            const int task = next.fetch_add(1);
            if (task >= P * I) return;
            const int p = task / I;
            const int inst = task % I;
            const double point = cfg.values[p];
            const std::uint64_t seed = instance_seed(cfg.seed_base, inst);

            std::optional<double> oracle_utility;
            std::optional<ResultRecord> oracle_record;
            std::optional<std::string> oracle_error;
            if (with_oracle) {
                try {
                    oracle_record = run_single(cfg, point, inst, Algorithm::oracle);
                    oracle_utility = oracle_record->utility;
                } catch (const std::exception& e) {
                    oracle_error = e.what();
                }
            }
            for (int a = 0; a < A; ++a) {
                const Algorithm algo = cfg.algorithms[a];
                auto& slot = slots[(static_cast<std::size_t>(p) * I + inst) * A + a];
                try {
                    if (algo == Algorithm::oracle) {
                        if (oracle_error) throw std::runtime_error(*oracle_error);
                        slot.record = *oracle_record;
                    } else {
                        slot.record = run_single(cfg, point, inst, algo, oracle_utility);
                    }
                } catch (const std::exception& e) {
                    slot.failure = RunFailure{seed, point, to_string(algo), e.what()};
                }
                std::lock_guard lock(mtx);
                if (slot.record) {
                    const auto& r = *slot.record;
                    if (!r.feasible) {
                        spdlog::warn("infeasible: seed={} point={} algorithm={}: {}", r.seed, r.point, r.algorithm,
                                     r.violations);
                    }
                    spdlog::debug("seed={} point={} algorithm={} utility={:.6f} dual={} wall_ms={:.1f}", r.seed,
                                  r.point, r.algorithm, r.utility, r.dual_iters, r.wall_ms);
                    if (opt.on_record) opt.on_record(r);
                } else {
                    spdlog::error("failed: seed={} point={} algorithm={}: {}", seed, point, to_string(algo),
                                  slot.failure->message);
                }
            }
        }
    };

    const int workers = std::max(1, std::min(opt.workers, P * I));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    ExperimentResult out;
    for (auto& s : slots) {
        if (s.record) out.records.push_back(std::move(*s.record));
        if (s.failure) out.failures.push_back(std::move(*s.failure));
    }
    return out;
}

} // namespace nomafd

#pragma once
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>
#include <nomafd/scenario.hpp>

namespace nomafd {

enum class SweepAxis
{
    uplink_budget_dbm,
    downlink_budget_dbm,
    users_per_direction,
};

enum class Algorithm
{
    lc,
    bcd,
    oma,
    oracle,
};

enum class OutputFormat
{
    csv,
    jsonl,
};

const char* to_string(SweepAxis a);
const char* to_string(Algorithm a);
const char* to_string(OutputFormat f);
SweepAxis parse_sweep_axis(const std::string& s);
Algorithm parse_algorithm(const std::string& s);
OutputFormat parse_output_format(const std::string& s);

/**
 * Monte Carlo campaign: every sweep value is applied to `base`, and each
 * instance index gets a seed shared across sweep points.
 */
struct ExperimentConfig
{
    ScenarioConfig base;
    SweepAxis axis = SweepAxis::downlink_budget_dbm;
    std::vector<double> values{20.0};
    std::vector<Algorithm> algorithms{Algorithm::lc, Algorithm::oma};
    int instances = 100;
    std::uint64_t seed_base = 1;
    int oracle_grid_points = 8;
    std::string output_path;
    OutputFormat format = OutputFormat::csv;

    void validate() const;
};

/// Parses the flat `key = value` format; '#' starts a comment.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Scenario of one sweep point and instance seed.
ScenarioConfig scenario_for(const ExperimentConfig& cfg, double point, std::uint64_t seed);
std::uint64_t instance_seed(std::uint64_t seed_base, int instance);

struct ResultRecord
{
    std::uint64_t seed = 0;
    double point = 0.0;
    std::string algorithm;
    double utility = 0.0;
    long outer_iters = 0;
    long dual_iters = 0;
    long cccp_iters = 0;
    double wall_ms = 0.0;
    bool feasible = false;
    std::optional<double> oracle_ratio;

    // Not serialized.
    int instance = 0;
    long max_stage_dual_iters = 0;
    std::string violations;

    /// Equality on every serialized field except wall time.
    bool same_result(const ResultRecord& o) const;
};

struct RunFailure
{
    std::uint64_t seed = 0;
    double point = 0.0;
    std::string algorithm;
    std::string message;
};

struct ExperimentResult
{
    std::vector<ResultRecord> records;
    std::vector<RunFailure> failures;

    bool all_feasible() const;
};

struct RunOptions
{
    int workers = 1;
    std::function<void(const ResultRecord&)> on_record;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {});

/// Runs one algorithm on one instance; oracle_utility enables the ratio column.
ResultRecord run_single(const ExperimentConfig& cfg, double point, int instance, Algorithm algo,
                        std::optional<double> oracle_utility = std::nullopt);

inline const char* csv_header = "seed,point,algorithm,utility,outer_iters,dual_iters,cccp_iters,wall_ms,feasible,oracle_ratio";

void emit_results(const std::vector<ResultRecord>& records, OutputFormat format, std::ostream& out);
void write_results(const std::vector<ResultRecord>& records, OutputFormat format, const std::string& path);
std::vector<ResultRecord> parse_results_csv(std::istream& in);
std::vector<ResultRecord> parse_results_jsonl(std::istream& in);
std::vector<ResultRecord> read_results(const std::string& path);

struct Moments
{
    double mean = 0.0;
    double median = 0.0;
    double std = 0.0;
};

/// Mean, median and population standard deviation.
Moments moments(std::vector<double> v);

struct SummaryRow
{
    double point = 0.0;
    std::string algorithm;
    std::size_t count = 0;
    std::size_t feasible = 0;
    Moments utility;
    Moments outer_iters;
    Moments dual_iters;
    Moments cccp_iters;
};

std::vector<SummaryRow> summarize(const std::vector<ResultRecord>& records);
void emit_summary(const std::vector<SummaryRow>& rows, std::ostream& out);

} // namespace nomafd

#include <nomafd/experiment.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nomafd {

const char* to_string(SweepAxis a)
{
    switch (a) {
        case SweepAxis::uplink_budget_dbm: return "uplink_budget_dbm";
        case SweepAxis::downlink_budget_dbm: return "downlink_budget_dbm";
        case SweepAxis::users_per_direction: return "users_per_direction";
    }
    return "?";
}

const char* to_string(Algorithm a)
{
    switch (a) {
        case Algorithm::lc: return "lc";
        case Algorithm::bcd: return "bcd";
        case Algorithm::oma: return "oma";
        case Algorithm::oracle: return "oracle";
    }
    return "?";
}

const char* to_string(OutputFormat f)
{
    return f == OutputFormat::csv ? "csv" : "jsonl";
}

SweepAxis parse_sweep_axis(const std::string& s)
{
    for (auto a : {SweepAxis::uplink_budget_dbm, SweepAxis::downlink_budget_dbm, SweepAxis::users_per_direction}) {
        if (s == to_string(a)) return a;
    }
    throw std::invalid_argument("unknown sweep axis '" + s + "'");
}

Algorithm parse_algorithm(const std::string& s)
{
    for (auto a : {Algorithm::lc, Algorithm::bcd, Algorithm::oma, Algorithm::oracle}) {
        if (s == to_string(a)) return a;
    }
    throw std::invalid_argument("unknown algorithm '" + s + "'");
}

OutputFormat parse_output_format(const std::string& s)
{
    if (s == "csv") return OutputFormat::csv;
    if (s == "jsonl" || s == "jsonlines") return OutputFormat::jsonl;
    throw std::invalid_argument("unknown output format '" + s + "'");
}

void ExperimentConfig::validate() const
{
    base.validate();
    if (values.empty()) throw std::invalid_argument("config: sweep.values is empty");
    if (algorithms.empty()) throw std::invalid_argument("config: run.algorithms is empty");
    if (instances < 1) throw std::invalid_argument("config: run.instances must be at least 1");
    if (oracle_grid_points < 1) throw std::invalid_argument("config: oracle.grid_points must be at least 1");
    for (double v : values) {
        if (!std::isfinite(v)) throw std::invalid_argument("config: sweep values must be finite");
        if (axis == SweepAxis::users_per_direction && (v < 1.0 || v != std::floor(v))) {
            throw std::invalid_argument("config: users_per_direction values must be positive integers");
        }
    }
}

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v)
{
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != v.size() || v.empty()) throw std::invalid_argument("config: " + key + ": not a number: '" + v + "'");
    return out;
}

template <class Int>
Int to_int(const std::string& key, const std::string& v)
{
    Int out{};
    const auto* end = v.data() + v.size();
    const auto r = std::from_chars(v.data(), end, out);
    if (r.ec != std::errc() || r.ptr != end) {
        throw std::invalid_argument("config: " + key + ": not an integer: '" + v + "'");
    }
    return out;
}

} // namespace

ExperimentConfig parse_config(std::istream& in)
{
    ExperimentConfig cfg;
    auto& sc = cfg.base;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));

        if (key == "scenario.num_subcarriers") sc.num_subcarriers = to_int<int>(key, val);
        else if (key == "scenario.num_uplink") sc.num_uplink = to_int<int>(key, val);
        else if (key == "scenario.num_downlink") sc.num_downlink = to_int<int>(key, val);
        else if (key == "scenario.cell_radius_m") sc.cell_radius_m = to_double(key, val);
        else if (key == "scenario.min_bs_distance_m") sc.min_bs_distance_m = to_double(key, val);
        else if (key == "scenario.pathloss_exponent") sc.pathloss_exponent = to_double(key, val);
        else if (key == "scenario.shadowing_sigma_db") sc.shadowing_sigma_db = to_double(key, val);
        else if (key == "scenario.si_cancellation_db") sc.si_cancellation_db = to_double(key, val);
        else if (key == "scenario.noise_power_dbm") sc.noise_power_dbm = to_double(key, val);
        else if (key == "scenario.uplink_budget_dbm") sc.uplink_budget_dbm = to_double(key, val);
        else if (key == "scenario.downlink_budget_dbm") sc.downlink_budget_dbm = to_double(key, val);
        else if (key == "sweep.axis") cfg.axis = parse_sweep_axis(val);
        else if (key == "sweep.values") {
            cfg.values.clear();
            for (const auto& v : split_list(val)) cfg.values.push_back(to_double(key, v));
        } else if (key == "run.algorithms") {
            cfg.algorithms.clear();
            for (const auto& v : split_list(val)) cfg.algorithms.push_back(parse_algorithm(v));
        } else if (key == "run.instances") cfg.instances = to_int<int>(key, val);
        else if (key == "run.seed_base") cfg.seed_base = to_int<std::uint64_t>(key, val);
        else if (key == "oracle.grid_points") cfg.oracle_grid_points = to_int<int>(key, val);
        else if (key == "output.path") cfg.output_path = val;
        else if (key == "output.format") cfg.format = parse_output_format(val);
        else throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path + "'");
    return parse_config(in);
}

std::uint64_t instance_seed(std::uint64_t seed_base, int instance)
{
    return rng::combine(seed_base, static_cast<std::uint64_t>(instance));
}

ScenarioConfig scenario_for(const ExperimentConfig& cfg, double point, std::uint64_t seed)
{
    ScenarioConfig sc = cfg.base;
    switch (cfg.axis) {
        case SweepAxis::uplink_budget_dbm: sc.uplink_budget_dbm = point; break;
        case SweepAxis::downlink_budget_dbm: sc.downlink_budget_dbm = point; break;
        case SweepAxis::users_per_direction:
            sc.num_uplink = static_cast<int>(point);
            sc.num_downlink = static_cast<int>(point);
            break;
    }
    sc.rng_seed = seed;
    return sc;
}

} // namespace nomafd

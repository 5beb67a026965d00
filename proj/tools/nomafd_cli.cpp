#include <nomafd/experiment.hpp>
#include <CLI11.hpp>
#include <spdlog/spdlog.h>
#include <algorithm>
#include <fstream>
#include <iostream>
#include <thread>

int main(int argc, char** argv)
{
    CLI::App app{"Power and subcarrier allocation experiments for NOMA full-duplex cells"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_path;
    std::string format;
    int workers = 1;
    std::string log_level = "info";
    bool allow_infeasible = false;

    auto* run = app.add_subcommand("run", "Run a Monte Carlo campaign");
    run->add_option("-c,--config", config_path, "Config file (key = value)")->required()->check(CLI::ExistingFile);
    run->add_option("-o,--output", output_path, "Result file (overrides output.path)");
    run->add_option("-f,--format", format, "csv or jsonl (overrides output.format)");
    run->add_option("-w,--workers", workers, "Worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);
    run->add_option("--log-level", log_level, "trace, debug, info, warn, error, off");
    run->add_flag("--allow-infeasible", allow_infeasible, "Exit 0 even if some instance is infeasible or fails");

    std::string results_path;
    std::string summary_out;
    auto* summ = app.add_subcommand("summarize", "Per sweep point and algorithm statistics of a result file");
    summ->add_option("results", results_path, "Result file (.csv or .jsonl)")->required()->check(CLI::ExistingFile);
    summ->add_option("-o,--output", summary_out, "Write the summary here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            spdlog::set_level(spdlog::level::from_str(log_level));
            auto cfg = nomafd::load_config(config_path);
            if (!output_path.empty()) cfg.output_path = output_path;
            if (!format.empty()) cfg.format = nomafd::parse_output_format(format);
            if (workers == 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

            spdlog::info("{} points x {} instances x {} algorithms, axis {}", cfg.values.size(), cfg.instances,
                         cfg.algorithms.size(), nomafd::to_string(cfg.axis));
            nomafd::RunOptions opt;
            opt.workers = workers;
            const auto result = nomafd::run_experiment(cfg, opt);
            if (cfg.output_path.empty()) {
                nomafd::emit_results(result.records, cfg.format, std::cout);
            } else {
                nomafd::write_results(result.records, cfg.format, cfg.output_path);
                spdlog::info("wrote {} records to {}", result.records.size(), cfg.output_path);
            }
            if (!result.all_feasible()) {
                spdlog::error("{} failures, {} infeasible records", result.failures.size(),
                              std::count_if(result.records.begin(), result.records.end(),
                                            [](const auto& r) { return !r.feasible; }));
                return allow_infeasible ? 0 : 2;
            }
            return 0;
        }
        const auto records = nomafd::read_results(results_path);
        const auto rows = nomafd::summarize(records);
        if (summary_out.empty()) {
            nomafd::emit_summary(rows, std::cout);
        } else {
            std::ofstream out(summary_out);
            if (!out) throw std::runtime_error("cannot open '" + summary_out + "'");
            nomafd::emit_summary(rows, out);
        }
        return 0;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
}

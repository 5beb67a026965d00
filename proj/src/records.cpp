#include <nomafd/experiment.hpp>
#include <json.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace nomafd {

namespace {

std::string num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

nlohmann::json to_json(const ResultRecord& r)
{
    nlohmann::json j;
    j["seed"] = r.seed;
    j["point"] = r.point;
    j["algorithm"] = r.algorithm;
    j["utility"] = r.utility;
    j["outer_iters"] = r.outer_iters;
    j["dual_iters"] = r.dual_iters;
    j["cccp_iters"] = r.cccp_iters;
    j["wall_ms"] = r.wall_ms;
    j["feasible"] = r.feasible;
    j["oracle_ratio"] = r.oracle_ratio ? nlohmann::json(*r.oracle_ratio) : nlohmann::json(nullptr);
    return j;
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_num(const std::string& s)
{
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("bad number '" + s + "'");
    return v;
}

} // namespace

void emit_results(const std::vector<ResultRecord>& records, OutputFormat format, std::ostream& out)
{
    if (format == OutputFormat::jsonl) {
        for (const auto& r : records) out << to_json(r).dump() << '\n';
        return;
    }
    out << csv_header << '\n';
    for (const auto& r : records) {
        out << r.seed << ',' << num(r.point) << ',' << r.algorithm << ',' << num(r.utility) << ','
            << r.outer_iters << ',' << r.dual_iters << ',' << r.cccp_iters << ',' << num(r.wall_ms) << ','
            << (r.feasible ? "true" : "false") << ',';
        if (r.oracle_ratio) out << num(*r.oracle_ratio);
        out << '\n';
    }
}

void write_results(const std::vector<ResultRecord>& records, OutputFormat format, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    emit_results(records, format, out);
    out.flush();
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::vector<ResultRecord> parse_results_csv(std::istream& in)
{
    std::vector<ResultRecord> out;
    std::string line;
    if (!std::getline(in, line)) return out;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != csv_header) throw std::invalid_argument("unexpected CSV header");
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() != 10) throw std::invalid_argument("CSV line " + std::to_string(lineno) + ": expected 10 fields");
        ResultRecord r;
        r.seed = std::stoull(f[0]);
        r.point = parse_num(f[1]);
        r.algorithm = f[2];
        r.utility = parse_num(f[3]);
        r.outer_iters = std::stol(f[4]);
        r.dual_iters = std::stol(f[5]);
        r.cccp_iters = std::stol(f[6]);
        r.wall_ms = parse_num(f[7]);
        if (f[8] != "true" && f[8] != "false") throw std::invalid_argument("bad feasible flag '" + f[8] + "'");
        r.feasible = f[8] == "true";
        if (!f[9].empty()) r.oracle_ratio = parse_num(f[9]);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<ResultRecord> parse_results_jsonl(std::istream& in)
{
    std::vector<ResultRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        ResultRecord r;
        r.seed = j.at("seed").get<std::uint64_t>();
        r.point = j.at("point").get<double>();
        r.algorithm = j.at("algorithm").get<std::string>();
        r.utility = j.at("utility").get<double>();
        r.outer_iters = j.at("outer_iters").get<long>();
        r.dual_iters = j.at("dual_iters").get<long>();
        r.cccp_iters = j.at("cccp_iters").get<long>();
        r.wall_ms = j.at("wall_ms").get<double>();
        r.feasible = j.at("feasible").get<bool>();
        if (!j.at("oracle_ratio").is_null()) r.oracle_ratio = j.at("oracle_ratio").get<double>();
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<ResultRecord> read_results(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    const bool jsonl = path.size() >= 6 && (path.ends_with(".jsonl") || path.ends_with(".json"));
    return jsonl ? parse_results_jsonl(in) : parse_results_csv(in);
}

Moments moments(std::vector<double> v)
{
    Moments m;
    if (v.empty()) return m;
    const double n = static_cast<double>(v.size());
    double sum = 0.0;
    for (double x : v) sum += x;
    m.mean = sum / n;
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / n);
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    m.median = v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
    return m;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRecord>& records)
{
    // Groups in order of first appearance.
    std::vector<std::pair<double, std::string>> keys;
    std::vector<std::vector<const ResultRecord*>> groups;
    for (const auto& r : records) {
        std::size_t g = 0;
        while (g < keys.size() && !(keys[g].first == r.point && keys[g].second == r.algorithm)) ++g;
        if (g == keys.size()) {
            keys.emplace_back(r.point, r.algorithm);
            groups.emplace_back();
        }
        groups[g].push_back(&r);
    }
    std::vector<SummaryRow> out;
    for (std::size_t g = 0; g < keys.size(); ++g) {
        SummaryRow row;
        row.point = keys[g].first;
        row.algorithm = keys[g].second;
        row.count = groups[g].size();
        std::vector<double> u, o, d, c;
        for (const auto* r : groups[g]) {
            row.feasible += r->feasible ? 1 : 0;
            u.push_back(r->utility);
            o.push_back(static_cast<double>(r->outer_iters));
            d.push_back(static_cast<double>(r->dual_iters));
            c.push_back(static_cast<double>(r->cccp_iters));
        }
        row.utility = moments(u);
        row.outer_iters = moments(o);
        row.dual_iters = moments(d);
        row.cccp_iters = moments(c);
        out.push_back(std::move(row));
    }
    return out;
}

void emit_summary(const std::vector<SummaryRow>& rows, std::ostream& out)
{
    out << "point,algorithm,count,feasible,utility_mean,utility_median,utility_std,"
           "outer_mean,dual_mean,dual_std,cccp_mean\n";
    for (const auto& r : rows) {
        out << num(r.point) << ',' << r.algorithm << ',' << r.count << ',' << r.feasible << ','
            << num(r.utility.mean) << ',' << num(r.utility.median) << ',' << num(r.utility.std) << ','
            << num(r.outer_iters.mean) << ',' << num(r.dual_iters.mean) << ',' << num(r.dual_iters.std) << ','
            << num(r.cccp_iters.mean) << '\n';
    }
}

} // namespace nomafd

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <vector>

#include "data.hpp"
#include "error.hpp"
#include "gp.hpp"
#include "simplify.hpp"

namespace hashsimp::experiment {

namespace fs = std::filesystem;

// Shortest round-trip text for CSV cells; non-finite values as inf / nan.
inline std::string format_number(double value)
{
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), end);
}

inline double parse_number(std::string_view text)
{
    if (text == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    if (text == "-inf") {
        return -std::numeric_limits<double>::infinity();
    }
    if (text == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw DataError("not a number: '" + std::string(text) + "'");
    }
    return value;
}

// "7", "0..29" (inclusive) or comma-separated mixtures of both.
inline std::vector<std::uint64_t> parse_seeds(std::string_view text)
{
    std::vector<std::uint64_t> seeds;
    auto parse_int = [&](std::string_view s) {
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
            throw ConfigError("invalid seed '" + std::string(s) + "'");
        }
        return v;
    };
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto item = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        if (const auto dots = item.find(".."); dots != std::string_view::npos) {
            const auto lo = parse_int(item.substr(0, dots));
            const auto hi = parse_int(item.substr(dots + 2));
            if (hi < lo) {
                throw ConfigError("empty seed range '" + std::string(item) + "'");
            }
            for (auto s = lo; s <= hi; ++s) {
                seeds.push_back(s);
            }
        } else {
            seeds.push_back(parse_int(item));
        }
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return seeds;
}

inline std::vector<Strategy> parse_strategies(std::string_view text)
{
    std::vector<Strategy> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = text.find(',', start);
        const auto item = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        const auto s = strategy_from_string(item);
        if (!s) {
            throw ConfigError("unknown strategy '" + std::string(item) + "' (expected none, bottom_up or top_down)");
        }
        out.push_back(*s);
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

inline constexpr std::string_view kRunLogHeader = "generation,best_val_mse,n_simplifications";
inline constexpr std::string_view kTimingHeader = "generation,elapsed_seconds";
inline constexpr std::string_view kSummaryHeader =
    "dataset,strategy,seed,test_mse,size,complexity,total_simplifications,table_entries,table_expressions,wall_seconds";

struct RunSpec {
    std::string dataset_name;
    Strategy strategy = Strategy::None;
    std::uint64_t seed = 0;
    GpConfig config;
    std::size_t truncate_hash = 0;
};

inline fs::path run_directory(const fs::path& out_dir, Strategy strategy, std::uint64_t seed)
{
    return out_dir / std::string(to_string(strategy)) / ("seed_" + std::to_string(seed));
}

inline std::string summary_row(const RunSpec& spec, const RunResult& r)
{
    std::ostringstream row;
    row << spec.dataset_name << ',' << to_string(spec.strategy) << ',' << spec.seed << ',' << format_number(r.test_mse) << ','
        << r.size << ',' << r.complexity << ',' << r.total_simplifications << ',' << r.table_entries << ',' << r.table_expressions
        << ',' << format_number(r.wall_seconds);
    return row.str();
}

inline void write_file(const fs::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << content;
}

// Writes run_log.csv, timing.csv, summary.csv, final_model.txt and table_dump.txt.
inline void write_run(const fs::path& dir, const RunSpec& spec, const RunResult& r)
{
    fs::create_directories(dir);
    std::ostringstream log;
    std::ostringstream timing;
    log << kRunLogHeader << '\n';
    timing << kTimingHeader << '\n';
    for (const auto& row : r.log) {
        log << row.generation << ',' << format_number(row.best_val_mse) << ',' << row.simplifications << '\n';
        timing << row.generation << ',' << format_number(row.elapsed_seconds) << '\n';
    }
    write_file(dir / "run_log.csv", log.str());
    write_file(dir / "timing.csv", timing.str());
    write_file(dir / "summary.csv", std::string(kSummaryHeader) + '\n' + summary_row(spec, r) + '\n');
    write_file(dir / "final_model.txt", r.model_text + '\n');
    write_file(dir / "table_dump.txt", r.table ? dump_table(*r.table, spec.truncate_hash) : std::string{});
}

inline RunResult execute(const Dataset& dataset, const RunSpec& spec)
{
    const auto splits = split(dataset, Rng::derive(spec.seed, 0));
    const auto data = partition(dataset, splits);
    auto config = spec.config;
    config.seed = spec.seed;
    return evolve(config, data, spec.strategy);
}

// Worker count: HASHSIMP_THREADS if set, otherwise the hardware concurrency.
inline std::size_t worker_count(std::size_t jobs)
{
    std::size_t workers = std::max(1U, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("HASHSIMP_THREADS")) {
        std::size_t v = 0;
        const std::string_view s(env);
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec == std::errc{} && v > 0) {
            workers = v;
        }
    }
    return std::max<std::size_t>(1, std::min(workers, jobs));
}

// Runs every spec (possibly in parallel) and writes its directory under out_dir.
template <typename OnDone>
void run_all(const Dataset& dataset, const std::vector<RunSpec>& specs, const fs::path& out_dir, OnDone on_done)
{
    std::atomic<std::size_t> next{0};
    std::mutex report;
    std::vector<std::string> errors;
    auto work = [&] {
        for (auto i = next.fetch_add(1); i < specs.size(); i = next.fetch_add(1)) {
            try {
                const auto result = execute(dataset, specs[i]);
                write_run(run_directory(out_dir, specs[i].strategy, specs[i].seed), specs[i], result);
                const std::lock_guard lock(report);
                on_done(specs[i], result);
            } catch (const std::exception& e) {
                const std::lock_guard lock(report);
                errors.emplace_back(e.what());
            }
        }
    };
    const auto workers = worker_count(specs.size());
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) {
        pool.emplace_back(work);
    }
    work();
    pool.clear();
    if (!errors.empty()) {
        throw DataError(errors.front());
    }
}

struct SummaryRow {
    std::string dataset;
    std::string strategy;
    std::uint64_t seed = 0;
    double test_mse = 0.0;
    double size = 0.0;
    double complexity = 0.0;
    double total_simplifications = 0.0;
    double table_entries = 0.0;
    double table_expressions = 0.0;
    double wall_seconds = 0.0;
};

inline SummaryRow parse_summary_row(const std::string& line)
{
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        f.push_back(cell);
    }
    if (f.size() != 10) {
        throw DataError("malformed summary row: " + line);
    }
    SummaryRow r;
    r.dataset = f[0];
    r.strategy = f[1];
    r.seed = std::stoull(f[2]);
    r.test_mse = parse_number(f[3]);
    r.size = parse_number(f[4]);
    r.complexity = parse_number(f[5]);
    r.total_simplifications = parse_number(f[6]);
    r.table_entries = parse_number(f[7]);
    r.table_expressions = parse_number(f[8]);
    r.wall_seconds = parse_number(f[9]);
    return r;
}

inline double relative_change(double baseline, double value) { return 100.0 * (value - baseline) / baseline; }

inline double median(std::vector<double> values)
{
    if (values.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    std::sort(values.begin(), values.end());
    const auto mid = values.size() / 2;
    return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

struct AggregateResult {
    std::vector<SummaryRow> rows;
    std::string summary_csv;          // every run, one row each
    std::string relative_change_csv;  // per (dataset, seed, strategy, metric)
    std::string medians_csv;          // per (strategy, metric)
    std::vector<std::string> unmatched; // "dataset,strategy,seed" without a baseline partner
};

inline AggregateResult aggregate_rows(std::vector<SummaryRow> rows)
{
    std::sort(rows.begin(), rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
        return std::tie(a.dataset, a.strategy, a.seed) < std::tie(b.dataset, b.strategy, b.seed);
    });
    AggregateResult out;
    std::ostringstream all;
    all << kSummaryHeader << '\n';
    std::map<std::pair<std::string, std::uint64_t>, const SummaryRow*> baseline;
    for (const auto& r : rows) {
        all << r.dataset << ',' << r.strategy << ',' << r.seed << ',' << format_number(r.test_mse) << ',' << format_number(r.size) << ','
            << format_number(r.complexity) << ',' << format_number(r.total_simplifications) << ',' << format_number(r.table_entries)
            << ',' << format_number(r.table_expressions) << ',' << format_number(r.wall_seconds) << '\n';
        if (r.strategy == "none") {
            baseline[{r.dataset, r.seed}] = &r;
        }
    }
    out.summary_csv = all.str();

    struct Metric {
        std::string_view name;
        double SummaryRow::*field;
    };
    const std::array<Metric, 3> metrics{{{"size", &SummaryRow::size}, {"complexity", &SummaryRow::complexity}, {"test_mse", &SummaryRow::test_mse}}};
    std::map<std::pair<std::string, std::string>, std::vector<double>> deltas;

    std::ostringstream rel;
    rel << "dataset,seed,strategy,metric,baseline,value,delta_pct\n";
    for (const auto& r : rows) {
        if (r.strategy == "none") {
            continue;
        }
        const auto it = baseline.find({r.dataset, r.seed});
        if (it == baseline.end()) {
            out.unmatched.push_back(r.dataset + "," + r.strategy + "," + std::to_string(r.seed));
            continue;
        }
        for (const auto& m : metrics) {
            const double base = it->second->*m.field;
            const double value = r.*m.field;
            const double delta = relative_change(base, value);
            rel << r.dataset << ',' << r.seed << ',' << r.strategy << ',' << m.name << ',' << format_number(base) << ','
                << format_number(value) << ',' << format_number(delta) << '\n';
            if (std::isfinite(delta)) {
                deltas[{r.strategy, std::string(m.name)}].push_back(delta);
            }
        }
    }
    out.relative_change_csv = rel.str();

    std::ostringstream med;
    med << "strategy,metric,median_delta_pct,n\n";
    for (const auto& [key, values] : deltas) {
        med << key.first << ',' << key.second << ',' << format_number(median(values)) << ',' << values.size() << '\n';
    }
    out.medians_csv = med.str();
    out.rows = std::move(rows);
    return out;
}

// Collects every summary.csv below `results_dir` and pairs runs by seed with
// the "none" baseline. Writes summary_all.csv, relative_change.csv and
// relative_change_medians.csv into `results_dir`.
inline AggregateResult aggregate(const fs::path& results_dir)
{
    if (!fs::is_directory(results_dir)) {
        throw DataError("results directory " + results_dir.string() + " does not exist");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(results_dir)) {
        if (entry.is_regular_file() && entry.path().filename() == "summary.csv") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<SummaryRow> rows;
    for (const auto& file : files) {
        std::ifstream in(file);
        std::string line;
        std::getline(in, line); // header
        while (std::getline(in, line)) {
            if (!line.empty()) {
                rows.push_back(parse_summary_row(line));
            }
        }
    }
    auto result = aggregate_rows(std::move(rows));
    write_file(results_dir / "summary_all.csv", result.summary_csv);
    write_file(results_dir / "relative_change.csv", result.relative_change_csv);
    write_file(results_dir / "relative_change_medians.csv", result.medians_csv);
    return result;
}

} // namespace hashsimp::experiment

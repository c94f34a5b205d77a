#include "racing_sr/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "racing_sr/parallel.hpp"

namespace racing_sr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Clock = std::chrono::steady_clock;

ResultRow row_from(const BenchmarkSpec& spec, const SuiteOptions& options, const RunReport& report) {
    ResultRow row;
    row.benchmark = spec.name;
    row.algo = options.algo;
    row.seed = options.config.seed;
    row.wall_seconds = report.wall_seconds;
    row.oracle_rows = report.oracle_rows;
    if (report.hof.empty()) {
        const double inf = std::numeric_limits<double>::infinity();
        row.metrics = {inf, inf, inf, inf, -inf, false};
        return row;
    }
    const auto& best = report.best();
    row.metrics = metrics(report.test_outputs, best.predictions);
    row.schedule = best.entry.schedule.to_string();
    row.expression = best.expression();
    for (const auto& e : report.hof) row.hof.emplace_back(e.test_nmse, e.expression());
    return row;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else {
            fields.back() += c;
        }
    }
    return fields;
}

double parse_number(const std::string& s) {
    if (s.empty() || s == "nan") return kNaN;
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::stod(s);
}

std::string number(double v, bool blank) { return blank ? std::string() : format_double(v); }

MetricSummary quartiles(const std::vector<double>& v) { return {quantile(v, 0.5), quantile(v, 0.75)}; }

} // namespace

Metrics metrics(std::span<const double> y, std::span<const double> prediction) {
    if (y.size() != prediction.size()) throw std::invalid_argument("metrics: length mismatch");
    if (y.size() < 2) throw std::invalid_argument("metrics: need at least two points");
    const auto n = static_cast<double>(y.size());
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= n;
    double var = 0.0;
    double sse = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        var += (y[i] - mean) * (y[i] - mean);
        const double r = y[i] - prediction[i];
        sse += r * r;
    }
    var /= n;
    Metrics m;
    m.mse = sse / n;
    m.rmse = std::sqrt(m.mse);
    if (!(var > 0.0)) {
        m.degenerate = true;
        m.nmse = m.nrmse = m.r2 = kNaN;
        return m;
    }
    m.nmse = m.mse / var;
    m.nrmse = std::sqrt(m.nmse);
    m.r2 = 1.0 - m.nmse;
    return m;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) return kNaN;
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q outside [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0) return values[lo];
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::string_view algo_name(Algo a) noexcept {
    switch (a) {
    case Algo::racing: return "racing";
    case Algo::cvgp: return "cvgp";
    case Algo::gp: return "gp";
    case Algo::cvgp_all: return "cvgp-all";
    }
    return "racing";
}

std::optional<Algo> parse_algo(std::string_view text) noexcept {
    for (Algo a : {Algo::racing, Algo::cvgp, Algo::gp, Algo::cvgp_all}) {
        if (algo_name(a) == text) return a;
    }
    return std::nullopt;
}

std::vector<ResultRow> run_benchmark(const BenchmarkSpec& spec, const SuiteOptions& options) {
    RacingConfig cfg = options.config;
    cfg.budget = options.timeout_seconds ? Budget::seconds(*options.timeout_seconds, options.stop)
                                         : Budget{std::nullopt, options.stop};
    switch (options.algo) {
    case Algo::racing: return {row_from(spec, options, racing_run(spec, cfg))};
    case Algo::cvgp: return {row_from(spec, options, cvgp_run(spec, cfg, default_schedule(spec.n_vars)))};
    case Algo::gp: return {row_from(spec, options, gp_baseline(spec, cfg))};
    case Algo::cvgp_all: {
        const auto all = cvgp_all_schedules(spec, cfg);
        std::vector<ResultRow> rows;
        for (const auto& run : all.runs) rows.push_back(row_from(spec, options, run));
        return rows;
    }
    }
    return {};
}

SuiteResult run_suite(const std::vector<BenchmarkSpec>& suite, const SuiteOptions& options) {
    if (suite.empty()) throw std::invalid_argument("run_suite: empty suite");
    // Members run concurrently when there are several; a lone member gets the
    // workers for its own refits instead. Results do not depend on either.
    const bool across = suite.size() > 1 && options.jobs > 1;
    std::vector<std::optional<std::vector<ResultRow>>> done(suite.size());
    std::vector<std::string> failures(suite.size());
    std::atomic<bool> interrupted{false};

    parallel_for(suite.size(), across ? options.jobs : 1, [&](std::size_t i) {
        const auto& spec = suite[i];
        SuiteOptions member = options;
        member.config.seed = derive_seed(options.config.seed, spec.name);
        member.config.jobs = across ? 1 : options.jobs;
        const auto start = Clock::now();
        try {
            if (options.stop && options.stop->load()) throw Interrupted();
            auto rows = run_benchmark(spec, member);
            for (auto& r : rows) r.seed = options.config.seed;
            done[i] = std::move(rows);
        } catch (const TimedOut&) {
            ResultRow row;
            row.benchmark = spec.name;
            row.algo = options.algo;
            row.seed = options.config.seed;
            row.timed_out = true;
            row.metrics = {kNaN, kNaN, kNaN, kNaN, kNaN, false};
            row.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
            done[i] = std::vector<ResultRow>{row};
        } catch (const Interrupted&) {
            interrupted = true;
        } catch (const std::exception& e) {
            failures[i] = spec.name + ": " + e.what();
        }
    });

    SuiteResult result;
    result.interrupted = interrupted;
    for (std::size_t i = 0; i < suite.size(); ++i) {
        if (done[i]) result.rows.insert(result.rows.end(), done[i]->begin(), done[i]->end());
        if (!failures[i].empty()) result.failures.push_back(failures[i]);
    }
    return result;
}

SuiteSummary summarize(const std::vector<ResultRow>& rows) {
    SuiteSummary s;
    std::vector<double> mse, nmse, rmse, nrmse, r2;
    for (const auto& r : rows) {
        ++s.rows;
        s.wall_seconds += r.wall_seconds;
        s.oracle_rows += r.oracle_rows;
        if (r.timed_out) {
            ++s.timed_out;
            continue;
        }
        if (r.metrics.degenerate) {
            ++s.degenerate;
            continue;
        }
        mse.push_back(r.metrics.mse);
        nmse.push_back(r.metrics.nmse);
        rmse.push_back(r.metrics.rmse);
        nrmse.push_back(r.metrics.nrmse);
        r2.push_back(r.metrics.r2);
    }
    s.mse = quartiles(mse);
    s.nmse = quartiles(nmse);
    s.rmse = quartiles(rmse);
    s.nrmse = quartiles(nrmse);
    s.r2 = quartiles(r2);
    return s;
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows, bool reproducible) {
    out << "benchmark,algo,seed,nmse,mse,rmse,nrmse,r2,wall_s,oracle_rows,timed_out,schedule\n";
    for (const auto& r : rows) {
        const bool blank = r.timed_out;
        out << csv_field(r.benchmark) << ',' << algo_name(r.algo) << ',' << r.seed << ','
            << number(r.metrics.nmse, blank) << ',' << number(r.metrics.mse, blank) << ','
            << number(r.metrics.rmse, blank) << ',' << number(r.metrics.nrmse, blank) << ','
            << number(r.metrics.r2, blank) << ',' << number(r.wall_seconds, reproducible) << ',' << r.oracle_rows
            << ',' << (r.timed_out ? "true" : "false") << ',' << csv_field(r.schedule) << '\n';
    }
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("results.csv: missing header");
    const auto header = split_csv(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const char* name : {"benchmark", "algo", "seed", "nmse", "mse", "rmse", "nrmse", "r2", "wall_s",
                             "oracle_rows", "timed_out"}) {
        if (!col.contains(name)) throw std::invalid_argument(std::string("results.csv: missing column ") + name);
    }
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() < header.size()) throw std::invalid_argument("results.csv: short row: " + line);
        const auto at = [&](const char* name) -> const std::string& { return f[col.at(name)]; };
        ResultRow r;
        r.benchmark = at("benchmark");
        const auto algo = parse_algo(at("algo"));
        if (!algo) throw std::invalid_argument("results.csv: unknown algo " + at("algo"));
        r.algo = *algo;
        r.seed = std::stoull(at("seed"));
        r.metrics.nmse = parse_number(at("nmse"));
        r.metrics.mse = parse_number(at("mse"));
        r.metrics.rmse = parse_number(at("rmse"));
        r.metrics.nrmse = parse_number(at("nrmse"));
        r.metrics.r2 = parse_number(at("r2"));
        r.timed_out = at("timed_out") == "true";
        r.metrics.degenerate = !r.timed_out && std::isnan(r.metrics.nmse);
        r.wall_seconds = at("wall_s").empty() ? 0.0 : parse_number(at("wall_s"));
        r.oracle_rows = std::stoull(at("oracle_rows"));
        if (col.contains("schedule")) r.schedule = f[col.at("schedule")];
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_timing_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << "benchmark,algo,seed,schedule,wall_s,oracle_rows,timed_out\n";
    for (const auto& r : rows) {
        out << csv_field(r.benchmark) << ',' << algo_name(r.algo) << ',' << r.seed << ',' << csv_field(r.schedule)
            << ',' << format_double(r.wall_seconds) << ',' << r.oracle_rows << ','
            << (r.timed_out ? "true" : "false") << '\n';
    }
}

void write_hof(std::ostream& out, const std::vector<ResultRow>& rows) {
    for (const auto& r : rows) {
        out << "# " << r.benchmark << ' ' << algo_name(r.algo) << " seed=" << r.seed;
        if (!r.schedule.empty()) out << " schedule=" << r.schedule;
        if (r.timed_out) out << " timed out";
        out << '\n';
        for (const auto& [nmse, expr] : r.hof) out << format_double(nmse) << '\t' << expr << '\n';
    }
}

std::string summary_json(const std::vector<ResultRow>& rows, const std::string& suite) {
    using nlohmann::json;
    std::map<std::string, std::vector<ResultRow>> by_algo;
    for (const auto& r : rows) by_algo[std::string(algo_name(r.algo))].push_back(r);
    const auto cell = [](const MetricSummary& m) {
        // NaN (no finished rows) serializes as null.
        return json{{"median", m.median}, {"q75", m.q75}};
    };
    json groups = json::array();
    for (const auto& [algo, group] : by_algo) {
        const auto s = summarize(group);
        groups.push_back({{"algo", algo},
                          {"rows", s.rows},
                          {"timed_out", s.timed_out},
                          {"degenerate", s.degenerate},
                          {"nmse", cell(s.nmse)},
                          {"mse", cell(s.mse)},
                          {"rmse", cell(s.rmse)},
                          {"nrmse", cell(s.nrmse)},
                          {"r2", cell(s.r2)},
                          {"wall_s", s.wall_seconds},
                          {"oracle_rows", s.oracle_rows}});
    }
    return json{{"suite", suite}, {"groups", groups}}.dump(2) + "\n";
}

} // namespace racing_sr

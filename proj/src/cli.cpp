#include "racing_sr/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "racing_sr/bench.hpp"
#include "racing_sr/eval.hpp"
#include "racing_sr/suites.hpp"

namespace racing_sr {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kBenchExtension = ".bench";
constexpr const char* kDefaultOut = "racing_sr_out";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raw flag values; unset ones fall back to the config file, then defaults.
struct RunFlags {
    std::optional<std::string> suite;
    std::optional<std::string> bench;
    std::optional<std::string> algo;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> pool;
    std::optional<std::size_t> gens;
    std::optional<std::size_t> init_gens;
    std::optional<std::size_t> trials;
    std::optional<std::size_t> batch;
    std::optional<double> eps;
    std::optional<double> eps_var;
    std::optional<std::string> opt;
    std::optional<std::size_t> restarts;
    std::optional<std::size_t> hof;
    std::optional<double> timeout;
    std::optional<std::size_t> jobs;
    std::optional<std::string> out;
    std::string config;
    bool reproducible = false;
};

template <class T>
void resolve(std::optional<T>& flag, const json& file, const char* key) {
    if (flag || !file.contains(key)) return;
    try {
        flag = file.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

json read_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    try {
        json j = json::parse(in);
        if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
}

std::vector<BenchmarkSpec> load_dir(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == kBenchExtension) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ConfigError("no " + std::string(kBenchExtension) + " files in " + dir.string());
    std::vector<BenchmarkSpec> out;
    for (const auto& f : files) out.push_back(load_benchmark(f));
    return out;
}

/// A built-in suite name, a directory of benchmark files, or one file.
std::vector<BenchmarkSpec> load_suite(const std::string& ref) {
    const auto names = builtin_suite_names();
    if (std::find(names.begin(), names.end(), ref) != names.end()) return builtin_suite(ref);
    const fs::path p(ref);
    std::error_code ec;
    if (fs::is_directory(p, ec)) return load_dir(p);
    if (fs::is_regular_file(p, ec)) return {load_benchmark(p)};
    throw ConfigError("no suite or benchmark file named '" + ref + "'");
}

std::string suite_label(const std::string& ref) {
    const auto names = builtin_suite_names();
    if (std::find(names.begin(), names.end(), ref) != names.end()) return ref;
    return fs::path(ref).filename().string();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
    if (!f.flush()) throw std::runtime_error("cannot write " + path.string());
}

template <class Writer>
std::string render(Writer&& w) {
    std::ostringstream s;
    w(s);
    return s.str();
}

std::string cell(double v) {
    if (std::isnan(v)) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

void print_summary(std::ostream& out, const std::vector<ResultRow>& rows) {
    std::vector<Algo> algos;
    for (const auto& r : rows) {
        if (std::find(algos.begin(), algos.end(), r.algo) == algos.end()) algos.push_back(r.algo);
    }
    char line[256];
    std::snprintf(line, sizeof line, "%-9s %5s %4s %10s %10s %10s %10s %10s %9s\n", "algo", "rows", "t/o",
                  "nmse_50", "nmse_75", "nrmse_50", "nrmse_75", "r2_50", "wall_s");
    out << line;
    for (Algo a : algos) {
        std::vector<ResultRow> group;
        std::copy_if(rows.begin(), rows.end(), std::back_inserter(group), [&](const auto& r) { return r.algo == a; });
        const auto s = summarize(group);
        std::snprintf(line, sizeof line, "%-9s %5zu %4zu %10s %10s %10s %10s %10s %9.1f\n",
                      std::string(algo_name(a)).c_str(), s.rows, s.timed_out, cell(s.nmse.median).c_str(),
                      cell(s.nmse.q75).c_str(), cell(s.nrmse.median).c_str(), cell(s.nrmse.q75).c_str(),
                      cell(s.r2.median).c_str(), s.wall_seconds);
        out << line;
        if (s.timed_out > 0) out << "  " << s.timed_out << " timed out, excluded from quartiles\n";
        if (s.degenerate > 0) out << "  " << s.degenerate << " with a constant target, excluded from quartiles\n";
    }
}

void add_run_flags(CLI::App& cmd, RunFlags& f) {
    cmd.add_option("--suite", f.suite, "Built-in suite name, directory of .bench files, or one file");
    cmd.add_option("--bench", f.bench, "Single benchmark file");
    cmd.add_option("--algo", f.algo, "racing | cvgp | gp | cvgp-all");
    cmd.add_option("--seed", f.seed, "Run seed (required, here or in the config file)");
    cmd.add_option("--pool", f.pool, "Pool size N_p");
    cmd.add_option("--gens", f.gens, "Generations per round");
    cmd.add_option("--init-gens", f.init_gens, "Generations for the initial per-variable groups");
    cmd.add_option("--trials", f.trials, "Trials K per fit");
    cmd.add_option("--batch", f.batch, "Rows m per trial");
    cmd.add_option("--eps", f.eps, "Fit-test threshold on every trial's NMSE");
    cmd.add_option("--eps-var", f.eps_var, "Variance bound for freezing a constant");
    cmd.add_option("--opt", f.opt, "nelder-mead | bfgs | cg | basin-hopping");
    cmd.add_option("--restarts", f.restarts, "Optimizer restarts per trial");
    cmd.add_option("--hof", f.hof, "Hall-of-fame size");
    cmd.add_option("--timeout", f.timeout, "Per-expression wall-clock limit in seconds");
    cmd.add_option("--jobs", f.jobs, "Worker threads");
    cmd.add_option("--out", f.out, "Output directory (falls back to $RACING_SR_OUT)");
    cmd.add_option("--config", f.config, "JSON file of flag values; flags given here win");
    cmd.add_flag("--reproducible", f.reproducible, "Leave wall_s empty in results.csv");
}

int cmd_run(RunFlags f, std::ostream& out, std::ostream& err, const std::atomic<bool>* stop) {
    const json file = read_config(f.config);
    resolve(f.suite, file, "suite");
    resolve(f.bench, file, "bench");
    resolve(f.algo, file, "algo");
    resolve(f.seed, file, "seed");
    resolve(f.pool, file, "pool");
    resolve(f.gens, file, "gens");
    resolve(f.init_gens, file, "init_gens");
    resolve(f.trials, file, "trials");
    resolve(f.batch, file, "batch");
    resolve(f.eps, file, "eps");
    resolve(f.eps_var, file, "eps_var");
    resolve(f.opt, file, "opt");
    resolve(f.restarts, file, "restarts");
    resolve(f.hof, file, "hof");
    resolve(f.timeout, file, "timeout");
    resolve(f.jobs, file, "jobs");
    resolve(f.out, file, "out");
    if (!f.reproducible && file.contains("reproducible")) f.reproducible = file.at("reproducible").get<bool>();

    if (!f.seed) throw ConfigError("--seed is required");
    if (f.suite.has_value() == f.bench.has_value()) throw ConfigError("give exactly one of --suite or --bench");

    SuiteOptions opt;
    if (f.algo) {
        const auto a = parse_algo(*f.algo);
        if (!a) throw ConfigError("unknown algo '" + *f.algo + "'");
        opt.algo = *a;
    }
    RacingConfig& cfg = opt.config;
    cfg.seed = *f.seed;
    if (f.pool) cfg.pool = *f.pool;
    if (f.gens) cfg.generations = *f.gens;
    if (f.init_gens) cfg.init_generations = *f.init_gens;
    if (f.trials) cfg.trials = *f.trials;
    if (f.batch) cfg.batch = *f.batch;
    if (f.eps) cfg.eps = *f.eps;
    if (f.eps_var) cfg.eps_var = *f.eps_var;
    if (f.restarts) cfg.fit.restarts = *f.restarts;
    if (f.hof) cfg.hof = *f.hof;
    if (f.opt) {
        const auto m = parse_method(*f.opt);
        if (!m) throw ConfigError("unknown optimizer '" + *f.opt + "'");
        cfg.fit.method = *m;
    }
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (f.timeout) {
        if (!(*f.timeout > 0.0)) throw ConfigError("--timeout must be positive");
        opt.timeout_seconds = *f.timeout;
    }
    opt.jobs = std::max<std::size_t>(1, f.jobs.value_or(1));
    opt.stop = stop;

    std::vector<BenchmarkSpec> suite;
    std::string label;
    try {
        if (f.bench) {
            suite = {load_benchmark(*f.bench)};
            label = suite.front().name;
        } else {
            suite = load_suite(*f.suite);
            label = suite_label(*f.suite);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (opt.algo == Algo::cvgp_all) {
        for (const auto& s : suite) {
            if (s.n_vars > kMaxAllSchedulesVars) {
                throw ConfigError(s.name + ": cvgp-all supports at most " + std::to_string(kMaxAllSchedulesVars) +
                                  " variables");
            }
        }
    }

    std::string dir = kDefaultOut;
    if (f.out) {
        dir = *f.out;
    } else if (const char* env = std::getenv("RACING_SR_OUT"); env && *env) {
        dir = env;
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory " + dir);

    const SuiteResult result = run_suite(suite, opt);
    const fs::path root(dir);
    write_file(root / "results.csv", render([&](auto& s) { write_results_csv(s, result.rows, f.reproducible); }));
    write_file(root / "timing.csv", render([&](auto& s) { write_timing_csv(s, result.rows); }));
    write_file(root / "hof.txt", render([&](auto& s) { write_hof(s, result.rows); }));
    write_file(root / "summary.json", summary_json(result.rows, label));

    print_summary(out, result.rows);
    out << "wrote " << result.rows.size() << " rows to " << (root / "results.csv").string() << '\n';
    for (const auto& msg : result.failures) err << "job failed: " << msg << '\n';
    if (result.interrupted) {
        err << "interrupted; kept " << result.rows.size() << " finished rows\n";
        return kExitInterrupted;
    }
    return result.failures.empty() ? kExitOk : kExitJobFailed;
}

int cmd_gen(const std::vector<std::string>& suites, const std::string& out_dir, std::ostream& out) {
    std::vector<std::string> names = suites;
    if (names.empty() || std::find(names.begin(), names.end(), "all") != names.end()) names = builtin_suite_names();
    for (const auto& name : names) {
        std::vector<BenchmarkSpec> specs;
        try {
            specs = builtin_suite(name);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        const fs::path dir = fs::path(out_dir) / name;
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw ConfigError("cannot create " + dir.string() + ": " + ec.message());
        std::size_t written = 0;
        for (const auto& spec : specs) {
            const fs::path file = dir / (spec.name + kBenchExtension);
            const std::string text = format_benchmark(spec);
            std::ifstream existing(file, std::ios::binary);
            if (existing) {
                std::stringstream ss;
                ss << existing.rdbuf();
                if (ss.str() == text) continue;
            }
            try {
                write_file(file, text);
            } catch (const std::exception& e) {
                throw ConfigError(e.what());
            }
            ++written;
        }
        out << name << ": " << specs.size() << " benchmarks in " << dir.string() << " (" << written << " written)\n";
    }
    return kExitOk;
}

int cmd_eval(const std::string& expression, const std::string& bench, std::uint64_t seed, std::size_t rows,
             std::ostream& out) {
    const BenchmarkSpec spec = [&] {
        try {
            return load_benchmark(bench);
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
    }();
    const ExpressionTree tree = [&] {
        try {
            return parse(expression, spec.n_vars);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("cannot parse expression: ") + e.what());
        }
    }();
    if (count_open_constants(tree) > 0) throw ConfigError("expression has unfitted constants C");
    if (rows < 2) throw ConfigError("--rows must be at least 2");
    // Same test stream a run with this seed scores against.
    Oracle oracle(spec, derive_seed(seed, "oracle"));
    const TrialBatch test = oracle.sample_test(rows);
    const auto pred = BatchEvaluator(tree, test.inputs).evaluate({});
    const auto m = metrics(test.outputs, pred);
    out << "benchmark " << spec.name << '\n';
    out << "expression " << to_string(tree) << '\n';
    out << "mse " << format_double(m.mse) << '\n';
    out << "nmse " << format_double(m.nmse) << '\n';
    out << "rmse " << format_double(m.rmse) << '\n';
    out << "nrmse " << format_double(m.nrmse) << '\n';
    out << "r2 " << format_double(m.r2) << '\n';
    if (m.degenerate) out << "constant target: nmse, nrmse and r2 are undefined\n";
    return kExitOk;
}

int cmd_report(const std::string& path, std::ostream& out) {
    fs::path file(path);
    if (fs::is_directory(file)) file /= "results.csv";
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open " + file.string());
    std::vector<ResultRow> rows;
    try {
        rows = read_results_csv(in);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    print_summary(out, rows);
    return kExitOk;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err, const std::atomic<bool>* stop) {
    CLI::App app{"Racing control-variable genetic programming for symbolic regression"};
    app.require_subcommand(1);

    RunFlags run_flags;
    auto* run = app.add_subcommand("run", "Run an algorithm over a suite and write results");
    add_run_flags(*run, run_flags);

    std::vector<std::string> gen_suites;
    std::string gen_out = "benchmarks";
    auto* gen = app.add_subcommand("gen", "Write the built-in suites as benchmark files");
    gen->add_option("--suite", gen_suites, "Suite names, or all (default)");
    gen->add_option("--out", gen_out, "Target directory");

    std::string eval_expr;
    std::string eval_bench;
    std::uint64_t eval_seed = 0;
    std::size_t eval_rows = 256;
    auto* eval = app.add_subcommand("eval", "Score an expression on a fresh test batch");
    eval->add_option("--expr", eval_expr, "Expression without open constants")->required();
    eval->add_option("--bench", eval_bench, "Benchmark file")->required();
    eval->add_option("--seed", eval_seed, "Seed of the test stream")->required();
    eval->add_option("--rows", eval_rows, "Test rows");

    std::string report_path;
    auto* report = app.add_subcommand("report", "Summarize an existing results.csv");
    report->add_option("path", report_path, "results.csv or its directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, r;
        const int code = app.exit(e, o, r);
        out << o.str();
        err << r.str();
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run) return cmd_run(run_flags, out, err, stop);
        if (*gen) return cmd_gen(gen_suites, gen_out, out);
        if (*eval) return cmd_eval(eval_expr, eval_bench, eval_seed, eval_rows, out);
        if (*report) return cmd_report(report_path, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitJobFailed;
    }
    return kExitConfig;
}

} // namespace racing_sr

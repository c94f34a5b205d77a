#include "racing_sr/racing.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace racing_sr {

void RacingConfig::validate() const {
    if (trials < 2) throw std::invalid_argument("trials must be at least 2");
    if (pool == 0) throw std::invalid_argument("pool must be positive");
    if (batch < 2) throw std::invalid_argument("batch must be at least 2");
    if (!(eps > 0.0) || !(eps_var > 0.0)) throw std::invalid_argument("eps and eps_var must be positive");
    if (hof == 0) throw std::invalid_argument("hof must be positive");
    if (!(p_mutate >= 0.0 && p_mutate <= 1.0) || !(p_mate >= 0.0 && p_mate <= 1.0)) {
        throw std::invalid_argument("probabilities must lie in [0, 1]");
    }
    if (test_rows < 2) throw std::invalid_argument("test_rows must be at least 2");
    if (init_depth == 0) throw std::invalid_argument("init_depth must be positive");
    if (fit.restarts == 0) throw std::invalid_argument("restarts must be positive");
}

GpConfig gp_config(const RacingConfig& cfg, std::size_t generations) {
    GpConfig g;
    g.trials = cfg.trials;
    g.batch = cfg.batch;
    g.generations = generations;
    g.p_mutate = cfg.p_mutate;
    g.p_mate = cfg.p_mate;
    g.mutation = cfg.mutation;
    g.fit = cfg.fit;
    g.jobs = cfg.jobs;
    g.budget = cfg.budget;
    return g;
}

std::vector<PoolEntry> build_gp_pool(Oracle& oracle, const OperatorSet& ops, const RacingConfig& cfg, Rng& rng,
                                     GpStats* stats) {
    const std::size_t n = oracle.spec().n_vars;
    const std::size_t per_group = (cfg.pool + n - 1) / n;
    const GpConfig gcfg = gp_config(cfg, cfg.init_generations);
    std::vector<PoolEntry> out;
    for (std::uint32_t i = 0; i < n; ++i) {
        VarSet control = VarSet::all(n);
        control.erase(i);
        std::vector<PoolEntry> group;
        for (std::size_t j = 0; j < per_group; ++j) {
            group.push_back({random_tree(VarSet{i}, ops, cfg.init_depth, n, rng), {}, Schedule(control), control});
        }
        refit(group, oracle, gcfg, rng, stats);
        HallOfFame scratch(cfg.hof);
        gp_run(group, oracle, ops, gcfg, scratch, rng, stats);
        for (auto& e : group) out.push_back(std::move(e));
    }
    return out;
}

PoolEntry freeze_equation(PoolEntry entry, const RacingConfig& cfg) {
    const auto& r = entry.result;
    if (r.empty()) return entry;
    for (double f : r.fitness) {
        if (!std::isfinite(f) || -f > cfg.eps) return entry;
    }
    const std::size_t k = r.constants.rows();
    std::vector<Node> nodes(entry.tree.nodes().begin(), entry.tree.nodes().end());
    std::size_t slot = 0;
    for (auto& nd : nodes) {
        if (!nd.is_open_constant()) {
            nd.editable = false;
            continue;
        }
        double mean = 0.0;
        for (std::size_t t = 0; t < k; ++t) mean += r.constants(t, slot);
        mean /= static_cast<double>(k);
        double spread = 0.0;
        for (std::size_t t = 0; t < k; ++t) spread += (r.constants(t, slot) - mean) * (r.constants(t, slot) - mean);
        if (spread <= cfg.eps_var) nd = make_frozen_constant(mean);
        ++slot;
    }
    entry.tree = ExpressionTree(std::move(nodes), entry.tree.n_vars());
    entry.result = {};
    return entry;
}

std::vector<PoolEntry> extend_schedules(std::vector<PoolEntry> pool, Rng& rng) {
    for (auto& e : pool) {
        if (e.control_set.empty()) continue;
        const auto members = e.control_set.members();
        std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
        VarSet next = e.control_set;
        next.erase(members[pick(rng)]);
        e.schedule.append(next);
        e.control_set = next;
        e.result = {};
    }
    return pool;
}

HallOfFame run_round(std::vector<PoolEntry>& pool, Oracle& oracle, const OperatorSet& ops, const RacingConfig& cfg,
                     std::size_t generations, Rng& rng, GpStats* stats) {
    cfg.budget.check();
    const GpConfig gcfg = gp_config(cfg, generations);
    refit(pool, oracle, gcfg, rng, stats);
    HallOfFame hof(cfg.hof);
    hof.update(pool);
    gp_run(pool, oracle, ops, gcfg, hof, rng, stats);
    pool = select_topk(std::move(pool), cfg.pool);
    return hof;
}

std::vector<ScoredEntry> rescore(const std::vector<PoolEntry>& entries, const TrialBatch& test) {
    std::vector<ScoredEntry> out;
    out.reserve(entries.size());
    for (const auto& e : entries) {
        ScoredEntry s{e, {}, 0.0, {}};
        if (!e.result.empty() && e.result.constants.cols() > 0) {
            const auto row = e.result.constants.row(e.result.best_trial());
            s.constants.assign(row.begin(), row.end());
        }
        s.predictions = evaluate(e.tree, test.inputs, s.constants);
        s.test_nmse = nmse_loss(test.outputs, s.predictions);
        out.push_back(std::move(s));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const ScoredEntry& a, const ScoredEntry& b) { return a.test_nmse < b.test_nmse; });
    return out;
}

std::map<std::string, std::size_t> histogram(const std::vector<PoolEntry>& pool) {
    std::map<std::string, std::size_t> out;
    for (const auto& e : pool) ++out[e.schedule.to_string()];
    return out;
}

namespace {

using Clock = std::chrono::steady_clock;

struct Run {
    Oracle oracle;
    Rng rng;
    GpStats stats;
    Clock::time_point start = Clock::now();
    RunReport report;

    Run(const BenchmarkSpec& spec, const RacingConfig& cfg, std::string algo)
        : oracle(spec, derive_seed(cfg.seed, "oracle")), rng(derive_seed(cfg.seed, algo)) {
        spec.validate();
        cfg.validate();
        report.algo = std::move(algo);
    }

    RunReport finish(const HallOfFame& hof, const RacingConfig& cfg) {
        const TrialBatch test = oracle.sample_test(cfg.test_rows);
        report.training_hof = hof.entries();
        report.hof = rescore(hof.entries(), test);
        report.test_outputs = test.outputs;
        report.oracle_rows = oracle.rows_served();
        report.test_rows = oracle.test_rows_served();
        report.optimize_calls = stats.optimize_calls;
        report.generations = stats.generations;
        report.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
        return std::move(report);
    }
};

RunReport fixed_run(const BenchmarkSpec& spec, const RacingConfig& cfg, const Schedule& schedule, std::string algo,
                    std::size_t generations_per_round, std::size_t init_generations) {
    if (!schedule.complete()) throw InvalidSchedule("schedule must end with no controlled variables");
    Run run(spec, cfg, std::move(algo));
    const std::size_t n = spec.n_vars;
    const VarSet first = schedule.rounds().front();
    if (!first.is_subset_of(VarSet::all(n)) || first.size() + 1 != schedule.size()) {
        throw InvalidSchedule("schedule " + schedule.to_string() + " does not fit " + std::to_string(n) + " variables");
    }
    std::vector<PoolEntry> pool;
    for (std::size_t j = 0; j < cfg.pool; ++j) {
        pool.push_back({random_tree(first.complement(n), spec.op_set, cfg.init_depth, n, run.rng), {}, Schedule(first),
                        first});
    }
    const GpConfig init = gp_config(cfg, init_generations);
    refit(pool, run.oracle, init, run.rng, &run.stats);
    if (init_generations > 0) {
        HallOfFame scratch(cfg.hof);
        gp_run(pool, run.oracle, spec.op_set, init, scratch, run.rng, &run.stats);
    }
    HallOfFame hof(cfg.hof);
    for (std::size_t r = 0; r < schedule.size(); ++r) {
        hof = run_round(pool, run.oracle, spec.op_set, cfg, generations_per_round, run.rng, &run.stats);
        run.report.schedule_histogram.push_back(histogram(pool));
        if (r + 1 == schedule.size()) break;
        const VarSet next = schedule.rounds()[r + 1];
        for (auto& e : pool) {
            e = freeze_equation(std::move(e), cfg);
            e.schedule.append(next);
            e.control_set = next;
            e.result = {};
        }
    }
    return run.finish(hof, cfg);
}

} // namespace

RunReport racing_run(const BenchmarkSpec& spec, const RacingConfig& cfg) {
    Run run(spec, cfg, "racing");
    const std::size_t n = spec.n_vars;
    auto pool = build_gp_pool(run.oracle, spec.op_set, cfg, run.rng, &run.stats);
    HallOfFame hof(cfg.hof);
    for (std::size_t r = 0; r < n; ++r) {
        hof = run_round(pool, run.oracle, spec.op_set, cfg, cfg.generations, run.rng, &run.stats);
        run.report.schedule_histogram.push_back(histogram(pool));
        if (r + 1 == n) break;
        for (auto& e : pool) e = freeze_equation(std::move(e), cfg);
        pool = extend_schedules(std::move(pool), run.rng);
    }
    return run.finish(hof, cfg);
}

RunReport cvgp_run(const BenchmarkSpec& spec, const RacingConfig& cfg, const Schedule& schedule) {
    if (schedule.size() != spec.n_vars) throw InvalidSchedule("schedule needs one round per variable");
    return fixed_run(spec, cfg, schedule, "cvgp", cfg.generations, cfg.init_generations);
}

RunReport gp_baseline(const BenchmarkSpec& spec, const RacingConfig& cfg) {
    return fixed_run(spec, cfg, Schedule(VarSet{}), "gp", spec.n_vars * cfg.generations, 0);
}

namespace {

struct Branch {
    std::vector<PoolEntry> pool;
    Schedule schedule;
    Rng rng;
    GpStats stats;
    double seconds = 0.0;
    std::uint64_t rows = 0;
};

class ScheduleTree {
public:
    ScheduleTree(const BenchmarkSpec& spec, const RacingConfig& cfg)
        : spec_(spec), cfg_(cfg), oracle_(spec, derive_seed(cfg.seed, "oracle")) {}

    AllSchedulesReport run() {
        const auto start = Clock::now();
        test_ = oracle_.sample_test(cfg_.test_rows);
        const std::size_t n = spec_.n_vars;
        for (std::uint32_t v = 0; v < n; ++v) {
            VarSet first = VarSet::all(n);
            first.erase(v);
            Branch b{{}, Schedule(first), Rng(derive_seed(cfg_.seed, "cvgp-all/" + Schedule(first).to_string())), {}, 0.0, 0};
            measure(b, [&] {
                for (std::size_t j = 0; j < cfg_.pool; ++j) {
                    b.pool.push_back(
                        {random_tree(VarSet{v}, spec_.op_set, cfg_.init_depth, n, b.rng), {}, Schedule(first), first});
                }
                const GpConfig init = gp_config(cfg_, cfg_.init_generations);
                refit(b.pool, oracle_, init, b.rng, &b.stats);
                HallOfFame scratch(cfg_.hof);
                gp_run(b.pool, oracle_, spec_.op_set, init, scratch, b.rng, &b.stats);
            });
            walk(std::move(b));
        }
        out_.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
        return std::move(out_);
    }

private:
    template <class F>
    void measure(Branch& b, F&& work) {
        const auto t0 = Clock::now();
        const auto rows0 = oracle_.rows_served();
        const auto gens0 = b.stats.generations;
        work();
        b.seconds += std::chrono::duration<double>(Clock::now() - t0).count();
        b.rows += oracle_.rows_served() - rows0;
        out_.generations += b.stats.generations - gens0;
    }

    void walk(Branch b) {
        HallOfFame hof(cfg_.hof);
        measure(b, [&] { hof = run_round(b.pool, oracle_, spec_.op_set, cfg_, cfg_.generations, b.rng, &b.stats); });
        hist_.push_back(histogram(b.pool));
        const VarSet control = b.schedule.current();
        if (control.empty()) {
            RunReport r;
            r.algo = "cvgp-all";
            r.wall_seconds = b.seconds;
            r.oracle_rows = b.rows;
            r.test_rows = test_.rows();
            r.optimize_calls = b.stats.optimize_calls;
            r.generations = b.stats.generations;
            r.schedule_histogram = hist_;
            r.training_hof = hof.entries();
            r.hof = rescore(hof.entries(), test_);
            r.test_outputs = test_.outputs;
            out_.runs.push_back(std::move(r));
            out_.schedules.push_back(b.schedule);
            hist_.pop_back();
            return;
        }
        measure(b, [&] {
            for (auto& e : b.pool) e = freeze_equation(std::move(e), cfg_);
        });
        for (auto v : control.members()) {
            VarSet next = control;
            next.erase(v);
            Branch child = b;
            child.schedule.append(next);
            child.rng = Rng(derive_seed(cfg_.seed, "cvgp-all/" + child.schedule.to_string()));
            for (auto& e : child.pool) {
                e.schedule.append(next);
                e.control_set = next;
                e.result = {};
            }
            walk(std::move(child));
        }
        hist_.pop_back();
    }

    const BenchmarkSpec& spec_;
    const RacingConfig& cfg_;
    Oracle oracle_;
    TrialBatch test_;
    std::vector<std::map<std::string, std::size_t>> hist_;
    AllSchedulesReport out_;
};

} // namespace

AllSchedulesReport cvgp_all_schedules(const BenchmarkSpec& spec, const RacingConfig& cfg) {
    spec.validate();
    cfg.validate();
    if (spec.n_vars > kMaxAllSchedulesVars) {
        throw std::invalid_argument("all-schedules search is capped at " + std::to_string(kMaxAllSchedulesVars) +
                                    " variables");
    }
    return ScheduleTree(spec, cfg).run();
}

} // namespace racing_sr

#include "racing_sr/oracle.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace racing_sr {

void BenchmarkSpec::validate() const {
    if (name.empty()) throw std::invalid_argument("benchmark name is empty");
    if (n_vars == 0 || n_vars > VarSet::kMaxVars) throw std::invalid_argument(name + ": bad n_vars");
    if (truth.n_vars() != n_vars) throw std::invalid_argument(name + ": truth variable count mismatch");
    if (count_open_constants(truth) != 0) throw std::invalid_argument(name + ": ground truth has open constants");
    if (!free_variables(truth).is_subset_of(VarSet::all(n_vars))) {
        throw std::invalid_argument(name + ": truth references unknown variables");
    }
    if (ranges.size() != n_vars) throw std::invalid_argument(name + ": need one range per variable");
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        if (!(ranges[i].lo < ranges[i].hi)) {
            throw std::invalid_argument(name + ": degenerate range for x" + std::to_string(i));
        }
    }
    if (!(noise_std >= 0.0)) throw std::invalid_argument(name + ": noise_std must be >= 0");
}

BenchmarkSpec make_benchmark(std::string name, std::size_t n_vars, std::string expression, std::string_view op_set,
                             std::vector<Interval> ranges, double noise_std) {
    auto truth = parse(expression, n_vars);
    BenchmarkSpec spec{std::move(name), n_vars,       std::move(expression), std::move(truth),
                       OperatorSet::parse(op_set), std::move(ranges), noise_std};
    spec.validate();
    return spec;
}

namespace {

std::string trim(std::string_view s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

double to_double(const std::string& s, const std::string& key) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw std::invalid_argument("bad number for " + key + ": " + s);
    return v;
}

} // namespace

BenchmarkSpec parse_benchmark(std::string_view text) {
    std::map<std::string, std::string> kv;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("line " + std::to_string(lineno) + ": missing '='");
        kv[trim(std::string_view(t).substr(0, eq))] = trim(std::string_view(t).substr(eq + 1));
    }
    auto need = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw std::invalid_argument("benchmark missing key '" + key + "'");
        return it->second;
    };
    const std::string& n_text = need("n_vars");
    std::size_t n_vars = 0;
    auto [p, ec] = std::from_chars(n_text.data(), n_text.data() + n_text.size(), n_vars);
    if (ec != std::errc() || p != n_text.data() + n_text.size()) throw std::invalid_argument("bad n_vars");
    std::vector<Interval> ranges;
    for (std::size_t i = 0; i < n_vars; ++i) {
        const std::string key = "range_" + std::to_string(i);
        const std::string& r = need(key);
        auto comma = r.find(',');
        if (comma == std::string::npos) throw std::invalid_argument(key + " must be lo,hi");
        ranges.push_back({to_double(trim(r.substr(0, comma)), key), to_double(trim(r.substr(comma + 1)), key)});
    }
    double noise = 0.0;
    if (auto it = kv.find("noise_std"); it != kv.end()) noise = to_double(it->second, "noise_std");
    return make_benchmark(need("name"), n_vars, need("expression"), need("op_set"), std::move(ranges), noise);
}

std::string format_benchmark(const BenchmarkSpec& spec) {
    std::ostringstream out;
    out << "name = " << spec.name << '\n';
    out << "n_vars = " << spec.n_vars << '\n';
    out << "expression = " << spec.expression << '\n';
    out << "op_set = " << spec.op_set.to_string() << '\n';
    for (std::size_t i = 0; i < spec.ranges.size(); ++i) {
        out << "range_" << i << " = " << format_double(spec.ranges[i].lo) << ',' << format_double(spec.ranges[i].hi)
            << '\n';
    }
    out << "noise_std = " << format_double(spec.noise_std) << '\n';
    return out.str();
}

BenchmarkSpec load_benchmark(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open benchmark file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_benchmark(ss.str());
}

// ---------------------------------------------------------------------------

Oracle::Oracle(BenchmarkSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)), train_rng_(derive_seed(seed, "oracle/train")), test_rng_(derive_seed(seed, "oracle/test")) {
    spec_.validate();
}

TrialBatch Oracle::draw(VarSet control_set, std::size_t rows, Rng& rng) {
    const std::size_t n = spec_.n_vars;
    TrialBatch batch;
    batch.control_set = control_set;
    batch.inputs = Matrix(rows, n);
    batch.outputs.resize(rows);

    std::vector<double> fixed(n, 0.0);
    for (auto v : control_set.members()) {
        std::uniform_real_distribution<double> u(spec_.ranges[v].lo, spec_.ranges[v].hi);
        fixed[v] = u(rng);
        batch.control_values.push_back(fixed[v]);
    }
    auto fill_row = [&](std::size_t r) {
        for (std::size_t v = 0; v < n; ++v) {
            if (control_set.contains(static_cast<std::uint32_t>(v))) {
                batch.inputs(r, v) = fixed[v];
            } else {
                std::uniform_real_distribution<double> u(spec_.ranges[v].lo, spec_.ranges[v].hi);
                batch.inputs(r, v) = u(rng);
            }
        }
    };
    for (std::size_t r = 0; r < rows; ++r) fill_row(r);

    BatchEvaluator truth(spec_.truth, batch.inputs);
    auto y = truth.evaluate({});
    std::copy(y.begin(), y.end(), batch.outputs.begin());

    // Some benchmark definitions leave the real domain on part of their input
    // box. Such rows get their free variables redrawn a bounded number of times.
    constexpr int kMaxRedraws = 64;
    for (std::size_t r = 0; r < rows; ++r) {
        for (int attempt = 0; attempt < kMaxRedraws && !std::isfinite(batch.outputs[r]); ++attempt) {
            fill_row(r);
            Matrix one(1, n);
            for (std::size_t v = 0; v < n; ++v) one(0, v) = batch.inputs(r, v);
            BatchEvaluator single(spec_.truth, one);
            batch.outputs[r] = single.evaluate({})[0];
        }
    }

    if (spec_.noise_std > 0.0) {
        std::normal_distribution<double> noise(0.0, spec_.noise_std);
        for (auto& v : batch.outputs) v += noise(rng);
    }
    return batch;
}

std::vector<TrialBatch> Oracle::sample(VarSet control_set, std::size_t trials, std::size_t rows) {
    if (!control_set.is_subset_of(VarSet::all(spec_.n_vars))) {
        throw std::invalid_argument("control set references unknown variables");
    }
    if (trials == 0 || rows == 0) throw std::invalid_argument("sample needs trials >= 1 and rows >= 1");
    std::vector<TrialBatch> out;
    out.reserve(trials);
    std::lock_guard lock(mutex_);
    for (std::size_t k = 0; k < trials; ++k) out.push_back(draw(control_set, rows, train_rng_));
    rows_served_ += trials * rows;
    return out;
}

TrialBatch Oracle::sample_test(std::size_t rows) {
    if (rows == 0) throw std::invalid_argument("sample_test needs rows >= 1");
    std::lock_guard lock(mutex_);
    auto batch = draw(VarSet{}, rows, test_rng_);
    test_rows_served_ += rows;
    return batch;
}

} // namespace racing_sr

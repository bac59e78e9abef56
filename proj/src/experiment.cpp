#include "fks/experiment.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "fks/meshgen.hpp"
#include "fks/relu.hpp"

namespace fks {

namespace {

template <class Enum>
struct NamedValue {
    const char* name;
    Enum value;
};

constexpr NamedValue<PipelineKind> kPipelines[] = {
    {"standard", PipelineKind::standard},
    {"two_level", PipelineKind::two_level},
    {"combined", PipelineKind::combined},
    {"preconditioned", PipelineKind::preconditioned},
    {"interpolant_uniform", PipelineKind::interpolant_uniform},
    {"interpolant_optimal", PipelineKind::interpolant_optimal},
    {"least_squares_uniform", PipelineKind::least_squares_uniform},
};
constexpr NamedValue<Representation> kRepresentations[] = {
    {"fks", Representation::fks},
    {"relu", Representation::relu},
};
constexpr NamedValue<InitKind> kInits[] = {
    {"uniform_interpolant", InitKind::uniform_interpolant},
    {"random", InitKind::random},
    {"random_constrained", InitKind::random_constrained},
};
constexpr NamedValue<StageTwoSolver> kStage2[] = {
    {"direct", StageTwoSolver::direct},
    {"adam", StageTwoSolver::adam},
};

template <class Enum, std::size_t K>
std::string name_of(const NamedValue<Enum> (&table)[K], Enum v) {
    for (const auto& e : table)
        if (e.value == v) return e.name;
    return "unknown";
}

template <class Enum, std::size_t K>
Enum parse_named(const NamedValue<Enum> (&table)[K], const std::string& s, const char* what) {
    for (const auto& e : table)
        if (s == e.name) return e.value;
    std::string options;
    for (const auto& e : table) options += std::string(options.empty() ? "" : ", ") + e.name;
    throw ConfigError(std::string("unknown ") + what + " '" + s + "' (expected one of: " + options + ")");
}

double parse_real(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("setting '" + key + "': '" + v + "' is not a finite number");
    }
}

std::size_t parse_count(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        if (!v.empty() && v.front() == '-') throw std::invalid_argument(v);
        const unsigned long long x = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return static_cast<std::size_t>(x);
    } catch (const std::exception&) {
        throw ConfigError("setting '" + key + "': '" + v + "' is not a non-negative integer");
    }
}

std::vector<std::size_t> parse_count_list(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }),
                   item.end());
        if (!item.empty()) out.push_back(parse_count(key, item));
    }
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Runs fn(i) for i in [0, count) on `jobs` threads; rethrows the first
// failure in index order.
template <class Result, class Fn>
std::vector<Result> parallel_map(std::size_t count, std::size_t jobs, Fn fn) {
    std::vector<std::optional<Result>> results(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                results[i].emplace(fn(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, count));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<Result> out;
    out.reserve(count);
    for (auto& r : results) out.push_back(std::move(*r));
    return out;
}

const TargetFunction& target_or_config_error(const std::string& id) {
    try {
        return find_target(id);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

ReluModel initial_relu(const ExperimentConfig& cfg, const TargetFunction& u, std::size_t n) {
    if (cfg.init == InitKind::uniform_interpolant) return fks_to_relu(interpolating_fks(KnotVector::uniform(n), u));
    std::mt19937_64 rng(cfg.adam.seed);
    const auto raw = random_shallow_net(n - 2, rng, cfg.init == InitKind::random_constrained);
    return relu_from_raw(raw);
}

KnotVector optimal_mesh(const ExperimentConfig& cfg, const TargetFunction& u, std::size_t n) {
    if (cfg.epsilon_sq) return optimal_knots_ode(u, *cfg.epsilon_sq, n);
    return optimal_knots(u, n);
}

TwoLevelOptions two_level_options(const ExperimentConfig& cfg) {
    TwoLevelOptions opt;
    opt.stage1_fraction = cfg.stage1_fraction;
    opt.stage2 = cfg.stage2;
    opt.stage1_beta = cfg.beta.value_or(kTwoLevelBeta);
    return opt;
}

RunResult from_model(std::size_t n, const FksModel& m, const TargetFunction& u, const LossConfig& lc) {
    RunResult r;
    r.n = n;
    r.final_loss = loss_l2(m, u, lc.grid);
    r.knots.assign(m.knots.values().begin(), m.knots.values().end());
    r.fks.emplace(m);
    return r;
}

// Reports the plain L2 loss so that combined runs compare with the rest.
RunResult from_report(std::size_t n, TrainReport report, const TargetFunction& u, const LossConfig& lc) {
    RunResult r;
    r.n = n;
    r.final_loss = report.fks ? loss_l2(*report.fks, u, lc.grid) : loss_l2(*report.relu, u, lc.grid);
    r.wall_time = report.wall_time;
    const auto& k = report.knots();
    r.knots.assign(k.values().begin(), k.values().end());
    if (report.fks) r.fks.emplace(*report.fks);
    if (report.relu) r.relu.emplace(*report.relu);
    r.report.emplace(std::move(report));
    return r;
}

}  // namespace

std::string to_string(PipelineKind p) { return name_of(kPipelines, p); }
std::string to_string(Representation r) { return name_of(kRepresentations, r); }
std::string to_string(InitKind i) { return name_of(kInits, i); }
PipelineKind parse_pipeline(const std::string& s) { return parse_named(kPipelines, s, "pipeline"); }
Representation parse_representation(const std::string& s) {
    return parse_named(kRepresentations, s, "representation");
}
InitKind parse_init(const std::string& s) { return parse_named(kInits, s, "init"); }
StageTwoSolver parse_stage2(const std::string& s) { return parse_named(kStage2, s, "stage-two solver"); }

void ExperimentConfig::validate() const {
    target_or_config_error(target_id);
    if (n_list.empty()) throw ConfigError("the N list is empty");
    for (std::size_t n : n_list)
        if (n < 2) throw ConfigError("every N must be at least 2 (got " + std::to_string(n) + ")");
    if (quad_points < 2) throw ConfigError("quad-points must be at least 2");
    // Fewer than four samples per knot leaves cells without quadrature support.
    for (std::size_t n : n_list)
        if (quad_points < 4 * n)
            throw ConfigError("quad-points must be at least 4N (got " + std::to_string(quad_points) + " for N=" +
                              std::to_string(n) + ")");
    if (jobs == 0) throw ConfigError("jobs must be positive");
    if (beta && !(*beta >= 0.0)) throw ConfigError("beta must be >= 0");
    if (epsilon_sq && !(*epsilon_sq >= 0.0)) throw ConfigError("eps2 must be >= 0");
    if (!(stage1_fraction > 0.0 && stage1_fraction <= 1.0)) throw ConfigError("stage1-fraction must lie in (0,1]");
    try {
        adam.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const bool trained = pipeline == PipelineKind::standard || pipeline == PipelineKind::two_level ||
                         pipeline == PipelineKind::combined || pipeline == PipelineKind::preconditioned;
    if (representation == Representation::relu && pipeline != PipelineKind::standard &&
        pipeline != PipelineKind::preconditioned)
        throw ConfigError("the relu representation supports the standard and preconditioned pipelines only");
    if (init != InitKind::uniform_interpolant &&
        !(trained && (representation == Representation::relu || pipeline == PipelineKind::preconditioned)))
        throw ConfigError("random initialisation applies to ReLU training runs only");
    if (init != InitKind::uniform_interpolant)
        for (std::size_t n : n_list)
            if (n < 3) throw ConfigError("random ReLU initialisation needs N >= 3");
}

LossConfig ExperimentConfig::loss_config(std::size_t n) const {
    (void)n;
    const auto& u = target_or_config_error(target_id);
    LossConfig lc = LossConfig::for_target(u, 0.0, quad_points);
    if (epsilon_sq) lc.epsilon_sq = *epsilon_sq;
    if (resample) {
        std::mt19937_64 rng(adam.seed);
        lc.grid = QuadratureGrid::resampled(quad_points, rng);
    }
    switch (pipeline) {
        case PipelineKind::combined: lc.beta = beta.value_or(kCombinedBeta); break;
        case PipelineKind::standard: lc.beta = 0.0; break;
        default: lc.beta = 0.0; break;
    }
    return lc;
}

void apply_settings(ExperimentConfig& cfg, const std::map<std::string, std::string>& settings) {
    for (const auto& [key, value] : settings) {
        if (key == "target") cfg.target_id = value;
        else if (key == "pipeline") cfg.pipeline = parse_pipeline(value);
        else if (key == "representation") cfg.representation = parse_representation(value);
        else if (key == "init") cfg.init = parse_init(value);
        else if (key == "n") cfg.n_list = {parse_count(key, value)};
        else if (key == "n-list") cfg.n_list = parse_count_list(key, value);
        else if (key == "beta") cfg.beta = parse_real(key, value);
        else if (key == "eps2") cfg.epsilon_sq = parse_real(key, value);
        else if (key == "iters") cfg.adam.max_iters = parse_count(key, value);
        else if (key == "lr") cfg.adam.learning_rate = parse_real(key, value);
        else if (key == "seed") cfg.adam.seed = parse_count(key, value);
        else if (key == "log-every") cfg.adam.log_every = parse_count(key, value);
        else if (key == "quad-points") cfg.quad_points = parse_count(key, value);
        else if (key == "resample") cfg.resample = value == "true" || value == "1";
        else if (key == "stage2") cfg.stage2 = parse_stage2(value);
        else if (key == "stage1-fraction") cfg.stage1_fraction = parse_real(key, value);
        else if (key == "jobs") cfg.jobs = parse_count(key, value);
        else if (key == "out") cfg.output_dir = value;
        else throw ConfigError("unknown setting '" + key + "'");
    }
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        auto key = trim(line.substr(0, eq));
        if (key.rfind("--", 0) == 0) key.erase(0, 2);
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

RunResult run_single(const ExperimentConfig& cfg, std::size_t n) {
    const auto& u = target_or_config_error(cfg.target_id);
    const LossConfig lc = cfg.loss_config(n);
    const KnotVector uniform = KnotVector::uniform(n);
    switch (cfg.pipeline) {
        case PipelineKind::interpolant_uniform: return from_model(n, interpolating_fks(uniform, u), u, lc);
        case PipelineKind::interpolant_optimal:
            return from_model(n, interpolating_fks(optimal_mesh(cfg, u, n), u), u, lc);
        case PipelineKind::least_squares_uniform:
            return from_model(n, solve_fixed_knot_least_squares(uniform, u, lc.grid), u, lc);
        case PipelineKind::standard:
            if (cfg.representation == Representation::relu)
                return from_report(n, train_standard(initial_relu(cfg, u, n), u, lc, cfg.adam), u, lc);
            return from_report(n, train_standard(interpolating_fks(uniform, u), u, lc, cfg.adam), u, lc);
        case PipelineKind::combined:
            return from_report(n, train_combined(interpolating_fks(uniform, u), u, lc, cfg.adam), u, lc);
        case PipelineKind::two_level:
            return from_report(n, train_two_level(interpolating_fks(uniform, u), u, lc, cfg.adam,
                                                  two_level_options(cfg)), u, lc);
        case PipelineKind::preconditioned:
            return from_report(n, train_relu_preconditioned(initial_relu(cfg, u, n), u, lc, cfg.adam,
                                                            two_level_options(cfg)), u, lc);
    }
    throw ConfigError("unhandled pipeline");
}

std::vector<RunResult> run_many(const ExperimentConfig& cfg) {
    cfg.validate();
    return parallel_map<RunResult>(cfg.n_list.size(), cfg.jobs,
                                   [&](std::size_t i) { return run_single(cfg, cfg.n_list[i]); });
}

double loglog_slope(const std::vector<std::size_t>& ns, const std::vector<double>& losses) {
    if (ns.size() != losses.size() || ns.size() < 2) throw std::invalid_argument("slope fit needs >= 2 points");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double m = static_cast<double>(ns.size());
    for (std::size_t i = 0; i < ns.size(); ++i) {
        if (!(losses[i] > 0.0)) throw std::invalid_argument("slope fit needs positive losses");
        const double x = std::log(static_cast<double>(ns[i]));
        const double y = std::log(losses[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = m * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("slope fit needs distinct N values");
    return (m * sxy - sx * sy) / denom;
}

std::vector<SweepRow> sweep(const ExperimentConfig& cfg) {
    if (cfg.n_list.size() < 3) throw ConfigError("a sweep needs at least 3 N values");
    const auto results = run_many(cfg);
    std::vector<SweepRow> rows;
    for (const auto& r : results) rows.push_back({r.n, r.final_loss, std::nullopt, r.wall_time});

    // Window of the largest four N, independent of the listed order.
    std::vector<std::size_t> order(rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rows[a].n > rows[b].n; });
    order.resize(std::min<std::size_t>(4, order.size()));
    std::vector<std::size_t> ns;
    std::vector<double> ls;
    for (std::size_t i : order) {
        ns.push_back(rows[i].n);
        ls.push_back(rows[i].loss);
    }
    const double slope = loglog_slope(ns, ls);
    for (std::size_t i : order) rows[i].slope = slope;
    return rows;
}

double table1_reference(char row, std::size_t n) {
    static const std::map<char, std::array<double, 3>> values = {
        {'a', {2.18e-5, 3.99e-6, 7.47e-7}},  {'b', {3.41e-6, 1.64e-6, 5.24e-7}},
        {'c', {3.45e-7, 1.90e-8, 1.13e-9}},  {'d', {8.91e-7, 1.39e-7, 8.08e-8}},
        {'e', {5.42e-8, 3.17e-9, 1.56e-10}}, {'f', {7.48e-8, 3.00e-9, 5.52e-10}},
        {'g', {1.10e-7, 5.54e-9, 5.95e-10}},
    };
    const auto it = values.find(row);
    if (it == values.end()) throw std::invalid_argument(std::string("no table row '") + row + "'");
    switch (n) {
        case 16: return it->second[0];
        case 32: return it->second[1];
        case 64: return it->second[2];
        default: throw std::invalid_argument("table columns are N = 16, 32, 64");
    }
}

std::vector<Table1Cell> table1(const ExperimentConfig& cfg) {
    struct RowSpec {
        char row;
        const char* method;
    };
    static constexpr RowSpec rows[] = {
        {'a', "interpolant_uniform"}, {'b', "least_squares_uniform"}, {'c', "interpolant_optimal"},
        {'d', "fks_from_uniform"},    {'e', "fks_from_optimal"},      {'f', "two_level"},
        {'g', "combined"},
    };
    static constexpr std::size_t ns[] = {16, 32, 64};
    const auto& u = find_target("u3");
    const std::size_t count = std::size(rows) * std::size(ns);
    return parallel_map<Table1Cell>(count, cfg.jobs, [&](std::size_t idx) {
        const auto& spec = rows[idx / std::size(ns)];
        const std::size_t n = ns[idx % std::size(ns)];
        LossConfig lc = LossConfig::for_target(u, 0.0, cfg.quad_points);
        const KnotVector uniform = KnotVector::uniform(n);
        const KnotVector optimal = optimal_knots(u, n);
        double measured = 0.0;
        switch (spec.row) {
            case 'a': measured = loss_l2(interpolating_fks(uniform, u), u, lc.grid); break;
            case 'b': measured = loss_l2(solve_fixed_knot_least_squares(uniform, u, lc.grid), u, lc.grid); break;
            case 'c': measured = loss_l2(interpolating_fks(optimal, u), u, lc.grid); break;
            case 'd': measured = train_standard(interpolating_fks(uniform, u), u, lc, cfg.adam).final_loss(); break;
            case 'e': measured = train_standard(interpolating_fks(optimal, u), u, lc, cfg.adam).final_loss(); break;
            case 'f':
                measured = train_two_level(interpolating_fks(uniform, u), u, lc, cfg.adam).final_loss();
                break;
            case 'g':
                lc.beta = kCombinedBeta;
                measured = loss_l2(*train_combined(interpolating_fks(uniform, u), u, lc, cfg.adam).fks, u, lc.grid);
                break;
        }
        return Table1Cell{spec.row, spec.method, n, table1_reference(spec.row, n), measured};
    });
}

std::string format_real(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

void write_fks_csv(std::ostream& os, const FksModel& m) {
    os << "i,k,w\n";
    for (std::size_t i = 0; i < m.size(); ++i) os << i << ',' << format_real(m.knots[i]) << ',' << format_real(m.weights[i]) << '\n';
}

void write_relu_csv(std::ostream& os, const ReluModel& m) {
    os << "left_coef," << format_real(m.left_coef) << '\n';
    os << "i,k,c\n";
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double c = i < m.scalings.size() ? m.scalings[i] : 0.0;
        os << i << ',' << format_real(m.knots[i]) << ',' << format_real(c) << '\n';
    }
}

void write_loss_csv(std::ostream& os, const std::vector<std::size_t>& iters, const std::vector<double>& losses) {
    os << "iter,loss\n";
    for (std::size_t i = 0; i < iters.size(); ++i) os << iters[i] << ',' << format_real(losses[i]) << '\n';
}

void write_knots_csv(std::ostream& os, const std::vector<std::size_t>& iters,
                     const std::vector<std::vector<double>>& knots) {
    os << "iter";
    const std::size_t n = knots.empty() ? 0 : knots.front().size();
    for (std::size_t i = 0; i < n; ++i) os << ",k_" << i;
    os << '\n';
    for (std::size_t r = 0; r < iters.size(); ++r) {
        os << iters[r];
        for (double k : knots[r]) os << ',' << format_real(k);
        os << '\n';
    }
}

void write_mesh_csv(std::ostream& os, const std::vector<double>& knots) {
    os << "i,k\n";
    for (std::size_t i = 0; i < knots.size(); ++i) os << i << ',' << format_real(knots[i]) << '\n';
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "N,loss,slope\n";
    for (const auto& r : rows) {
        os << r.n << ',' << format_real(r.loss) << ',';
        if (r.slope) os << format_real(*r.slope);
        os << '\n';
    }
}

void write_table1_csv(std::ostream& os, const std::vector<Table1Cell>& cells) {
    os << "row,method,N,paper,measured\n";
    for (const auto& c : cells)
        os << c.row << ',' << c.method << ',' << c.n << ',' << format_real(c.paper) << ',' << format_real(c.measured)
           << '\n';
}

void write_conditioning_csv(std::ostream& os, const std::vector<ConditioningReport>& rows) {
    os << "N,kappa_M,kappa_T,kappa_MTinv,predicted\n";
    for (const auto& r : rows)
        os << r.n << ',' << format_real(r.kappa_M) << ',' << format_real(r.kappa_T) << ','
           << format_real(r.kappa_MTinv) << ',' << format_real(r.predicted_kappa_MTinv) << '\n';
}

}  // namespace fks

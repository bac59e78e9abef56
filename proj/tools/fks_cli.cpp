// Experiment runner: single runs, N sweeps, the u3 comparison table,
// conditioning reports and optimal meshes, all written as CSV.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fks/conditioning.hpp"
#include "fks/experiment.hpp"
#include "fks/meshgen.hpp"

namespace {

using fks::ConfigError;
using fks::ExperimentConfig;

constexpr std::size_t kTableQuadPoints = 20001;
const char* const kDefaultCondList = "8,16,32,64,128,256,512";

// Raw flag values keyed by setting name; parsing happens in apply_settings
// so flags and config files share one validation path.
struct FlagValues {
    std::map<std::string, std::optional<std::string>> values;
    std::string config_path;

    void add(CLI::App* app, const std::string& key, const std::string& help) {
        app->add_option("--" + key, values[key], help);
    }

    std::map<std::string, std::string> set_values() const {
        std::map<std::string, std::string> out;
        for (const auto& [k, v] : values)
            if (v) out[k] = *v;
        return out;
    }
};

void add_common(CLI::App* app, FlagValues& f) {
    app->add_option("--config", f.config_path, "flat key=value file; flags take precedence");
    f.add(app, "target", "target id (u1..u5)");
    f.add(app, "pipeline",
          "standard | two_level | combined | preconditioned | interpolant_uniform | interpolant_optimal | "
          "least_squares_uniform");
    f.add(app, "representation", "fks | relu");
    f.add(app, "init", "uniform_interpolant | random | random_constrained (ReLU runs)");
    f.add(app, "n", "knot count N");
    f.add(app, "n-list", "comma-separated knot counts");
    f.add(app, "beta", "equidistribution weight");
    f.add(app, "eps2", "monitor regulariser epsilon^2");
    f.add(app, "iters", "Adam iterations");
    f.add(app, "lr", "Adam learning rate");
    f.add(app, "seed", "random seed");
    f.add(app, "log-every", "record every k-th iteration");
    f.add(app, "quad-points", "quadrature points s");
    f.add(app, "resample", "true to redraw random quadrature points every iteration");
    f.add(app, "stage2", "direct | adam");
    f.add(app, "stage1-fraction", "share of the iterations given to the knot stage");
    f.add(app, "jobs", "worker threads");
    f.add(app, "out", "output directory");
}

ExperimentConfig build_config(const FlagValues& f, const std::map<std::string, std::string>& defaults) {
    ExperimentConfig cfg;
    cfg.jobs = std::max(1u, std::thread::hardware_concurrency());
    std::map<std::string, std::string> merged = defaults;
    if (!f.config_path.empty())
        for (const auto& [k, v] : fks::read_config_file(f.config_path)) merged[k] = v;
    for (const auto& [k, v] : f.set_values()) merged[k] = v;
    fks::apply_settings(cfg, merged);
    cfg.validate();
    return cfg;
}

std::filesystem::path prepare_out(const ExperimentConfig& cfg) {
    std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);
    return dir;
}

template <class Writer>
void write_file(const std::filesystem::path& path, Writer&& w) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    w(os);
}

std::string stem(const ExperimentConfig& cfg, std::size_t n) {
    return cfg.target_id + "_" + fks::to_string(cfg.pipeline) + "_N" + std::to_string(n);
}

int cmd_run(const ExperimentConfig& cfg) {
    if (cfg.n_list.size() != 1) throw ConfigError("run takes a single --n");
    const auto dir = prepare_out(cfg);
    const std::size_t n = cfg.n_list.front();
    const auto r = fks::run_single(cfg, n);
    const auto base = dir / stem(cfg, n);

    std::vector<std::size_t> loss_iters{0};
    std::vector<double> losses{r.final_loss};
    std::vector<std::size_t> knot_iters{0};
    std::vector<std::vector<double>> knots{r.knots};
    if (r.report) {
        loss_iters = r.report->loss_iters;
        losses = r.report->loss_history;
        knot_iters = r.report->knot_iters;
        knots = r.report->knot_trajectory;
        if (r.report->projection_events > 0)
            std::cerr << "knot projection applied after " << r.report->projection_events << " step(s)\n";
    }
    write_file(base.string() + "_loss.csv", [&](std::ostream& os) { fks::write_loss_csv(os, loss_iters, losses); });
    write_file(base.string() + "_knots.csv", [&](std::ostream& os) { fks::write_knots_csv(os, knot_iters, knots); });
    write_file(base.string() + "_model.csv", [&](std::ostream& os) {
        if (r.relu) fks::write_relu_csv(os, *r.relu);
        else fks::write_fks_csv(os, *r.fks);
    });
    std::cout << "target=" << cfg.target_id << " pipeline=" << fks::to_string(cfg.pipeline) << " N=" << n
              << " loss=" << fks::format_real(r.final_loss) << " wall=" << r.wall_time << "s\n";
    return 0;
}

int cmd_sweep(const ExperimentConfig& cfg) {
    const auto dir = prepare_out(cfg);
    const auto rows = fks::sweep(cfg);
    const auto path = dir / ("sweep_" + cfg.target_id + "_" + fks::to_string(cfg.pipeline) + ".csv");
    write_file(path, [&](std::ostream& os) { fks::write_sweep_csv(os, rows); });
    for (const auto& r : rows)
        std::cout << "N=" << r.n << " loss=" << fks::format_real(r.loss) << " wall=" << r.wall_time << "s\n";
    for (const auto& r : rows)
        if (r.slope) {
            std::cout << "slope=" << fks::format_real(*r.slope) << '\n';
            break;
        }
    return 0;
}

int cmd_table1(const ExperimentConfig& cfg) {
    const auto dir = prepare_out(cfg);
    const auto cells = fks::table1(cfg);
    write_file(dir / "table1.csv", [&](std::ostream& os) { fks::write_table1_csv(os, cells); });
    for (const auto& c : cells)
        std::cout << '(' << c.row << ") " << c.method << " N=" << c.n << " paper=" << c.paper
                  << " measured=" << c.measured << '\n';
    return 0;
}

int cmd_cond(const ExperimentConfig& cfg) {
    for (std::size_t n : cfg.n_list)
        if (n < 3 || n > fks::kMaxConditioningN)
            throw ConfigError("cond needs 3 <= N <= " + std::to_string(fks::kMaxConditioningN));
    const auto dir = prepare_out(cfg);
    std::vector<fks::ConditioningReport> uniform;
    std::vector<fks::ConditioningReport> graded;
    for (std::size_t n : cfg.n_list) {
        uniform.push_back(fks::numeric_report(fks::KnotVector::uniform(n)));
        std::vector<double> k(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / static_cast<double>(n - 1);
            k[i] = t * t;
        }
        graded.push_back(fks::numeric_report(fks::KnotVector(std::move(k))));
    }
    write_file(dir / "cond.csv", [&](std::ostream& os) { fks::write_conditioning_csv(os, uniform); });
    write_file(dir / "cond_graded.csv", [&](std::ostream& os) { fks::write_conditioning_csv(os, graded); });
    for (const auto& r : uniform)
        std::cout << "N=" << r.n << " kappa_M=" << r.kappa_M << " kappa_T=" << r.kappa_T
                  << " kappa_MTinv=" << r.kappa_MTinv << " predicted=" << r.predicted_kappa_MTinv << '\n';
    return 0;
}

int cmd_mesh(const ExperimentConfig& cfg) {
    const auto dir = prepare_out(cfg);
    const auto& u = fks::find_target(cfg.target_id);
    for (std::size_t n : cfg.n_list) {
        const auto kv = cfg.epsilon_sq ? fks::optimal_knots_ode(u, *cfg.epsilon_sq, n) : fks::optimal_knots(u, n);
        const std::vector<double> k(kv.values().begin(), kv.values().end());
        const auto path = dir / ("mesh_" + cfg.target_id + "_N" + std::to_string(n) + ".csv");
        write_file(path, [&](std::ostream& os) { fks::write_mesh_csv(os, k); });
        std::cout << "N=" << n << " written to " << path.string() << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Free-knot linear spline and shallow ReLU experiments"};
    app.require_subcommand(1);
    FlagValues run_f, sweep_f, table_f, cond_f, mesh_f;
    auto* run = app.add_subcommand("run", "one (target, pipeline, N) run");
    auto* sweep = app.add_subcommand("sweep", "convergence sweep over --n-list with a log-log slope");
    auto* table = app.add_subcommand("table1", "u3 comparison table of all approximants");
    auto* cond = app.add_subcommand("cond", "condition numbers of M, T and M T^-1");
    auto* mesh = app.add_subcommand("mesh", "optimal knots from the equidistribution ODE");
    add_common(run, run_f);
    add_common(sweep, sweep_f);
    add_common(table, table_f);
    add_common(cond, cond_f);
    add_common(mesh, mesh_f);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (run->parsed()) return cmd_run(build_config(run_f, {}));
        if (sweep->parsed()) return cmd_sweep(build_config(sweep_f, {}));
        if (table->parsed()) return cmd_table1(build_config(table_f, {{"quad-points", std::to_string(kTableQuadPoints)}}));
        if (cond->parsed()) return cmd_cond(build_config(cond_f, {{"n-list", kDefaultCondList}}));
        if (mesh->parsed()) return cmd_mesh(build_config(mesh_f, {}));
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const fks::DegenerateSystemError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const fks::TrainingAbort& e) {
        std::cerr << "training aborted at iteration " << e.iteration << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

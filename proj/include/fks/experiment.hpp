#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fks/adam.hpp"
#include "fks/conditioning.hpp"
#include "fks/losses.hpp"
#include "fks/training.hpp"

namespace fks {

enum class Representation { fks, relu };

enum class PipelineKind {
    standard,
    two_level,
    combined,
    preconditioned,
    interpolant_uniform,
    interpolant_optimal,
    least_squares_uniform,
};

/// Starting point for trained pipelines. The random variants build a width
/// N-2 shallow network and only apply to ReLU runs.
enum class InitKind { uniform_interpolant, random, random_constrained };

std::string to_string(PipelineKind p);
std::string to_string(Representation r);
std::string to_string(InitKind i);
PipelineKind parse_pipeline(const std::string& s);
Representation parse_representation(const std::string& s);
InitKind parse_init(const std::string& s);
StageTwoSolver parse_stage2(const std::string& s);

/// Invalid experiment settings; the CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
    std::string target_id = "u3";
    Representation representation = Representation::fks;
    PipelineKind pipeline = PipelineKind::two_level;
    InitKind init = InitKind::uniform_interpolant;
    std::vector<std::size_t> n_list{16};
    AdamConfig adam;
    /// Unset means the pipeline default: 0 for standard, kCombinedBeta for
    /// combined, kTwoLevelBeta for the knot stage of two_level/preconditioned.
    std::optional<double> beta;
    /// Unset means the target's recommended value (0.1 when it has none).
    std::optional<double> epsilon_sq;
    std::size_t quad_points = QuadratureGrid::kDefaultSize;
    bool resample = false;
    StageTwoSolver stage2 = StageTwoSolver::direct;
    double stage1_fraction = 0.5;
    std::size_t jobs = 1;
    std::string output_dir = ".";

    /// Throws ConfigError on inconsistent settings or an unknown target.
    void validate() const;
    LossConfig loss_config(std::size_t n) const;
};

/// Applies flat key=value settings (flag names without the dashes) onto `cfg`.
/// Throws ConfigError for unknown keys or unparsable values.
void apply_settings(ExperimentConfig& cfg, const std::map<std::string, std::string>& settings);

/// Parses a key=value file; '#' starts a comment, blank lines are skipped.
std::map<std::string, std::string> read_config_file(const std::string& path);

struct RunResult {
    std::size_t n = 0;
    double final_loss = 0.0;
    double wall_time = 0.0;
    std::vector<double> knots;
    std::optional<TrainReport> report;
    std::optional<FksModel> fks;
    std::optional<ReluModel> relu;
};

/// One (target, pipeline, N) run.
RunResult run_single(const ExperimentConfig& cfg, std::size_t n);

/// Runs `n_list` on a pool of `jobs` workers; results come back in n_list order.
std::vector<RunResult> run_many(const ExperimentConfig& cfg);

/// Least-squares slope of log(loss) against log(N).
double loglog_slope(const std::vector<std::size_t>& ns, const std::vector<double>& losses);

struct SweepRow {
    std::size_t n;
    double loss;
    std::optional<double> slope;
    double wall_time;
};

/// Slope fitted over the largest four N (all of them when fewer); every row
/// in that window carries it.
std::vector<SweepRow> sweep(const ExperimentConfig& cfg);

struct Table1Cell {
    char row;
    std::string method;
    std::size_t n;
    double paper;
    double measured;
};

/// Loss values reported for the x^{2/3} comparison table, rows a..g, N = 16, 32, 64.
double table1_reference(char row, std::size_t n);

/// Reproduces the u3 comparison table with this library's pipelines.
/// `quad_points` and the Adam settings come from `cfg`; target and N are fixed.
std::vector<Table1Cell> table1(const ExperimentConfig& cfg);

// CSV writers; all numbers use 17 significant digits.
void write_fks_csv(std::ostream& os, const FksModel& m);
void write_relu_csv(std::ostream& os, const ReluModel& m);
void write_loss_csv(std::ostream& os, const std::vector<std::size_t>& iters, const std::vector<double>& losses);
void write_knots_csv(std::ostream& os, const std::vector<std::size_t>& iters,
                     const std::vector<std::vector<double>>& knots);
void write_mesh_csv(std::ostream& os, const std::vector<double>& knots);
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
void write_table1_csv(std::ostream& os, const std::vector<Table1Cell>& cells);
void write_conditioning_csv(std::ostream& os, const std::vector<ConditioningReport>& rows);

std::string format_real(double v);

}  // namespace fks

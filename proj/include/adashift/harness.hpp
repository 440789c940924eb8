#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "adashift/analysis.hpp"
#include "adashift/optimizer.hpp"
#include "adashift/problems.hpp"
#include "adashift/trajectory.hpp"

namespace adashift {

struct ExperimentSpec {
    std::shared_ptr<const OnlineProblem> problem;
    OptimizerConfig optimizer;
    std::optional<BlockPartition> partition;  // defaults to the problem's
    std::int64_t steps = 1000;
    std::vector<std::uint64_t> seeds = {1};
    std::int64_t record_every = 1;
    bool projection = false;
    std::optional<Vector> theta0;  // defaults to zeros

    void validate() const;
    BlockPartition effective_partition() const;
};

struct RunResult {
    Vector final_theta;
    Trajectory trajectory;
    std::optional<RegretResult> regret;
    std::chrono::duration<double> wall_time{0.0};
    std::optional<std::string> failure;  // set when the run aborted early
};

/// T optimizer steps against the problem stream; deterministic per seed.
RunResult run_online(const ExperimentSpec& spec, std::uint64_t seed);

/// Runs fn(0..n-1) on up to `threads` workers; output order is by index.
void parallel_for_indexed(std::int64_t n, int threads, const std::function<void(std::int64_t)>& fn);

struct SweepGrid {
    std::vector<double> beta1_values;
    std::vector<double> beta2_values;
    ExperimentSpec fixed;

    void validate() const;
};

struct SweepResult {
    Matrix final_theta;  // beta1 rows x beta2 cols, NaN for failed cells
    std::vector<std::string> cell_errors;
};

SweepResult run_sweep(const SweepGrid& grid, int threads = 1);

enum class CriticalMode { Sequential, Stochastic };

struct CriticalConditionResult {
    double beta1 = 0.0;
    double beta2 = 0.0;
    std::optional<double> C_closed_form;             // tied d = C fixed point
    std::optional<double> C_empirical;               // bisection threshold
    std::vector<std::pair<double, double>> S_samples;  // (C, approximate-mode S at d=round(C))
    std::string note;
};

/// Bisection on C of the steady-state displacement sign after `steps`
/// updates (first quarter skipped, epoch-aligned); sequential mode ties
/// d = round(C), stochastic mode fixes delta = 1.
CriticalConditionResult empirical_critical_C(double beta1, double beta2, CriticalMode mode,
                                             std::int64_t steps, std::uint64_t seed,
                                             double c_lo = 2.0, double c_hi = 400.0);

struct Theorem1Outcome {
    double beta1 = 0.0;
    std::int64_t correct_seeds = 0;
    std::int64_t total_seeds = 0;
    bool passed = false;
};

struct Theorem1Result {
    std::optional<double> smallest_passing_beta1;
    std::vector<Theorem1Outcome> outcomes;
};

/// Runs Adam per beta1 (ascending grid); a beta1 passes when the majority of
/// seeds end displaced along the problem's optimum direction.
Theorem1Result theorem1_check(const ExperimentSpec& adam_spec, const std::vector<double>& beta1_grid);

struct TrainingResult {
    Vector final_theta;
    std::vector<double> loss_curve;  // recorded minibatch/step losses
    double final_full_loss = 0.0;    // full-objective loss at final theta
    std::optional<std::string> failure;
};

/// Minibatch or full-batch training with divergence guard.
TrainingResult run_training(const ExperimentSpec& spec, std::uint64_t seed);

struct DecorrelationOutcome {
    std::string optimizer;
    CorrelationReport report;
};

/// Trains each optimizer on the task, harvests the weight-block gradient
/// stream over the last half of training and reports correlations.
std::vector<DecorrelationOutcome> decorrelation_experiment(
    const std::shared_ptr<const LogisticTask>& task,
    const std::vector<std::pair<std::string, OptimizerConfig>>& optimizers, std::int64_t steps,
    std::int64_t n_max, std::uint64_t seed);

}  // namespace adashift

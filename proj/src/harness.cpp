#include "adashift/harness.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

namespace adashift {

void ExperimentSpec::validate() const {
    if (!problem) throw ConfigError("ExperimentSpec: problem required");
    optimizer.validate();
    if (steps < 1) throw ConfigError("ExperimentSpec: steps >= 1");
    if (seeds.empty()) throw ConfigError("ExperimentSpec: seeds non-empty");
    if (record_every < 1 || record_every > steps)
        throw ConfigError("ExperimentSpec: record_every in [1, steps]");
    if (theta0 && theta0->size() != problem->dim())
        throw ConfigError("ExperimentSpec: theta0 dimension mismatch");
}

BlockPartition ExperimentSpec::effective_partition() const {
    return partition ? *partition : problem->default_partition();
}

RunResult run_online(const ExperimentSpec& spec, std::uint64_t seed) {
    spec.validate();
    const auto start = std::chrono::steady_clock::now();
    const OnlineProblem& problem = *spec.problem;
    const BlockPartition partition = spec.effective_partition();
    const Eigen::Index dim = problem.dim();

    Vector theta = spec.theta0 ? *spec.theta0 : Vector::Zero(dim);
    OptimizerState state = init_state(spec.optimizer, dim, partition);
    Rng rng = Rng::derive(seed, {0x011eu});

    RunResult result;
    result.trajectory.reserve(static_cast<std::size_t>(spec.steps / spec.record_every + 1));
    const auto box = problem.feasible();

    for (std::int64_t t = 1; t <= spec.steps; ++t) {
        const Draw draw = problem.draw(t, rng);
        const double loss = problem.loss(theta, t, draw);
        const Vector g = problem.gradient(theta, t, draw);
        const Vector theta_before = theta;
        const double alpha_t = spec.optimizer.alpha.at(t);
        try {
            run_step(spec.optimizer, partition, state, theta, g);
        } catch (const StepError& err) {
            result.failure = err.what();
            break;
        }
        if (spec.projection) {
            if (!box) throw ConfigError("run_online: projection requested without feasible interval");
            theta = project_feasible(theta, *box);
        }
        if (t % spec.record_every == 0 || t == spec.steps) {
            StepRecord rec;
            rec.t = t;
            rec.theta = theta;
            rec.g = g;
            rec.m = state.m;
            rec.v = broadcast_v(spec.optimizer, partition, state);
            rec.delta_theta = theta - theta_before;
            rec.loss = loss;
            rec.alpha = alpha_t;
            result.trajectory.push(std::move(rec));
        }
    }
    result.final_theta =
        result.trajectory.empty() ? theta : result.trajectory.back().theta;
    if (spec.projection && problem.linear_in_theta() && spec.record_every == 1 &&
        !result.trajectory.empty() && !result.failure)
        result.regret = regret(result.trajectory, problem);
    result.wall_time = std::chrono::steady_clock::now() - start;
    return result;
}

void parallel_for_indexed(std::int64_t n, int threads,
                          const std::function<void(std::int64_t)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    const int workers = static_cast<int>(std::min<std::int64_t>(threads, n));
    pool.reserve(static_cast<std::size_t>(workers));
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::int64_t i = next.fetch_add(1);
                if (i >= n || failed.load()) break;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    failed.store(true);
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

void SweepGrid::validate() const {
    fixed.validate();
    auto sorted = [](const std::vector<double>& v) {
        for (std::size_t i = 1; i < v.size(); ++i)
            if (!(v[i] > v[i - 1])) return false;
        return true;
    };
    if (beta1_values.empty() || beta2_values.empty())
        throw ConfigError("SweepGrid: grids must be non-empty");
    if (!sorted(beta1_values) || !sorted(beta2_values))
        throw ConfigError("SweepGrid: grids must be strictly sorted");
}

SweepResult run_sweep(const SweepGrid& grid, int threads) {
    grid.validate();
    const auto rows = static_cast<Eigen::Index>(grid.beta1_values.size());
    const auto cols = static_cast<Eigen::Index>(grid.beta2_values.size());
    SweepResult result;
    result.final_theta = Matrix::Constant(rows, cols, std::numeric_limits<double>::quiet_NaN());
    std::vector<std::string> errors(static_cast<std::size_t>(rows * cols));
    parallel_for_indexed(rows * cols, threads, [&](std::int64_t cell) {
        const Eigen::Index i = cell / cols;
        const Eigen::Index j = cell % cols;
        ExperimentSpec spec = grid.fixed;
        spec.optimizer.beta1 = grid.beta1_values[static_cast<std::size_t>(i)];
        spec.optimizer.beta2 = grid.beta2_values[static_cast<std::size_t>(j)];
        spec.record_every = spec.steps;
        try {
            // per-cell substream keyed on the cell index
            const RunResult run = run_online(spec, Rng::derive(spec.seeds.front(),
                                                               {static_cast<std::uint64_t>(cell)})
                                                 .next_u64());
            if (run.failure)
                errors[static_cast<std::size_t>(cell)] = *run.failure;
            else
                result.final_theta(i, j) = run.final_theta[0];
        } catch (const std::exception& err) {
            errors[static_cast<std::size_t>(cell)] = err.what();
        }
    });
    for (auto& e : errors)
        if (!e.empty()) result.cell_errors.push_back(std::move(e));
    return result;
}

namespace {

/// Steady-state displacement of Adam on a counterexample stream: the first
/// quarter of the run is treated as warm-up (aligned down to an epoch
/// boundary in sequential mode) and displacement is measured from there.
double critical_displacement(double beta1, double beta2, CriticalMode mode, double C,
                             std::int64_t steps, std::uint64_t seed) {
    std::shared_ptr<const OnlineProblem> problem;
    std::int64_t epoch = 1;
    if (mode == CriticalMode::Sequential) {
        epoch = std::max<std::int64_t>(1, std::llround(C));
        problem = std::make_shared<SequentialCounterexample>(C, epoch);
    } else {
        problem = std::make_shared<StochasticCounterexample>(C, 1.0);  // delta = 1
    }
    ExperimentSpec spec;
    spec.problem = problem;
    spec.optimizer.algorithm = Algorithm::Adam;
    spec.optimizer.alpha = AlphaSchedule::constant(1e-3);
    spec.optimizer.beta1 = beta1;
    spec.optimizer.beta2 = beta2;
    spec.steps = steps;
    spec.seeds = {seed};
    const RunResult run = run_online(spec, seed);
    std::int64_t mark = steps / 4;
    if (mode == CriticalMode::Sequential) mark -= mark % epoch;
    const double theta_mark = mark >= 1 ? run.trajectory.at_time(mark).theta[0] : 0.0;
    return run.final_theta[0] - theta_mark;
}

}  // namespace

CriticalConditionResult empirical_critical_C(double beta1, double beta2, CriticalMode mode,
                                             std::int64_t steps, std::uint64_t seed, double c_lo,
                                             double c_hi) {
    CriticalConditionResult result;
    result.beta1 = beta1;
    result.beta2 = beta2;
    result.C_closed_form = critical_C_tied(beta1, beta2);

    auto disp = [&](double C) { return critical_displacement(beta1, beta2, mode, C, steps, seed); };
    double lo = c_lo;
    double hi = c_hi;
    const double f_lo = disp(lo);
    const double f_hi = disp(hi);
    if (lo >= hi) {
        result.note = "degenerate bracket";
        return result;
    }
    if (!(f_lo < 0.0) || !(f_hi > 0.0)) {
        result.note = "no sign change on bracket [" + std::to_string(c_lo) + ", " +
                      std::to_string(c_hi) + "]";
        return result;
    }
    for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        (disp(mid) > 0.0 ? hi : lo) = mid;
    }
    result.C_empirical = 0.5 * (lo + hi);

    // sampled approximate-mode S along the tied d = round(C) curve
    const double c_max = 2.0 * *result.C_empirical;
    for (int i = 0; i < 25; ++i) {
        const double C = 2.0 + (c_max - 2.0) * static_cast<double>(i) / 24.0;
        const auto d = std::max<std::int64_t>(2, std::llround(C));
        result.S_samples.emplace_back(C, epoch_step_sum(beta1, beta2, C, d, SumMode::Approximate));
    }
    return result;
}

Theorem1Result theorem1_check(const ExperimentSpec& adam_spec,
                              const std::vector<double>& beta1_grid) {
    for (std::size_t i = 1; i < beta1_grid.size(); ++i)
        if (!(beta1_grid[i] > beta1_grid[i - 1]))
            throw ConfigError("theorem1_check: beta1 grid must be ascending");
    const auto direction = adam_spec.problem->optimum_direction();
    if (!direction) throw ConfigError("theorem1_check: problem lacks optimum_direction");
    Theorem1Result result;
    for (double b1 : beta1_grid) {
        ExperimentSpec spec = adam_spec;
        spec.optimizer.beta1 = b1;
        spec.record_every = spec.steps;
        Theorem1Outcome outcome;
        outcome.beta1 = b1;
        outcome.total_seeds = static_cast<std::int64_t>(spec.seeds.size());
        for (std::uint64_t seed : spec.seeds) {
            const RunResult run = run_online(spec, seed);
            const double displacement = run.final_theta[0];
            if (displacement * (*direction)[0] > 0.0) ++outcome.correct_seeds;
        }
        outcome.passed = 2 * outcome.correct_seeds > outcome.total_seeds;
        if (outcome.passed && !result.smallest_passing_beta1)
            result.smallest_passing_beta1 = b1;
        result.outcomes.push_back(outcome);
    }
    return result;
}

TrainingResult run_training(const ExperimentSpec& spec, std::uint64_t seed) {
    spec.validate();
    const OnlineProblem& problem = *spec.problem;
    const BlockPartition partition = spec.effective_partition();
    const Eigen::Index dim = problem.dim();
    Vector theta = spec.theta0 ? *spec.theta0 : Vector::Zero(dim);
    OptimizerState state = init_state(spec.optimizer, dim, partition);
    Rng rng = Rng::derive(seed, {0x7721u});
    TrainingResult result;
    result.loss_curve.reserve(static_cast<std::size_t>(spec.steps / spec.record_every + 1));

    double initial_loss = 0.0;
    for (std::int64_t t = 1; t <= spec.steps; ++t) {
        const Draw draw = problem.draw(t, rng);
        const double loss = problem.loss(theta, t, draw);
        if (t == 1) initial_loss = loss;
        // divergence guard, scaled so large-objective problems are not
        // rejected at their (finite) starting loss
        if (!std::isfinite(loss) || loss > std::max(1e6, 1e4 * std::abs(initial_loss))) {
            result.failure = "diverged at t=" + std::to_string(t) + " (loss=" +
                             std::to_string(loss) + ")";
            break;
        }
        const Vector g = problem.gradient(theta, t, draw);
        try {
            run_step(spec.optimizer, partition, state, theta, g);
        } catch (const StepError& err) {
            result.failure = err.what();
            break;
        }
        if (t % spec.record_every == 0 || t == spec.steps) result.loss_curve.push_back(loss);
    }
    result.final_theta = theta;
    result.final_full_loss = problem.loss(theta, spec.steps + 1, Draw{});
    if (const auto* logistic = dynamic_cast<const LogisticTask*>(&problem))
        result.final_full_loss = logistic->full_loss(theta);
    return result;
}

std::vector<DecorrelationOutcome> decorrelation_experiment(
    const std::shared_ptr<const LogisticTask>& task,
    const std::vector<std::pair<std::string, OptimizerConfig>>& optimizers, std::int64_t steps,
    std::int64_t n_max, std::uint64_t seed) {
    std::vector<DecorrelationOutcome> outcomes;
    const BlockPartition partition = task->default_partition();
    const Eigen::Index weight_dim = task->features().cols();
    for (const auto& [name, config] : optimizers) {
        Vector theta = Vector::Zero(task->dim());
        OptimizerState state = init_state(config, task->dim(), partition);
        Rng rng = Rng::derive(seed, {0xdec0u});
        const std::int64_t harvest_from = steps / 2;
        Trajectory harvested;
        for (std::int64_t t = 1; t <= steps; ++t) {
            const Draw draw = task->draw(t, rng);
            const Vector g = task->gradient(theta, t, draw);
            run_step(config, partition, state, theta, g);
            if (t > harvest_from) {
                StepRecord rec;
                rec.t = t;
                rec.theta = Vector();  // gradients and v only
                rec.g = g.head(weight_dim);
                rec.v = broadcast_v(config, partition, state).head(weight_dim);
                rec.m = Vector();
                rec.delta_theta = Vector();
                rec.alpha = config.alpha.at(t);
                harvested.push(std::move(rec));
            }
        }
        std::optional<std::int64_t> own_shift;
        if (config.algorithm == Algorithm::AdaShift) own_shift = config.shift_n;
        outcomes.push_back(
            {name, correlation_report(harvested, n_max, /*pair_samples=*/64, seed, own_shift)});
    }
    return outcomes;
}

}  // namespace adashift

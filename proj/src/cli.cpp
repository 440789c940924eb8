#include "adashift/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <vector>

#include "adashift/csv.hpp"
#include "adashift/harness.hpp"

namespace adashift {

namespace cli_detail {

std::string Settings::str(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double Settings::real(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t used = 0;
        const double v = std::stod(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument(it->second);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("setting '" + key + "': cannot parse real from '" + it->second + "'");
    }
}

long long Settings::integer(const std::string& key, long long fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t used = 0;
        const long long v = std::stoll(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument(it->second);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("setting '" + key + "': cannot parse integer from '" + it->second + "'");
    }
}

bool Settings::flag(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "off" || v == "no") return false;
    throw ConfigError("setting '" + key + "': cannot parse boolean from '" + v + "'");
}

}  // namespace cli_detail

namespace {

using cli_detail::Settings;
namespace fs = std::filesystem;

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        seeds.push_back(std::stoull(item));
    }
    if (seeds.empty()) throw ConfigError("empty seed list");
    return seeds;
}

std::vector<double> parse_real_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    if (out.empty()) throw ConfigError("empty value list");
    return out;
}

OptimizerConfig optimizer_from_settings(const Settings& s, std::int64_t steps) {
    OptimizerConfig cfg;
    cfg.algorithm = algorithm_from_string(s.str("optimizer", "adam"));
    cfg.beta1 = s.real("beta1", cfg.algorithm == Algorithm::AdaShift ? 0.9 : 0.9);
    cfg.beta2 = s.real("beta2", 0.999);
    cfg.epsilon = s.real("epsilon", 1e-8);
    cfg.shift_n = s.integer("n", 10);
    cfg.m_window = s.integer("m", 0);
    cfg.spatial = spatial_from_string(s.str("spatial", "max"));
    cfg.bias_correction = s.flag("bias_correction", true);
    const double alpha = s.real("alpha", 1e-3);
    const std::string schedule = s.str("schedule", "constant");
    if (schedule == "constant")
        cfg.alpha = AlphaSchedule::constant(alpha);
    else if (schedule == "linear")
        cfg.alpha = AlphaSchedule::linear_decay(alpha, s.real("decay_horizon",
                                                              static_cast<double>(steps)));
    else if (schedule == "exp")
        cfg.alpha = AlphaSchedule::exp_decay_over(alpha, s.real("decay_factor", 30.0),
                                                  s.real("decay_horizon",
                                                         static_cast<double>(steps)));
    else
        throw ConfigError("unknown schedule '" + schedule + "'");
    cfg.validate();
    return cfg;
}

void write_manifest(const fs::path& out_dir, const std::string& subcommand, const Settings& s) {
    CsvTable manifest({"key", "value"});
    manifest.add_row({"subcommand", subcommand});
    for (const auto& [k, v] : s.all()) manifest.add_row({k, v});
    manifest.write(out_dir / "manifest.csv");
}

// ---------------------------------------------------------------------------

int run_counterexample(const Settings& s, const fs::path& out) {
    const auto steps = s.integer("steps", 100000);
    const double C = s.real("C", 101.0);
    const double delta = s.real("delta", 0.02);
    const bool projection = s.flag("projection", false);
    ExperimentSpec spec;
    spec.problem = std::make_shared<StochasticCounterexample>(
        C, delta, projection ? std::optional<Interval>(Interval::symmetric(1, 1.0)) : std::nullopt);
    spec.optimizer = optimizer_from_settings(s, steps);
    spec.steps = steps;
    spec.projection = projection;
    spec.seeds = parse_seed_list(s.str("seeds", "1,2,3,4,5"));
    const auto record_every = s.integer("record_every", 0);
    spec.record_every = record_every > 0 ? record_every : steps;

    CsvTable results({"seed", "optimizer", "final_theta", "avg_regret"});
    for (std::uint64_t seed : spec.seeds) {
        const RunResult run = run_online(spec, seed);
        if (run.failure) throw IoError("run failed (seed " + std::to_string(seed) + "): " +
                                       *run.failure);
        results.add_row({std::to_string(seed), s.str("optimizer", "adam"),
                         format_double(run.final_theta[0]),
                         run.regret ? format_double(run.regret->average) : ""});
        if (record_every > 0) {
            CsvTable traj({"t", "theta", "g", "loss", "alpha"});
            for (std::size_t i = 0; i < run.trajectory.size(); ++i) {
                const auto& rec = run.trajectory[i];
                traj.add_row({std::to_string(rec.t), format_double(rec.theta[0]),
                              format_double(rec.g[0]), format_double(rec.loss),
                              format_double(rec.alpha)});
            }
            traj.write(out / ("traj-" + std::to_string(seed) + ".csv"));
        }
    }
    results.write(out / "results.csv");
    return 0;
}

int run_sweep_cmd(const Settings& s, const fs::path& out, int threads) {
    SweepGrid grid;
    grid.beta1_values = parse_real_list(s.str("beta1_grid", "0,0.3,0.5,0.7,0.9,0.99"));
    grid.beta2_values = parse_real_list(s.str("beta2_grid", "0.1,0.3,0.5,0.7,0.9,0.99"));
    const auto steps = s.integer("steps", 2000);
    const std::string problem = s.str("problem", "sequential");
    const double C = s.real("C", 6.0);
    if (problem == "sequential")
        grid.fixed.problem = std::make_shared<SequentialCounterexample>(C, s.integer("d", 6));
    else if (problem == "stochastic")
        grid.fixed.problem = std::make_shared<StochasticCounterexample>(C, s.real("delta", 1.0));
    else
        throw ConfigError("sweep: problem must be sequential|stochastic");
    grid.fixed.optimizer = optimizer_from_settings(s, steps);
    grid.fixed.steps = steps;
    grid.fixed.seeds = {static_cast<std::uint64_t>(s.integer("seed", 12345))};
    const SweepResult result = run_sweep(grid, threads);

    CsvTable matrix({"beta1", "beta2", "final_theta"});
    for (Eigen::Index i = 0; i < result.final_theta.rows(); ++i)
        for (Eigen::Index j = 0; j < result.final_theta.cols(); ++j) {
            matrix.add_row({format_double(grid.beta1_values[static_cast<std::size_t>(i)]),
                            format_double(grid.beta2_values[static_cast<std::size_t>(j)]),
                            format_double(result.final_theta(i, j))});
            CsvTable cell({"beta1", "beta2", "final_theta"});
            cell.add_row({format_double(grid.beta1_values[static_cast<std::size_t>(i)]),
                          format_double(grid.beta2_values[static_cast<std::size_t>(j)]),
                          format_double(result.final_theta(i, j))});
            cell.write(out / ("cell-" + std::to_string(i * result.final_theta.cols() + j) + ".csv"));
        }
    matrix.write(out / "matrix.csv");
    if (!result.cell_errors.empty()) {
        CsvTable errors({"error"});
        for (const auto& e : result.cell_errors) errors.add_row({e});
        errors.write(out / "cell_errors.csv");
    }
    return 0;
}

int run_critical(const Settings& s, const fs::path& out) {
    const double beta1 = s.real("beta1", 0.9);
    const double beta2 = s.real("beta2", 0.99);
    const auto steps = s.integer("steps", 2000);
    const auto mode = s.str("mode", "sequential") == "stochastic" ? CriticalMode::Stochastic
                                                                  : CriticalMode::Sequential;
    const auto seed = static_cast<std::uint64_t>(s.integer("seed", 12345));
    const CriticalConditionResult res = empirical_critical_C(beta1, beta2, mode, steps, seed);

    CsvTable table({"beta1", "beta2", "C_closed_form_tied", "C_closed_form_fixed_d", "C_empirical",
                    "rel_error", "note"});
    std::string fixed_d;
    if (s.has("d")) {
        const auto cc = critical_C(beta1, beta2, s.real("d", 0.0));
        fixed_d = format_double(cc.value) + (cc.valid ? "" : " (no valid critical C)");
    }
    std::string rel;
    if (res.C_closed_form && res.C_empirical)
        rel = format_double(std::abs(*res.C_empirical - *res.C_closed_form) / *res.C_closed_form);
    table.add_row({format_double(beta1), format_double(beta2),
                   res.C_closed_form ? format_double(*res.C_closed_form) : "",
                   fixed_d, res.C_empirical ? format_double(*res.C_empirical) : "", rel, res.note});
    table.write(out / "critical.csv");

    CsvTable samples({"C", "S_approximate"});
    for (const auto& [c, sval] : res.S_samples)
        samples.add_row({format_double(c), format_double(sval)});
    samples.write(out / "s_samples.csv");
    return res.C_empirical || res.note.empty() ? 0 : 1;
}

int run_lemma(const Settings& s, const fs::path& out) {
    const std::string which = s.str("which", "v-limit");
    if (which == "v-limit" || which == "m-limit") {
        const bool is_v = which == "v-limit";
        const double beta = s.real(is_v ? "beta2" : "beta1", 0.9);
        const double C = s.real("C", 6.0);
        const auto d = s.integer("d", 6);
        const auto epochs = s.integer("epochs", 2000);
        double m = 0.0;
        double v = 0.0;
        Vector m_last(d), v_last(d);
        for (std::int64_t n = 0; n < epochs; ++n)
            for (std::int64_t i = 1; i <= d; ++i) {
                const double g = sequential_gradient(C, d, i);
                m = beta * m + (1.0 - beta) * g;
                v = beta * v + (1.0 - beta) * g * g;
                if (n == epochs - 1) {
                    m_last[i - 1] = m;
                    v_last[i - 1] = v;
                }
            }
        CsvTable table({"i", "closed_form", "simulated", "rel_error"});
        double max_rel = 0.0;
        for (std::int64_t i = 1; i <= d; ++i) {
            const double closed = is_v ? v_limit_closed_form(beta, C, d, i)
                                       : m_limit_closed_form(beta, C, d, i);
            const double sim = is_v ? v_last[i - 1] : m_last[i - 1];
            const double rel = std::abs(closed - sim) / std::max(1e-300, std::abs(closed));
            max_rel = std::max(max_rel, rel);
            table.add_row({std::to_string(i), format_double(closed), format_double(sim),
                           format_double(rel)});
        }
        table.write(out / (which + ".csv"));
        std::cout << which << " max relative error: " << format_double(max_rel) << "\n";
        return 0;
    }
    if (which == "ordering") {  // Lemma 3
        const double C = s.real("C", 101.0);
        const double delta = s.real("delta", 0.02);
        const double beta1 = s.real("beta1", 0.0);
        const double beta2 = s.real("beta2", 0.999);
        const auto runs = s.integer("runs", 10000);
        const auto seed = static_cast<std::uint64_t>(s.integer("seed", 12345));
        const auto horizon = default_horizon(beta1);
        CsvTable table({"g_value", "mc_mean", "mc_std_error", "second_order"});
        for (double g : {C, -1.0}) {
            const auto mc = monte_carlo_expected_k(C, delta, beta1, beta2, g, horizon, runs, seed);
            table.add_row({format_double(g), format_double(mc.mean), format_double(mc.std_error),
                           format_double(expected_k_second_order(C, delta, beta1, beta2, g,
                                                                 horizon))});
        }
        table.write(out / "ordering.csv");
        return 0;
    }
    if (which == "shape") {  // Lemma 2
        const double beta1 = s.real("beta1", 0.9);
        const double beta2 = s.real("beta2", 0.99);
        const double C = s.real("C", 6.0);
        const auto d = s.integer("d", 6);
        const auto epochs = s.integer("epochs", 2000);
        const auto horizon = default_horizon(beta1);
        ExperimentSpec spec;
        spec.problem = std::make_shared<SequentialCounterexample>(C, d);
        spec.optimizer.algorithm = Algorithm::Adam;
        spec.optimizer.beta1 = beta1;
        spec.optimizer.beta2 = beta2;
        spec.optimizer.alpha = AlphaSchedule::constant(1.0);
        spec.steps = epochs * d + horizon + d + 2;
        const RunResult run = run_online(spec, 1);
        CsvTable table({"i", "k", "tail_bound"});
        const std::int64_t base = (epochs - 1) * d;
        for (std::int64_t i = 1; i <= d + 1; ++i) {
            const auto est = net_update_factor(run.trajectory, beta1, base + i, horizon);
            table.add_row({std::to_string(i), format_double(est.k), format_double(est.tail_bound)});
        }
        table.write(out / "shape.csv");
        return 0;
    }
    throw ConfigError("lemma: --which must be v-limit|m-limit|shape|ordering");
}

int run_theorem(const Settings& s, const fs::path& out) {
    const auto which = s.integer("which", 1);
    if (which == 1) {
        const auto steps = s.integer("steps", 400000);
        ExperimentSpec spec;
        spec.problem = std::make_shared<StochasticCounterexample>(s.real("C", 101.0),
                                                                  s.real("delta", 0.02));
        spec.optimizer = optimizer_from_settings(s, steps);
        spec.optimizer.algorithm = Algorithm::Adam;
        spec.steps = steps;
        spec.seeds = parse_seed_list(s.str("seeds", "1,2,3,4,5"));
        const auto grid = parse_real_list(s.str("beta1_grid", "0.9,0.99,0.999,0.9999"));
        const Theorem1Result res = theorem1_check(spec, grid);
        CsvTable table({"beta1", "correct_seeds", "total_seeds", "passed"});
        for (const auto& o : res.outcomes)
            table.add_row({format_double(o.beta1), std::to_string(o.correct_seeds),
                           std::to_string(o.total_seeds), o.passed ? "1" : "0"});
        table.write(out / "theorem1.csv");
        return res.smallest_passing_beta1 ? 0 : 1;
    }
    if (which == 2) {
        const auto [big, small] = theorem2_expected_k(
            s.real("v_lo", 1.0), s.real("v_hi", 2.0), s.real("alpha", 1.0), s.real("C", 101.0),
            s.real("delta", 0.02), s.integer("runs", 100000),
            static_cast<std::uint64_t>(s.integer("seed", 12345)));
        CsvTable table({"g_value", "mean_k", "std_error", "count"});
        for (const auto& cm : {big, small})
            table.add_row({format_double(cm.g_value), format_double(cm.mean),
                           format_double(cm.std_error), std::to_string(cm.count)});
        table.write(out / "theorem2.csv");
        return 0;
    }
    throw ConfigError("theorem: --which must be 1 or 2");
}

int run_train(const Settings& s, const fs::path& out) {
    const auto steps = s.integer("steps", 4000);
    ExperimentSpec spec;
    if (s.str("task", "logistic") == "logistic") {
        spec.problem = std::make_shared<LogisticTask>(make_synthetic_dataset(
            s.integer("dim", 16), s.integer("samples", 400), s.real("separation", 2.0),
            static_cast<std::uint64_t>(s.integer("data_seed", 11)), s.integer("batch", 32),
            s.real("l2", 0.0)));
    } else {
        auto net = std::make_shared<IllConditionedNet>(
            make_ill_conditioned_matrix(s.integer("dim", 10), s.real("kappa", 1e5)));
        spec.theta0 = net->initial_theta(static_cast<std::uint64_t>(s.integer("seed", 12345)));
        spec.problem = net;
    }
    spec.optimizer = optimizer_from_settings(s, steps);
    spec.steps = steps;
    spec.record_every = s.integer("record_every", 10);
    const TrainingResult res = run_training(spec, static_cast<std::uint64_t>(s.integer("seed",
                                                                                       12345)));
    CsvTable curve({"record", "loss"});
    for (std::size_t i = 0; i < res.loss_curve.size(); ++i)
        curve.add_row({std::to_string(i), format_double(res.loss_curve[i])});
    curve.write(out / "loss_curve.csv");
    CsvTable summary({"final_full_loss", "failure"});
    summary.add_row({format_double(res.final_full_loss), res.failure.value_or("")});
    summary.write(out / "summary.csv");
    return res.failure ? 1 : 0;
}

int run_correlate(const Settings& s, const fs::path& out) {
    auto task = std::make_shared<LogisticTask>(make_synthetic_dataset(
        s.integer("dim", 16), s.integer("samples", 400), s.real("separation", 2.0),
        static_cast<std::uint64_t>(s.integer("data_seed", 11)), s.integer("batch", 32)));
    const auto steps = s.integer("steps", 6000);
    OptimizerConfig adam;
    adam.algorithm = Algorithm::Adam;
    adam.beta1 = 0.0;
    adam.beta2 = s.real("adam_beta2", 0.9);
    adam.alpha = AlphaSchedule::constant(s.real("alpha", 1e-3));
    OptimizerConfig shift;
    shift.algorithm = Algorithm::AdaShift;
    shift.beta1 = 0.0;
    shift.beta2 = s.real("adashift_beta2", 0.999);
    shift.shift_n = s.integer("n", 10);
    shift.spatial = SpatialOp::Max;
    shift.alpha = AlphaSchedule::constant(s.real("alpha", 1e-3));
    const auto outcomes = decorrelation_experiment(task, {{"adam", adam}, {"adashift", shift}},
                                                   steps, s.integer("n_max", 10),
                                                   static_cast<std::uint64_t>(s.integer("seed",
                                                                                        12345)));
    CsvTable table({"optimizer", "metric", "lag", "rho"});
    for (const auto& o : outcomes) {
        for (const auto& [lag, rho] : o.report.temporal)
            table.add_row({o.optimizer, "temporal", std::to_string(lag), format_double(rho)});
        for (const auto& [lag, rho] : o.report.spatial)
            table.add_row({o.optimizer, "spatial", std::to_string(lag), format_double(rho)});
        table.add_row({o.optimizer, "g2_v", "0", format_double(o.report.g2_v)});
        if (o.report.g2_v_own)
            table.add_row({o.optimizer, "g2_v_own", std::to_string(s.integer("n", 10)),
                           format_double(*o.report.g2_v_own)});
    }
    table.write(out / "correlations.csv");
    return 0;
}

int run_illcond(const Settings& s, const fs::path& out) {
    const auto steps = s.integer("steps", 10000);
    const auto dim = s.integer("dim", 10);
    const double kappa = s.real("kappa", 1e5);
    const auto seed = static_cast<std::uint64_t>(s.integer("seed", 12345));
    auto net = std::make_shared<IllConditionedNet>(make_ill_conditioned_matrix(dim, kappa));
    const Vector theta0 = net->initial_theta(seed);
    const double initial_loss = net->loss(theta0, 1, Draw{});

    auto run_with = [&](OptimizerConfig cfg) {
        ExperimentSpec spec;
        spec.problem = net;
        spec.optimizer = std::move(cfg);
        spec.steps = steps;
        spec.record_every = steps;
        spec.theta0 = theta0;
        return run_training(spec, seed);
    };
    auto tuned_constant = [&](Algorithm algo, const std::vector<double>& alphas) {
        double best_loss = std::numeric_limits<double>::infinity();
        double best_alpha = alphas.front();
        for (double a : alphas) {
            OptimizerConfig cfg;
            cfg.algorithm = algo;
            cfg.alpha = AlphaSchedule::constant(a);
            if (algo == Algorithm::AdaShift) {
                cfg.shift_n = 1;
                cfg.spatial = SpatialOp::Max;
            }
            const TrainingResult r = run_with(cfg);
            const double loss = r.failure ? std::numeric_limits<double>::infinity()
                                          : r.final_full_loss;
            if (loss < best_loss) {
                best_loss = loss;
                best_alpha = a;
            }
        }
        return std::pair<double, double>{best_alpha, best_loss};
    };

    CsvTable table({"optimizer", "schedule", "alpha", "final_loss", "decreased"});
    const std::vector<double> small{1e-6, 1e-7, 1e-8};
    const std::vector<double> adaptive{1.0, 0.3, 0.1};
    std::map<std::string, double> const_loss;
    for (const auto& [name, algo, grid] :
         std::vector<std::tuple<std::string, Algorithm, std::vector<double>>>{
             {"sgd", Algorithm::SGD, small},
             {"momentum", Algorithm::Momentum, small},
             {"adam", Algorithm::Adam, adaptive},
             {"amsgrad", Algorithm::AMSGrad, adaptive},
             {"adashift", Algorithm::AdaShift, adaptive}}) {
        const auto [alpha, loss] = tuned_constant(algo, grid);
        const_loss[name] = loss;
        table.add_row({name, "constant", format_double(alpha), format_double(loss),
                       loss < initial_loss ? "1" : "0"});
    }
    // exp decay comparisons for adam and adashift
    for (const std::string name : {"adam", "adashift"}) {
        OptimizerConfig cfg;
        if (name == "adam") {
            cfg.algorithm = Algorithm::Adam;
            cfg.alpha = AlphaSchedule::exp_decay_over(s.real("adam_decay_alpha0", 0.1), 30.0,
                                                      static_cast<double>(steps));
        } else {
            cfg.algorithm = Algorithm::AdaShift;
            cfg.shift_n = 1;
            cfg.spatial = SpatialOp::Max;
            cfg.alpha = AlphaSchedule::exp_decay_over(s.real("adashift_decay_alpha0", 10.0), 30.0,
                                                      static_cast<double>(steps));
        }
        const TrainingResult r = run_with(cfg);
        const double loss = r.failure ? std::numeric_limits<double>::infinity() : r.final_full_loss;
        table.add_row({name, "exp_decay", format_double(cfg.alpha.alpha0), format_double(loss),
                       loss < initial_loss ? "1" : "0"});
    }
    table.write(out / "illcond.csv");
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"AdaShift optimizer family: experiments, lemma checks and data export"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::vector<std::string> overrides;
    long long seed_flag = -1;
    int threads = 1;
    app.add_option("--config", config_path, "key=value config file (or a manifest.csv)");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--set", overrides, "override: key=value (repeatable)");
    app.add_option("--seed", seed_flag, "base seed (default: ADASHIFT_SEED env or 12345)");
    app.add_option("--threads", threads, "max worker threads for the harness");

    // every experiment parameter can also arrive as a typed flag
    std::map<std::string, std::string> flag_values;
    auto add_setting = [&](CLI::App* cmd, const std::string& name, const std::string& help) {
        cmd->add_option_function<std::string>(
            "--" + name, [&flag_values, name](const std::string& v) { flag_values[name] = v; },
            help);
    };

    CLI::App* counter = app.add_subcommand("counterexample", "stochastic counterexample runs");
    counter->fallthrough();
    for (const auto& opt : {"C", "delta", "optimizer", "steps", "alpha", "beta1", "beta2", "n",
                            "m", "spatial", "epsilon", "projection", "seeds", "record_every",
                            "schedule", "bias_correction"})
        add_setting(counter, opt, "");

    CLI::App* sweep = app.add_subcommand("sweep", "beta1 x beta2 grid of final theta");
    sweep->fallthrough();
    for (const auto& opt : {"problem", "C", "d", "delta", "steps", "alpha", "optimizer",
                            "beta1_grid", "beta2_grid", "epsilon"})
        add_setting(sweep, opt, "");

    CLI::App* critical = app.add_subcommand("critical", "closed-form vs empirical critical C");
    critical->fallthrough();
    for (const auto& opt : {"beta1", "beta2", "d", "mode", "steps"}) add_setting(critical, opt, "");

    CLI::App* lemma = app.add_subcommand("lemma", "limit/shape/ordering oracle checks");
    lemma->fallthrough();
    for (const auto& opt : {"which", "beta1", "beta2", "C", "d", "delta", "epochs", "runs"})
        add_setting(lemma, opt, "");

    CLI::App* theorem = app.add_subcommand("theorem", "theorem 1/2 empirical checks");
    theorem->fallthrough();
    for (const auto& opt : {"which", "C", "delta", "steps", "beta1_grid", "beta2", "alpha",
                            "seeds", "v_lo", "v_hi", "runs", "optimizer"})
        add_setting(theorem, opt, "");

    CLI::App* train = app.add_subcommand("train", "logistic / ill-conditioned training");
    train->fallthrough();
    for (const auto& opt : {"task", "dim", "samples", "separation", "batch", "l2", "steps",
                            "optimizer", "alpha", "beta1", "beta2", "n", "m", "spatial",
                            "schedule", "decay_factor", "decay_horizon", "record_every", "kappa",
                            "data_seed", "epsilon"})
        add_setting(train, opt, "");

    CLI::App* correlate = app.add_subcommand("correlate", "decorrelation diagnostics");
    correlate->fallthrough();
    for (const auto& opt : {"dim", "samples", "separation", "batch", "steps", "alpha",
                            "adam_beta2", "adashift_beta2", "n", "n_max", "data_seed"})
        add_setting(correlate, opt, "");

    CLI::App* illcond = app.add_subcommand("illcond", "ill-conditioned two-layer comparison");
    illcond->fallthrough();
    for (const auto& opt : {"dim", "kappa", "steps", "adam_decay_alpha0", "adashift_decay_alpha0"})
        add_setting(illcond, opt, "");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        Settings settings;
        if (!config_path.empty())
            for (const auto& [k, v] : load_config_file(config_path)) settings.set(k, v);
        for (const auto& [k, v] : flag_values) settings.set(k, v);
        for (const auto& item : overrides) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value: " + item);
            settings.set(item.substr(0, eq), item.substr(eq + 1));
        }
        if (seed_flag >= 0)
            settings.set("seed", std::to_string(seed_flag));
        else if (!settings.has("seed")) {
            const char* env = std::getenv("ADASHIFT_SEED");
            settings.set("seed", env ? env : "12345");
        }
        settings.set("threads", std::to_string(threads));

        const fs::path out(out_dir);
        std::error_code ec;
        fs::create_directories(out, ec);

        int status = 0;
        std::string name;
        if (counter->parsed()) {
            name = "counterexample";
            status = run_counterexample(settings, out);
        } else if (sweep->parsed()) {
            name = "sweep";
            status = run_sweep_cmd(settings, out, threads);
        } else if (critical->parsed()) {
            name = "critical";
            status = run_critical(settings, out);
        } else if (lemma->parsed()) {
            name = "lemma";
            status = run_lemma(settings, out);
        } else if (theorem->parsed()) {
            name = "theorem";
            status = run_theorem(settings, out);
        } else if (train->parsed()) {
            name = "train";
            status = run_train(settings, out);
        } else if (correlate->parsed()) {
            name = "correlate";
            status = run_correlate(settings, out);
        } else if (illcond->parsed()) {
            name = "illcond";
            status = run_illcond(settings, out);
        }
        write_manifest(out, name, settings);
        return status;
    } catch (const ConfigError& err) {
        std::cerr << "usage error: " << err.what() << "\n";
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
}

}  // namespace adashift

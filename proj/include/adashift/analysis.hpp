#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "adashift/problems.hpp"
#include "adashift/rng.hpp"
#include "adashift/trajectory.hpp"

namespace adashift {

// ---------------------------------------------------------------------------
// Limit-cycle closed forms for the sequential counterexample (epoch index
// i = 1..d; the C gradient sits at i = 1).

/// lim v_{nd+i} = (1-b2)/(1-b2^d) (C^2-1) b2^(i-1) + 1
double v_limit_closed_form(double beta2, double C, std::int64_t d, std::int64_t i);

/// lim m_{nd+i} = (1-b1)/(1-b1^d) (C+1) b1^(i-1) - 1
double m_limit_closed_form(double beta1, double C, std::int64_t d, std::int64_t i);

enum class SumMode {
    Approximate,  // v_t >> 1: drop the "+1" term of the v limit
    Exact         // keep it
};

/// S = sum_i m_limit(i) / sqrt(v_limit(i)) over one epoch.
double epoch_step_sum(double beta1, double beta2, double C, std::int64_t d,
                      SumMode mode = SumMode::Approximate);

/// Critical C where approximate-mode S vanishes; `valid` is false when the
/// root is <= 1 (no critical C under the v >> 1 approximation).
struct CriticalC {
    double value = 0.0;
    bool valid = false;
};
CriticalC critical_C(double beta1, double beta2, double d);

/// Self-consistent critical C under the experimental tie d = C, solved on
/// the real-d extension of the formula.
std::optional<double> critical_C_tied(double beta1, double beta2, double c_lo = 1.5,
                                      double c_hi = 5000.0);

// ---------------------------------------------------------------------------
// Net update factors

struct NetUpdateEstimate {
    std::int64_t t0 = 0;
    std::int64_t horizon = 0;
    double k = 0.0;
    double tail_bound = 0.0;
};

/// Truncation horizon with beta1^h <= 1e-12 (0 when beta1 = 0).
std::int64_t default_horizon(double beta1);

/// k = sum_{j=0..horizon} (alpha_{t0+j}/sqrt(v_{t0+j})) (1-b1) b1^j for one
/// coordinate, with a geometric tail bound from the recorded alpha/v range.
NetUpdateEstimate net_update_factor(const Trajectory& traj, double beta1, std::int64_t t0,
                                    std::int64_t horizon, Eigen::Index coord = 0);

/// Gamma_t = sqrt(v_t)/alpha_t - sqrt(v_{t-1})/alpha_{t-1}, per coordinate.
Vector gamma_t(const Trajectory& traj, std::int64_t t);

// ---------------------------------------------------------------------------
// Stochastic counterexample moments and expected factors

/// E[g^2] and D[g^2] of the two-outcome gradient stream.
double stream_second_moment(double C, double delta);
double stream_second_moment_variance(double C, double delta);

/// Second-order expansion of E[k(g)] conditioned on g = g_value; the v
/// variance uses the stationary moving-average form. alpha_t = 1 assumed.
double expected_k_second_order(double C, double delta, double beta1, double beta2, double g_value,
                               std::int64_t horizon);

/// Per-term expansion values, for term-wise comparisons.
std::vector<double> expected_k_second_order_terms(double C, double delta, double beta1,
                                                  double beta2, double g_value,
                                                  std::int64_t horizon);

struct MonteCarloMean {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t runs = 0;
};

/// Simulation oracle for E[k(g)]: burns in v on i.i.d. draws, conditions
/// g_{t0} = g_value, accumulates the truncated weighted sum of 1/sqrt(v).
MonteCarloMean monte_carlo_expected_k(double C, double delta, double beta1, double beta2,
                                      double g_value, std::int64_t horizon, std::int64_t runs,
                                      std::uint64_t seed);

struct ClassMean {
    double g_value = 0.0;
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t count = 0;
};

/// Empirical E[k] per gradient class when v ~ uniform[lo, hi] i.i.d. and
/// independent of the gradients (beta1 = 0, so k = alpha/sqrt(v)).
std::pair<ClassMean, ClassMean> theorem2_expected_k(double v_lo, double v_hi, double alpha,
                                                    double C, double delta, std::int64_t runs,
                                                    std::uint64_t seed);

// ---------------------------------------------------------------------------
// Correlation diagnostics

double pearson(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y);

struct CorrelationReport {
    std::vector<std::pair<std::int64_t, double>> temporal;  // (lag, avg corr g_t[i], g_{t-n}[i])
    std::vector<std::pair<std::int64_t, double>> spatial;   // (lag, avg corr g_t[i], g_{t-n}[j])
    double g2_v = 0.0;                                      // avg corr(g_t^2[i], v_t[i])
    std::optional<double> g2_v_own;                         // avg corr(g_{t-n}^2[i], v_t[i])
    std::int64_t degenerate_skipped = 0;
};

/// Correlations over the recorded gradient/v streams. `own_shift` adds the
/// g_{t-n}^2 vs v_t pairing (AdaShift's own input).
CorrelationReport correlation_report(const Trajectory& traj, std::int64_t n_max,
                                     std::int64_t pair_samples, std::uint64_t seed,
                                     std::optional<std::int64_t> own_shift = std::nullopt);

// ---------------------------------------------------------------------------
// Regret

struct RegretResult {
    double total = 0.0;
    double average = 0.0;
    Vector theta_star;
};

/// R(T) = sum_t [f_t(theta_t) - f_t(theta*)] for linear streams over a
/// feasible box; theta* is computed exactly at a box corner.
RegretResult regret(const Trajectory& traj, const OnlineProblem& problem);

}  // namespace adashift

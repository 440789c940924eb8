#include "adashift/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace adashift {

namespace {

void check_epoch_index(std::int64_t d, std::int64_t i) {
    if (d < 1) throw ConfigError("epoch length d must be >= 1");
    if (i < 1 || i > d) throw ConfigError("epoch index i must lie in [1, d]");
}

}  // namespace

double v_limit_closed_form(double beta2, double C, std::int64_t d, std::int64_t i) {
    check_epoch_index(d, i);
    if (!(beta2 >= 0.0) || beta2 >= 1.0) throw ConfigError("v_limit: beta2 in [0, 1)");
    const double b2d = std::pow(beta2, static_cast<double>(d));
    return (1.0 - beta2) / (1.0 - b2d) * (C * C - 1.0) * std::pow(beta2, static_cast<double>(i - 1)) +
           1.0;
}

double m_limit_closed_form(double beta1, double C, std::int64_t d, std::int64_t i) {
    check_epoch_index(d, i);
    if (!(beta1 >= 0.0) || beta1 >= 1.0) throw ConfigError("m_limit: beta1 in [0, 1)");
    if (beta1 == 0.0) return i == 1 ? C : -1.0;
    const double b1d = std::pow(beta1, static_cast<double>(d));
    return (1.0 - beta1) / (1.0 - b1d) * (C + 1.0) * std::pow(beta1, static_cast<double>(i - 1)) -
           1.0;
}

double epoch_step_sum(double beta1, double beta2, double C, std::int64_t d, SumMode mode) {
    if (!(C > 1.0)) throw ConfigError("epoch_step_sum: C > 1 required");
    if (!(beta2 >= 0.0) || beta2 >= 1.0) throw ConfigError("epoch_step_sum: beta2 in [0, 1)");
    double s = 0.0;
    const double b2d = std::pow(beta2, static_cast<double>(d));
    const double scale = (1.0 - beta2) / (1.0 - b2d) * (C * C - 1.0);
    for (std::int64_t i = 1; i <= d; ++i) {
        const double m = m_limit_closed_form(beta1, C, d, i);
        double v = scale * std::pow(beta2, static_cast<double>(i - 1));
        if (mode == SumMode::Exact) v += 1.0;
        s += m / std::sqrt(v);
    }
    return s;
}

namespace {

/// Root of approximate-mode S in closed form, real-valued d. This is the
/// algebraic solution of sum_i m_limit(i)/sqrt(v_approx(i)) = 0; geometric
/// sums with ratios beta1/sqrt(beta2) and 1/sqrt(beta2).
double critical_C_raw(double beta1, double beta2, double d) {
    const double b = std::sqrt(beta2);
    const double b1d = std::pow(beta1, d);
    const double bd = std::pow(b, d);
    const double num = (1.0 - b1d) * (1.0 - bd) * (b - beta1);
    const double den = (1.0 - beta1) * (1.0 - b) * (bd - b1d);
    return num / den - 1.0;
}

}  // namespace

CriticalC critical_C(double beta1, double beta2, double d) {
    if (!(beta1 >= 0.0) || beta1 >= 1.0) throw ConfigError("critical_C: beta1 in [0, 1)");
    if (!(beta2 >= 0.0) || beta2 >= 1.0) throw ConfigError("critical_C: beta2 in [0, 1)");
    if (d < 1.0) throw ConfigError("critical_C: d >= 1");
    const double b = std::sqrt(beta2);
    if (std::abs(b - beta1) < 1e-12)
        throw ConfigError("critical_C: singular configuration beta1 = sqrt(beta2)");
    const double value = critical_C_raw(beta1, beta2, d);
    return {value, value > 1.0};
}

std::optional<double> critical_C_tied(double beta1, double beta2, double c_lo, double c_hi) {
    if (!(beta1 >= 0.0) || beta1 >= 1.0 || !(beta2 >= 0.0) || beta2 >= 1.0)
        throw ConfigError("critical_C_tied: betas in [0, 1)");
    const auto h = [&](double c) { return critical_C_raw(beta1, beta2, c) - c; };
    double lo = c_lo;
    double hi = c_hi;
    if (!(h(lo) < 0.0) || !(h(hi) > 0.0)) return std::nullopt;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (h(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::int64_t default_horizon(double beta1) {
    if (beta1 <= 0.0) return 0;
    return static_cast<std::int64_t>(std::ceil(std::log(1e-12) / std::log(beta1)));
}

NetUpdateEstimate net_update_factor(const Trajectory& traj, double beta1, std::int64_t t0,
                                    std::int64_t horizon, Eigen::Index coord) {
    if (horizon < 0) throw ConfigError("net_update_factor: horizon >= 0");
    if (!(beta1 >= 0.0) || beta1 >= 1.0) throw ConfigError("net_update_factor: beta1 in [0, 1)");
    traj.at_time(t0);
    traj.at_time(t0 + horizon);  // throws when the window is not covered
    double k = 0.0;
    double weight = 1.0 - beta1;
    double alpha_max = 0.0;
    double v_min = std::numeric_limits<double>::infinity();
    for (std::int64_t j = 0; j <= horizon; ++j) {
        const auto& rec = traj.at_time(t0 + j);
        k += weight * rec.alpha / std::sqrt(rec.v[coord]);
        weight *= beta1;
        alpha_max = std::max(alpha_max, rec.alpha);
        v_min = std::min(v_min, rec.v[coord]);
    }
    // geometric bound on the dropped tail, using the recorded alpha/v range
    const double tail =
        beta1 <= 0.0 ? 0.0 : std::pow(beta1, static_cast<double>(horizon + 1)) * alpha_max /
                                 std::sqrt(v_min);
    return {t0, horizon, k, tail};
}

Vector gamma_t(const Trajectory& traj, std::int64_t t) {
    const auto& cur = traj.at_time(t);
    const auto& prev = traj.at_time(t - 1);
    return (cur.v.array().sqrt() / cur.alpha - prev.v.array().sqrt() / prev.alpha).matrix();
}

double stream_second_moment(double C, double delta) { return C + delta * (C + 1.0); }

double stream_second_moment_variance(double C, double delta) {
    const double c2 = C * C;
    const double c3 = c2 * C;
    return c3 - 2.0 * c2 + C + delta * (c3 - 3.0 * c2 - C - 1.0) -
           delta * delta * (C + 1.0) * (C + 1.0);
}

std::vector<double> expected_k_second_order_terms(double C, double delta, double beta1,
                                                  double beta2, double g_value,
                                                  std::int64_t horizon) {
    if (horizon < 0) throw ConfigError("expected_k_second_order: horizon >= 0");
    if (!(beta1 >= 0.0) || beta1 >= 1.0 || !(beta2 >= 0.0) || beta2 >= 1.0)
        throw ConfigError("expected_k_second_order: betas in [0, 1)");
    const double eg2 = stream_second_moment(C, delta);
    const double dg2 = stream_second_moment_variance(C, delta);
    // stationary variance of the exponential moving average v
    const double dv = (1.0 - beta2) * (1.0 - beta2) / (1.0 - beta2 * beta2) * dg2;
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(horizon + 1));
    double w = 1.0 - beta1;
    double b2t = 1.0;  // beta2^t
    for (std::int64_t t = 0; t <= horizon; ++t) {
        const double b2t1 = b2t * beta2;  // beta2^(t+1)
        const double ex = (1.0 + b2t1 - b2t) * eg2 + (1.0 - beta2) * b2t * g_value * g_value;
        const double dx = b2t1 * b2t1 * dv +
                          (1.0 - beta2) * (1.0 - beta2) * (1.0 - b2t * b2t) /
                              (1.0 - beta2 * beta2) * dg2;
        const double ef = 1.0 / std::sqrt(ex) + 0.375 * dx / (ex * ex * std::sqrt(ex));
        terms.push_back(w * ef);
        w *= beta1;
        b2t = b2t1;
    }
    return terms;
}

double expected_k_second_order(double C, double delta, double beta1, double beta2, double g_value,
                               std::int64_t horizon) {
    double k = 0.0;
    for (double term : expected_k_second_order_terms(C, delta, beta1, beta2, g_value, horizon))
        k += term;
    return k;
}

MonteCarloMean monte_carlo_expected_k(double C, double delta, double beta1, double beta2,
                                      double g_value, std::int64_t horizon, std::int64_t runs,
                                      std::uint64_t seed) {
    if (runs < 100) throw ConfigError("monte_carlo_expected_k: runs >= 100");
    if (horizon < 0) throw ConfigError("monte_carlo_expected_k: horizon >= 0");
    const double p = (1.0 + delta) / (C + 1.0);
    const auto burn = static_cast<std::int64_t>(std::ceil(12.0 / (1.0 - beta2)));
    Rng rng = Rng::derive(seed, {0x6d63u});
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::int64_t r = 0; r < runs; ++r) {
        double v = 0.0;
        for (std::int64_t t = 0; t < burn; ++t) {
            const double g2 = rng.bernoulli(p) ? C * C : 1.0;
            v = beta2 * v + (1.0 - beta2) * g2;
        }
        v = beta2 * v + (1.0 - beta2) * g_value * g_value;  // conditioned position t0
        double k = (1.0 - beta1) / std::sqrt(v);
        double w = (1.0 - beta1) * beta1;
        for (std::int64_t j = 1; j <= horizon && w > 0.0; ++j) {
            const double g2 = rng.bernoulli(p) ? C * C : 1.0;
            v = beta2 * v + (1.0 - beta2) * g2;
            k += w / std::sqrt(v);
            w *= beta1;
        }
        sum += k;
        sum_sq += k * k;
    }
    const double n = static_cast<double>(runs);
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    return {mean, std::sqrt(var / n), runs};
}

std::pair<ClassMean, ClassMean> theorem2_expected_k(double v_lo, double v_hi, double alpha,
                                                    double C, double delta, std::int64_t runs,
                                                    std::uint64_t seed) {
    if (!(v_lo > 0.0) || !(v_hi >= v_lo))
        throw ConfigError("theorem2_expected_k: v support must be positive");
    const double p = (1.0 + delta) / (C + 1.0);
    Rng rng = Rng::derive(seed, {0x7431u});
    ClassMean big{C, 0.0, 0.0, 0};
    ClassMean small{-1.0, 0.0, 0.0, 0};
    double sum_b = 0.0, sq_b = 0.0, sum_s = 0.0, sq_s = 0.0;
    for (std::int64_t r = 0; r < runs; ++r) {
        const bool is_big = rng.bernoulli(p);
        const double v = rng.uniform(v_lo, v_hi);
        const double k = alpha / std::sqrt(v);
        if (is_big) {
            ++big.count;
            sum_b += k;
            sq_b += k * k;
        } else {
            ++small.count;
            sum_s += k;
            sq_s += k * k;
        }
    }
    auto finish = [](ClassMean& cm, double sum, double sq) {
        if (cm.count < 2) throw DegenerateInput("theorem2_expected_k: class has < 2 samples");
        const double n = static_cast<double>(cm.count);
        cm.mean = sum / n;
        const double var = std::max(0.0, (sq - n * cm.mean * cm.mean) / (n - 1.0));
        cm.std_error = std::sqrt(var / n);
    };
    finish(big, sum_b, sq_b);
    finish(small, sum_s, sq_s);
    return {big, small};
}

double pearson(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
    if (x.size() != y.size()) throw DegenerateInput("pearson: length mismatch");
    if (x.size() < 2) throw DegenerateInput("pearson: need at least two samples");
    const double mx = x.mean();
    const double my = y.mean();
    const Eigen::ArrayXd dx = x.array() - mx;
    const Eigen::ArrayXd dy = y.array() - my;
    const double sxx = (dx * dx).sum();
    const double syy = (dy * dy).sum();
    if (sxx <= 0.0 || syy <= 0.0) throw DegenerateInput("pearson: zero variance input");
    return (dx * dy).sum() / std::sqrt(sxx * syy);
}

CorrelationReport correlation_report(const Trajectory& traj, std::int64_t n_max,
                                     std::int64_t pair_samples, std::uint64_t seed,
                                     std::optional<std::int64_t> own_shift) {
    traj.require_contiguous();
    const auto T = static_cast<std::int64_t>(traj.size());
    const Eigen::Index dim = traj.empty() ? 0 : traj.front().g.size();
    if (T <= n_max + 1) throw MissingRecord("correlation_report: trajectory shorter than n_max");
    CorrelationReport report;
    Rng rng = Rng::derive(seed, {0xc0221u});

    auto column = [&](Eigen::Index coord, std::int64_t from, std::int64_t count, bool squared,
                      bool v_stream) {
        Vector out(count);
        for (std::int64_t i = 0; i < count; ++i) {
            const auto& rec = traj[static_cast<std::size_t>(from + i)];
            double val = v_stream ? rec.v[coord] : rec.g[coord];
            if (squared) val *= val;
            out[i] = val;
        }
        return out;
    };

    auto mean_over = [&](auto&& fn, std::int64_t items) {
        double acc = 0.0;
        std::int64_t used = 0;
        for (std::int64_t i = 0; i < items; ++i) {
            try {
                acc += fn(i);
                ++used;
            } catch (const DegenerateInput&) {
                ++report.degenerate_skipped;
            }
        }
        if (used == 0) throw DegenerateInput("correlation_report: all pairs degenerate");
        return acc / static_cast<double>(used);
    };

    const std::int64_t span = T - n_max;
    for (std::int64_t lag = 1; lag <= n_max; ++lag) {
        const double rho = mean_over(
            [&](std::int64_t i) {
                return pearson(column(i, n_max, span, false, false),
                               column(i, n_max - lag, span, false, false));
            },
            dim);
        report.temporal.emplace_back(lag, rho);
    }
    for (std::int64_t lag = 1; lag <= n_max; ++lag) {
        const double rho = mean_over(
            [&](std::int64_t) {
                const auto i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(dim)));
                Eigen::Index j = i;
                if (dim > 1)
                    while (j == i)
                        j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(dim)));
                return pearson(column(i, n_max, span, false, false),
                               column(j, n_max - lag, span, false, false));
            },
            pair_samples);
        report.spatial.emplace_back(lag, rho);
    }
    report.g2_v = mean_over(
        [&](std::int64_t i) {
            return pearson(column(i, 0, T, true, false), column(i, 0, T, false, true));
        },
        dim);
    if (own_shift) {
        const std::int64_t n = *own_shift;
        if (n < 1 || n >= T) throw ConfigError("correlation_report: own_shift out of range");
        report.g2_v_own = mean_over(
            [&](std::int64_t i) {
                return pearson(column(i, 0, T - n, true, false), column(i, n, T - n, false, true));
            },
            dim);
    }
    return report;
}

RegretResult regret(const Trajectory& traj, const OnlineProblem& problem) {
    if (!problem.linear_in_theta())
        throw ConfigError("regret: implemented for linear cost streams only");
    const auto box = problem.feasible();
    if (!box) throw ConfigError("regret: feasible interval required for linear streams");
    if (traj.empty()) throw MissingRecord("regret: empty trajectory");
    const Eigen::Index dim = traj.dim();
    Vector g_sum = Vector::Zero(dim);
    double realized = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        realized += traj[i].loss;
        g_sum += traj[i].g;
    }
    Vector theta_star(dim);
    for (Eigen::Index c = 0; c < dim; ++c)
        theta_star[c] = g_sum[c] > 0.0 ? box->lo[c] : box->hi[c];
    const double best = g_sum.dot(theta_star);
    const double total = realized - best;
    return {total, total / static_cast<double>(traj.size()), theta_star};
}

}  // namespace adashift

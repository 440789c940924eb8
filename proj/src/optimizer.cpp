#include "adashift/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace adashift {

namespace {

void require_finite(const Vector& g, const char* who) {
    if (!g.allFinite()) throw StepError(std::string(who) + ": non-finite gradient rejected");
}

void require_dims(const Vector& theta, const Vector& g, const char* who) {
    if (theta.size() != g.size())
        throw StepError(std::string(who) + ": gradient dimension " + std::to_string(g.size()) +
                        " does not match parameter dimension " + std::to_string(theta.size()));
}

}  // namespace

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::SGD: return "sgd";
        case Algorithm::Momentum: return "momentum";
        case Algorithm::Adam: return "adam";
        case Algorithm::AMSGrad: return "amsgrad";
        case Algorithm::AdaShift: return "adashift";
    }
    return "?";
}

std::string to_string(SpatialOp op) {
    switch (op) {
        case SpatialOp::Max: return "max";
        case SpatialOp::Mean: return "mean";
        case SpatialOp::Identity: return "identity";
    }
    return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
    if (s == "sgd") return Algorithm::SGD;
    if (s == "momentum") return Algorithm::Momentum;
    if (s == "adam") return Algorithm::Adam;
    if (s == "amsgrad") return Algorithm::AMSGrad;
    if (s == "adashift") return Algorithm::AdaShift;
    throw ConfigError("unknown algorithm '" + s + "'");
}

SpatialOp spatial_from_string(const std::string& s) {
    if (s == "max") return SpatialOp::Max;
    if (s == "mean") return SpatialOp::Mean;
    if (s == "identity") return SpatialOp::Identity;
    throw ConfigError("unknown spatial op '" + s + "'");
}

void OptimizerConfig::validate() const {
    if (!(beta1 >= 0.0) || beta1 > 1.0) throw ConfigError("beta1 must lie in [0, 1]");
    if (beta1 == 1.0 && algorithm != Algorithm::AdaShift)
        throw ConfigError("beta1 = 1 is legal only for AdaShift (vanilla window averaging)");
    if (!(beta2 >= 0.0) || beta2 >= 1.0) throw ConfigError("beta2 must lie in [0, 1)");
    if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be non-negative");
    if (!(alpha.alpha0 > 0.0)) throw ConfigError("alpha0 must be positive");
    if (algorithm == Algorithm::AdaShift) {
        if (shift_n < 1) throw ConfigError("AdaShift requires shift_n >= 1");
        const Eigen::Index w = effective_m_window();
        if (w < 1 || w > shift_n) throw ConfigError("AdaShift requires m_window in [1, shift_n]");
    }
}

OptimizerState init_state(const OptimizerConfig& config, Eigen::Index dim,
                          const BlockPartition& partition) {
    config.validate();
    partition.require_covers(dim);
    OptimizerState s;
    s.m = Vector::Zero(dim);
    const bool blockwise =
        config.algorithm == Algorithm::AdaShift && config.spatial != SpatialOp::Identity;
    s.v = Vector::Zero(blockwise ? partition.block_count() : dim);
    s.v_hat = Vector::Zero(dim);
    return s;
}

double spatial_reduce_scalar(SpatialOp op, const Eigen::Ref<const Vector>& squared_block) {
    if (squared_block.size() == 0) throw ConfigError("spatial_reduce: empty block");
    switch (op) {
        case SpatialOp::Max: return squared_block.maxCoeff();
        case SpatialOp::Mean: return squared_block.mean();
        case SpatialOp::Identity:
            throw ConfigError("spatial_reduce_scalar: Identity maps element-wise");
    }
    return 0.0;
}

Vector moving_average_m(const std::deque<Vector>& window, double beta1, Eigen::Index m_window) {
    if (window.empty()) throw ConfigError("moving_average_m: empty window");
    if (beta1 < 0.0 || beta1 > 1.0) throw ConfigError("moving_average_m: beta1 in [0, 1]");
    const Eigen::Index w = std::min<Eigen::Index>(m_window, static_cast<Eigen::Index>(window.size()));
    if (w < 1) throw ConfigError("moving_average_m: window length must be >= 1");
    Vector acc = Vector::Zero(window.back().size());
    double weight = 1.0;
    double weight_sum = 0.0;
    auto it = window.rbegin();
    for (Eigen::Index i = 0; i < w; ++i, ++it) {
        acc += weight * (*it);
        weight_sum += weight;
        weight *= beta1;
    }
    return acc / weight_sum;
}

void sgd_step(OptimizerState& state, Vector& theta, const Vector& g, double alpha) {
    require_dims(theta, g, "sgd_step");
    require_finite(g, "sgd_step");
    theta.noalias() -= alpha * g;
    ++state.t;
}

void momentum_step(OptimizerState& state, Vector& theta, const Vector& g, double alpha,
                   double beta1) {
    require_dims(theta, g, "momentum_step");
    require_finite(g, "momentum_step");
    if (beta1 < 0.0 || beta1 >= 1.0) throw ConfigError("momentum_step: beta1 in [0, 1)");
    state.m = beta1 * state.m + (1.0 - beta1) * g;
    theta.noalias() -= alpha * state.m;
    ++state.t;
}

namespace {

void adam_like_step(OptimizerState& state, Vector& theta, const Vector& g, double alpha_t,
                    const OptimizerConfig& config, bool historical_max) {
    require_dims(theta, g, "adam_step");
    require_finite(g, "adam_step");
    const double b1 = config.beta1;
    const double b2 = config.beta2;
    state.m = b1 * state.m + (1.0 - b1) * g;
    state.v = b2 * state.v.array() + (1.0 - b2) * g.array().square();
    ++state.t;
    state.beta1_pow *= b1;
    state.beta2_pow *= b2;
    if (historical_max) state.v_hat = state.v_hat.cwiseMax(state.v);
    const Vector& denom_v = historical_max ? state.v_hat : state.v;
    double m_corr = 1.0;
    double v_corr = 1.0;
    if (config.bias_correction) {
        m_corr = 1.0 - state.beta1_pow;
        v_corr = 1.0 - state.beta2_pow;
    }
    theta.array() -= alpha_t * (state.m.array() / m_corr) /
                     ((denom_v.array() / v_corr).sqrt() + config.epsilon);
}

}  // namespace

void adam_step(OptimizerState& state, Vector& theta, const Vector& g, double alpha_t,
               const OptimizerConfig& config) {
    if (config.beta1 >= 1.0 || config.beta2 >= 1.0)
        throw ConfigError("adam_step: beta1, beta2 must lie in [0, 1)");
    adam_like_step(state, theta, g, alpha_t, config, /*historical_max=*/false);
}

void amsgrad_step(OptimizerState& state, Vector& theta, const Vector& g, double alpha_t,
                  const OptimizerConfig& config) {
    if (config.beta1 >= 1.0 || config.beta2 >= 1.0)
        throw ConfigError("amsgrad_step: beta1, beta2 must lie in [0, 1)");
    adam_like_step(state, theta, g, alpha_t, config, /*historical_max=*/true);
}

void adashift_step(OptimizerState& state, Vector& theta, const Vector& g, double alpha_t,
                   const OptimizerConfig& config, const BlockPartition& partition) {
    require_dims(theta, g, "adashift_step");
    require_finite(g, "adashift_step");
    partition.require_covers(theta.size());
    ++state.t;
    if (static_cast<Eigen::Index>(state.window.size()) < config.shift_n) {
        // warm-up: fill the queue, no v/p/theta update
        state.window.push_back(g);
        return;
    }
    const Vector g_old = std::move(state.window.front());
    state.window.pop_front();
    state.window.push_back(g);
    state.m = moving_average_m(state.window, config.beta1, config.effective_m_window());
    state.p *= config.beta2;
    const double b2 = config.beta2;
    const double v_corr = config.bias_correction ? 1.0 - state.p : 1.0;
    if (config.spatial == SpatialOp::Identity) {
        state.v = b2 * state.v.array() + (1.0 - b2) * g_old.array().square();
        theta.array() -= alpha_t * state.m.array() /
                         ((state.v.array() / v_corr).sqrt() + config.epsilon);
        return;
    }
    for (Eigen::Index b = 0; b < partition.block_count(); ++b) {
        const auto& span = partition.block(b);
        const double phi =
            spatial_reduce_scalar(config.spatial, g_old.segment(span.begin, span.size).array().square());
        state.v[b] = b2 * state.v[b] + (1.0 - b2) * phi;
        const double scale = alpha_t / (std::sqrt(state.v[b] / v_corr) + config.epsilon);
        theta.segment(span.begin, span.size) -= scale * state.m.segment(span.begin, span.size);
    }
}

void run_step(const OptimizerConfig& config, const BlockPartition& partition,
              OptimizerState& state, Vector& theta, const Vector& g) {
    const double alpha_t = config.alpha.at(state.t + 1);
    switch (config.algorithm) {
        case Algorithm::SGD: sgd_step(state, theta, g, alpha_t); break;
        case Algorithm::Momentum: momentum_step(state, theta, g, alpha_t, config.beta1); break;
        case Algorithm::Adam: adam_step(state, theta, g, alpha_t, config); break;
        case Algorithm::AMSGrad: amsgrad_step(state, theta, g, alpha_t, config); break;
        case Algorithm::AdaShift: adashift_step(state, theta, g, alpha_t, config, partition); break;
    }
    if (!theta.allFinite()) throw StepError("run_step: parameters became non-finite");
}

Vector broadcast_v(const OptimizerConfig& config, const BlockPartition& partition,
                   const OptimizerState& state) {
    const bool blockwise =
        config.algorithm == Algorithm::AdaShift && config.spatial != SpatialOp::Identity;
    if (!blockwise) {
        if (config.algorithm == Algorithm::SGD) return Vector::Ones(state.m.size());
        if (config.algorithm == Algorithm::Momentum) return Vector::Ones(state.m.size());
        return state.v;
    }
    Vector out(partition.dim());
    for (Eigen::Index b = 0; b < partition.block_count(); ++b) {
        const auto& span = partition.block(b);
        out.segment(span.begin, span.size).setConstant(state.v[b]);
    }
    return out;
}

}  // namespace adashift

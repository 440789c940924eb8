#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <string>

#include "adashift/blocks.hpp"
#include "adashift/errors.hpp"
#include "adashift/schedule.hpp"

namespace adashift {

enum class Algorithm { SGD, Momentum, Adam, AMSGrad, AdaShift };

/// Reduction applied block-wise to the shifted squared gradient.
enum class SpatialOp { Max, Mean, Identity };

std::string to_string(Algorithm a);
std::string to_string(SpatialOp op);
Algorithm algorithm_from_string(const std::string& s);
SpatialOp spatial_from_string(const std::string& s);

struct OptimizerConfig {
    Algorithm algorithm = Algorithm::Adam;
    AlphaSchedule alpha = AlphaSchedule::constant(1e-3);
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;          // added outside the square root, after bias correction
    Eigen::Index shift_n = 10;      // AdaShift temporal shift / queue capacity
    Eigen::Index m_window = 0;      // AdaShift first-moment window, 0 means "= shift_n"
    SpatialOp spatial = SpatialOp::Max;
    bool bias_correction = true;

    Eigen::Index effective_m_window() const { return m_window > 0 ? m_window : shift_n; }

    void validate() const;
};

/// Mutable per-run optimizer state. `v` is element-wise for SGD..AMSGrad and
/// for AdaShift with Identity; one scalar per block for AdaShift Max/Mean.
struct OptimizerState {
    std::int64_t t = 0;
    Vector m;
    Vector v;
    Vector v_hat;
    std::deque<Vector> window;
    double p = 1.0;           // running beta2^(updates) accumulator (AdaShift)
    double beta1_pow = 1.0;   // beta1^t (Adam/AMSGrad bias correction)
    double beta2_pow = 1.0;   // beta2^t
};

OptimizerState init_state(const OptimizerConfig& config, Eigen::Index dim,
                          const BlockPartition& partition);

/// phi: Max/Mean collapse a block of squared gradients to one scalar.
double spatial_reduce_scalar(SpatialOp op, const Eigen::Ref<const Vector>& squared_block);

/// Truncated exponential moving average over the newest `m_window` gradients
/// of the FIFO window; the most recent gradient has weight 1.
Vector moving_average_m(const std::deque<Vector>& window, double beta1, Eigen::Index m_window);

void sgd_step(OptimizerState& state, Vector& theta, const Vector& g, double alpha);
void momentum_step(OptimizerState& state, Vector& theta, const Vector& g, double alpha,
                   double beta1);
void adam_step(OptimizerState& state, Vector& theta, const Vector& g, double alpha_t,
               const OptimizerConfig& config);
void amsgrad_step(OptimizerState& state, Vector& theta, const Vector& g, double alpha_t,
                  const OptimizerConfig& config);
void adashift_step(OptimizerState& state, Vector& theta, const Vector& g, double alpha_t,
                   const OptimizerConfig& config, const BlockPartition& partition);

/// Dispatches one step at t = state.t + 1 with alpha_t from the schedule.
void run_step(const OptimizerConfig& config, const BlockPartition& partition,
              OptimizerState& state, Vector& theta, const Vector& g);

/// v broadcast to coordinate space (block scalars repeated across blocks).
Vector broadcast_v(const OptimizerConfig& config, const BlockPartition& partition,
                   const OptimizerState& state);

}  // namespace adashift

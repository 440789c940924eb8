#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "adashift/blocks.hpp"
#include "adashift/errors.hpp"
#include "adashift/rng.hpp"

namespace adashift {

/// Per-coordinate feasible box.
struct Interval {
    Vector lo;
    Vector hi;

    static Interval symmetric(Eigen::Index dim, double radius) {
        return {Vector::Constant(dim, -radius), Vector::Constant(dim, radius)};
    }
};

Vector project_feasible(const Vector& theta, const Interval& interval);

/// The realized randomness of one cost function f_t: a scalar payload for
/// gradient draws, minibatch indices for data problems.
struct Draw {
    double value = 0.0;
    std::vector<Eigen::Index> indices;
};

/// A cost-function stream with analytic gradients. loss/gradient must agree
/// on the same Draw; draw() is the only rng consumer.
class OnlineProblem {
  public:
    virtual ~OnlineProblem() = default;
    virtual Eigen::Index dim() const = 0;
    virtual Draw draw(std::int64_t t, Rng& rng) const = 0;
    virtual double loss(const Vector& theta, std::int64_t t, const Draw& d) const = 0;
    virtual Vector gradient(const Vector& theta, std::int64_t t, const Draw& d) const = 0;

    /// Sign vector of the correct update direction, when known.
    virtual std::optional<Vector> optimum_direction() const { return std::nullopt; }
    virtual std::optional<Interval> feasible() const { return std::nullopt; }
    /// True when f_t(theta) = g_t . theta (regret argmin sits at a box corner).
    virtual bool linear_in_theta() const { return false; }
    virtual BlockPartition default_partition() const { return BlockPartition::single(dim()); }

    double loss(const Vector& theta, std::int64_t t, Rng& rng) const {
        return loss(theta, t, draw(t, rng));
    }
    Vector gradient(const Vector& theta, std::int64_t t, Rng& rng) const {
        return gradient(theta, t, draw(t, rng));
    }
};

/// Scalar gradient of the periodic counterexample stream.
double sequential_gradient(double C, std::int64_t d, std::int64_t t);

/// One draw from the two-outcome gradient distribution.
double stochastic_gradient_sample(double C, double delta, Rng& rng);

/// f_t(theta) = C*theta on the first step of each d-epoch, else -theta.
class SequentialCounterexample final : public OnlineProblem {
  public:
    SequentialCounterexample(double C, std::int64_t d, std::optional<Interval> box = std::nullopt);

    Eigen::Index dim() const override { return 1; }
    Draw draw(std::int64_t, Rng&) const override { return {}; }
    double loss(const Vector& theta, std::int64_t t, const Draw&) const override;
    Vector gradient(const Vector& theta, std::int64_t t, const Draw&) const override;
    std::optional<Vector> optimum_direction() const override;
    std::optional<Interval> feasible() const override { return box_; }
    bool linear_in_theta() const override { return true; }

    double C() const { return C_; }
    std::int64_t d() const { return d_; }

  private:
    double C_;
    std::int64_t d_;
    std::optional<Interval> box_;
};

/// f_t(theta) = C*theta w.p. (1+delta)/(C+1), else -theta; E f = delta*theta.
class StochasticCounterexample final : public OnlineProblem {
  public:
    StochasticCounterexample(double C, double delta, std::optional<Interval> box = std::nullopt);

    Eigen::Index dim() const override { return 1; }
    Draw draw(std::int64_t, Rng& rng) const override;
    double loss(const Vector& theta, std::int64_t, const Draw& d) const override;
    Vector gradient(const Vector& theta, std::int64_t, const Draw& d) const override;
    std::optional<Vector> optimum_direction() const override;
    std::optional<Interval> feasible() const override { return box_; }
    bool linear_in_theta() const override { return true; }

    double C() const { return C_; }
    double delta() const { return delta_; }
    double prob_C() const { return (1.0 + delta_) / (C_ + 1.0); }

  private:
    double C_;
    double delta_;
    std::optional<Interval> box_;
};

/// Binary cross-entropy over minibatches; theta = [weights; bias].
class LogisticTask final : public OnlineProblem {
  public:
    LogisticTask(Matrix features, Vector labels, Eigen::Index batch_size, double l2 = 0.0);

    Eigen::Index dim() const override { return features_.cols() + 1; }
    Draw draw(std::int64_t, Rng& rng) const override;
    double loss(const Vector& theta, std::int64_t, const Draw& d) const override;
    Vector gradient(const Vector& theta, std::int64_t, const Draw& d) const override;
    BlockPartition default_partition() const override;

    /// Loss/gradient over an explicit index set (full batch when empty).
    std::pair<double, Vector> loss_grad(const Vector& theta,
                                        const std::vector<Eigen::Index>& batch) const;
    double full_loss(const Vector& theta) const { return loss_grad(theta, {}).first; }
    double train_accuracy(const Vector& theta) const;

    const Matrix& features() const { return features_; }
    const Vector& labels() const { return labels_; }
    Eigen::Index samples() const { return features_.rows(); }
    Eigen::Index batch_size() const { return batch_; }

  private:
    Matrix features_;  // samples x dim
    Vector labels_;    // 0/1
    Eigen::Index batch_;
    double l2_;
};

/// Two Gaussian clusters at +-mu/2 with ||mu|| = separation; deterministic
/// in the seed.
LogisticTask make_synthetic_dataset(Eigen::Index dim, Eigen::Index n_samples, double separation,
                                    std::uint64_t seed, Eigen::Index batch_size = 32,
                                    double l2 = 0.0);

/// Diagonal matrix with entries geometrically spaced from 1 to kappa.
Matrix make_ill_conditioned_matrix(Eigen::Index dim, double kappa);

/// loss = ||W1 W2 - A||_F^2, theta = [vec(W1); vec(W2)] (column-major).
class IllConditionedNet final : public OnlineProblem {
  public:
    explicit IllConditionedNet(Matrix A);

    Eigen::Index dim() const override { return 2 * side_ * side_; }
    Draw draw(std::int64_t, Rng&) const override { return {}; }
    double loss(const Vector& theta, std::int64_t, const Draw&) const override;
    Vector gradient(const Vector& theta, std::int64_t, const Draw&) const override;
    BlockPartition default_partition() const override;

    Eigen::Index side() const { return side_; }
    const Matrix& target() const { return A_; }

    /// Identity plus seeded Gaussian noise (sigma = 0.01) for both factors.
    Vector initial_theta(std::uint64_t seed) const;

    /// Closed-form loss and factor gradients at (W1, W2).
    static std::tuple<double, Matrix, Matrix> loss_grad(const Matrix& W1, const Matrix& W2,
                                                        const Matrix& A);

  private:
    Matrix A_;
    Eigen::Index side_;
};

}  // namespace adashift

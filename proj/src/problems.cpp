#include "adashift/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

namespace adashift {

namespace {

/// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

Vector project_feasible(const Vector& theta, const Interval& interval) {
    if (interval.lo.size() != theta.size() || interval.hi.size() != theta.size())
        throw ConfigError("project_feasible: interval dimension mismatch");
    if ((interval.lo.array() > interval.hi.array()).any())
        throw ConfigError("project_feasible: lo > hi");
    return theta.cwiseMax(interval.lo).cwiseMin(interval.hi);
}

double sequential_gradient(double C, std::int64_t d, std::int64_t t) {
    if (t < 1) throw ConfigError("sequential_gradient: t >= 1");
    if (d < 1) throw ConfigError("sequential_gradient: d >= 1");
    return ((t - 1) % d) == 0 ? C : -1.0;
}

double stochastic_gradient_sample(double C, double delta, Rng& rng) {
    if (!(delta > 0.0) || !(delta < C)) throw ConfigError("stochastic gradient: 0 < delta < C");
    return rng.bernoulli((1.0 + delta) / (C + 1.0)) ? C : -1.0;
}

// ---------------------------------------------------------------------------
// SequentialCounterexample

SequentialCounterexample::SequentialCounterexample(double C, std::int64_t d,
                                                   std::optional<Interval> box)
    : C_(C), d_(d), box_(std::move(box)) {
    if (!(C > 1.0)) throw ConfigError("SequentialCounterexample: C > 1");
    if (d < 1) throw ConfigError("SequentialCounterexample: d >= 1");
}

double SequentialCounterexample::loss(const Vector& theta, std::int64_t t, const Draw&) const {
    return sequential_gradient(C_, d_, t) * theta[0];
}

Vector SequentialCounterexample::gradient(const Vector&, std::int64_t t, const Draw&) const {
    return Vector::Constant(1, sequential_gradient(C_, d_, t));
}

std::optional<Vector> SequentialCounterexample::optimum_direction() const {
    // per-epoch gradient sum is C - (d - 1)
    const double epoch_sum = C_ - static_cast<double>(d_ - 1);
    if (epoch_sum == 0.0) return std::nullopt;
    return Vector::Constant(1, epoch_sum > 0.0 ? -1.0 : 1.0);
}

// ---------------------------------------------------------------------------
// StochasticCounterexample

StochasticCounterexample::StochasticCounterexample(double C, double delta,
                                                   std::optional<Interval> box)
    : C_(C), delta_(delta), box_(std::move(box)) {
    if (!(C > 1.0)) throw ConfigError("StochasticCounterexample: C > 1");
    if (!(delta > 0.0) || !(delta < C)) throw ConfigError("StochasticCounterexample: 0 < delta < C");
}

Draw StochasticCounterexample::draw(std::int64_t, Rng& rng) const {
    Draw d;
    d.value = rng.bernoulli(prob_C()) ? C_ : -1.0;
    return d;
}

double StochasticCounterexample::loss(const Vector& theta, std::int64_t, const Draw& d) const {
    return d.value * theta[0];
}

Vector StochasticCounterexample::gradient(const Vector&, std::int64_t, const Draw& d) const {
    return Vector::Constant(1, d.value);
}

std::optional<Vector> StochasticCounterexample::optimum_direction() const {
    return Vector::Constant(1, -1.0);  // E[g] = delta > 0
}

// ---------------------------------------------------------------------------
// LogisticTask

LogisticTask::LogisticTask(Matrix features, Vector labels, Eigen::Index batch_size, double l2)
    : features_(std::move(features)), labels_(std::move(labels)), batch_(batch_size), l2_(l2) {
    if (features_.rows() != labels_.size())
        throw ConfigError("LogisticTask: features/labels row mismatch");
    if (features_.rows() < 1) throw ConfigError("LogisticTask: empty dataset");
    if (batch_ < 1 || batch_ > features_.rows())
        throw ConfigError("LogisticTask: batch_size out of range");
    if (l2_ < 0.0) throw ConfigError("LogisticTask: l2 must be >= 0");
    for (Eigen::Index i = 0; i < labels_.size(); ++i)
        if (labels_[i] != 0.0 && labels_[i] != 1.0)
            throw ConfigError("LogisticTask: labels must be 0/1");
}

Draw LogisticTask::draw(std::int64_t, Rng& rng) const {
    Draw d;
    d.indices.resize(static_cast<std::size_t>(batch_));
    for (auto& ix : d.indices)
        ix = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(features_.rows())));
    return d;
}

std::pair<double, Vector> LogisticTask::loss_grad(const Vector& theta,
                                                  const std::vector<Eigen::Index>& batch) const {
    const Eigen::Index p = features_.cols();
    if (theta.size() != p + 1) throw ConfigError("LogisticTask: theta must have dim+1 entries");
    std::vector<Eigen::Index> all;
    const std::vector<Eigen::Index>* idx = &batch;
    if (batch.empty()) {
        all.resize(static_cast<std::size_t>(features_.rows()));
        std::iota(all.begin(), all.end(), Eigen::Index{0});
        idx = &all;
    }
    const double inv_b = 1.0 / static_cast<double>(idx->size());
    double loss = 0.0;
    Vector grad = Vector::Zero(p + 1);
    for (Eigen::Index row : *idx) {
        if (row < 0 || row >= features_.rows()) throw ConfigError("LogisticTask: index out of range");
        const double z = features_.row(row).dot(theta.head(p)) + theta[p];
        const double y = labels_[row];
        loss += softplus(z) - y * z;
        const double err = 1.0 / (1.0 + std::exp(-z)) - y;
        grad.head(p) += err * features_.row(row).transpose();
        grad[p] += err;
    }
    loss *= inv_b;
    grad *= inv_b;
    if (l2_ > 0.0) {
        loss += 0.5 * l2_ * theta.squaredNorm();
        grad += l2_ * theta;
    }
    return {loss, grad};
}

double LogisticTask::loss(const Vector& theta, std::int64_t, const Draw& d) const {
    return loss_grad(theta, d.indices).first;
}

Vector LogisticTask::gradient(const Vector& theta, std::int64_t, const Draw& d) const {
    return loss_grad(theta, d.indices).second;
}

BlockPartition LogisticTask::default_partition() const {
    return BlockPartition({BlockSpan{"weights", 0, features_.cols()},
                           BlockSpan{"bias", features_.cols(), 1}});
}

double LogisticTask::train_accuracy(const Vector& theta) const {
    const Eigen::Index p = features_.cols();
    Eigen::Index hits = 0;
    for (Eigen::Index i = 0; i < features_.rows(); ++i) {
        const double z = features_.row(i).dot(theta.head(p)) + theta[p];
        if ((z > 0.0 ? 1.0 : 0.0) == labels_[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(features_.rows());
}

LogisticTask make_synthetic_dataset(Eigen::Index dim, Eigen::Index n_samples, double separation,
                                    std::uint64_t seed, Eigen::Index batch_size, double l2) {
    if (dim < 1 || n_samples < 2) throw ConfigError("make_synthetic_dataset: dim >= 1, n >= 2");
    if (separation < 0.0) throw ConfigError("make_synthetic_dataset: separation >= 0");
    Rng rng = Rng::derive(seed, {0x5d47au});
    Vector direction(dim);
    for (Eigen::Index i = 0; i < dim; ++i) direction[i] = rng.normal();
    const double norm = direction.norm();
    if (norm > 0.0) direction /= norm;
    const Vector mu = 0.5 * separation * direction;

    Matrix X(n_samples, dim);
    Vector y(n_samples);
    for (Eigen::Index i = 0; i < n_samples; ++i) {
        const bool positive = (i % 2) == 1;
        for (Eigen::Index j = 0; j < dim; ++j)
            X(i, j) = rng.normal() + (positive ? mu[j] : -mu[j]);
        y[i] = positive ? 1.0 : 0.0;
    }
    // Fisher-Yates shuffle of rows, seeded
    for (Eigen::Index i = n_samples - 1; i > 0; --i) {
        const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
        X.row(i).swap(X.row(j));
        std::swap(y[i], y[j]);
    }
    return LogisticTask(std::move(X), std::move(y), std::min(batch_size, n_samples), l2);
}

// ---------------------------------------------------------------------------
// IllConditionedNet

Matrix make_ill_conditioned_matrix(Eigen::Index dim, double kappa) {
    if (dim < 1) throw ConfigError("make_ill_conditioned_matrix: dim >= 1");
    if (!(kappa >= 1.0)) throw ConfigError("make_ill_conditioned_matrix: kappa >= 1");
    Matrix A = Matrix::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        const double expo = dim == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(dim - 1);
        A(i, i) = std::pow(kappa, expo);
    }
    return A;
}

IllConditionedNet::IllConditionedNet(Matrix A) : A_(std::move(A)), side_(A_.rows()) {
    if (A_.rows() != A_.cols()) throw ConfigError("IllConditionedNet: A must be square");
}

std::tuple<double, Matrix, Matrix> IllConditionedNet::loss_grad(const Matrix& W1, const Matrix& W2,
                                                                const Matrix& A) {
    if (W1.rows() != W1.cols() || W2.rows() != W2.cols() || W1.rows() != A.rows() ||
        W2.rows() != A.rows())
        throw ConfigError("IllConditionedNet: square shapes must match");
    const Matrix R = W1 * W2 - A;
    return {R.squaredNorm(), 2.0 * R * W2.transpose(), 2.0 * W1.transpose() * R};
}

double IllConditionedNet::loss(const Vector& theta, std::int64_t, const Draw&) const {
    const Eigen::Index n = side_ * side_;
    Eigen::Map<const Matrix> W1(theta.data(), side_, side_);
    Eigen::Map<const Matrix> W2(theta.data() + n, side_, side_);
    return (W1 * W2 - A_).squaredNorm();
}

Vector IllConditionedNet::gradient(const Vector& theta, std::int64_t, const Draw&) const {
    const Eigen::Index n = side_ * side_;
    Eigen::Map<const Matrix> W1(theta.data(), side_, side_);
    Eigen::Map<const Matrix> W2(theta.data() + n, side_, side_);
    const Matrix R = W1 * W2 - A_;
    Vector g(2 * n);
    Eigen::Map<Matrix>(g.data(), side_, side_) = 2.0 * R * W2.transpose();
    Eigen::Map<Matrix>(g.data() + n, side_, side_) = 2.0 * W1.transpose() * R;
    return g;
}

BlockPartition IllConditionedNet::default_partition() const {
    const Eigen::Index n = side_ * side_;
    return BlockPartition({BlockSpan{"W1", 0, n}, BlockSpan{"W2", n, n}});
}

Vector IllConditionedNet::initial_theta(std::uint64_t seed) const {
    Rng rng = Rng::derive(seed, {0x1117u});
    const Eigen::Index n = side_ * side_;
    Vector theta(2 * n);
    Eigen::Map<Matrix> W1(theta.data(), side_, side_);
    Eigen::Map<Matrix> W2(theta.data() + n, side_, side_);
    W1.setIdentity();
    W2.setIdentity();
    for (Eigen::Index j = 0; j < side_; ++j)
        for (Eigen::Index i = 0; i < side_; ++i) W1(i, j) += 0.01 * rng.normal();
    for (Eigen::Index j = 0; j < side_; ++j)
        for (Eigen::Index i = 0; i < side_; ++i) W2(i, j) += 0.01 * rng.normal();
    return theta;
}

}  // namespace adashift

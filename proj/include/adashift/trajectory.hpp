#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "adashift/blocks.hpp"
#include "adashift/errors.hpp"

namespace adashift {

/// One optimizer step: theta is the post-step value, loss the pre-step
/// online prediction f_t(theta_t), delta_theta = theta_t - theta_{t-1}.
struct StepRecord {
    std::int64_t t = 0;
    Vector theta;
    Vector g;
    Vector m;
    Vector v;  // broadcast to coordinate space
    Vector delta_theta;
    double loss = 0.0;
    double alpha = 0.0;
};

/// Possibly-thinned step history. Analyses needing contiguous ranges check
/// stride == 1 through `require_contiguous`.
class Trajectory {
  public:
    void push(StepRecord rec) { records_.push_back(std::move(rec)); }
    void reserve(std::size_t n) { records_.reserve(n); }

    bool empty() const { return records_.empty(); }
    std::size_t size() const { return records_.size(); }
    const StepRecord& operator[](std::size_t i) const { return records_[i]; }
    const StepRecord& front() const { return records_.front(); }
    const StepRecord& back() const { return records_.back(); }

    /// Record with step counter exactly `t` (contiguous trajectories only).
    const StepRecord& at_time(std::int64_t t) const {
        if (empty()) throw MissingRecord("trajectory is empty");
        const std::int64_t t0 = records_.front().t;
        const std::int64_t idx = t - t0;
        if (idx < 0 || idx >= static_cast<std::int64_t>(records_.size()))
            throw MissingRecord("no record for t = " + std::to_string(t));
        const auto& rec = records_[static_cast<std::size_t>(idx)];
        if (rec.t != t) throw MissingRecord("trajectory is thinned; record t mismatch");
        return rec;
    }

    void require_contiguous() const {
        for (std::size_t i = 1; i < records_.size(); ++i)
            if (records_[i].t != records_[i - 1].t + 1)
                throw MissingRecord("trajectory must be recorded every step");
    }

    Eigen::Index dim() const { return empty() ? 0 : records_.front().theta.size(); }

  private:
    std::vector<StepRecord> records_;
};

}  // namespace adashift

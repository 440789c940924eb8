#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "adashift/errors.hpp"

namespace adashift {

/// Base learning rate schedule alpha_t, t = 1, 2, ...
struct AlphaSchedule {
    enum class Kind { Constant, LinearDecay, ExpDecay };

    Kind kind = Kind::Constant;
    double alpha0 = 1e-3;
    double horizon = 0.0;  // LinearDecay: T such that alpha_T -> alpha0/T slope
    double rate = 1.0;     // ExpDecay: alpha_t = alpha0 * rate^t, rate in (0, 1]

    static AlphaSchedule constant(double alpha) { return {Kind::Constant, alpha, 0.0, 1.0}; }

    static AlphaSchedule linear_decay(double alpha0, double total_steps) {
        if (total_steps <= 0) throw ConfigError("linear_decay requires positive horizon");
        return {Kind::LinearDecay, alpha0, total_steps, 1.0};
    }

    static AlphaSchedule exp_decay(double alpha0, double rate) {
        if (!(rate > 0.0) || rate > 1.0) throw ConfigError("exp_decay rate must be in (0, 1]");
        return {Kind::ExpDecay, alpha0, 0.0, rate};
    }

    /// rate chosen so alpha decays by `factor` over `total_steps` steps.
    static AlphaSchedule exp_decay_over(double alpha0, double factor, double total_steps) {
        if (!(factor >= 1.0) || total_steps <= 0)
            throw ConfigError("exp_decay_over requires factor >= 1 and positive steps");
        return exp_decay(alpha0, std::pow(factor, -1.0 / total_steps));
    }

    double at(std::int64_t t) const {
        switch (kind) {
            case Kind::Constant: return alpha0;
            case Kind::LinearDecay: {
                const double f = 1.0 - static_cast<double>(t) / horizon;
                return alpha0 * (f > 0.0 ? f : 0.0);
            }
            case Kind::ExpDecay: return alpha0 * std::pow(rate, static_cast<double>(t));
        }
        return alpha0;
    }

    std::string describe() const {
        switch (kind) {
            case Kind::Constant: return "constant(" + std::to_string(alpha0) + ")";
            case Kind::LinearDecay:
                return "linear(" + std::to_string(alpha0) + "," + std::to_string(horizon) + ")";
            case Kind::ExpDecay:
                return "exp(" + std::to_string(alpha0) + "," + std::to_string(rate) + ")";
        }
        return "";
    }
};

}  // namespace adashift

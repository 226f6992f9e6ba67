#pragma once

#include "rddp/model.hpp"

#include <stdexcept>
#include <vector>

namespace rddp::risk {

/// Largest accepted |Z|; comparisons use an absolute tolerance of 1e-9,
/// which is only meaningful up to this magnitude.
inline constexpr double kMaxMagnitude = 1e6;

/// Finite random variable: values[i] is realized with probability probs[i].
struct FiniteDistribution {
    std::vector<double> probs;
    std::vector<double> values;

    /// Throws std::invalid_argument unless lengths agree, length >= 1,
    /// probabilities are non-negative and sum to 1 within 1e-12, and every
    /// value is finite with magnitude at most kMaxMagnitude.
    void check() const;

    double expectation() const;
};

/// max { E_q[Z] : 0 <= q <= p / alpha, sum q = 1 } by sorting values in
/// descending order and filling q = p / alpha until the mass is used up.
/// Throws std::domain_error unless 0 < alpha <= 1.
double avar_primal(const FiniteDistribution& dist, double alpha);

struct AvarDual {
    double value = 0.0;
    double mu = 0.0;
    std::vector<double> xi;
};

/// min { mu + p' xi / alpha : xi + mu >= Z, xi >= 0 } solved as an LP.
/// mu is an alpha-quantile of Z.
AvarDual avar_dual(const FiniteDistribution& dist, double alpha);

/// Largest value over atoms with positive probability.
double worst_case(const FiniteDistribution& dist);

/// (1 - lambda) E[Z] + lambda AV@R_alpha(Z), with the worst case used for
/// alpha == 0.
double rho(const FiniteDistribution& dist, const RiskParams& params);

}  // namespace rddp::risk

#include "rddp/risk.hpp"

#include "rddp/lp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rddp::risk {

void FiniteDistribution::check() const {
    if (probs.empty()) throw std::invalid_argument("distribution has no atoms");
    if (probs.size() != values.size())
        throw std::invalid_argument("distribution probs and values differ in length");
    double total = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
        if (!(probs[i] >= 0.0)) throw std::invalid_argument("negative probability");
        if (!std::isfinite(values[i]) || std::abs(values[i]) > kMaxMagnitude)
            throw std::invalid_argument("value magnitude exceeds 1e6 or is not finite");
        total += probs[i];
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("probabilities do not sum to 1");
}

double FiniteDistribution::expectation() const {
    double e = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) e += probs[i] * values[i];
    return e;
}

namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::domain_error("AV@R level alpha must lie in (0, 1]");
}

}  // namespace

double avar_primal(const FiniteDistribution& dist, double alpha) {
    check_alpha(alpha);
    dist.check();
    std::vector<size_t> order(dist.values.size());
    std::iota(order.begin(), order.end(), size_t{0});
    // Ties by atom index; the optimum value does not depend on them.
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return dist.values[a] > dist.values[b]; });
    double mass = 1.0;
    double value = 0.0;
    for (size_t i : order) {
        if (mass <= 0.0) break;
        const double q = std::min(dist.probs[i] / alpha, mass);
        value += q * dist.values[i];
        mass -= q;
    }
    return value;
}

AvarDual avar_dual(const FiniteDistribution& dist, double alpha) {
    check_alpha(alpha);
    dist.check();
    const auto k = static_cast<Eigen::Index>(dist.values.size());
    // Variables: [mu, xi_0 .. xi_{k-1}]
    lp::Problem prob(k + 1);
    prob.objective[0] = 1.0;
    for (Eigen::Index i = 0; i < k; ++i) {
        prob.objective[i + 1] = dist.probs[static_cast<size_t>(i)] / alpha;
        prob.lower[i + 1] = 0.0;
    }
    prob.ge_matrix = Eigen::MatrixXd::Zero(k, k + 1);
    prob.ge_rhs.resize(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        prob.ge_matrix(i, 0) = 1.0;
        prob.ge_matrix(i, i + 1) = 1.0;
        prob.ge_rhs[i] = dist.values[static_cast<size_t>(i)];
    }
    const auto sol = lp::solve(prob);
    if (!sol.optimal()) throw std::runtime_error("AV@R dual LP failed: " + sol.message);
    AvarDual out;
    out.value = sol.objective;
    out.mu = sol.primal[0];
    out.xi.assign(sol.primal.data() + 1, sol.primal.data() + 1 + k);
    return out;
}

double worst_case(const FiniteDistribution& dist) {
    dist.check();
    double best = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < dist.values.size(); ++i)
        if (dist.probs[i] > 0.0) best = std::max(best, dist.values[i]);
    return best;
}

double rho(const FiniteDistribution& dist, const RiskParams& params) {
    dist.check();
    const double mean = dist.expectation();
    if (params.lambda == 0.0) return mean;
    const double tail = params.alpha > 0.0 ? avar_primal(dist, params.alpha) : worst_case(dist);
    return (1.0 - params.lambda) * mean + params.lambda * tail;
}

}  // namespace rddp::risk

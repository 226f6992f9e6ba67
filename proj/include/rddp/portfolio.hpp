#pragma once

#include "rddp/model.hpp"
#include "rddp/sim.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

/// Dynamic portfolio benchmark: three risky assets (large, mid and small
/// capitalization) plus cash, with returns predicted by an AR(1) market
/// state. Continuous state x = (holding_1, holding_2, holding_3, cash);
/// actions a = (buy_1, buy_2, buy_3, sell_1, sell_2, sell_3).
namespace rddp::portfolio {

inline constexpr int kAssets = 3;

struct PortfolioParams {
    Eigen::Vector3d a_r;
    Eigen::Vector3d b_r;
    double a_z = 0.0;
    double b_z = 0.0;
    /// Covariance of (e_1, e_2, e_3, v): log-return noise then market noise.
    Eigen::Matrix4d sigma;
    double r_f = 1.0;
    Eigen::Vector3d fee_buy;
    Eigen::Vector3d fee_sell;
    int grid_size = 19;
    int quad_points = 3;
    double grid_halfwidth_sd = 2.0;
    int horizon = 5;
    double initial_wealth = 1.0;
    double wealth_cap = 10.0;
    RiskParams risk;
    /// Give the market noise its own 3-point rule on its conditional law
    /// given the return noise (81 atoms) instead of its conditional mean (27).
    bool independent_market_noise = false;
};

/// Regression coefficients and noise covariance of the NYSE fit, r_f = 1.00042,
/// 19 market states, 3 quadrature points per dimension, 5 periods, fees of
/// 0.004 on every buy and sell, risk neutral.
PortfolioParams default_params();

/// Throws std::invalid_argument describing the first invalid parameter.
void check_params(const PortfolioParams& params);

/// sqrt(sigma_vv / (1 - b_z^2)); throws std::invalid_argument if |b_z| >= 1.
double stationary_sd(const PortfolioParams& params);

/// Uniform grid on [-w, w], w = grid_halfwidth_sd * stationary_sd. Odd size,
/// so the middle point is exactly 0.
std::vector<double> market_grid(const PortfolioParams& params);

/// Nearest grid index; ties go to the lower index.
int snap_to_grid(const std::vector<double>& grid, double z);

struct QuadratureNode {
    double prob = 0.0;
    Eigen::Vector3d r;     // gross returns
    Eigen::Vector3d e;     // log-return noise at the node
    double z_next = 0.0;
};

/// Tensor-product 3-point Gauss-Hermite rule for the return noise, correlated
/// through the Cholesky factor of its covariance. Matches the mean and
/// covariance of the log returns exactly.
std::vector<QuadratureNode> quadrature(const PortfolioParams& params, double z);

MdpModel build_instance(const PortfolioParams& params);

/// Index of the market state z = 0.
int initial_market_state(const PortfolioParams& params);

/// Fraction of post-trade wealth held in each of the four positions after
/// applying action a at holdings x (before returns).
Eigen::Vector4d post_trade_allocation(const PortfolioParams& params, const Vector& x, const Vector& a);

/// Simulation step drawing (e, v) from the joint normal instead of the
/// quadrature atoms. The market state is read from the grid point of d and
/// the next one is snapped to the grid. Exploratory use only.
StepFn continuous_dynamics(const PortfolioParams& params);

std::string params_to_json(const PortfolioParams& params);
PortfolioParams params_from_json(const std::string& text);

}  // namespace rddp::portfolio

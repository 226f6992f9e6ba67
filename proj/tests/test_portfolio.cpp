#include "rddp/bellman.hpp"
#include "rddp/portfolio.hpp"
#include "rddp/solver.hpp"

#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace rddp;
using namespace rddp::portfolio;
using namespace rddp::testing;

TEST_CASE("default parameters") {
    const auto p = default_params();
    CHECK(p.r_f == 1.00042);
    CHECK(p.b_z == 0.97);
    CHECK(p.a_z == 0.0);
    CHECK(p.a_r[2] == 0.0072);
    CHECK(p.b_r[1] == 0.0049);
    CHECK(p.sigma(0, 0) == 0.002894);
    CHECK(p.sigma(0, 1) == 0.003532);
    CHECK(p.sigma(1, 0) == 0.003532);
    CHECK(p.sigma(3, 3) == 0.0529);
    CHECK(p.grid_size == 19);
    CHECK(p.quad_points == 3);
    CHECK(p.horizon == 5);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(p.sigma);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-12);
    CHECK_NOTHROW(check_params(p));
}

TEST_CASE("parameter checks") {
    auto p = default_params();
    SUBCASE("even grid") {
        p.grid_size = 18;
        CHECK_THROWS_AS(check_params(p), std::invalid_argument);
    }
    SUBCASE("negative fee") {
        p.fee_buy[1] = -0.01;
        CHECK_THROWS_AS(check_params(p), std::invalid_argument);
    }
    SUBCASE("asymmetric covariance") {
        p.sigma(0, 1) += 1e-3;
        CHECK_THROWS_AS(check_params(p), std::invalid_argument);
    }
    SUBCASE("nonstationary market") {
        p.b_z = 1.0;
        CHECK_THROWS_AS(market_grid(p), std::invalid_argument);
        CHECK_THROWS_AS(stationary_sd(p), std::invalid_argument);
    }
}

TEST_CASE("market grid") {
    const auto p = default_params();
    const double sd = stationary_sd(p);
    CHECK(sd == doctest::Approx(std::sqrt(0.0529 / (1 - 0.97 * 0.97))).epsilon(1e-15));
    CHECK(sd == doctest::Approx(0.94609358).epsilon(1e-8));
    const auto grid = market_grid(p);
    REQUIRE(grid.size() == 19);
    CHECK(grid[9] == 0.0);
    CHECK(grid.front() == doctest::Approx(-2 * sd));
    CHECK(grid.back() == doctest::Approx(2 * sd));
    for (size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] - grid[i - 1] == doctest::Approx(4 * sd / 18));

    auto white = p;
    white.b_z = 0.0;
    CHECK(stationary_sd(white) == doctest::Approx(std::sqrt(0.0529)));
}

TEST_CASE("stationary deviation matches a long simulation of the market state") {
    const auto p = default_params();
    std::mt19937_64 rng(71);
    std::normal_distribution<double> normal(0.0, std::sqrt(p.sigma(3, 3)));
    double z = 0.0, s1 = 0.0, s2 = 0.0;
    const int burn = 1000, steps = 1000000;
    for (int i = 0; i < burn + steps; ++i) {
        z = p.a_z + p.b_z * z + normal(rng);
        if (i >= burn) {
            s1 += z;
            s2 += z * z;
        }
    }
    const double mean = s1 / steps;
    const double sd = std::sqrt(s2 / steps - mean * mean);
    CHECK(std::abs(sd / stationary_sd(p) - 1.0) <= 0.01);
}

TEST_CASE("snapping") {
    const std::vector<double> grid{-1.0, 0.0, 1.0};
    CHECK(snap_to_grid(grid, -5.0) == 0);
    CHECK(snap_to_grid(grid, 0.4) == 1);
    CHECK(snap_to_grid(grid, 0.5) == 1);  // tie goes to the lower index
    CHECK(snap_to_grid(grid, -0.5) == 0);
    CHECK(snap_to_grid(grid, 0.51) == 2);
}

TEST_CASE("quadrature moments") {
    const auto p = default_params();
    for (double z : {0.0, -1.2, 1.5}) {
        const auto q = quadrature(p, z);
        REQUIRE(q.size() == 27);
        double total = 0.0;
        Eigen::Vector3d mean = Eigen::Vector3d::Zero();
        for (const auto& node : q) {
            total += node.prob;
            mean += node.prob * node.r.array().log().matrix();
        }
        CHECK(std::abs(total - 1.0) <= 1e-12);
        const Eigen::Vector3d mu = p.a_r + p.b_r * z;
        CHECK((mean - mu).cwiseAbs().maxCoeff() <= 1e-12);
        Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
        for (const auto& node : q) {
            const Eigen::Vector3d dev = node.r.array().log().matrix() - mu;
            cov += node.prob * dev * dev.transpose();
        }
        CHECK((cov - p.sigma.topLeftCorner<3, 3>()).cwiseAbs().maxCoeff() <= 1e-10);
    }
    const auto q = quadrature(p, 0.4);
    const auto& center = q[13];
    CHECK(center.prob == doctest::Approx(8.0 / 27.0).epsilon(1e-15));
    CHECK(center.e.norm() == 0.0);
    CHECK((center.r - (p.a_r + p.b_r * 0.4).array().exp().matrix()).norm() <= 1e-15);
    CHECK(center.z_next == doctest::Approx(0.97 * 0.4));

    auto bad = p;
    bad.sigma(2, 2) = 0.0;
    bad.sigma(2, 0) = bad.sigma(0, 2) = bad.sigma(2, 1) = bad.sigma(1, 2) = 0.0;
    bad.sigma(0, 0) = 0.0;
    CHECK_THROWS_AS(quadrature(bad, 0.0), std::invalid_argument);
}

TEST_CASE("81-atom variant") {
    auto p = default_params();
    p.independent_market_noise = true;
    const auto q = quadrature(p, 0.0);
    REQUIRE(q.size() == 81);
    double total = 0.0, zmean = 0.0, zvar = 0.0;
    for (const auto& n : q) {
        total += n.prob;
        zmean += n.prob * n.z_next;
    }
    for (const auto& n : q) zvar += n.prob * (n.z_next - zmean) * (n.z_next - zmean);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(zmean) <= 1e-12);
    CHECK(zvar == doctest::Approx(p.sigma(3, 3)).epsilon(1e-10));
    const auto m = build_instance(p);
    CHECK(m.states[0].outcomes.size() == 81);
    CHECK(validate(m).empty());
}

TEST_CASE("instance structure") {
    const auto p = default_params();
    const auto m = build_instance(p);
    CHECK(validate(m).empty());
    CHECK(m.num_discrete() == 19);
    CHECK(m.n == 4);
    CHECK(m.m == 6);
    CHECK(m.horizon == 5);
    CHECK(m.initial_d == 9);
    CHECK(m.initial_x == (Vector(4) << 0, 0, 0, 1).finished());
    REQUIRE(m.state_box.has_value());
    for (const auto& st : m.states) {
        REQUIRE(st.outcomes.size() == 27);
        double total = 0.0;
        for (const auto& o : st.outcomes) {
            total += o.prob;
            CHECK((o.t_x.diagonal().array() > 0).all());
            CHECK(o.t_x.isDiagonal());
        }
        CHECK(std::abs(total - 1.0) <= 1e-12);
    }
    // The market state is persistent and the grid coarse: report the
    // snapping error for information.
    const auto grid = market_grid(p);
    double worst = 0.0;
    for (int d = 0; d < p.grid_size; ++d)
        for (const auto& q : quadrature(p, grid[d])) worst = std::max(worst, std::abs(q.z_next - grid[snap_to_grid(grid, q.z_next)]));
    MESSAGE("largest snapping error " << worst << ", grid step " << grid[1] - grid[0]);
    CHECK(worst <= grid[1] - grid[0]);
}

TEST_CASE("cash only step without fees") {
    auto p = default_params();
    p.fee_buy.setZero();
    p.fee_sell.setZero();
    const auto m = build_instance(p);
    const Vector a = Vector::Zero(6);
    for (const auto& o : m.states[9].outcomes) {
        const Vector xn = transition(o, m.initial_x, a);
        CHECK(xn.head(3).norm() == 0.0);
        CHECK(xn[3] == doctest::Approx(1.00042).epsilon(1e-15));
        CHECK(stage_cost(m, m.initial_x, a, xn) == doctest::Approx(-0.00042).epsilon(1e-12));
    }
}

TEST_CASE("wealth identity without fees") {
    auto p = default_params();
    p.fee_buy.setZero();
    p.fee_sell.setZero();
    p.grid_size = 5;
    const auto m = build_instance(p);
    Rng rng(72);
    for (int k = 0; k < 100; ++k) {
        const int d = uniform_int(rng, 0, 4);
        const auto& o = m.states[d].outcomes[uniform_int(rng, 0, 26)];
        Vector x(4), a(6);
        for (int i = 0; i < 4; ++i) x[i] = uniform(rng, 0, 2);
        for (int i = 0; i < 6; ++i) a[i] = uniform(rng, 0, 1);
        const Vector xn = transition(o, x, a);
        double expected = 0.0, net = 0.0;
        for (int i = 0; i < 3; ++i) {
            const double trade = a[i] - a[3 + i];
            expected += o.t_x(i, i) * (x[i] + trade);
            net += trade;
        }
        expected += p.r_f * (x[3] - net);
        CHECK(xn.sum() == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("trade constraints") {
    auto p = default_params();
    p.grid_size = 3;
    p.horizon = 1;
    const auto m = build_instance(p);
    const CutSet none(1, 3, 4);
    SUBCASE("zero wealth admits only the zero trade") {
        const auto sol = solve_stage(m, 0, 1, Vector::Zero(4), none);
        CHECK(sol.action.cwiseAbs().maxCoeff() <= 1e-9);
    }
    SUBCASE("no simultaneous buy and sell") {
        Rng rng(73);
        for (int k = 0; k < 30; ++k) {
            Vector x(4);
            for (int i = 0; i < 4; ++i) x[i] = uniform(rng, 0, 1);
            const auto a = solve_stage(m, 0, uniform_int(rng, 0, 2), x, none).action;
            for (int i = 0; i < 3; ++i) CHECK(std::min(a[i], a[3 + i]) <= 1e-7);
        }
    }
}

TEST_CASE("allocation helper") {
    const auto p = default_params();
    Vector x(4), a(6);
    x << 0, 0, 0, 1;
    a << 0, 0, 1.0 / 1.004, 0, 0, 0;
    const auto w = post_trade_allocation(p, x, a);
    CHECK(w[2] == doctest::Approx(1.0));
    CHECK(std::abs(w[3]) <= 1e-12);
}

TEST_CASE("params sidecar round trip") {
    auto p = default_params();
    p.risk = {0.2, 0.7};
    p.fee_sell[1] = 0.001;
    p.independent_market_noise = true;
    const auto back = params_from_json(params_to_json(p));
    CHECK(back.sigma == p.sigma);
    CHECK(back.a_r == p.a_r);
    CHECK(back.fee_sell == p.fee_sell);
    CHECK(back.risk == p.risk);
    CHECK(back.independent_market_noise);
    CHECK(params_to_json(back) == params_to_json(p));
}

TEST_CASE("continuous dynamics step") {
    const auto p = default_params();
    const auto step = continuous_dynamics(p);
    CounterRng rng(3, {1});
    Vector x(4), a = Vector::Zero(6);
    x << 0, 0, 0, 1;
    const auto [xn, dn] = step(0, 9, x, a, rng);
    CHECK(xn[3] == doctest::Approx(p.r_f));
    CHECK(dn >= 0);
    CHECK(dn < 19);
}

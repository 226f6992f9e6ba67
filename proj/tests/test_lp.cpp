#include "rddp/lp.hpp"

#include "support.hpp"

#include <doctest.h>

using namespace rddp;
using namespace rddp::testing;

TEST_CASE("one variable with a lower row") {
    lp::Problem p(1);
    p.objective[0] = 1.0;
    p.add_ge_row(Eigen::RowVectorXd::Ones(1), 1.0);
    const auto s = lp::solve(p);
    REQUIRE(s.status == lp::Status::Optimal);
    CHECK(s.primal[0] == doctest::Approx(1.0));
    CHECK(s.duals_ge[0] == doctest::Approx(1.0));
    CHECK(s.objective == doctest::Approx(1.0));
}

TEST_CASE("symmetric facet") {
    lp::Problem p(2);
    p.objective << -1.0, -1.0;
    p.lower.setZero();
    p.upper.setOnes();
    Eigen::RowVectorXd row(2);
    row << -1.0, -1.0;
    p.add_ge_row(row, -1.0);
    const auto s = lp::solve(p);
    REQUIRE(s.status == lp::Status::Optimal);
    CHECK(s.objective == doctest::Approx(-1.0));
    CHECK(s.primal.sum() == doctest::Approx(1.0));
    CHECK(check_optimality(p, s).empty());
}

TEST_CASE("equality rows and reduced costs") {
    // min x + 2y s.t. x + y = 3, 0 <= x <= 2, y >= 0  ->  x = 2, y = 1
    lp::Problem p(2);
    p.objective << 1.0, 2.0;
    p.lower << 0.0, 0.0;
    p.upper << 2.0, lp::kInf;
    Eigen::RowVectorXd row(2);
    row << 1.0, 1.0;
    p.add_eq_row(row, 3.0);
    const auto s = lp::solve(p);
    REQUIRE(s.status == lp::Status::Optimal);
    CHECK(s.primal[0] == doctest::Approx(2.0));
    CHECK(s.primal[1] == doctest::Approx(1.0));
    CHECK(s.objective == doctest::Approx(4.0));
    CHECK(s.duals_eq[0] == doctest::Approx(2.0));
    CHECK(s.reduced_costs[0] == doctest::Approx(-1.0));
    CHECK(s.reduced_costs[1] == doctest::Approx(0.0));
}

TEST_CASE("infeasible and unbounded problems") {
    SUBCASE("contradicting rows") {
        lp::Problem p(1);
        p.lower[0] = 0.0;
        p.upper[0] = 1.0;
        p.add_ge_row(Eigen::RowVectorXd::Ones(1), 2.0);
        CHECK(lp::solve(p).status == lp::Status::Infeasible);
    }
    SUBCASE("contradicting equalities") {
        lp::Problem p(2);
        Eigen::RowVectorXd row(2);
        row << 1.0, 1.0;
        p.add_eq_row(row, 1.0);
        p.add_eq_row(row, 2.0);
        CHECK(lp::solve(p).status == lp::Status::Infeasible);
    }
    SUBCASE("free direction") {
        lp::Problem p(2);
        p.objective << -1.0, 0.0;
        p.lower << 0.0, 0.0;
        Eigen::RowVectorXd row(2);
        row << 1.0, -1.0;
        p.add_ge_row(row, 0.0);
        CHECK(lp::solve(p).status == lp::Status::Unbounded);
    }
    SUBCASE("free variable without rows") {
        lp::Problem p(1);
        p.objective[0] = 1.0;
        CHECK(lp::solve(p).status == lp::Status::Unbounded);
    }
}

TEST_CASE("free variables and redundant equalities") {
    // min |x - 1| written as min t, t >= x - 1, t >= 1 - x, with a duplicated row.
    lp::Problem p(2);
    p.objective << 0.0, 1.0;
    Eigen::RowVectorXd r1(2), r2(2);
    r1 << -1.0, 1.0;
    r2 << 1.0, 1.0;
    p.add_ge_row(r1, -1.0);
    p.add_ge_row(r2, 1.0);
    Eigen::RowVectorXd e(2);
    e << 1.0, 0.0;
    p.add_eq_row(e, 0.25);
    p.add_eq_row(2.0 * e, 0.5);
    const auto s = lp::solve(p);
    REQUIRE(s.status == lp::Status::Optimal);
    CHECK(s.objective == doctest::Approx(0.75));
    CHECK(check_optimality(p, s).empty());
}

TEST_CASE("random LPs match vertex enumeration") {
    Rng rng(21);
    int optimal = 0, infeasible = 0;
    for (int trial = 0; trial < 150; ++trial) {
        const auto p = random_lp(rng, 6, 5);
        const double oracle = lp_vertex_enumeration(p);
        const auto s = lp::solve(p);
        if (std::isinf(oracle)) {
            CHECK(s.status == lp::Status::Infeasible);
            ++infeasible;
            continue;
        }
        REQUIRE(s.status == lp::Status::Optimal);
        ++optimal;
        CHECK(std::abs(s.objective - oracle) <= 1e-7 * (1.0 + std::abs(oracle)));
        const auto c = certify(p, s);
        CHECK(c.primal_violation <= 1e-8);
        CHECK(c.dual_sign_violation <= 1e-9);
        CHECK(c.duality_gap <= 1e-7);
        CHECK(c.slackness_violation <= 1e-7);
    }
    CHECK(optimal > 100);
    CHECK(infeasible > 0);
}

TEST_CASE("deterministic output") {
    Rng rng(22);
    for (int trial = 0; trial < 20; ++trial) {
        const auto p = random_lp(rng);
        const auto a = lp::solve(p);
        const auto b = lp::solve(p);
        CHECK(a.status == b.status);
        CHECK(a.iterations == b.iterations);
        if (a.optimal()) {
            CHECK(a.primal == b.primal);
            CHECK(a.duals_ge == b.duals_ge);
        }
    }
}

TEST_CASE("warm start after appending rows") {
    Rng rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        auto p = random_lp(rng, 6, 3);
        const auto first = lp::solve(p);
        if (!first.optimal()) continue;
        Eigen::RowVectorXd row(p.num_vars());
        for (Eigen::Index j = 0; j < row.size(); ++j) row[j] = uniform(rng, -1.0, 1.0);
        p.add_ge_row(row, row.dot(first.primal) + uniform(rng, -0.5, 0.5));
        const auto cold = lp::solve(p);
        const auto warm = lp::solve(p, first.basis);
        REQUIRE(cold.status == warm.status);
        if (cold.optimal()) {
            CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-9));
            CHECK(check_optimality(p, warm).empty());
        }
    }
}

TEST_CASE("degenerate cycling example") {
    // Beale's example, which cycles under textbook Dantzig pricing without
    // an anti-cycling rule. Written as min with >= rows.
    lp::Problem p(4);
    p.objective << -0.75, 150.0, -0.02, 6.0;
    p.lower.setZero();
    Eigen::RowVectorXd r1(4), r2(4), r3(4);
    r1 << -0.25, 60.0, 0.04, -9.0;
    r2 << -0.5, 90.0, 0.02, -3.0;
    r3 << 0.0, 0.0, -1.0, 0.0;
    p.add_ge_row(r1, 0.0);
    p.add_ge_row(r2, 0.0);
    p.add_ge_row(r3, -1.0);
    const auto s = lp::solve(p);
    REQUIRE(s.status == lp::Status::Optimal);
    CHECK(s.objective == doctest::Approx(-0.05));
}

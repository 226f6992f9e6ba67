#include "rddp/portfolio.hpp"

#include <json.hpp>

#include <cmath>
#include <stdexcept>

namespace rddp::portfolio {

PortfolioParams default_params() {
    PortfolioParams p;
    p.a_r << 0.0053, 0.0067, 0.0072;
    p.b_r << 0.0028, 0.0049, 0.0062;
    p.a_z = 0.0;
    p.b_z = 0.97;
    // clang-format off
    p.sigma <<  0.002894,  0.003532,  0.003910, -0.000115,
                0.003532,  0.004886,  0.005712, -0.000144,
                0.003910,  0.005712,  0.007259, -0.000163,
               -0.000115, -0.000144, -0.000163,  0.052900;
    // clang-format on
    p.r_f = 1.00042;
    p.fee_buy = Eigen::Vector3d::Constant(0.004);
    p.fee_sell = Eigen::Vector3d::Constant(0.004);
    p.grid_size = 19;
    p.quad_points = 3;
    p.grid_halfwidth_sd = 2.0;
    p.horizon = 5;
    p.initial_wealth = 1.0;
    p.wealth_cap = 10.0;
    p.risk = RiskParams{0.0, 1.0};
    return p;
}

void check_params(const PortfolioParams& p) {
    if (!(p.sigma - p.sigma.transpose()).isZero(1e-15)) throw std::invalid_argument("sigma is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(p.sigma);
    if (eig.eigenvalues().minCoeff() < -1e-12) throw std::invalid_argument("sigma is not positive semidefinite");
    if (p.grid_size < 1 || p.grid_size % 2 == 0) throw std::invalid_argument("grid_size must be odd");
    if (p.quad_points != 3) throw std::invalid_argument("only 3-point quadrature is supported");
    if ((p.fee_buy.array() < 0).any() || (p.fee_sell.array() < 0).any() || (p.fee_sell.array() >= 1).any())
        throw std::invalid_argument("fees must lie in [0, 1)");
    if (p.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    if (!(p.initial_wealth >= 0)) throw std::invalid_argument("initial wealth must be non-negative");
    if (!(p.wealth_cap > 0)) throw std::invalid_argument("wealth cap must be positive");
    if (!(p.r_f > 0)) throw std::invalid_argument("r_f must be positive");
    if (!(p.grid_halfwidth_sd > 0)) throw std::invalid_argument("grid half-width must be positive");
    if (!(p.risk.lambda >= 0 && p.risk.lambda <= 1 && p.risk.alpha >= 0 && p.risk.alpha <= 1))
        throw std::invalid_argument("risk parameters outside [0,1]");
    stationary_sd(p);
}

double stationary_sd(const PortfolioParams& p) {
    if (std::abs(p.b_z) >= 1.0) throw std::invalid_argument("market state process is not stationary (|b_z| >= 1)");
    return std::sqrt(p.sigma(3, 3) / (1.0 - p.b_z * p.b_z));
}

std::vector<double> market_grid(const PortfolioParams& p) {
    if (p.grid_size < 1 || p.grid_size % 2 == 0) throw std::invalid_argument("grid_size must be odd");
    const double w = p.grid_halfwidth_sd * stationary_sd(p);
    const int half = p.grid_size / 2;
    std::vector<double> grid(static_cast<size_t>(p.grid_size));
    for (int i = 0; i < p.grid_size; ++i) {
        // Symmetric construction keeps the middle point exactly 0.
        grid[static_cast<size_t>(i)] = half == 0 ? 0.0 : w * static_cast<double>(i - half) / half;
    }
    return grid;
}

int snap_to_grid(const std::vector<double>& grid, double z) {
    int best = 0;
    double best_dist = std::abs(z - grid[0]);
    for (size_t i = 1; i < grid.size(); ++i) {
        const double dist = std::abs(z - grid[i]);
        if (dist < best_dist) {
            best = static_cast<int>(i);
            best_dist = dist;
        }
    }
    return best;
}

std::vector<QuadratureNode> quadrature(const PortfolioParams& p, double z) {
    const Eigen::Matrix3d s_ee = p.sigma.topLeftCorner<3, 3>();
    Eigen::LLT<Eigen::Matrix3d> llt(s_ee);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("return covariance is not positive definite");
    const Eigen::Matrix3d chol = llt.matrixL();
    // E[v | e] = s_ve s_ee^-1 e
    const Eigen::RowVector3d reg = llt.solve(p.sigma.block<3, 1>(0, 3)).transpose();
    const double cond_var = std::max(0.0, p.sigma(3, 3) - reg.dot(p.sigma.block<3, 1>(0, 3)));

    const double root3 = std::sqrt(3.0);
    const double nodes[3] = {-root3, 0.0, root3};
    const double weights[3] = {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0};

    std::vector<QuadratureNode> out;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            for (int k = 0; k < 3; ++k) {
                const Eigen::Vector3d eta(nodes[i], nodes[j], nodes[k]);
                const Eigen::Vector3d e = chol * eta;
                const double w = weights[i] * weights[j] * weights[k];
                QuadratureNode q;
                q.e = e;
                q.r = (p.a_r + p.b_r * z + e).array().exp();
                const double v_mean = reg.dot(e);
                if (!p.independent_market_noise) {
                    q.prob = w;
                    q.z_next = p.a_z + p.b_z * z + v_mean;
                    out.push_back(q);
                } else {
                    for (int l = 0; l < 3; ++l) {
                        q.prob = w * weights[l];
                        q.z_next = p.a_z + p.b_z * z + v_mean + std::sqrt(cond_var) * nodes[l];
                        out.push_back(q);
                    }
                }
            }
        }
    }
    return out;
}

int initial_market_state(const PortfolioParams& p) { return p.grid_size / 2; }

MdpModel build_instance(const PortfolioParams& p) {
    check_params(p);
    constexpr int n = kAssets + 1;
    constexpr int m = 2 * kAssets;
    const auto grid = market_grid(p);

    MdpModel model;
    model.horizon = p.horizon;
    model.n = n;
    model.m = m;
    model.risk = p.risk;
    model.initial_d = initial_market_state(p);
    model.initial_x = Vector::Zero(n);
    model.initial_x[kAssets] = p.initial_wealth;
    // Cost is the reduction in total wealth: 1'(x - x').
    model.cost.c_a = Vector::Zero(m);
    model.cost.c_x = Vector::Ones(n);
    model.cost.c_n = -Vector::Ones(n);

    // Trade constraints, all ">=" rows of the form A a >= -x:
    //   cash after trades and fees >= 0, holding_i + buy_i - sell_i >= 0.
    StageConstraints con;
    con.a_mat = Matrix::Zero(n, m);
    con.x_mat = Matrix::Zero(n, n);
    con.b_vec = Vector::Zero(n);
    for (int i = 0; i < kAssets; ++i) {
        con.a_mat(0, i) = -(1.0 + p.fee_buy[i]);
        con.a_mat(0, kAssets + i) = 1.0 - p.fee_sell[i];
        con.a_mat(1 + i, i) = 1.0;
        con.a_mat(1 + i, kAssets + i) = -1.0;
        con.x_mat(1 + i, i) = 1.0;
    }
    con.x_mat(0, kAssets) = 1.0;
    con.sense.assign(n, RowSense::GreaterEqual);
    con.lower = Vector::Zero(m);
    con.upper = Vector::Constant(m, p.wealth_cap);

    double max_growth = p.r_f;
    for (int d = 0; d < p.grid_size; ++d) {
        DiscreteState st;
        st.constraints = con;
        for (const auto& q : quadrature(p, grid[static_cast<size_t>(d)])) {
            Outcome o;
            o.prob = q.prob;
            o.next_d = snap_to_grid(grid, q.z_next);
            o.t_x = Matrix::Zero(n, n);
            o.t_a = Matrix::Zero(n, m);
            for (int i = 0; i < kAssets; ++i) {
                o.t_x(i, i) = q.r[i];
                o.t_a(i, i) = q.r[i];
                o.t_a(i, kAssets + i) = -q.r[i];
                o.t_a(kAssets, i) = -p.r_f * (1.0 + p.fee_buy[i]);
                o.t_a(kAssets, kAssets + i) = p.r_f * (1.0 - p.fee_sell[i]);
                max_growth = std::max(max_growth, q.r[i]);
            }
            o.t_x(kAssets, kAssets) = p.r_f;
            o.u = Vector::Zero(n);
            st.outcomes.push_back(std::move(o));
        }
        model.states.push_back(std::move(st));
    }

    // Total wealth grows by at most the largest gross return per period and
    // every position is bounded by total wealth.
    StateBox box;
    box.lower = Vector::Zero(n);
    box.upper = Vector::Constant(n, p.initial_wealth * std::pow(max_growth, p.horizon));
    model.state_box = box;
    return model;
}

Eigen::Vector4d post_trade_allocation(const PortfolioParams& p, const Vector& x, const Vector& a) {
    Eigen::Vector4d pos;
    double cash = x[kAssets];
    for (int i = 0; i < kAssets; ++i) {
        pos[i] = x[i] + a[i] - a[kAssets + i];
        cash -= (1.0 + p.fee_buy[i]) * a[i] - (1.0 - p.fee_sell[i]) * a[kAssets + i];
    }
    pos[kAssets] = cash;
    const double total = pos.sum();
    return total > 0 ? Eigen::Vector4d(pos / total) : Eigen::Vector4d::Zero();
}

StepFn continuous_dynamics(const PortfolioParams& p) {
    check_params(p);
    const auto grid = market_grid(p);
    Eigen::LLT<Eigen::Matrix4d> llt(p.sigma);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("sigma is not positive definite");
    const Eigen::Matrix4d chol = llt.matrixL();
    return [p, grid, chol](int, int d, const Vector& x, const Vector& a, CounterRng& rng) {
        Eigen::Vector4d eta;
        for (int i = 0; i < 4; i += 2) {
            // Box-Muller
            const double u1 = 1.0 - rng.uniform();
            const double u2 = rng.uniform();
            const double rad = std::sqrt(-2.0 * std::log(u1));
            eta[i] = rad * std::cos(2.0 * M_PI * u2);
            eta[i + 1] = rad * std::sin(2.0 * M_PI * u2);
        }
        const Eigen::Vector4d noise = chol * eta;
        const double z = grid[static_cast<size_t>(d)];
        const Eigen::Vector3d r = (p.a_r + p.b_r * z + noise.head<3>()).array().exp();
        Vector next(kAssets + 1);
        double cash = x[kAssets];
        for (int i = 0; i < kAssets; ++i) {
            next[i] = r[i] * (x[i] + a[i] - a[kAssets + i]);
            cash -= (1.0 + p.fee_buy[i]) * a[i] - (1.0 - p.fee_sell[i]) * a[kAssets + i];
        }
        next[kAssets] = p.r_f * cash;
        return std::make_pair(next, snap_to_grid(grid, p.a_z + p.b_z * z + noise[3]));
    };
}

namespace {

using nlohmann::json;

template <class V>
json vec_json(const V& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

template <class V>
void vec_from(const json& j, V& v, const char* name) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != v.size())
        throw std::invalid_argument(std::string("bad array `") + name + "` in portfolio params");
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j[static_cast<size_t>(i)].get<double>();
}

}  // namespace

std::string params_to_json(const PortfolioParams& p) {
    json doc;
    doc["a_r"] = vec_json(p.a_r);
    doc["b_r"] = vec_json(p.b_r);
    doc["a_z"] = p.a_z;
    doc["b_z"] = p.b_z;
    json sig = json::array();
    for (int i = 0; i < 4; ++i) sig.push_back(vec_json(Eigen::Vector4d(p.sigma.row(i).transpose())));
    doc["sigma"] = sig;
    doc["r_f"] = p.r_f;
    doc["fee_buy"] = vec_json(p.fee_buy);
    doc["fee_sell"] = vec_json(p.fee_sell);
    doc["grid_size"] = p.grid_size;
    doc["quad_points"] = p.quad_points;
    doc["grid_halfwidth_sd"] = p.grid_halfwidth_sd;
    doc["horizon"] = p.horizon;
    doc["initial_wealth"] = p.initial_wealth;
    doc["wealth_cap"] = p.wealth_cap;
    doc["risk"] = {{"lambda", p.risk.lambda}, {"alpha", p.risk.alpha}};
    doc["independent_market_noise"] = p.independent_market_noise;
    return doc.dump(2) + "\n";
}

PortfolioParams params_from_json(const std::string& text) {
    const json doc = json::parse(text);
    PortfolioParams p = default_params();
    vec_from(doc.at("a_r"), p.a_r, "a_r");
    vec_from(doc.at("b_r"), p.b_r, "b_r");
    p.a_z = doc.at("a_z").get<double>();
    p.b_z = doc.at("b_z").get<double>();
    for (int i = 0; i < 4; ++i) {
        Eigen::Vector4d row;
        vec_from(doc.at("sigma").at(static_cast<size_t>(i)), row, "sigma");
        p.sigma.row(i) = row.transpose();
    }
    p.r_f = doc.at("r_f").get<double>();
    vec_from(doc.at("fee_buy"), p.fee_buy, "fee_buy");
    vec_from(doc.at("fee_sell"), p.fee_sell, "fee_sell");
    p.grid_size = doc.at("grid_size").get<int>();
    p.quad_points = doc.at("quad_points").get<int>();
    p.grid_halfwidth_sd = doc.at("grid_halfwidth_sd").get<double>();
    p.horizon = doc.at("horizon").get<int>();
    p.initial_wealth = doc.at("initial_wealth").get<double>();
    p.wealth_cap = doc.at("wealth_cap").get<double>();
    p.risk.lambda = doc.at("risk").at("lambda").get<double>();
    p.risk.alpha = doc.at("risk").at("alpha").get<double>();
    p.independent_market_noise = doc.value("independent_market_noise", false);
    return p;
}

}  // namespace rddp::portfolio

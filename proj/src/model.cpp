#include "rddp/model.hpp"

#include "rddp/lp.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace rddp {

using nlohmann::json;

namespace {

std::string dims(Eigen::Index r, Eigen::Index c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

bool all_finite(const Matrix& mat) { return mat.allFinite(); }

}  // namespace

std::vector<std::string> validate(const MdpModel& model) {
    std::vector<std::string> out;
    auto report = [&](std::string msg) { out.push_back(std::move(msg)); };

    if (model.horizon < 1) report("horizon must be >= 1");
    if (model.n < 1) report("n must be >= 1");
    if (model.m < 1) report("m must be >= 1");
    if (!(model.risk.lambda >= 0.0 && model.risk.lambda <= 1.0))
        report("risk.lambda outside [0,1]");
    if (!(model.risk.alpha >= 0.0 && model.risk.alpha <= 1.0))
        report("risk.alpha outside [0,1]");
    if (model.states.empty()) {
        report("model has no discrete states");
        return out;
    }
    const int nd = model.num_discrete();
    if (model.initial_d < 0 || model.initial_d >= nd) report("initial.d out of range");
    if (model.initial_x.size() != model.n) report("initial.x has wrong dimension");

    const auto& c = model.cost;
    if (c.c_a.size() != model.m) report("cost.ca has wrong dimension");
    if (c.c_x.size() != model.n) report("cost.cx has wrong dimension");
    if (c.c_n.size() != model.n) report("cost.cn has wrong dimension");

    if (model.state_box) {
        const auto& box = *model.state_box;
        if (box.lower.size() != model.n || box.upper.size() != model.n) {
            report("state_box has wrong dimension");
        } else {
            if (!all_finite(box.lower) || !all_finite(box.upper)) report("state_box must be finite");
            if ((box.lower.array() > box.upper.array()).any()) report("state_box bound order");
            if (model.initial_x.size() == model.n &&
                ((model.initial_x.array() < box.lower.array()).any() ||
                 (model.initial_x.array() > box.upper.array()).any()))
                report("initial.x outside state_box");
        }
    }

    for (int d = 0; d < nd; ++d) {
        const std::string where = "state " + std::to_string(d) + ": ";
        const auto& st = model.states[static_cast<size_t>(d)];
        const auto& con = st.constraints;
        const auto k = con.a_mat.rows();
        bool shapes_ok = true;
        if (con.a_mat.cols() != model.m && k > 0) {
            report(where + "A is " + dims(k, con.a_mat.cols()) + ", expected m columns");
            shapes_ok = false;
        }
        if (con.b_vec.size() != k) {
            report(where + "b length differs from rows of A");
            shapes_ok = false;
        }
        if (con.x_mat.rows() != k || (k > 0 && con.x_mat.cols() != model.n)) {
            report(where + "X is " + dims(con.x_mat.rows(), con.x_mat.cols()) + ", expected " +
                   dims(k, model.n));
            shapes_ok = false;
        }
        if (!con.sense.empty() && static_cast<Eigen::Index>(con.sense.size()) != k) {
            report(where + "sense length differs from rows of A");
            shapes_ok = false;
        }
        if (con.lower.size() != model.m || con.upper.size() != model.m) {
            report(where + "action bounds have wrong dimension");
            shapes_ok = false;
        } else {
            if (!all_finite(con.lower) || !all_finite(con.upper)) {
                report(where + "action bounds must be finite");
                shapes_ok = false;
            }
            for (Eigen::Index i = 0; i < model.m; ++i) {
                if (con.lower[i] > con.upper[i]) {
                    report(where + "bound order violated for action " + std::to_string(i));
                    shapes_ok = false;
                }
            }
        }
        if (!all_finite(con.a_mat) || !all_finite(con.b_vec) || !all_finite(con.x_mat)) {
            report(where + "constraint data not finite");
            shapes_ok = false;
        }

        if (st.outcomes.empty()) report(where + "no outcomes");
        double total = 0.0;
        for (size_t w = 0; w < st.outcomes.size(); ++w) {
            const auto& o = st.outcomes[w];
            const std::string ow = where + "outcome " + std::to_string(w) + ": ";
            if (!(o.prob >= 0.0) || o.prob > 1.0) report(ow + "probability outside [0,1]");
            total += o.prob;
            if (o.next_d < 0 || o.next_d >= nd) report(ow + "next_d out of range");
            if (o.t_x.rows() != model.n || o.t_x.cols() != model.n)
                report(ow + "Tx is " + dims(o.t_x.rows(), o.t_x.cols()));
            if (o.t_a.rows() != model.n || o.t_a.cols() != model.m)
                report(ow + "Ta is " + dims(o.t_a.rows(), o.t_a.cols()));
            if (o.u.size() != model.n) report(ow + "U has wrong dimension");
            if (!all_finite(o.t_x) || !all_finite(o.t_a) || !all_finite(o.u))
                report(ow + "transition data not finite");
        }
        if (!st.outcomes.empty() && std::abs(total - 1.0) > 1e-12)
            report(where + "outcome probabilities sum to " + std::to_string(total));

        if (shapes_ok && model.m > 0) {
            lp::Problem feas(model.m);
            for (Eigen::Index i = 0; i < k; ++i) {
                if (con.row_sense(i) == RowSense::Equal)
                    feas.add_eq_row(con.a_mat.row(i), con.b_vec[i]);
                else
                    feas.add_ge_row(con.a_mat.row(i), con.b_vec[i]);
            }
            feas.lower = con.lower;
            feas.upper = con.upper;
            const auto sol = lp::solve(feas);
            if (sol.status == lp::Status::Infeasible)
                report(where + "no admissible action at x = 0 (complete recourse smoke check)");
            else if (sol.status != lp::Status::Optimal)
                report(where + "admissibility check failed numerically");
        }
    }
    return out;
}

MdpModel drop_null_outcomes(MdpModel model) {
    for (auto& st : model.states) {
        std::erase_if(st.outcomes, [](const Outcome& o) { return o.prob == 0.0; });
    }
    return model;
}

double stage_cost(const MdpModel& model, const Vector& x, const Vector& a, const Vector& x_next) {
    return model.cost.c_a.dot(a) + model.cost.c_x.dot(x) + model.cost.c_n.dot(x_next);
}

Vector transition(const Outcome& w, const Vector& x, const Vector& a) {
    return w.t_x * x + w.t_a * a + w.u;
}

// ---------------------------------------------------------------------------
// Instance file (JSON)
// ---------------------------------------------------------------------------

namespace {

const json& field(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object())
        throw ModelParseError("expected object at `" + path + "`");
    auto it = obj.find(key);
    if (it == obj.end()) {
        const std::string full = path.empty() ? key : path + "." + key;
        throw ModelParseError("missing field `" + full + "`");
    }
    return *it;
}

double as_real(const json& j, const std::string& path) {
    if (j.is_number()) return j.get<double>();
    // Non-finite reals have no JSON literal; accept the usual spellings.
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    throw ModelParseError("expected number at `" + path + "`");
}

int as_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ModelParseError("expected integer at `" + path + "`");
    return j.get<int>();
}

Vector as_vector(const json& j, const std::string& path) {
    if (!j.is_array()) throw ModelParseError("expected array at `" + path + "`");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (size_t i = 0; i < j.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = as_real(j[i], path + "[" + std::to_string(i) + "]");
    return v;
}

Matrix as_matrix(const json& j, const std::string& path, Eigen::Index empty_cols) {
    if (!j.is_array()) throw ModelParseError("expected array of rows at `" + path + "`");
    if (j.empty()) return Matrix(0, empty_cols);
    const auto rows = static_cast<Eigen::Index>(j.size());
    Eigen::Index cols = -1;
    Matrix out;
    for (size_t r = 0; r < j.size(); ++r) {
        const auto rp = path + "[" + std::to_string(r) + "]";
        Vector row = as_vector(j[r], rp);
        if (cols < 0) {
            cols = row.size();
            out.resize(rows, cols);
        } else if (row.size() != cols) {
            throw ModelParseError("ragged matrix at `" + rp + "`");
        }
        out.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return out;
}

json real_json(double v) {
    if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
    return json(v);
}

json vector_json(const Vector& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(real_json(v[i]));
    return arr;
}

json matrix_json(const Matrix& mat) {
    json arr = json::array();
    for (Eigen::Index r = 0; r < mat.rows(); ++r) arr.push_back(vector_json(mat.row(r).transpose()));
    return arr;
}

}  // namespace

MdpModel load_model(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ModelParseError(std::string("malformed JSON: ") + e.what());
    }

    MdpModel model;
    model.horizon = as_int(field(doc, "horizon", ""), "horizon");
    model.n = as_int(field(doc, "n", ""), "n");
    model.m = as_int(field(doc, "m", ""), "m");

    const auto& risk = field(doc, "risk", "");
    model.risk.lambda = as_real(field(risk, "lambda", "risk"), "risk.lambda");
    model.risk.alpha = as_real(field(risk, "alpha", "risk"), "risk.alpha");

    const auto& init = field(doc, "initial", "");
    model.initial_d = as_int(field(init, "d", "initial"), "initial.d");
    model.initial_x = as_vector(field(init, "x", "initial"), "initial.x");

    const auto& cost = field(doc, "cost", "");
    model.cost.c_a = as_vector(field(cost, "ca", "cost"), "cost.ca");
    model.cost.c_x = as_vector(field(cost, "cx", "cost"), "cost.cx");
    model.cost.c_n = as_vector(field(cost, "cn", "cost"), "cost.cn");

    if (auto it = doc.find("state_box"); it != doc.end()) {
        StateBox box;
        box.lower = as_vector(field(*it, "lower", "state_box"), "state_box.lower");
        box.upper = as_vector(field(*it, "upper", "state_box"), "state_box.upper");
        model.state_box = std::move(box);
    }

    const auto& states = field(doc, "states", "");
    if (!states.is_array()) throw ModelParseError("expected array at `states`");
    for (size_t d = 0; d < states.size(); ++d) {
        const std::string sp = "states[" + std::to_string(d) + "]";
        DiscreteState st;
        const auto& con = field(states[d], "constraints", sp);
        const std::string cp = sp + ".constraints";
        st.constraints.a_mat = as_matrix(field(con, "A", cp), cp + ".A", model.m);
        st.constraints.b_vec = as_vector(field(con, "b", cp), cp + ".b");
        st.constraints.x_mat = as_matrix(field(con, "X", cp), cp + ".X", model.n);
        st.constraints.lower = as_vector(field(con, "l", cp), cp + ".l");
        st.constraints.upper = as_vector(field(con, "u", cp), cp + ".u");
        if (auto it = con.find("sense"); it != con.end()) {
            if (!it->is_array()) throw ModelParseError("expected array at `" + cp + ".sense`");
            for (size_t i = 0; i < it->size(); ++i) {
                const auto& s = (*it)[i];
                if (s == "eq")
                    st.constraints.sense.push_back(RowSense::Equal);
                else if (s == "ge")
                    st.constraints.sense.push_back(RowSense::GreaterEqual);
                else
                    throw ModelParseError("sense must be \"eq\" or \"ge\" at `" + cp + ".sense[" +
                                          std::to_string(i) + "]`");
            }
        }

        const auto& outs = field(states[d], "outcomes", sp);
        if (!outs.is_array()) throw ModelParseError("expected array at `" + sp + ".outcomes`");
        for (size_t w = 0; w < outs.size(); ++w) {
            const std::string op = sp + ".outcomes[" + std::to_string(w) + "]";
            Outcome o;
            o.prob = as_real(field(outs[w], "prob", op), op + ".prob");
            o.next_d = as_int(field(outs[w], "next_d", op), op + ".next_d");
            o.t_x = as_matrix(field(outs[w], "Tx", op), op + ".Tx", model.n);
            o.t_a = as_matrix(field(outs[w], "Ta", op), op + ".Ta", model.m);
            o.u = as_vector(field(outs[w], "U", op), op + ".U");
            st.outcomes.push_back(std::move(o));
        }
        model.states.push_back(std::move(st));
    }
    return drop_null_outcomes(std::move(model));
}

std::string save_model(const MdpModel& model) {
    json doc;
    doc["horizon"] = model.horizon;
    doc["n"] = model.n;
    doc["m"] = model.m;
    doc["risk"] = {{"lambda", model.risk.lambda}, {"alpha", model.risk.alpha}};
    doc["initial"] = {{"d", model.initial_d}, {"x", vector_json(model.initial_x)}};
    doc["cost"] = {{"ca", vector_json(model.cost.c_a)},
                   {"cx", vector_json(model.cost.c_x)},
                   {"cn", vector_json(model.cost.c_n)}};
    if (model.state_box) {
        doc["state_box"] = {{"lower", vector_json(model.state_box->lower)},
                            {"upper", vector_json(model.state_box->upper)}};
    }
    json states = json::array();
    for (const auto& st : model.states) {
        const auto& c = st.constraints;
        json con = {{"A", matrix_json(c.a_mat)},
                    {"b", vector_json(c.b_vec)},
                    {"X", matrix_json(c.x_mat)},
                    {"l", vector_json(c.lower)},
                    {"u", vector_json(c.upper)}};
        if (!c.sense.empty()) {
            json sense = json::array();
            for (auto s : c.sense) sense.push_back(s == RowSense::Equal ? "eq" : "ge");
            con["sense"] = std::move(sense);
        }
        json outs = json::array();
        for (const auto& o : st.outcomes) {
            outs.push_back({{"prob", o.prob},
                            {"next_d", o.next_d},
                            {"Tx", matrix_json(o.t_x)},
                            {"Ta", matrix_json(o.t_a)},
                            {"U", vector_json(o.u)}});
        }
        states.push_back({{"constraints", std::move(con)}, {"outcomes", std::move(outs)}});
    }
    doc["states"] = std::move(states);
    return doc.dump(1) + "\n";
}

MdpModel load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_model(buf.str());
}

void save_model_file(const MdpModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write model file " + path);
    out << save_model(model);
}

}  // namespace rddp

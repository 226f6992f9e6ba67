#include "rddp/value.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rddp {

CutSet::CutSet(int horizon, int num_discrete, int n)
    : horizon_(horizon), num_d_(num_discrete), n_(n),
      cuts_(static_cast<size_t>(std::max(0, horizon * num_discrete))) {}

size_t CutSet::slot(int t, int d) const {
    if (t < 0 || t >= horizon_ || d < 0 || d >= num_d_)
        throw std::out_of_range("cut set index (t=" + std::to_string(t) + ", d=" + std::to_string(d) +
                                ") out of range");
    return static_cast<size_t>(t) * static_cast<size_t>(num_d_) + static_cast<size_t>(d);
}

double CutSet::evaluate(int t, int d, const Vector& x) const {
    if (t == horizon_) return 0.0;
    const auto& list = cuts_[slot(t, d)];
    double best = kNoBound;
    for (const auto& c : list) best = std::max(best, c(x));
    return best;
}

void CutSet::add_cut(int t, int d, Cut cut) {
    const auto s = slot(t, d);
    if (cut.q_x.size() != n_) throw std::invalid_argument("cut slope has wrong dimension");
    if (!cut.q_x.allFinite() || !std::isfinite(cut.q_c)) throw std::invalid_argument("cut is not finite");
    cuts_[s].push_back(std::move(cut));
}

const std::vector<Cut>& CutSet::cuts(int t, int d) const { return cuts_[slot(t, d)]; }

size_t CutSet::total_cuts() const {
    size_t total = 0;
    for (const auto& l : cuts_) total += l.size();
    return total;
}

namespace {

std::string real17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void CutSet::write_csv(std::ostream& out) const {
    out << "iter,t,d,qc";
    for (int i = 0; i < n_; ++i) out << ",qx_" << i;
    out << '\n';
    for (int t = 0; t < horizon_; ++t) {
        for (int d = 0; d < num_d_; ++d) {
            for (const auto& c : cuts(t, d)) {
                out << c.origin.iteration << ',' << t << ',' << d << ',' << real17(c.q_c);
                for (int i = 0; i < n_; ++i) out << ',' << real17(c.q_x[i]);
                out << '\n';
            }
        }
    }
}

void CutSet::write_csv_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write cut file " + path);
    write_csv(out);
}

CutSet CutSet::read_csv(std::istream& in, int horizon, int num_discrete) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("cut file is empty");
    const auto n = static_cast<int>(std::count(line.begin(), line.end(), ',')) - 3;
    if (line.rfind("iter,t,d,qc", 0) != 0 || n < 1) throw std::runtime_error("bad cut file header");
    CutSet set(horizon, num_discrete, n);
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (static_cast<int>(cells.size()) != n + 4)
            throw std::runtime_error("cut file line " + std::to_string(lineno) + ": wrong column count");
        try {
            Cut c;
            c.origin.iteration = std::stoi(cells[0]);
            const int t = std::stoi(cells[1]);
            const int d = std::stoi(cells[2]);
            c.origin.t = t;
            c.origin.d = d;
            c.q_c = std::stod(cells[3]);
            c.q_x.resize(n);
            for (int i = 0; i < n; ++i) c.q_x[i] = std::stod(cells[static_cast<size_t>(4 + i)]);
            set.add_cut(t, d, std::move(c));
        } catch (const std::logic_error& e) {
            throw std::runtime_error("cut file line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return set;
}

CutSet CutSet::read_csv_file(const std::string& path, int horizon, int num_discrete) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open cut file " + path);
    return read_csv(in, horizon, num_discrete);
}

bool CutSet::operator==(const CutSet& other) const {
    if (horizon_ != other.horizon_ || num_d_ != other.num_d_ || n_ != other.n_) return false;
    for (size_t s = 0; s < cuts_.size(); ++s) {
        const auto& a = cuts_[s];
        const auto& b = other.cuts_[s];
        if (a.size() != b.size()) return false;
        for (size_t i = 0; i < a.size(); ++i)
            if (a[i].q_c != b[i].q_c || a[i].q_x != b[i].q_x || a[i].origin.iteration != b[i].origin.iteration)
                return false;
    }
    return true;
}

}  // namespace rddp

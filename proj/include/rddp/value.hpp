#pragma once

#include "rddp/model.hpp"

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace rddp {

/// Where a cut was generated.
struct CutOrigin {
    int iteration = 0;
    int t = 0;
    int d = 0;
    Vector x_hat;
};

/// Affine minorant x -> q_x' x + q_c of a stage value function.
struct Cut {
    Vector q_x;
    double q_c = 0.0;
    CutOrigin origin;

    double operator()(const Vector& x) const { return q_x.dot(x) + q_c; }
};

/// Returned by CutSet::evaluate when no cut is stored for (t, d): no bound
/// has been established there.
inline constexpr double kNoBound = -std::numeric_limits<double>::infinity();

/// Working sets of cuts, one list per stage t in [0, horizon) and discrete
/// state d. The value at t == horizon is identically zero.
class CutSet {
public:
    CutSet() = default;
    CutSet(int horizon, int num_discrete, int n);

    int horizon() const { return horizon_; }
    int num_discrete() const { return num_d_; }
    int dim() const { return n_; }

    /// max over stored cuts; 0 at t == horizon; kNoBound if empty.
    double evaluate(int t, int d, const Vector& x) const;

    /// Appends a cut. Throws std::invalid_argument on dimension mismatch or
    /// non-finite entries, std::out_of_range on a bad (t, d).
    void add_cut(int t, int d, Cut cut);

    const std::vector<Cut>& cuts(int t, int d) const;
    bool empty(int t, int d) const { return cuts(t, d).empty(); }
    size_t total_cuts() const;

    /// CSV: header `iter,t,d,qc,qx_0,...,qx_{n-1}`, reals with 17 significant
    /// digits, one line per cut ordered by (t, d, insertion).
    void write_csv(std::ostream& out) const;
    void write_csv_file(const std::string& path) const;
    static CutSet read_csv(std::istream& in, int horizon, int num_discrete);
    static CutSet read_csv_file(const std::string& path, int horizon, int num_discrete);

    bool operator==(const CutSet& other) const;

private:
    size_t slot(int t, int d) const;

    int horizon_ = 0;
    int num_d_ = 0;
    int n_ = 0;
    std::vector<std::vector<Cut>> cuts_;
};

}  // namespace rddp

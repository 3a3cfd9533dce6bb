#include "inclusion_lab/lp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace inclusion_lab::lp {

namespace {

// Tableau layout: rows 0..m-1 are constraints, row m is the objective row
// holding reduced costs; column `cols` is the right-hand side.
class Tableau {
public:
    Tableau(Eigen::Index rows, Eigen::Index cols)
        : t_(Matrix::Zero(rows + 1, cols + 1)), basis_(static_cast<std::size_t>(rows), -1),
          rows_(rows), cols_(cols)
    {
    }

    double& at(Eigen::Index r, Eigen::Index c) { return t_(r, c); }
    double rhs(Eigen::Index r) const { return t_(r, cols_); }
    double& obj(Eigen::Index c) { return t_(rows_, c); }
    double objective_value() const { return -t_(rows_, cols_); }

    void pivot(Eigen::Index r, Eigen::Index c)
    {
        const double p = t_(r, c);
        t_.row(r) /= p;
        for (Eigen::Index i = 0; i <= rows_; ++i) {
            if (i == r) continue;
            const double f = t_(i, c);
            if (f != 0.0) t_.row(i) -= f * t_.row(r);
        }
        basis_[static_cast<std::size_t>(r)] = c;
    }

    // Runs Bland-rule simplex over the columns flagged in `allowed`.
    // Returns false if the objective is unbounded below.
    bool optimize(const std::vector<bool>& allowed, const Options& opt, int& pivots)
    {
        while (true) {
            Eigen::Index enter = -1;
            for (Eigen::Index c = 0; c < cols_; ++c) {
                if (allowed[static_cast<std::size_t>(c)] && t_(rows_, c) < -opt.pivot_tol) {
                    enter = c;
                    break;
                }
            }
            if (enter < 0) return true;

            Eigen::Index leave = -1;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (Eigen::Index r = 0; r < rows_; ++r) {
                const double a = t_(r, enter);
                if (a <= opt.pivot_tol) continue;
                const double ratio = t_(r, cols_) / a;
                if (ratio < best_ratio - 1e-15
                    || (std::abs(ratio - best_ratio) <= 1e-15 && leave >= 0
                        && basis_[static_cast<std::size_t>(r)]
                               < basis_[static_cast<std::size_t>(leave)])) {
                    best_ratio = ratio;
                    leave = r;
                }
            }
            if (leave < 0) return false;
            pivot(leave, enter);
            if (++pivots > opt.max_pivots) {
                throw std::runtime_error("lp: pivot limit exceeded");
            }
        }
    }

    Eigen::Index basic(Eigen::Index r) const { return basis_[static_cast<std::size_t>(r)]; }
    Eigen::Index rows() const { return rows_; }
    Eigen::Index cols() const { return cols_; }

private:
    Matrix t_;
    std::vector<Eigen::Index> basis_;
    Eigen::Index rows_;
    Eigen::Index cols_;
};

} // namespace

const char* to_string(Status s)
{
    switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    }
    return "?";
}

Result solve(const Problem& problem, const Options& options)
{
    const Eigen::Index m = problem.A_eq.rows();
    const Eigen::Index n = problem.A_eq.cols();
    if (problem.cost.size() != n || problem.b_eq.size() != m) {
        throw std::invalid_argument("lp: inconsistent problem dimensions");
    }
    if (!problem.cost.allFinite() || !problem.A_eq.allFinite() || !problem.b_eq.allFinite()) {
        throw std::domain_error("lp: non-finite problem data");
    }

    // Columns: n structural, then m artificials.
    Tableau tab(m, n + m);
    for (Eigen::Index r = 0; r < m; ++r) {
        const double sign = problem.b_eq(r) < 0.0 ? -1.0 : 1.0;
        for (Eigen::Index c = 0; c < n; ++c) tab.at(r, c) = sign * problem.A_eq(r, c);
        tab.at(r, n + r) = 1.0;
        tab.at(r, n + m) = sign * problem.b_eq(r);
    }
    for (Eigen::Index r = 0; r < m; ++r) tab.pivot(r, n + r);

    // Phase 1: minimize the sum of artificials.
    for (Eigen::Index c = 0; c <= n + m; ++c) tab.obj(c) = 0.0;
    for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index c = 0; c <= n + m; ++c) {
            if (c >= n && c < n + m) continue;
            tab.obj(c) -= tab.at(r, c);
        }
    }

    int pivots = 0;
    std::vector<bool> allowed(static_cast<std::size_t>(n + m), true);
    tab.optimize(allowed, options, pivots);

    Result result;
    result.infeasibility = tab.objective_value();
    const double scale = 1.0 + problem.b_eq.cwiseAbs().sum();
    if (result.infeasibility > options.feasibility_tol * scale) {
        result.status = Status::infeasible;
        return result;
    }

    // Drive remaining artificials out of the basis where possible; rows where
    // no structural column can pivot are redundant and get zeroed out.
    for (Eigen::Index r = 0; r < m; ++r) {
        if (tab.basic(r) < n) continue;
        for (Eigen::Index c = 0; c < n; ++c) {
            if (std::abs(tab.at(r, c)) > 1e-9) {
                tab.pivot(r, c);
                break;
            }
        }
    }

    // Phase 2 objective row: reduced costs for the original cost vector.
    for (Eigen::Index c = 0; c <= n + m; ++c) tab.obj(c) = 0.0;
    for (Eigen::Index c = 0; c < n; ++c) tab.obj(c) = problem.cost(c);
    for (Eigen::Index r = 0; r < m; ++r) {
        const Eigen::Index b = tab.basic(r);
        if (b >= n) continue;
        const double cb = problem.cost(b);
        if (cb == 0.0) continue;
        for (Eigen::Index c = 0; c <= n + m; ++c) tab.obj(c) -= cb * tab.at(r, c);
    }

    for (Eigen::Index c = n; c < n + m; ++c) allowed[static_cast<std::size_t>(c)] = false;
    if (!tab.optimize(allowed, options, pivots)) {
        result.status = Status::unbounded;
        return result;
    }

    result.status = Status::optimal;
    result.x = Vector::Zero(n);
    for (Eigen::Index r = 0; r < m; ++r) {
        const Eigen::Index b = tab.basic(r);
        if (b < n) result.x(b) = std::max(0.0, tab.rhs(r));
    }
    result.objective = problem.cost.dot(result.x);
    return result;
}

} // namespace inclusion_lab::lp

#pragma once

// Dense two-phase simplex for the tiny linear programs that show up in
// hull queries: min c^T x  s.t.  A x = b,  x >= 0.
//
// Pivoting follows Bland's rule (lowest eligible index enters, lowest basic
// index leaves on ratio ties), so the method cannot cycle.

#include "inclusion_lab/types.hpp"

namespace inclusion_lab::lp {

enum class Status { optimal, infeasible, unbounded };

struct Problem {
    Vector cost;  // n
    Matrix A_eq;  // m x n
    Vector b_eq;  // m
};

struct Result {
    Status status = Status::infeasible;
    Vector x;
    double objective = 0.0;
    /// Sum of absolute residuals left after phase 1.
    double infeasibility = 0.0;
};

struct Options {
    double pivot_tol = 1e-12;
    /// Phase-1 residual (scaled by 1 + |b|_1) above which the problem is
    /// declared infeasible.
    double feasibility_tol = 1e-9;
    int max_pivots = 100000;
};

Result solve(const Problem& problem, const Options& options = {});

const char* to_string(Status s);

} // namespace inclusion_lab::lp

#pragma once

// Piecewise-C1 candidate Lyapunov functions and their Clarke generalized
// gradients. Gradients live in R^{n+1}: the state gradient followed by the
// partial derivative in time.

#include "inclusion_lab/hull.hpp"
#include "inclusion_lab/types.hpp"

#include <string>
#include <vector>

namespace inclusion_lab {

struct CandidatePiece {
    std::string label;
    /// Signed region margin: >= 0 on the piece's region. A piece counts as
    /// active at (x, t) when margin >= -activation_tol.
    ScalarFn margin;
    ScalarFn value;
    /// Returns [grad_x V; dV/dt].
    VectorFn gradient;
};

struct LyapunovCandidate {
    Eigen::Index dim_state = 0;
    std::vector<CandidatePiece> pieces;
    /// Asserts Clarke regularity (true for pointwise maxima of C1 functions).
    bool regular = false;
    ScalarFn lower_bound;  // positive definite, V >= lower_bound
    ScalarFn upper_bound;  // positive definite, V <= upper_bound
    ScalarFn decay;        // positive semidefinite W in dV <= -W

    /// Value of the piece with the largest margin.
    double value(const Vector& x, double t) const;
    double W(const Vector& x, double t = 0.0) const;
};

/// Single C1 piece covering everything.
LyapunovCandidate smooth_candidate(Eigen::Index dim, ScalarFn value, VectorFn gradient);

/// V = max_i V_i with margins V_i - V; regular by construction.
LyapunovCandidate max_candidate(Eigen::Index dim, std::vector<std::pair<ScalarFn, VectorFn>> parts);

/// co{ gradient_i(x, t) : piece i active }. Exact for max-type candidates;
/// an outer approximation for general piecewise-C1 ones. Throws
/// CoverageViolated when no piece is active.
Polytope clarke_gradient(const LyapunovCandidate& V, const Vector& x, double t,
                         double activation_tol = kDefaultTol);

struct BoundsViolation {
    Vector x;
    double t;
    enum class Side { lower, upper } side;
    double lower_bound;
    double value;
    double upper_bound;
};

struct BoundsReport {
    bool pass = true;
    std::size_t checked = 0;
    std::vector<BoundsViolation> violations;
};

/// Checks lower_bound(x) <= V(x, t) <= upper_bound(x) within 1e-12 on the grid.
BoundsReport check_bounds(const LyapunovCandidate& V, const std::vector<std::pair<Vector, double>>& grid);

/// Central-difference gradient of the active piece's value, in R^{n+1}.
Vector finite_difference_gradient(const LyapunovCandidate& V, const Vector& x, double t, double h = 1e-6);

} // namespace inclusion_lab

#pragma once

// Generalized time derivatives of candidate Lyapunov functions along
// set-valued right-hand sides, the reduction of an inclusion by a family of
// candidates, and grid certification of non-strict Lyapunov conditions.
//
//   upper:   max_{p in dV} max_{q in F} p.[q;1]
//   lower:   min_{p in dV} max_{q in F} p.[q;1]
//   reduced: lower derivative over F~ = {q in F : p.[q;1] constant over each dV_i}

#include "inclusion_lab/hull.hpp"
#include "inclusion_lab/nonsmooth.hpp"
#include "inclusion_lab/types.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace inclusion_lab {

struct UpperDerivative {
    double value;
    std::size_t p_index;  // vertex of dV
    std::size_t q_index;  // vertex of F
    Vector p;
    Vector q;
};

struct LowerDerivative {
    double value;
    /// Minimizing element of dV.
    Vector p;
    /// False when V is not flagged regular: the lower derivative then carries
    /// no stability meaning.
    bool regular;
};

/// Bilinear in (p, q), so the max over the product of hulls is attained at a
/// vertex pair; ties go to the lowest (p, q) index pair.
UpperDerivative gen_deriv_upper(const LyapunovCandidate& V, const Polytope& F, const Vector& x, double t,
                                double activation_tol = kDefaultTol);

LowerDerivative gen_deriv_lower(const LyapunovCandidate& V, const Polytope& F, const Vector& x, double t,
                                double activation_tol = kDefaultTol);

struct DerivativeSample {
    Vector x;
    double t;
    double upper;
    double lower;
    Vector witness_p;
    Vector witness_q;
    /// -W(x) - upper; nonnegative when the non-strict condition holds here.
    double margin;
};

DerivativeSample generalized_derivative(const LyapunovCandidate& V, const Polytope& F, const Vector& x,
                                        double t, double activation_tol = kDefaultTol);

/// Real number or -infinity, kept as a tagged value.
class ExtendedReal {
public:
    static ExtendedReal finite(double v) { return ExtendedReal(false, v); }
    static ExtendedReal neg_infinity() { return ExtendedReal(true, 0.0); }

    bool is_neg_infinity() const { return neg_inf_; }
    /// Throws std::logic_error for -infinity.
    double value() const;
    bool operator<=(double rhs) const { return neg_inf_ || value_ <= rhs; }
    std::string str() const;

private:
    ExtendedReal(bool neg_inf, double v) : neg_inf_(neg_inf), value_(v) {}
    bool neg_inf_;
    double value_;
};

/// F~ = F intersected with affine equalities on the convex weights of F's
/// vertices: for each candidate and each vertex p_j of its Clarke gradient,
/// (p_j - p_1).[q;1] = 0.
class ReducedInclusion {
public:
    ReducedInclusion(Polytope base, Matrix equalities, double tol = kDefaultTol);

    const Polytope& base() const { return base_; }
    /// r x |vertices| rows acting on convex weights; rows are unit-normalised.
    const Matrix& equalities() const { return equalities_; }

    bool empty() const;
    std::optional<double> max_linear(const Vector& c) const;
    std::optional<double> min_linear(const Vector& c) const;

    /// Vertices of F~ (basic feasible weight vectors), deduplicated. Empty
    /// when F~ is empty.
    std::vector<Vector> vertices() const;
    std::optional<Polytope> as_polytope() const;

private:
    std::optional<double> optimize(const Vector& c, double sense) const;

    Polytope base_;
    Matrix equalities_;
    double tol_;
};

ReducedInclusion reduce_inclusion(std::span<const LyapunovCandidate> family, const Polytope& F, const Vector& x,
                                  double t, double activation_tol = kDefaultTol);

/// min_{p in dV} max_{q in F~} p.[q;1]; -infinity when F~ is empty.
ExtendedReal gen_deriv_reduced(const LyapunovCandidate& V, std::span<const LyapunovCandidate> family,
                               const Polytope& F, const Vector& x, double t,
                               double activation_tol = kDefaultTol);

enum class DerivativeMode { upper, lower, reduced };

const char* to_string(DerivativeMode mode);
DerivativeMode parse_mode(const std::string& text);

using SetValuedMap = std::function<Polytope(const Vector&, double)>;

struct GridPoint {
    Vector x;
    double t = 0.0;
};

struct GridAxis {
    double min;
    double max;
    std::size_t count;
};

/// Tensor grid; axes beyond the state dimension are not allowed except one
/// trailing time axis.
std::vector<GridPoint> make_grid(const std::vector<GridAxis>& axes, Eigen::Index dim_state, double t0 = 0.0);

struct EvaluationRecord {
    /// Derivative value; -infinity only in reduced mode.
    ExtendedReal value = ExtendedReal::finite(0.0);
    double W = 0.0;
    /// -W - value (+infinity for an empty reduced set).
    double margin = 0.0;
    bool pass = true;
};

struct PointResult {
    std::size_t grid_index;
    std::vector<EvaluationRecord> subsystems;  // in subfamily key order
    EvaluationRecord union_hull;
};

struct SubsystemSummary {
    int index;  // -1 for the union hull
    std::size_t passed = 0;
    std::size_t failed = 0;
    double worst_margin = 0.0;
    std::size_t worst_grid_index = 0;
};

struct CertificationReport {
    std::string grid_description;
    DerivativeMode mode = DerivativeMode::upper;
    double tol = kDefaultTol;
    std::vector<GridPoint> grid;
    std::vector<int> keys;
    std::vector<SubsystemSummary> subsystems;
    SubsystemSummary union_hull{-1};
    std::vector<PointResult> points;
    std::vector<std::string> warnings;
    std::string note;

    bool subsystems_pass() const;
    bool union_pass() const { return union_hull.failed == 0; }
    bool all_pass() const { return subsystems_pass() && union_pass(); }
};

struct CertifyOptions {
    DerivativeMode mode = DerivativeMode::upper;
    double tol = kDefaultTol;
    double activation_tol = kDefaultTol;
    /// Candidate family for reduced mode; empty means {V}.
    std::vector<LyapunovCandidate> family;
    unsigned threads = 0;
    std::string grid_description;
};

/// Checks derivative(x, t) <= -W(x) + tol for every grid point, every
/// subsystem map and the union hull of all of them. Grid-empirical only.
CertificationReport certify(const LyapunovCandidate& V, const std::map<int, SetValuedMap>& subfamilies,
                            const std::vector<GridPoint>& grid, const CertifyOptions& options = {});

} // namespace inclusion_lab

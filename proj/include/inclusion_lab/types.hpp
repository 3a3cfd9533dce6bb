#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>

namespace inclusion_lab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Scalar callback on (x, t), used for Lyapunov bounds and region margins.
using ScalarFn = std::function<double(const Vector&, double)>;
/// Vector callback on (x, t).
using VectorFn = std::function<Vector(const Vector&, double)>;
/// Boolean predicate on (x, t).
using Predicate = std::function<bool(const Vector&, double)>;

inline constexpr double kDefaultTol = 1e-9;

// Error types. Library code throws; the CLI maps them onto exit codes.

/// The queried point is not in the convex hull (beyond tolerance).
class NotInHull : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No region/piece covers the queried point.
class CoverageViolated : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A switching signal returned an index with no matching subsystem.
class UnknownIndex : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A declared null set is hit by a positive fraction of uniform samples.
class NullSetNotNegligible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Equivalent control undefined: both sided normal speeds vanish.
class DegenerateSliding : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

inline void require_finite(const Vector& v, const char* what)
{
    if (!v.allFinite()) {
        throw std::domain_error(std::string(what) + ": non-finite input");
    }
}

inline void require_dim(Eigen::Index got, Eigen::Index want, const char* what)
{
    if (got != want) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (got "
                                    + std::to_string(got) + ", expected "
                                    + std::to_string(want) + ")");
    }
}

/// Appends 1 to a state-space vector, the lift q -> [q; 1] used to pair
/// velocities with gradients that carry a time partial.
inline Vector lift_time(const Vector& q)
{
    Vector out(q.size() + 1);
    out.head(q.size()) = q;
    out(q.size()) = 1.0;
    return out;
}

} // namespace inclusion_lab

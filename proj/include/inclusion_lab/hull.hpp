#pragma once

// Vertex-represented convex polytopes and the small convex-geometry kernel
// used throughout: support values, distance/membership, Caratheodory
// reduction, union hulls and the min-max of a bilinear form over two hulls.

#include "inclusion_lab/types.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace inclusion_lab {

/// co(vertices) for a finite, nonempty vertex list. Duplicate and redundant
/// vertices are allowed and never change query results.
class Polytope {
public:
    explicit Polytope(std::vector<Vector> vertices);
    static Polytope singleton(Vector v);

    Eigen::Index dim() const { return dim_; }
    std::size_t size() const { return vertices_.size(); }
    const std::vector<Vector>& vertices() const { return vertices_; }
    const Vector& vertex(std::size_t i) const { return vertices_[i]; }

    /// dim x size matrix with one vertex per column.
    Matrix matrix() const;

    /// Largest pairwise vertex distance (the set's diameter).
    double diameter() const;

private:
    std::vector<Vector> vertices_;
    Eigen::Index dim_;
};

struct ConvexWeights {
    std::vector<std::size_t> indices;
    std::vector<double> weights;

    /// Checks |indices| = |weights|, weights >= -1e-12, sum within 1e-12 of 1.
    bool valid() const;
    Vector combine(const Polytope& P) const;
};

struct SupportResult {
    double value;
    std::size_t witness;
};

/// max_v c.v over the vertices; ties go to the lowest index.
SupportResult support(const Polytope& P, const Vector& direction);

struct NearestPoint {
    Vector point;
    double distance;
    ConvexWeights weights;
};

/// Euclidean projection of q onto co(P) by Wolfe's minimum-norm-point
/// active-set iteration over the simplex of convex weights.
NearestPoint nearest_point(const Polytope& P, const Vector& q);

double distance(const Polytope& P, const Vector& q);

bool contains(const Polytope& P, const Vector& q, double tol = kDefaultTol);

/// Rewrites q as a convex combination of at most dim+1 vertices.
/// Throws NotInHull when q is farther than 1e-9 from co(P).
ConvexWeights caratheodory_reduce(const Polytope& P, const Vector& q);

/// Reduces an existing convex representation by repeatedly removing an
/// affinely dependent support point. The represented point is unchanged.
ConvexWeights caratheodory_reduce(const Polytope& P, const ConvexWeights& start);

/// Hull of the union: the concatenation of all vertex lists.
Polytope union_hull(std::span<const Polytope> parts);

/// co(A) within tol of co(B), checked vertex by vertex.
bool hull_subset(const Polytope& A, const Polytope& B, double tol = kDefaultTol);

/// Smallest eps with co(A) inside co(B) + eps*ball, i.e. the largest
/// vertex-to-hull distance.
double excess(const Polytope& A, const Polytope& B);

double hausdorff(const Polytope& A, const Polytope& B);

struct MinMaxResult {
    double value;
    /// Minimizing point of co(Pp) and its weights over Pp's vertices.
    Vector argmin;
    ConvexWeights weights;
};

/// min over p in co(Pp) of max over q in co(Qq) of p.q, solved as a linear
/// program over convex weights of Pp with an epigraph variable.
MinMaxResult min_of_convex_max_detailed(const Polytope& Pp, const Polytope& Qq);

double min_of_convex_max(const Polytope& Pp, const Polytope& Qq);

/// Polytope of lifted points [q; 1] for each vertex q.
Polytope lift_time(const Polytope& F);

} // namespace inclusion_lab

#include "inclusion_lab/hull.hpp"

#include "inclusion_lab/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace inclusion_lab {

Polytope::Polytope(std::vector<Vector> vertices) : vertices_(std::move(vertices))
{
    if (vertices_.empty()) throw std::invalid_argument("Polytope: empty vertex list");
    dim_ = vertices_.front().size();
    if (dim_ <= 0) throw std::invalid_argument("Polytope: dimension must be positive");
    for (const auto& v : vertices_) {
        require_dim(v.size(), dim_, "Polytope");
        require_finite(v, "Polytope");
    }
}

Polytope Polytope::singleton(Vector v) { return Polytope(std::vector<Vector>{std::move(v)}); }

Matrix Polytope::matrix() const
{
    Matrix M(dim_, static_cast<Eigen::Index>(vertices_.size()));
    for (std::size_t i = 0; i < vertices_.size(); ++i) M.col(static_cast<Eigen::Index>(i)) = vertices_[i];
    return M;
}

double Polytope::diameter() const
{
    double d = 0.0;
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        for (std::size_t j = i + 1; j < vertices_.size(); ++j) {
            d = std::max(d, (vertices_[i] - vertices_[j]).norm());
        }
    }
    return d;
}

bool ConvexWeights::valid() const
{
    if (indices.size() != weights.size()) return false;
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= -1e-12)) return false;
        sum += w;
    }
    return std::abs(sum - 1.0) <= 1e-12;
}

Vector ConvexWeights::combine(const Polytope& P) const
{
    Vector out = Vector::Zero(P.dim());
    for (std::size_t k = 0; k < indices.size(); ++k) out += weights[k] * P.vertex(indices[k]);
    return out;
}

SupportResult support(const Polytope& P, const Vector& direction)
{
    require_dim(direction.size(), P.dim(), "support");
    require_finite(direction, "support");
    SupportResult best{direction.dot(P.vertex(0)), 0};
    for (std::size_t i = 1; i < P.size(); ++i) {
        const double v = direction.dot(P.vertex(i));
        if (v > best.value) best = {v, i};
    }
    return best;
}

namespace {

// Minimizer of |B a| over the affine hull {sum a = 1} of B's columns.
Vector affine_minimizer(const Matrix& B)
{
    const Eigen::Index k = B.cols();
    Matrix kkt = Matrix::Zero(k + 1, k + 1);
    kkt.topLeftCorner(k, k) = B.transpose() * B;
    kkt.block(0, k, k, 1).setOnes();
    kkt.block(k, 0, 1, k).setOnes();
    Vector rhs = Vector::Zero(k + 1);
    rhs(k) = 1.0;
    Vector sol = kkt.fullPivLu().solve(rhs);
    return sol.head(k);
}

} // namespace

NearestPoint nearest_point(const Polytope& P, const Vector& q)
{
    require_dim(q.size(), P.dim(), "nearest_point");
    require_finite(q, "nearest_point");

    const std::size_t m = P.size();
    const Eigen::Index d = P.dim();
    Matrix pts(d, static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) pts.col(static_cast<Eigen::Index>(i)) = P.vertex(i) - q;

    Vector norms2 = pts.colwise().squaredNorm().transpose();
    Eigen::Index start = 0;
    for (Eigen::Index i = 1; i < norms2.size(); ++i) {
        if (norms2(i) < norms2(start)) start = i;
    }
    const double scale2 = std::max(norms2.maxCoeff(), 1e-300);

    std::vector<Eigen::Index> corral{start};
    std::vector<double> lambda{1.0};
    Vector x = pts.col(start);

    const auto gather = [&](const std::vector<Eigen::Index>& idx) {
        Matrix B(d, static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) B.col(static_cast<Eigen::Index>(k)) = pts.col(idx[k]);
        return B;
    };

    const int max_major = std::max<int>(50, static_cast<int>(10 * d * static_cast<Eigen::Index>(m)));
    constexpr double kWeightTol = 1e-12;

    for (int iter = 0; iter < max_major; ++iter) {
        const double xx = x.squaredNorm();
        if (xx <= 1e-30 * scale2) break;

        const Vector dots = pts.transpose() * x;
        Eigen::Index j = 0;
        for (Eigen::Index i = 1; i < dots.size(); ++i) {
            if (dots(i) < dots(j)) j = i;
        }
        if (xx - dots(j) <= 1e-12 * scale2) break;
        if (std::find(corral.begin(), corral.end(), j) != corral.end()) break;

        corral.push_back(j);
        lambda.push_back(0.0);

        for (std::size_t minor = 0; minor <= corral.size() + 1; ++minor) {
            const Vector alpha = affine_minimizer(gather(corral));
            bool interior = true;
            for (Eigen::Index k = 0; k < alpha.size(); ++k) {
                if (!(alpha(k) > kWeightTol)) interior = false;
            }
            if (interior) {
                for (std::size_t k = 0; k < lambda.size(); ++k) lambda[k] = alpha(static_cast<Eigen::Index>(k));
                break;
            }
            double theta = 1.0;
            std::size_t drop = 0;
            for (std::size_t k = 0; k < lambda.size(); ++k) {
                const double a = alpha(static_cast<Eigen::Index>(k));
                if (a <= kWeightTol) {
                    const double denom = lambda[k] - a;
                    const double th = denom > 0.0 ? lambda[k] / denom : 0.0;
                    if (th < theta) {
                        theta = th;
                        drop = k;
                    }
                }
            }
            for (std::size_t k = 0; k < lambda.size(); ++k) {
                lambda[k] = theta * alpha(static_cast<Eigen::Index>(k)) + (1.0 - theta) * lambda[k];
            }
            lambda[drop] = 0.0;
            std::vector<Eigen::Index> kept;
            std::vector<double> kept_lambda;
            for (std::size_t k = 0; k < lambda.size(); ++k) {
                if (lambda[k] > kWeightTol) {
                    kept.push_back(corral[k]);
                    kept_lambda.push_back(lambda[k]);
                }
            }
            corral = std::move(kept);
            lambda = std::move(kept_lambda);
        }

        const double total = std::accumulate(lambda.begin(), lambda.end(), 0.0);
        for (double& l : lambda) l /= total;
        Vector next = Vector::Zero(d);
        for (std::size_t k = 0; k < corral.size(); ++k) next += lambda[k] * pts.col(corral[k]);
        const double improvement = xx - next.squaredNorm();
        x = next;
        if (improvement < 1e-14 * scale2) break;
    }

    NearestPoint out;
    out.weights.indices.assign(corral.begin(), corral.end());
    out.weights.weights = lambda;
    // Sort by vertex index for deterministic output.
    std::vector<std::size_t> order(corral.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return corral[a] < corral[b]; });
    for (std::size_t k = 0; k < order.size(); ++k) {
        out.weights.indices[k] = static_cast<std::size_t>(corral[order[k]]);
        out.weights.weights[k] = lambda[order[k]];
    }
    out.point = out.weights.combine(P);
    out.distance = (out.point - q).norm();
    return out;
}

double distance(const Polytope& P, const Vector& q) { return nearest_point(P, q).distance; }

bool contains(const Polytope& P, const Vector& q, double tol)
{
    if (tol < 0.0) throw std::invalid_argument("contains: negative tolerance");
    return distance(P, q) <= tol;
}

ConvexWeights caratheodory_reduce(const Polytope& P, const ConvexWeights& start)
{
    if (start.indices.size() != start.weights.size() || start.indices.empty()) {
        throw std::invalid_argument("caratheodory_reduce: malformed weights");
    }
    const Eigen::Index d = P.dim();
    std::vector<std::size_t> idx;
    std::vector<double> w;
    for (std::size_t k = 0; k < start.indices.size(); ++k) {
        if (start.indices[k] >= P.size()) throw std::out_of_range("caratheodory_reduce: vertex index");
        if (start.weights[k] > 0.0) {
            idx.push_back(start.indices[k]);
            w.push_back(start.weights[k]);
        }
    }
    if (idx.empty()) throw std::invalid_argument("caratheodory_reduce: no positive weight");
    const Vector target = [&]() -> Vector {
        Vector acc = Vector::Zero(d);
        for (std::size_t k = 0; k < idx.size(); ++k) acc += w[k] * P.vertex(idx[k]);
        return acc / std::accumulate(w.begin(), w.end(), 0.0);
    }();

    while (idx.size() > 1) {
        const auto k = static_cast<Eigen::Index>(idx.size());
        Matrix M(d + 1, k);
        for (Eigen::Index c = 0; c < k; ++c) {
            M.col(c).head(d) = P.vertex(idx[static_cast<std::size_t>(c)]);
            M(d, c) = 1.0;
        }
        Eigen::FullPivLU<Matrix> lu(M);
        lu.setThreshold(1e-10);
        if (lu.rank() == k) break;

        Vector mu = lu.kernel().col(0);
        if (mu.maxCoeff() <= 0.0) mu = -mu;
        double step = std::numeric_limits<double>::infinity();
        std::size_t drop = 0;
        for (std::size_t c = 0; c < idx.size(); ++c) {
            const double m = mu(static_cast<Eigen::Index>(c));
            if (m > 0.0 && w[c] / m < step) {
                step = w[c] / m;
                drop = c;
            }
        }
        std::vector<std::size_t> next_idx;
        std::vector<double> next_w;
        for (std::size_t c = 0; c < idx.size(); ++c) {
            const double nw = c == drop ? 0.0 : w[c] - step * mu(static_cast<Eigen::Index>(c));
            if (nw > 0.0) {
                next_idx.push_back(idx[c]);
                next_w.push_back(nw);
            }
        }
        idx = std::move(next_idx);
        w = std::move(next_w);
    }

    // Polish the weights on the final (affinely independent) support set.
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x /= total;
    if (idx.size() > 1) {
        const auto k = static_cast<Eigen::Index>(idx.size());
        Matrix B(d, k);
        for (Eigen::Index c = 0; c < k; ++c) B.col(c) = P.vertex(idx[static_cast<std::size_t>(c)]) - target;
        const Vector alpha = affine_minimizer(B);
        if ((alpha.array() >= 0.0).all()) {
            Vector current(k);
            for (Eigen::Index c = 0; c < k; ++c) current(c) = w[static_cast<std::size_t>(c)];
            if ((B * alpha).norm() < (B * current).norm()) {
                for (Eigen::Index c = 0; c < k; ++c) w[static_cast<std::size_t>(c)] = alpha(c);
            }
        }
    }

    std::vector<std::size_t> order(idx.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return idx[a] < idx[b]; });
    ConvexWeights out;
    for (std::size_t o : order) {
        out.indices.push_back(idx[o]);
        out.weights.push_back(w[o]);
    }
    return out;
}

ConvexWeights caratheodory_reduce(const Polytope& P, const Vector& q)
{
    const NearestPoint np = nearest_point(P, q);
    if (np.distance > 1e-9) throw NotInHull("caratheodory_reduce: not in hull");
    return caratheodory_reduce(P, np.weights);
}

Polytope union_hull(std::span<const Polytope> parts)
{
    if (parts.empty()) throw std::invalid_argument("union_hull: empty list");
    std::vector<Vector> all;
    const Eigen::Index d = parts.front().dim();
    for (const auto& p : parts) {
        require_dim(p.dim(), d, "union_hull");
        all.insert(all.end(), p.vertices().begin(), p.vertices().end());
    }
    return Polytope(std::move(all));
}

bool hull_subset(const Polytope& A, const Polytope& B, double tol)
{
    require_dim(A.dim(), B.dim(), "hull_subset");
    for (const auto& v : A.vertices()) {
        if (!contains(B, v, tol)) return false;
    }
    return true;
}

double excess(const Polytope& A, const Polytope& B)
{
    require_dim(A.dim(), B.dim(), "excess");
    const Matrix Bm = B.matrix();
    double worst = 0.0;
    for (const auto& v : A.vertices()) {
        // The hull is at least as close as its nearest vertex; skip the
        // projection when that already cannot raise the maximum.
        const double vertex_dist = std::sqrt((Bm.colwise() - v).colwise().squaredNorm().minCoeff());
        if (vertex_dist <= worst) continue;
        worst = std::max(worst, distance(B, v));
    }
    return worst;
}

double hausdorff(const Polytope& A, const Polytope& B) { return std::max(excess(A, B), excess(B, A)); }

MinMaxResult min_of_convex_max_detailed(const Polytope& Pp, const Polytope& Qq)
{
    require_dim(Qq.dim(), Pp.dim(), "min_of_convex_max");
    const auto m = static_cast<Eigen::Index>(Pp.size());
    const auto k = static_cast<Eigen::Index>(Qq.size());
    const Matrix gram = Pp.matrix().transpose() * Qq.matrix();  // m x k

    // Variables: lambda (m), gamma+, gamma-, slack (k).
    const Eigen::Index n = m + 2 + k;
    lp::Problem prob;
    prob.cost = Vector::Zero(n);
    prob.cost(m) = 1.0;
    prob.cost(m + 1) = -1.0;
    prob.A_eq = Matrix::Zero(k + 1, n);
    prob.b_eq = Vector::Zero(k + 1);
    for (Eigen::Index j = 0; j < k; ++j) {
        prob.A_eq.block(j, 0, 1, m) = gram.col(j).transpose();
        prob.A_eq(j, m) = -1.0;
        prob.A_eq(j, m + 1) = 1.0;
        prob.A_eq(j, m + 2 + j) = 1.0;
    }
    prob.A_eq.block(k, 0, 1, m).setOnes();
    prob.b_eq(k) = 1.0;

    const lp::Result res = lp::solve(prob);
    if (res.status != lp::Status::optimal) {
        throw std::runtime_error(std::string("min_of_convex_max: LP ") + lp::to_string(res.status));
    }

    MinMaxResult out;
    double total = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) total += res.x(i);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (res.x(i) > 0.0) {
            out.weights.indices.push_back(static_cast<std::size_t>(i));
            out.weights.weights.push_back(res.x(i) / total);
        }
    }
    out.argmin = out.weights.combine(Pp);
    out.value = support(Qq, out.argmin).value;
    return out;
}

double min_of_convex_max(const Polytope& Pp, const Polytope& Qq) { return min_of_convex_max_detailed(Pp, Qq).value; }

Polytope lift_time(const Polytope& F)
{
    std::vector<Vector> lifted;
    lifted.reserve(F.size());
    for (const auto& v : F.vertices()) lifted.push_back(inclusion_lab::lift_time(v));
    return Polytope(std::move(lifted));
}

} // namespace inclusion_lab

#include "inclusion_lab/lyap.hpp"

#include "inclusion_lab/lp.hpp"
#include "inclusion_lab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace inclusion_lab {

UpperDerivative gen_deriv_upper(const LyapunovCandidate& V, const Polytope& F, const Vector& x, double t,
                                double activation_tol)
{
    require_dim(F.dim(), V.dim_state, "gen_deriv_upper");
    const Polytope dV = clarke_gradient(V, x, t, activation_tol);
    UpperDerivative best{-std::numeric_limits<double>::infinity(), 0, 0, {}, {}};
    for (std::size_t i = 0; i < dV.size(); ++i) {
        for (std::size_t j = 0; j < F.size(); ++j) {
            const double v = dV.vertex(i).dot(lift_time(F.vertex(j)));
            if (v > best.value) best = {v, i, j, {}, {}};
        }
    }
    best.p = dV.vertex(best.p_index);
    best.q = F.vertex(best.q_index);
    return best;
}

LowerDerivative gen_deriv_lower(const LyapunovCandidate& V, const Polytope& F, const Vector& x, double t,
                                double activation_tol)
{
    require_dim(F.dim(), V.dim_state, "gen_deriv_lower");
    const Polytope dV = clarke_gradient(V, x, t, activation_tol);
    const MinMaxResult mm = min_of_convex_max_detailed(dV, lift_time(F));
    return {mm.value, mm.argmin, V.regular};
}

DerivativeSample generalized_derivative(const LyapunovCandidate& V, const Polytope& F, const Vector& x, double t,
                                        double activation_tol)
{
    const UpperDerivative up = gen_deriv_upper(V, F, x, t, activation_tol);
    const LowerDerivative lo = gen_deriv_lower(V, F, x, t, activation_tol);
    // The LP optimum can exceed the vertex max by rounding only.
    const double lower = std::min(lo.value, up.value);
    return {x, t, up.value, lower, up.p, up.q, -V.W(x, t) - up.value};
}

double ExtendedReal::value() const
{
    if (neg_inf_) throw std::logic_error("ExtendedReal: value of -infinity");
    return value_;
}

std::string ExtendedReal::str() const
{
    if (neg_inf_) return "-inf";
    std::ostringstream os;
    os.precision(17);
    os << value_;
    return os.str();
}

ReducedInclusion::ReducedInclusion(Polytope base, Matrix equalities, double tol)
    : base_(std::move(base)), equalities_(std::move(equalities)), tol_(tol)
{
    if (equalities_.rows() > 0) require_dim(equalities_.cols(), static_cast<Eigen::Index>(base_.size()), "ReducedInclusion");
    for (Eigen::Index r = 0; r < equalities_.rows(); ++r) {
        const double n = equalities_.row(r).norm();
        if (n > 0.0) equalities_.row(r) /= n;
    }
}

std::optional<double> ReducedInclusion::optimize(const Vector& c, double sense) const
{
    const auto K = static_cast<Eigen::Index>(base_.size());
    const Eigen::Index r = equalities_.rows();
    lp::Problem prob;
    prob.cost = Vector::Zero(K);
    for (Eigen::Index k = 0; k < K; ++k) prob.cost(k) = sense * c.dot(base_.vertex(static_cast<std::size_t>(k)));
    prob.A_eq = Matrix::Zero(r + 1, K);
    prob.A_eq.row(0).setOnes();
    if (r > 0) prob.A_eq.bottomRows(r) = equalities_;
    prob.b_eq = Vector::Zero(r + 1);
    prob.b_eq(0) = 1.0;
    lp::Options opt;
    opt.feasibility_tol = tol_;
    const lp::Result res = lp::solve(prob, opt);
    if (res.status != lp::Status::optimal) return std::nullopt;
    return sense * res.objective;
}

bool ReducedInclusion::empty() const { return !optimize(Vector::Zero(base_.dim()), 1.0).has_value(); }

std::optional<double> ReducedInclusion::max_linear(const Vector& c) const
{
    require_dim(c.size(), base_.dim(), "ReducedInclusion::max_linear");
    return optimize(c, -1.0);
}

std::optional<double> ReducedInclusion::min_linear(const Vector& c) const
{
    require_dim(c.size(), base_.dim(), "ReducedInclusion::min_linear");
    return optimize(c, 1.0);
}

std::vector<Vector> ReducedInclusion::vertices() const
{
    // Deduplicate F's vertices first; the constraint columns move with them.
    std::vector<std::size_t> uniq;
    for (std::size_t k = 0; k < base_.size(); ++k) {
        bool dup = false;
        for (std::size_t u : uniq) {
            if ((base_.vertex(k) - base_.vertex(u)).norm() <= 1e-14 * (1.0 + base_.vertex(u).norm())) {
                dup = true;
                break;
            }
        }
        if (!dup) uniq.push_back(k);
    }
    const auto K = static_cast<Eigen::Index>(uniq.size());
    const Eigen::Index r = equalities_.rows();
    Matrix A(r + 1, K);
    A.row(0).setOnes();
    for (Eigen::Index c = 0; c < K; ++c) {
        if (r > 0) A.block(1, c, r, 1) = equalities_.col(static_cast<Eigen::Index>(uniq[static_cast<std::size_t>(c)]));
    }
    Vector b = Vector::Zero(r + 1);
    b(0) = 1.0;

    const Eigen::Index max_support = std::min<Eigen::Index>(K, r + 1);
    std::vector<Vector> found;
    std::vector<Eigen::Index> subset;
    std::size_t visited = 0;

    const auto consider = [&] {
        const auto s = static_cast<Eigen::Index>(subset.size());
        Matrix As(r + 1, s);
        for (Eigen::Index c = 0; c < s; ++c) As.col(c) = A.col(subset[static_cast<std::size_t>(c)]);
        Eigen::ColPivHouseholderQR<Matrix> qr(As);
        qr.setThreshold(1e-12);
        if (qr.rank() < s) return;
        const Vector mu = qr.solve(b);
        if ((As * mu - b).norm() > tol_) return;
        if ((mu.array() < -1e-12).any()) return;
        Vector q = Vector::Zero(base_.dim());
        for (Eigen::Index c = 0; c < s; ++c) {
            q += std::max(0.0, mu(c)) * base_.vertex(uniq[static_cast<std::size_t>(subset[static_cast<std::size_t>(c)])]);
        }
        const double total = mu.cwiseMax(0.0).sum();
        q /= total;
        for (const auto& v : found) {
            if ((v - q).norm() <= 1e-12 * (1.0 + v.norm())) return;
        }
        found.push_back(std::move(q));
    };

    // Recursive enumeration of supports of size 1..max_support.
    const std::function<void(Eigen::Index, Eigen::Index)> recurse = [&](Eigen::Index start, Eigen::Index remaining) {
        if (remaining == 0) {
            if (++visited > 2000000) throw std::runtime_error("ReducedInclusion: vertex enumeration too large");
            consider();
            return;
        }
        for (Eigen::Index c = start; c <= K - remaining; ++c) {
            subset.push_back(c);
            recurse(c + 1, remaining - 1);
            subset.pop_back();
        }
    };
    for (Eigen::Index s = 1; s <= max_support; ++s) recurse(0, s);
    return found;
}

std::optional<Polytope> ReducedInclusion::as_polytope() const
{
    auto v = vertices();
    if (v.empty()) return std::nullopt;
    return Polytope(std::move(v));
}

ReducedInclusion reduce_inclusion(std::span<const LyapunovCandidate> family, const Polytope& F, const Vector& x,
                                  double t, double activation_tol)
{
    std::vector<Vector> rows;
    for (const auto& Vi : family) {
        require_dim(F.dim(), Vi.dim_state, "reduce_inclusion");
        const Polytope dV = clarke_gradient(Vi, x, t, activation_tol);
        for (std::size_t j = 1; j < dV.size(); ++j) {
            const Vector diff = dV.vertex(j) - dV.vertex(0);
            if (diff.norm() == 0.0) continue;
            Vector row(static_cast<Eigen::Index>(F.size()));
            for (std::size_t k = 0; k < F.size(); ++k) row(static_cast<Eigen::Index>(k)) = diff.dot(lift_time(F.vertex(k)));
            rows.push_back(std::move(row));
        }
    }
    Matrix E(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(F.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) E.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
    return ReducedInclusion(F, std::move(E));
}

ExtendedReal gen_deriv_reduced(const LyapunovCandidate& V, std::span<const LyapunovCandidate> family,
                               const Polytope& F, const Vector& x, double t, double activation_tol)
{
    const ReducedInclusion reduced = reduce_inclusion(family, F, x, t, activation_tol);
    const auto set = reduced.as_polytope();
    if (!set) return ExtendedReal::neg_infinity();
    const Polytope dV = clarke_gradient(V, x, t, activation_tol);
    return ExtendedReal::finite(min_of_convex_max(dV, lift_time(*set)));
}

const char* to_string(DerivativeMode mode)
{
    switch (mode) {
    case DerivativeMode::upper: return "upper";
    case DerivativeMode::lower: return "lower";
    case DerivativeMode::reduced: return "reduced";
    }
    return "?";
}

DerivativeMode parse_mode(const std::string& text)
{
    if (text == "upper") return DerivativeMode::upper;
    if (text == "lower") return DerivativeMode::lower;
    if (text == "reduced") return DerivativeMode::reduced;
    throw std::invalid_argument("unknown derivative mode '" + text + "' (expected upper, lower or reduced)");
}

std::vector<GridPoint> make_grid(const std::vector<GridAxis>& axes, Eigen::Index dim_state, double t0)
{
    const auto n_axes = static_cast<Eigen::Index>(axes.size());
    if (n_axes != dim_state && n_axes != dim_state + 1) {
        throw std::invalid_argument("make_grid: expected " + std::to_string(dim_state) + " state axes (plus an optional time axis), got "
                                    + std::to_string(axes.size()));
    }
    std::size_t total = 1;
    for (const auto& a : axes) {
        if (a.count == 0 || !(a.max >= a.min) || !std::isfinite(a.min) || !std::isfinite(a.max)) {
            throw std::invalid_argument("make_grid: malformed axis");
        }
        total *= a.count;
    }
    const auto coord = [](const GridAxis& a, std::size_t i) {
        if (a.count == 1) return a.min;
        if (i + 1 == a.count) return a.max;
        return a.min + (a.max - a.min) * static_cast<double>(i) / static_cast<double>(a.count - 1);
    };

    std::vector<GridPoint> grid;
    grid.reserve(total);
    std::vector<std::size_t> idx(axes.size(), 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
        GridPoint p{Vector(dim_state), t0};
        for (Eigen::Index k = 0; k < dim_state; ++k) p.x(k) = coord(axes[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(k)]);
        if (n_axes == dim_state + 1) p.t = coord(axes.back(), idx.back());
        grid.push_back(std::move(p));
        for (std::size_t k = axes.size(); k-- > 0;) {
            if (++idx[k] < axes[k].count) break;
            idx[k] = 0;
        }
    }
    return grid;
}

bool CertificationReport::subsystems_pass() const
{
    return std::all_of(subsystems.begin(), subsystems.end(), [](const SubsystemSummary& s) { return s.failed == 0; });
}

namespace {

EvaluationRecord evaluate(const LyapunovCandidate& V, const Polytope& F, const GridPoint& p,
                          const CertifyOptions& options, std::span<const LyapunovCandidate> family)
{
    EvaluationRecord rec;
    rec.W = V.W(p.x, p.t);
    switch (options.mode) {
    case DerivativeMode::upper:
        rec.value = ExtendedReal::finite(gen_deriv_upper(V, F, p.x, p.t, options.activation_tol).value);
        break;
    case DerivativeMode::lower:
        rec.value = ExtendedReal::finite(gen_deriv_lower(V, F, p.x, p.t, options.activation_tol).value);
        break;
    case DerivativeMode::reduced:
        rec.value = gen_deriv_reduced(V, family, F, p.x, p.t, options.activation_tol);
        break;
    }
    rec.margin = rec.value.is_neg_infinity() ? std::numeric_limits<double>::infinity()
                                             : -rec.W - rec.value.value();
    rec.pass = rec.margin >= -options.tol;
    return rec;
}

void accumulate(SubsystemSummary& s, const EvaluationRecord& rec, std::size_t grid_index)
{
    if (rec.pass) {
        ++s.passed;
    } else {
        ++s.failed;
    }
    const bool first = s.passed + s.failed == 1;
    if (first || rec.margin < s.worst_margin) {
        s.worst_margin = rec.margin;
        s.worst_grid_index = grid_index;
    }
}

std::string point_context(const GridPoint& p)
{
    std::ostringstream os;
    os.precision(17);
    os << "at x=[";
    for (Eigen::Index i = 0; i < p.x.size(); ++i) os << (i ? "," : "") << p.x(i);
    os << "], t=" << p.t;
    return os.str();
}

} // namespace

CertificationReport certify(const LyapunovCandidate& V, const std::map<int, SetValuedMap>& subfamilies,
                            const std::vector<GridPoint>& grid, const CertifyOptions& options)
{
    if (grid.empty()) throw std::invalid_argument("certify: empty grid");
    if (subfamilies.empty()) throw std::invalid_argument("certify: no subsystems");

    CertificationReport report;
    report.grid_description = options.grid_description;
    report.mode = options.mode;
    report.tol = options.tol;
    report.grid = grid;
    report.note = "grid-empirical certificate: the inequality is checked only at the listed grid points";
    if (options.mode == DerivativeMode::lower && !V.regular) {
        report.warnings.push_back("lower-derivative mode used with a candidate not flagged regular");
    }
    for (const auto& [key, map] : subfamilies) {
        report.keys.push_back(key);
        report.subsystems.push_back(SubsystemSummary{key});
    }

    std::vector<LyapunovCandidate> family = options.family;
    if (family.empty()) family.push_back(V);

    report.points.resize(grid.size());
    parallel_for(
        grid.size(),
        [&](std::size_t i) {
            const GridPoint& p = grid[i];
            try {
                PointResult res{i, {}, {}};
                std::vector<Polytope> sets;
                for (const auto& [key, map] : subfamilies) {
                    Polytope F = map(p.x, p.t);
                    res.subsystems.push_back(evaluate(V, F, p, options, family));
                    sets.push_back(std::move(F));
                }
                res.union_hull = evaluate(V, union_hull(sets), p, options, family);
                report.points[i] = std::move(res);
            } catch (const std::exception& e) {
                throw std::runtime_error(std::string("certify ") + point_context(p) + ": " + e.what());
            }
        },
        options.threads);

    for (const auto& pr : report.points) {
        for (std::size_t s = 0; s < pr.subsystems.size(); ++s) accumulate(report.subsystems[s], pr.subsystems[s], pr.grid_index);
        accumulate(report.union_hull, pr.union_hull, pr.grid_index);
    }
    return report;
}

} // namespace inclusion_lab

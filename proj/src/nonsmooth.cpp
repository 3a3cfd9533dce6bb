#include "inclusion_lab/nonsmooth.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace inclusion_lab {

double LyapunovCandidate::value(const Vector& x, double t) const
{
    require_dim(x.size(), dim_state, "LyapunovCandidate::value");
    const CandidatePiece* best = nullptr;
    double best_margin = -std::numeric_limits<double>::infinity();
    for (const auto& p : pieces) {
        const double m = p.margin(x, t);
        if (m > best_margin) {
            best_margin = m;
            best = &p;
        }
    }
    if (best == nullptr) throw CoverageViolated("LyapunovCandidate: no pieces");
    return best->value(x, t);
}

double LyapunovCandidate::W(const Vector& x, double t) const { return decay ? decay(x, t) : 0.0; }

LyapunovCandidate smooth_candidate(Eigen::Index dim, ScalarFn value, VectorFn gradient)
{
    LyapunovCandidate V;
    V.dim_state = dim;
    V.regular = true;
    V.pieces.push_back({"V", [](const Vector&, double) { return 0.0; }, std::move(value), std::move(gradient)});
    return V;
}

LyapunovCandidate max_candidate(Eigen::Index dim, std::vector<std::pair<ScalarFn, VectorFn>> parts)
{
    if (parts.empty()) throw std::invalid_argument("max_candidate: no parts");
    auto values = std::make_shared<std::vector<ScalarFn>>();
    for (const auto& p : parts) values->push_back(p.first);
    const auto vmax = [values](const Vector& x, double t) {
        double m = -std::numeric_limits<double>::infinity();
        for (const auto& v : *values) m = std::max(m, v(x, t));
        return m;
    };

    LyapunovCandidate V;
    V.dim_state = dim;
    V.regular = true;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        ScalarFn vi = parts[i].first;
        V.pieces.push_back({"V" + std::to_string(i + 1),
                            [vi, vmax](const Vector& x, double t) { return vi(x, t) - vmax(x, t); },
                            vi, parts[i].second});
    }
    return V;
}

Polytope clarke_gradient(const LyapunovCandidate& V, const Vector& x, double t, double activation_tol)
{
    require_dim(x.size(), V.dim_state, "clarke_gradient");
    if (activation_tol < 0.0) throw std::invalid_argument("clarke_gradient: negative activation tolerance");
    std::vector<Vector> grads;
    for (const auto& p : V.pieces) {
        if (p.margin(x, t) >= -activation_tol) {
            Vector g = p.gradient(x, t);
            require_dim(g.size(), V.dim_state + 1, "clarke_gradient");
            grads.push_back(std::move(g));
        }
    }
    if (grads.empty()) throw CoverageViolated("coverage violated: no active candidate piece");
    return Polytope(std::move(grads));
}

BoundsReport check_bounds(const LyapunovCandidate& V, const std::vector<std::pair<Vector, double>>& grid)
{
    if (grid.empty()) throw std::invalid_argument("check_bounds: empty grid");
    if (!V.lower_bound || !V.upper_bound) throw std::invalid_argument("check_bounds: bounds not set");
    constexpr double kTol = 1e-12;
    BoundsReport report;
    for (const auto& [x, t] : grid) {
        const double lo = V.lower_bound(x, t);
        const double v = V.value(x, t);
        const double hi = V.upper_bound(x, t);
        ++report.checked;
        if (lo > v + kTol) report.violations.push_back({x, t, BoundsViolation::Side::lower, lo, v, hi});
        if (v > hi + kTol) report.violations.push_back({x, t, BoundsViolation::Side::upper, lo, v, hi});
    }
    report.pass = report.violations.empty();
    return report;
}

Vector finite_difference_gradient(const LyapunovCandidate& V, const Vector& x, double t, double h)
{
    const Eigen::Index n = V.dim_state;
    Vector g(n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        Vector xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        g(i) = (V.value(xp, t) - V.value(xm, t)) / (2.0 * h);
    }
    g(n) = (V.value(x, t + h) - V.value(x, t - h)) / (2.0 * h);
    return g;
}

} // namespace inclusion_lab

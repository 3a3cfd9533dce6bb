#include "catch2/catch_amalgamated.hpp"

#include "inclusion_lab/nonsmooth.hpp"
#include "inclusion_lab/scenarios.hpp"
#include "oracles.hpp"

#include <random>

using namespace inclusion_lab;
using oracle::poly;
using oracle::vec;
using Catch::Matchers::WithinAbs;

namespace {

LyapunovCandidate max_abs()
{
    std::vector<std::pair<ScalarFn, VectorFn>> parts;
    for (int i = 0; i < 2; ++i) {
        for (double s : {1.0, -1.0}) {
            parts.emplace_back([i, s](const Vector& x, double) { return s * x(i); },
                               [i, s](const Vector&, double) {
                                   Vector g = Vector::Zero(3);
                                   g(i) = s;
                                   return g;
                               });
        }
    }
    return max_candidate(2, std::move(parts));
}

LyapunovCandidate half_square(Eigen::Index n)
{
    LyapunovCandidate V = smooth_candidate(
        n, [](const Vector& z, double) { return 0.5 * z.squaredNorm(); },
        [n](const Vector& z, double) {
            Vector g = Vector::Zero(n + 1);
            g.head(n) = z;
            return g;
        });
    V.lower_bound = [](const Vector& z, double) { return 0.5 * z.squaredNorm(); };
    V.upper_bound = V.lower_bound;
    return V;
}

/// Time-varying smooth candidate exp(-t) * sum sin(z_i) z_i^2 + |z|^2 with its exact gradient.
LyapunovCandidate wavy(Eigen::Index n)
{
    return smooth_candidate(
        n,
        [](const Vector& z, double t) {
            double s = 0.0;
            for (Eigen::Index i = 0; i < z.size(); ++i) s += std::sin(z(i)) * z(i) * z(i);
            return std::exp(-t) * s + z.squaredNorm();
        },
        [n](const Vector& z, double t) {
            Vector g(n + 1);
            double s = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                g(i) = std::exp(-t) * (std::cos(z(i)) * z(i) * z(i) + 2 * std::sin(z(i)) * z(i)) + 2 * z(i);
                s += std::sin(z(i)) * z(i) * z(i);
            }
            g(n) = -std::exp(-t) * s;
            return g;
        });
}

} // namespace

TEST_CASE("clarke gradient of max(|x1|,|x2|)", "[nonsmooth]")
{
    const LyapunovCandidate V = max_abs();
    const Polytope on = clarke_gradient(V, vec({1, 1}), 0.0);
    REQUIRE_THAT(hausdorff(on, poly({{1, 0, 0}, {0, 1, 0}})), WithinAbs(0.0, 0.0));
    const Polytope off = clarke_gradient(V, vec({2, 1}), 0.0);
    for (const auto& v : off.vertices()) REQUIRE((v - vec({1, 0, 0})).norm() == 0.0);
    const Polytope origin = clarke_gradient(V, vec({0, 0}), 0.0);
    REQUIRE(origin.size() == 4);
    REQUIRE(contains(origin, vec({0, 0, 0})));
}

TEST_CASE("clarke gradient of the scenario candidate", "[nonsmooth][scenario]")
{
    const Scenario s7 = make_scenario("sec7_counterexample");
    const Polytope on = clarke_gradient(s7.V, vec({1, 1}), 0.0);
    REQUIRE_THAT(hausdorff(on, poly({{1, 0, 0}, {0, 1, 0}})), WithinAbs(0.0, 0.0));
    // |x2| > |x1|: the active piece is |x2|.
    const Polytope upper = clarke_gradient(s7.V, vec({0.5, -2}), 0.0);
    REQUIRE_THAT(hausdorff(upper, poly({{0, -1, 0}})), WithinAbs(0.0, 0.0));
}

TEST_CASE("clarke gradient of a smooth candidate is its gradient", "[nonsmooth]")
{
    const LyapunovCandidate V = half_square(3);
    const Vector z = vec({0.3, -2, 5});
    const Polytope G = clarke_gradient(V, z, 1.5);
    for (const auto& v : G.vertices()) REQUIRE((v - vec({0.3, -2, 5, 0})).norm() == 0.0);
}

TEST_CASE("clarke gradient without an active piece", "[nonsmooth]")
{
    LyapunovCandidate V;
    V.dim_state = 1;
    V.pieces.push_back({"right", [](const Vector& x, double) { return x(0); },
                        [](const Vector& x, double) { return x(0); },
                        [](const Vector&, double) { return vec({1, 0}); }});
    REQUIRE_THROWS_AS(clarke_gradient(V, vec({-1}), 0.0), CoverageViolated);
    REQUIRE(clarke_gradient(V, vec({-1e-10}), 0.0).size() == 1);
}

TEST_CASE("check_bounds examples", "[nonsmooth]")
{
    std::vector<std::pair<Vector, double>> grid;
    for (double a = -2; a <= 2; a += 0.5)
        for (double b = -2; b <= 2; b += 0.5) grid.emplace_back(vec({a, b}), 0.0);

    const LyapunovCandidate sq = half_square(2);
    const BoundsReport r1 = check_bounds(sq, grid);
    REQUIRE(r1.pass);
    REQUIRE(r1.checked == grid.size());

    LyapunovCandidate V = max_abs();
    V.lower_bound = [](const Vector& x, double) { return 0.5 * x.lpNorm<Eigen::Infinity>(); };
    V.upper_bound = [](const Vector& x, double) { return 2.0 * x.lpNorm<Eigen::Infinity>(); };
    REQUIRE(check_bounds(V, grid).pass);

    V.lower_bound = [](const Vector& x, double) { return x.norm(); };
    const BoundsReport bad = check_bounds(V, grid);
    REQUIRE_FALSE(bad.pass);
    bool found = false;
    for (const auto& v : bad.violations) {
        if ((v.x - vec({1, 1})).norm() == 0.0) {
            found = true;
            REQUIRE(v.side == BoundsViolation::Side::lower);
            REQUIRE_THAT(v.lower_bound, WithinAbs(std::sqrt(2.0), 1e-15));
            REQUIRE(v.value == 1.0);
        }
    }
    REQUIRE(found);
}

TEST_CASE("property: smooth gradient matches finite differences", "[nonsmooth][property]")
{
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    const LyapunovCandidate V = wavy(3);
    for (int i = 0; i < 100; ++i) {
        const Vector z = vec({g(rng), g(rng), g(rng)});
        const double t = g(rng);
        const Polytope G = clarke_gradient(V, z, t);
        REQUIRE(G.size() == 1);
        const Vector fd = finite_difference_gradient(V, z, t);
        REQUIRE((fd - G.vertex(0)).norm() <= 1e-5 * (1.0 + G.vertex(0).norm()));
    }
}

TEST_CASE("property: max candidates contain both gradients and the midpoint on ties", "[nonsmooth][property]")
{
    std::mt19937_64 rng(12);
    std::normal_distribution<double> g;
    for (int i = 0; i < 50; ++i) {
        const Vector a = vec({g(rng), g(rng)});
        const Vector b = vec({g(rng), g(rng)});
        // f1 = a.x, f2 = b.x + c chosen to tie at x.
        const Vector x = vec({g(rng), g(rng)});
        const double c = (a - b).dot(x);
        std::vector<std::pair<ScalarFn, VectorFn>> parts;
        parts.emplace_back([a](const Vector& y, double) { return a.dot(y); },
                           [a](const Vector&, double) { return vec({a(0), a(1), 0}); });
        parts.emplace_back([b, c](const Vector& y, double) { return b.dot(y) + c; },
                           [b](const Vector&, double) { return vec({b(0), b(1), 0}); });
        const LyapunovCandidate V = max_candidate(2, std::move(parts));
        const Polytope G = clarke_gradient(V, x, 0.0);
        const Vector pa = vec({a(0), a(1), 0});
        const Vector pb = vec({b(0), b(1), 0});
        REQUIRE(contains(G, pa, 1e-12));
        REQUIRE(contains(G, pb, 1e-12));
        REQUIRE(contains(G, 0.5 * (pa + pb), 1e-12));
        for (const auto& v : G.vertices()) REQUIRE(v(2) == 0.0);
    }
}

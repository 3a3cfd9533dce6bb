#include "catch2/catch_amalgamated.hpp"

#include "inclusion_lab/lyap.hpp"
#include "inclusion_lab/scenarios.hpp"
#include "oracles.hpp"

#include <random>

using namespace inclusion_lab;
using oracle::poly;
using oracle::vec;
using Catch::Matchers::WithinAbs;

namespace {

/// Random max-type candidate max_i (a_i.x + b_i t + c_i) in the plane.
LyapunovCandidate random_max_candidate(std::mt19937_64& rng, int pieces)
{
    std::normal_distribution<double> g;
    std::vector<std::pair<ScalarFn, VectorFn>> parts;
    for (int i = 0; i < pieces; ++i) {
        const Vector a = vec({g(rng), g(rng)});
        const double b = g(rng);
        const double c = 0.1 * g(rng);
        parts.emplace_back([a, b, c](const Vector& x, double t) { return a.dot(x) + b * t + c; },
                           [a, b](const Vector&, double) { return vec({a(0), a(1), b}); });
    }
    LyapunovCandidate V = max_candidate(2, std::move(parts));
    V.decay = [](const Vector&, double) { return 0.0; };
    return V;
}

/// Candidate whose pieces all tie at the origin: max_i a_i.x.
LyapunovCandidate tied_candidate(std::mt19937_64& rng, int pieces)
{
    std::normal_distribution<double> g;
    std::vector<std::pair<ScalarFn, VectorFn>> parts;
    for (int i = 0; i < pieces; ++i) {
        const Vector a = vec({g(rng), g(rng)});
        parts.emplace_back([a](const Vector& x, double) { return a.dot(x); },
                           [a](const Vector&, double) { return vec({a(0), a(1), 0}); });
    }
    return max_candidate(2, std::move(parts));
}

double brute_lower(const Polytope& dV, const Polytope& F)
{
    return oracle::grid_min_max(dV.vertices(), oracle::lifted(F), 2000);
}

} // namespace

TEST_CASE("upper derivative examples", "[lyap]")
{
    const Scenario s7 = make_scenario("sec7_counterexample");
    const UpperDerivative u = gen_deriv_upper(s7.V, poly({{-1, -1}}), vec({1, 1}), 0.0);
    REQUIRE(u.value == -1.0);
    REQUIRE(u.p.dot(lift_time(u.q)) == u.value);

    const UpperDerivative z = gen_deriv_upper(s7.V, poly({{0, 0}}), vec({0.3, 2}), 0.0);
    REQUIRE(z.value == 0.0);

    REQUIRE_THROWS_AS(gen_deriv_upper(s7.V, poly({{0, 0, 0}}), vec({1, 1}), 0.0), std::invalid_argument);
}

TEST_CASE("upper derivative on the adaptive closed loop", "[lyap][scenario]")
{
    const Scenario ex1 = make_scenario("sec8_example1");
    for (double t : {0.0, 0.7, 2.0, 4.5}) {
        for (const Vector& z : {vec({1, 0}), vec({0, 0.5}), vec({-0.5, 1})}) {
            const Polytope F = ex1.subsystem_maps.at(1)(z, t);
            const double oracle_value =
                oracle::pair_scan_max(clarke_gradient(ex1.V, z, t).vertices(), oracle::lifted(F));
            const UpperDerivative u = gen_deriv_upper(ex1.V, F, z, t);
            REQUIRE_THAT(u.value, WithinAbs(oracle_value, 1e-12));
            REQUIRE(u.value <= -ex1.V.W(z, t) + 1e-12);
        }
    }
    const Vector z = vec({1, 0});
    REQUIRE(gen_deriv_upper(ex1.V, ex1.subsystem_maps.at(1)(z, 0.0), z, 0.0).value <= -1.0);
}

TEST_CASE("lower derivative examples", "[lyap]")
{
    const Scenario s7 = make_scenario("sec7_counterexample");
    const Vector x = vec({1, 1});
    const Polytope F1 = s7.subsystem_maps.at(1)(x, 0.0);
    const Polytope F2 = s7.subsystem_maps.at(2)(x, 0.0);
    REQUIRE(gen_deriv_lower(s7.V, F1, x, 0.0).value <= 1e-12);
    REQUIRE(gen_deriv_lower(s7.V, F2, x, 0.0).value <= 1e-12);
    const std::vector<Polytope> both{F1, F2};
    const LowerDerivative u = gen_deriv_lower(s7.V, union_hull(both), x, 0.0);
    REQUIRE_THAT(u.value, WithinAbs(0.5 * s7.V.value(x, 0.0), 1e-9));
    REQUIRE(u.regular);

    const Scenario ex1 = make_scenario("sec8_example1");
    const Vector z = vec({0.4, -0.3});
    const Polytope F = ex1.subsystem_maps.at(1)(z, 1.0);
    REQUIRE_THAT(gen_deriv_lower(ex1.V, F, z, 1.0).value, WithinAbs(gen_deriv_upper(ex1.V, F, z, 1.0).value, 1e-12));
}

TEST_CASE("reduced inclusion examples", "[lyap]")
{
    const Scenario s7 = make_scenario("sec7_counterexample");
    const std::vector<LyapunovCandidate> fam{s7.V};

    const Vector off = vec({2, 1});
    const Polytope Foff = s7.subsystem_maps.at(1)(off, 0.0);
    const ReducedInclusion r_off = reduce_inclusion(fam, Foff, off, 0.0);
    REQUIRE_FALSE(r_off.empty());
    REQUIRE(hausdorff(*r_off.as_polytope(), Foff) <= 1e-12);
    REQUIRE_THAT(gen_deriv_reduced(s7.V, fam, Foff, off, 0.0).value(),
                 WithinAbs(gen_deriv_lower(s7.V, Foff, off, 0.0).value, 1e-12));

    const Vector on = vec({1, 1});
    const Polytope F1 = s7.subsystem_maps.at(1)(on, 0.0);
    const ReducedInclusion r_on = reduce_inclusion(fam, F1, on, 0.0);
    const auto verts = r_on.vertices();
    REQUIRE(verts.size() == 1);
    REQUIRE((verts[0] - vec({-1, -1})).norm() <= 1e-9);
    const ExtendedReal d = gen_deriv_reduced(s7.V, fam, F1, on, 0.0);
    REQUIRE_FALSE(d.is_neg_infinity());
    REQUIRE_THAT(d.value(), WithinAbs(-1.0, 1e-9));

    // Singleton already satisfying the equalities.
    const ReducedInclusion r_single = reduce_inclusion(fam, poly({{-1, -1}}), on, 0.0);
    REQUIRE(hausdorff(*r_single.as_polytope(), poly({{-1, -1}})) <= 1e-12);

    // {g1} alone violates the equalities on the surface: empty, -infinity.
    const Polytope g1 = poly({{1, 0}});
    const ReducedInclusion r_empty = reduce_inclusion(fam, g1, on, 0.0);
    REQUIRE(r_empty.empty());
    REQUIRE_FALSE(r_empty.as_polytope().has_value());
    const ExtendedReal e = gen_deriv_reduced(s7.V, fam, g1, on, 0.0);
    REQUIRE(e.is_neg_infinity());
    REQUIRE(e <= -1e300);
    REQUIRE_THROWS_AS(e.value(), std::logic_error);
}

TEST_CASE("mode names round-trip", "[lyap]")
{
    for (auto m : {DerivativeMode::upper, DerivativeMode::lower, DerivativeMode::reduced})
        REQUIRE(parse_mode(to_string(m)) == m);
    REQUIRE_THROWS_AS(parse_mode("sideways"), std::invalid_argument);
}

TEST_CASE("make_grid", "[lyap]")
{
    const auto g = make_grid({{-1, 1, 3}, {0, 2, 2}}, 2);
    REQUIRE(g.size() == 6);
    REQUIRE((g.front().x - vec({-1, 0})).norm() == 0.0);
    REQUIRE((g.back().x - vec({1, 2})).norm() == 0.0);
    const auto gt = make_grid({{-1, 1, 3}, {0, 4, 3}}, 1);
    REQUIRE(gt.size() == 9);
    REQUIRE(gt.back().t == 4.0);
    REQUIRE_THROWS_AS(make_grid({{-1, 1, 3}, {0, 4, 3}, {0, 1, 2}}, 1), std::invalid_argument);
}

TEST_CASE("certify the counterexample", "[lyap][scenario]")
{
    const Scenario s7 = make_scenario("sec7_counterexample");
    CertifyOptions o;
    o.mode = DerivativeMode::lower;
    const auto grid = make_grid(s7.grid, 2);
    const CertificationReport r = certify(s7.V, s7.subsystem_maps, grid, o);
    REQUIRE(r.subsystems_pass());
    REQUIRE_FALSE(r.union_pass());
    std::size_t surface = 0;
    for (const auto& p : r.points) {
        const Vector& x = grid[p.grid_index].x;
        const bool on = std::abs(std::abs(x(0)) - std::abs(x(1))) <= 1e-12 * (1 + x.norm()) && x.norm() > 0;
        if (on) {
            ++surface;
            REQUIRE_FALSE(p.union_hull.pass);
            REQUIRE_THAT(p.union_hull.value.value(), WithinAbs(0.5 * s7.V.value(x, 0.0), 1e-9));
        } else {
            REQUIRE(p.union_hull.pass);
        }
    }
    REQUIRE(surface == 40);
    REQUIRE(r.union_hull.failed == 40);
    REQUIRE_FALSE(r.note.empty());

    o.mode = DerivativeMode::reduced;
    const CertificationReport red = certify(s7.V, s7.subsystem_maps, grid, o);
    REQUIRE(red.subsystems_pass());
}

TEST_CASE("certify the adaptive closed loop in upper mode", "[lyap][scenario]")
{
    const Scenario ex1 = make_scenario("sec8_example1");
    const auto grid = make_grid(ex1.grid, ex1.field.dim(), 0.0);
    const CertificationReport r = certify(ex1.V, ex1.subsystem_maps, grid);
    REQUIRE(r.all_pass());
}

TEST_CASE("certify is deterministic across thread counts", "[lyap]")
{
    const Scenario s7 = make_scenario("sec7_counterexample");
    const auto grid = make_grid(s7.grid, 2);
    CertifyOptions o;
    o.mode = DerivativeMode::lower;
    o.threads = 1;
    const CertificationReport a = certify(s7.V, s7.subsystem_maps, grid, o);
    o.threads = 4;
    const CertificationReport b = certify(s7.V, s7.subsystem_maps, grid, o);
    REQUIRE(a.union_hull.worst_margin == b.union_hull.worst_margin);
    REQUIRE(a.union_hull.worst_grid_index == b.union_hull.worst_grid_index);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        REQUIRE(a.points[i].grid_index == b.points[i].grid_index);
        REQUIRE(a.points[i].union_hull.margin == b.points[i].union_hull.margin);
    }
}

TEST_CASE("property: lower <= upper and witnesses reproduce values", "[lyap][property]")
{
    std::mt19937_64 rng(21);
    std::normal_distribution<double> g;
    for (int i = 0; i < 200; ++i) {
        const LyapunovCandidate V = tied_candidate(rng, 1 + i % 4);
        const Polytope F = oracle::random_polytope(rng, 2, 1 + static_cast<std::size_t>(i % 5));
        const Vector x = i % 2 ? vec({0, 0}) : vec({g(rng), g(rng)});
        const DerivativeSample s = generalized_derivative(V, F, x, 0.0);
        REQUIRE(s.lower <= s.upper + 1e-12);
        REQUIRE_THAT(s.witness_p.dot(lift_time(s.witness_q)), WithinAbs(s.upper, 1e-12));
        const Polytope dV = clarke_gradient(V, x, 0.0);
        REQUIRE_THAT(s.upper, WithinAbs(oracle::pair_scan_max(dV.vertices(), oracle::lifted(F)), 1e-12));
        if (dV.size() <= 3) REQUIRE(s.lower <= brute_lower(dV, F) + 1e-9);
    }
}

TEST_CASE("property: union upper derivative is the subsystem maximum", "[lyap][property]")
{
    std::mt19937_64 rng(22);
    std::normal_distribution<double> g;
    for (int i = 0; i < 100; ++i) {
        const LyapunovCandidate V = random_max_candidate(rng, 1 + i % 3);
        const Vector x = vec({g(rng), g(rng)});
        std::vector<Polytope> parts;
        double best = -std::numeric_limits<double>::infinity();
        for (int s = 0; s < 1 + i % 4; ++s) {
            parts.push_back(oracle::random_polytope(rng, 2, 1 + static_cast<std::size_t>(s)));
            best = std::max(best, gen_deriv_upper(V, parts.back(), x, 0.3).value);
        }
        REQUIRE_THAT(gen_deriv_upper(V, union_hull(parts), x, 0.3).value, WithinAbs(best, 1e-9));
    }
}

TEST_CASE("property: enlarging F never decreases the derivatives", "[lyap][property]")
{
    std::mt19937_64 rng(23);
    for (int i = 0; i < 100; ++i) {
        const LyapunovCandidate V = tied_candidate(rng, 2 + i % 3);
        const Polytope F = oracle::random_polytope(rng, 2, 2);
        std::vector<Polytope> parts{F, oracle::random_polytope(rng, 2, 2)};
        const Polytope G = union_hull(parts);
        const Vector x = vec({0, 0});
        REQUIRE(gen_deriv_upper(V, G, x, 0.0).value >= gen_deriv_upper(V, F, x, 0.0).value - 1e-12);
        REQUIRE(gen_deriv_lower(V, G, x, 0.0).value >= gen_deriv_lower(V, F, x, 0.0).value - 1e-9);
    }
}

TEST_CASE("property: reduced <= lower when the reduced set is nonempty", "[lyap][property]")
{
    std::mt19937_64 rng(24);
    std::size_t nonempty = 0;
    for (int i = 0; i < 200; ++i) {
        const LyapunovCandidate V = tied_candidate(rng, 2);
        const std::vector<LyapunovCandidate> fam{V};
        const Polytope F = oracle::random_polytope(rng, 2, 3 + static_cast<std::size_t>(i % 3));
        const Vector x = vec({0, 0});
        const ExtendedReal r = gen_deriv_reduced(V, fam, F, x, 0.0);
        if (r.is_neg_infinity()) continue;
        ++nonempty;
        REQUIRE(r.value() <= gen_deriv_lower(V, F, x, 0.0).value + 1e-9);
    }
    REQUIRE(nonempty > 50);
}

TEST_CASE("property: smooth V with singleton F matches finite differences", "[lyap][property]")
{
    std::mt19937_64 rng(25);
    std::normal_distribution<double> g;
    const LyapunovCandidate V = smooth_candidate(
        2, [](const Vector& x, double t) { return std::cos(t) * x(0) * x(0) + std::exp(x(1)) + t * x(0) * x(1); },
        [](const Vector& x, double t) {
            return vec({2 * std::cos(t) * x(0) + t * x(1), std::exp(x(1)) + t * x(0),
                        -std::sin(t) * x(0) * x(0) + x(0) * x(1)});
        });
    for (int i = 0; i < 100; ++i) {
        const Vector x = vec({g(rng), g(rng)});
        const Vector f = vec({g(rng), g(rng)});
        const double t = g(rng);
        const double h = 1e-6;
        const double fd = (V.value(x + h * f, t + h) - V.value(x - h * f, t - h)) / (2 * h);
        const DerivativeSample s = generalized_derivative(V, Polytope::singleton(f), x, t);
        REQUIRE_THAT(s.upper, WithinAbs(s.lower, 1e-9));
        REQUIRE(std::abs(s.upper - fd) <= 1e-5 * (1 + std::abs(fd)));
    }
}

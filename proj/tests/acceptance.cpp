// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include "inclusion_lab/fields.hpp"
#include "inclusion_lab/hull.hpp"
#include "inclusion_lab/lyap.hpp"
#include "inclusion_lab/scenarios.hpp"
#include "inclusion_lab/sim.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace inclusion_lab;
using oracle::poly;
using oracle::vec;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << "[failed: " << what << "] ";
        }
    }
};

bool on_surface(const Vector& x) { return std::abs(std::abs(x(0)) - std::abs(x(1))) <= 1e-12 * (1 + x.norm()); }

void criterion1(Outcome& o)
{
    const Scenario s = make_scenario("sec4_example");
    const Vector zero = vec({0.0});
    const Polytope K = krasovskii_estimate(s.field, zero, 0.0, 1e-3, 500, 0);
    const double h = hausdorff(K, poly({{0}, {1}}));
    o.check(h <= 0.05, "K(0) near [0,1]");
    const Polytope F = filippov_estimate(s.field, zero, 0.0, 1e-3, 500, 0);
    bool exact = true;
    for (const auto& v : F.vertices()) exact = exact && v(0) == 1.0;
    o.check(exact, "F(0) = {1}");
    std::size_t subs = 0;
    for (const auto& [sigma, f] : s.family) {
        if (sigma > 20) break;
        const Polytope Ks = krasovskii_estimate(f, zero, 0.0, 1e-3, 500, 0);
        bool zero_only = true;
        for (const auto& v : Ks.vertices()) zero_only = zero_only && v(0) == 0.0;
        // Only indices with 2^-sigma > delta have 0 on the whole ball.
        if (std::ldexp(1.0, -sigma) > 1e-3) {
            o.check(zero_only, "K_sigma(0) = {0} for sigma=" + std::to_string(sigma));
            ++subs;
        }
    }
    const ContainmentReport r = containment_check(s.family, s.rho, zero, 0.0);
    for (const auto& [sigma, est] : r.subsystem_estimates) {
        bool zero_only = true;
        for (const auto& v : est.vertices()) zero_only = zero_only && v(0) == 0.0;
        o.check(zero_only, "attained subsystem estimate {0}");
    }
    o.check(!r.holds, "containment fails");
    o.check(r.inflation_needed >= 0.9 && r.inflation_needed <= 1.1, "inflation in [0.9,1.1]");
    o.detail << "hausdorff=" << h << " subsystems_checked=" << subs << " attained=" << r.attained.size()
             << " inflation=" << r.inflation_needed;
}

void criterion2(Outcome& o)
{
    const Scenario s = make_scenario("sec7_counterexample");
    const auto grid = make_grid({{-2, 2, 21}, {-2, 2, 21}}, 2);
    CertifyOptions opt;
    opt.mode = DerivativeMode::lower;
    const CertificationReport r = certify(s.V, s.subsystem_maps, grid, opt);
    o.check(r.subsystems_pass(), "(a) subsystems pass");
    std::size_t surface = 0, bad = 0;
    for (const auto& p : r.points) {
        const Vector& x = grid[p.grid_index].x;
        if (on_surface(x) && x.norm() > 0) {
            ++surface;
            const double want = 0.5 * s.V.value(x, 0.0);
            if (p.union_hull.pass || std::abs(p.union_hull.value.value() - want) > 1e-9) ++bad;
        } else if (!p.union_hull.pass) {
            ++bad;
        }
    }
    o.check(surface == 40 && bad == 0, "(b) union fails exactly on the surface at 0.5V");
    const Trajectory tr = integrate(s.field, s.rule, vec({1, 1}), 0.0, 1.0, 1e-3, Method::rk4);
    const double err = (tr.states.back() - std::exp(0.5) * vec({1, 1})).norm();
    o.check(err <= 1e-3 * std::exp(0.5), "(c) escaping trajectory");
    o.detail << "(a) worst subsystem margin=" << std::min(r.subsystems[0].worst_margin, r.subsystems[1].worst_margin)
             << " (b) surface points=" << surface << " mismatches=" << bad << " (c) |x(1)-e^0.5[1;1]|=" << err;
}

void adaptive(Outcome& o, const std::string& name)
{
    const Scenario s = make_scenario(name);
    IntegrateOptions opt;
    opt.candidate = &s.V;
    const auto run = [&](double T, double dt) { return integrate(s.field, s.rule, s.x0, 0.0, T, dt, s.method, opt); };
    const Trajectory a = run(20.0, 1e-3);
    const MonitorReport m = monitor(a, s.V);
    o.check(m.nonincreasing && m.max_uptick <= 1e-4, "V nonincreasing");
    o.check(m.W_integral <= m.V_initial + 1e-3, "integral of W bounded by V(0)");
    const double xT = a.states.back().head(s.n_x).norm();
    o.check(xT <= 1e-2, "|x(20)| small");
    const Trajectory b = run(20.0, 5e-4);
    const double agree = (a.states.back() - b.states.back()).norm();
    o.check(agree <= 1e-3, "half-dt agreement");
    const double tail10 = monitor(run(10.0, 1e-3), s.V).W_tail;
    const double tail40 = monitor(run(40.0, 1e-3), s.V).W_tail;
    o.check(tail40 <= 0.25 * tail10, "W tail decreasing");
    o.detail << "max_uptick=" << m.max_uptick << " intW=" << m.W_integral << " V0=" << m.V_initial
             << " |x(20)|=" << xT << " dt-agreement=" << agree << " W_tail(10)=" << tail10
             << " W_tail(40)=" << tail40;
}

void criterion5(Outcome& o)
{
    std::mt19937_64 rng(500);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::size_t total = 0, held = 0;
    std::vector<std::pair<oracle::RandomFamily, Vector>> spots;
    for (int fam = 0; fam < 20; ++fam) {
        const oracle::RandomFamily rf = oracle::random_family(rng);
        for (int i = 0; i < 100; ++i) {
            const Vector x = vec({u(rng), u(rng)});
            ContainmentOptions co;
            co.seed = static_cast<std::uint64_t>(fam * 100 + i);
            const ContainmentReport r = containment_check(rf.family, rf.rho, x, 0.0, co);
            ++total;
            if (r.inflation_needed <= 1e-4) ++held;
            if (i == 0 && spots.size() < 10) spots.emplace_back(rf, x);
        }
    }
    const double rate = static_cast<double>(held) / static_cast<double>(total);
    o.check(rate >= 0.99, "99% of random cases");
    std::size_t spot_ok = 0;
    for (const auto& [rf, x] : spots) {
        ContainmentOptions co;
        co.n_samples = 10000;
        if (containment_check(rf.family, rf.rho, x, 0.0, co).inflation_needed <= 1e-4) ++spot_ok;
    }
    o.check(spot_ok == spots.size(), "all spot checks at 1e4 samples");
    o.detail << held << "/" << total << " held; spot checks " << spot_ok << "/" << spots.size();
}

void criterion6(Outcome& o)
{
    std::mt19937_64 rng(600);
    std::normal_distribution<double> g;
    std::size_t ok = 0, preserved = 0, bounded = 0;
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        std::vector<std::pair<ScalarFn, VectorFn>> parts;
        for (int k = 0; k < 1 + i % 3; ++k) {
            const Vector a = vec({g(rng), g(rng)});
            parts.emplace_back([a](const Vector& x, double) { return a.dot(x); },
                               [a](const Vector&, double) { return vec({a(0), a(1), 0}); });
        }
        const LyapunovCandidate V = max_candidate(2, std::move(parts));
        const Vector x = i % 2 ? vec({0, 0}) : vec({g(rng), g(rng)});
        std::vector<Polytope> Fs;
        double best = -std::numeric_limits<double>::infinity();
        for (int s = 0; s < 2 + i % 3; ++s) {
            Fs.push_back(oracle::random_polytope(rng, 2, 1 + static_cast<std::size_t>(i % 4)));
            best = std::max(best, gen_deriv_upper(V, Fs.back(), x, 0.0).value);
        }
        const double u = gen_deriv_upper(V, union_hull(Fs), x, 0.0).value;
        worst = std::max(worst, std::abs(u - best));
        if (std::abs(u - best) <= 1e-9) ++ok;
        // Common bound -W with W chosen as -best: preserved by the union.
        const double W = -best;
        if (best <= -W + 1e-12) {
            ++bounded;
            if (u <= -W + 1e-9) ++preserved;
        }
    }
    o.check(ok == 200, "union upper = max of subsystem uppers");
    o.check(preserved == bounded, "common bound preserved");
    o.detail << ok << "/200 equal, worst gap=" << worst << ", bound preserved " << preserved << "/" << bounded;
}

void criterion7(Outcome& o)
{
    std::mt19937_64 rng(700);
    std::uniform_int_distribution<int> dim_d(1, 5), count_d(1, 30);
    std::size_t ok = 0;
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const Eigen::Index dim = dim_d(rng);
        const Polytope P = oracle::random_polytope(rng, dim, static_cast<std::size_t>(count_d(rng)));
        const Vector q = oracle::random_hull_point(rng, P);
        const ConvexWeights w = caratheodory_reduce(P, q);
        const double err = (w.combine(P) - q).norm();
        worst = std::max(worst, err);
        if (w.valid() && w.indices.size() <= static_cast<std::size_t>(dim) + 1 && err <= 1e-9) ++ok;
    }
    o.check(ok == 200, "reduction size and reconstruction");
    o.detail << ok << "/200 ok, worst reconstruction=" << worst;
}

void criterion8(Outcome& o)
{
    std::mt19937_64 rng(800);
    std::normal_distribution<double> g;
    // Smooth, time-varying V against finite differences along [f;1].
    const LyapunovCandidate Vs = smooth_candidate(
        2, [](const Vector& x, double t) { return std::sin(x(0)) * x(1) + std::exp(-t) * x(0) * x(0); },
        [](const Vector& x, double t) {
            return vec({std::cos(x(0)) * x(1) + 2 * std::exp(-t) * x(0), std::sin(x(0)),
                        -std::exp(-t) * x(0) * x(0)});
        });
    std::size_t fd_ok = 0;
    for (int i = 0; i < 100; ++i) {
        const Vector x = vec({g(rng), g(rng)});
        const Vector f = vec({g(rng), g(rng)});
        const double t = g(rng);
        const double h = 1e-6;
        const double fd = (Vs.value(x + h * f, t + h) - Vs.value(x - h * f, t - h)) / (2 * h);
        const DerivativeSample s = generalized_derivative(Vs, Polytope::singleton(f), x, t);
        if (std::abs(s.upper - fd) <= 1e-5 * (1 + std::abs(fd)) && std::abs(s.upper - s.lower) <= 1e-9) ++fd_ok;
    }
    o.check(fd_ok == 100, "finite differences");

    std::size_t order_ok = 0, reduced_cases = 0, reduced_ok = 0;
    for (int i = 0; i < 200; ++i) {
        std::vector<std::pair<ScalarFn, VectorFn>> parts;
        for (int k = 0; k < 2 + i % 2; ++k) {
            const Vector a = vec({g(rng), g(rng)});
            parts.emplace_back([a](const Vector& x, double) { return a.dot(x); },
                               [a](const Vector&, double) { return vec({a(0), a(1), 0}); });
        }
        const LyapunovCandidate V = max_candidate(2, std::move(parts));
        const std::vector<LyapunovCandidate> fam{V};
        const Polytope F = oracle::random_polytope(rng, 2, 2 + static_cast<std::size_t>(i % 4));
        const Vector x = vec({0, 0});
        const DerivativeSample s = generalized_derivative(V, F, x, 0.0);
        if (s.lower <= s.upper + 1e-12) ++order_ok;
        const ExtendedReal r = gen_deriv_reduced(V, fam, F, x, 0.0);
        if (!r.is_neg_infinity()) {
            ++reduced_cases;
            if (r.value() <= s.lower + 1e-9) ++reduced_ok;
        }
    }
    o.check(order_ok == 200, "lower <= upper");
    o.check(reduced_ok == reduced_cases && reduced_cases > 0, "reduced <= lower");

    const Scenario s7 = make_scenario("sec7_counterexample");
    const std::vector<LyapunovCandidate> fam7{s7.V};
    const Vector x = vec({1, 1});
    const ExtendedReal d = gen_deriv_reduced(s7.V, fam7, s7.subsystem_maps.at(1)(x, 0.0), x, 0.0);
    const bool minus_one = !d.is_neg_infinity() && std::abs(d.value() + 1.0) <= 1e-9;
    o.check(minus_one, "counterexample reduced derivative = -1");
    o.detail << "fd " << fd_ok << "/100, lower<=upper " << order_ok << "/200, reduced<=lower " << reduced_ok << "/"
             << reduced_cases << ", reduced at [1;1]=" << d.str();
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
        {"countable family split (sec4_example)", criterion1},
        {"counterexample (sec7_counterexample)", criterion2},
        {"adaptive example (sec8_example1)", [](Outcome& o) { adaptive(o, "sec8_example1"); }},
        {"switched adaptive example (sec8_example2)", [](Outcome& o) { adaptive(o, "sec8_example2"); }},
        {"containment on random families", criterion5},
        {"union-hull upper derivative", criterion6},
        {"Caratheodory reduction", criterion7},
        {"derivative calculus", criterion8},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto start = std::chrono::steady_clock::now();
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "exception: " << e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failed;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first << " | "
                  << o.detail.str() << " (" << secs << " s)" << std::endl;
    }
    return failed == 0 ? 0 : 1;
}

#include "inclusion_lab/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace inclusion_lab {

namespace {

const std::vector<std::string> kNames = {"sec4_example", "sec7_counterexample", "sec8_example1", "sec8_example2"};

/// Reads parameters against a table of defaults; leftovers are errors.
class ParamReader {
public:
    ParamReader(std::string scenario, const ScenarioParams& given) : scenario_(std::move(scenario)), given_(given) {}

    double get(const std::string& key, double fallback)
    {
        used_.insert(key);
        const auto it = given_.find(key);
        const double v = it == given_.end() ? fallback : it->second;
        if (!std::isfinite(v)) throw std::invalid_argument(scenario_ + ": parameter '" + key + "' must be finite");
        effective_[key] = v;
        return v;
    }

    double positive(const std::string& key, double fallback)
    {
        const double v = get(key, fallback);
        if (!(v > 0.0)) throw std::invalid_argument(scenario_ + ": parameter '" + key + "' must be positive");
        return v;
    }

    ScenarioParams finish() const
    {
        for (const auto& [key, value] : given_) {
            if (!used_.count(key)) {
                std::ostringstream os;
                os << scenario_ << ": unknown parameter '" << key << "' (known:";
                for (const auto& k : used_) os << ' ' << k;
                os << ')';
                throw std::invalid_argument(os.str());
            }
        }
        return effective_;
    }

private:
    std::string scenario_;
    const ScenarioParams& given_;
    std::set<std::string> used_;
    ScenarioParams effective_;
};

SmoothField smooth(Eigen::Index dim, VectorFn f) { return {dim, std::move(f)}; }

Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double c : v) out(i++) = c;
    return out;
}

SetValuedMap analytic_map(PiecewiseField f, double delta)
{
    return [f = std::move(f), delta](const Vector& x, double t) { return analytic_regularization(f, x, t, delta); };
}

// Sign-field helpers shared by the adaptive examples. The first n coordinates
// of the state are x; each sign pattern in {-1,0,1}^n is one piece.

std::size_t sign_pattern_index(const Vector& x, Eigen::Index n)
{
    std::size_t idx = 0;
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        const int s = x(i) > 0.0 ? 2 : (x(i) < 0.0 ? 0 : 1);
        idx = idx * 3 + static_cast<std::size_t>(s);
    }
    return idx;
}

Vector sign_pattern(std::size_t idx, Eigen::Index n)
{
    Vector s(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        s(i) = static_cast<double>(static_cast<int>(idx % 3) - 1);
        idx /= 3;
    }
    return s;
}

std::string sign_label(const Vector& s)
{
    std::string out = "sgn(";
    for (Eigen::Index i = 0; i < s.size(); ++i) out += s(i) > 0 ? '+' : (s(i) < 0 ? '-' : '0');
    return out + ")";
}

/// One PiecewiseField with a piece per sign pattern of x = z.head(n);
/// closed_loop(z, t, sgn) gives the velocity.
PiecewiseField signum_field(Eigen::Index n, Eigen::Index dim,
                            std::function<Vector(const Vector&, double, const Vector&)> closed_loop)
{
    std::size_t count = 1;
    for (Eigen::Index i = 0; i < n; ++i) count *= 3;
    std::vector<PiecewiseField::Piece> pieces;
    for (std::size_t k = 0; k < count; ++k) {
        const Vector s = sign_pattern(k, n);
        PiecewiseField::Piece p;
        p.label = sign_label(s);
        p.region = [k, n](const Vector& z, double) { return sign_pattern_index(z, n) == k; };
        p.field = smooth(dim, [closed_loop, s](const Vector& z, double t) { return closed_loop(z, t, s); });
        pieces.push_back(std::move(p));
    }
    std::vector<Predicate> nulls;
    for (Eigen::Index i = 0; i < n; ++i) nulls.push_back([i](const Vector& z, double) { return z(i) == 0.0; });
    PiecewiseField f(dim, std::move(pieces), std::move(nulls));
    f.set_locator([n](const Vector& z, double) { return sign_pattern_index(z, n); });
    return f;
}

std::vector<SlidingSurface> coordinate_surfaces(Eigen::Index n, Eigen::Index dim)
{
    std::vector<SlidingSurface> out;
    for (Eigen::Index i = 0; i < n; ++i) {
        SlidingSurface s;
        s.label = "x" + std::to_string(i + 1) + "=0";
        s.value = [i](const Vector& z, double) { return z(i); };
        s.gradient = [i, dim](const Vector&, double) {
            Vector g = Vector::Zero(dim + 1);
            g(i) = 1.0;
            return g;
        };
        out.push_back(std::move(s));
    }
    return out;
}

/// V = 1/2 |z|^2 with W = k_min |x|^2.
LyapunovCandidate quadratic_candidate(Eigen::Index n, Eigen::Index dim, double k_min)
{
    LyapunovCandidate V = smooth_candidate(
        dim, [](const Vector& z, double) { return 0.5 * z.squaredNorm(); },
        [dim](const Vector& z, double) {
            Vector g = Vector::Zero(dim + 1);
            g.head(dim) = z;
            return g;
        });
    V.lower_bound = [](const Vector& z, double) { return 0.5 * z.squaredNorm(); };
    V.upper_bound = V.lower_bound;
    V.decay = [n, k_min](const Vector& z, double) { return k_min * z.head(n).squaredNorm(); };
    return V;
}

Scenario make_sec4(const ScenarioParams& given)
{
    ParamReader p("sec4_example", given);
    const double x0 = p.get("x0", 0.5);
    const double tfinal = p.positive("tfinal", 1.0);

    // Subsystems beyond 1075 are indistinguishable in double precision:
    // 2^-1075 rounds to zero.
    constexpr int kCount = 1075;
    SubsystemFamily family;
    for (int sigma = 1; sigma <= kCount; ++sigma) {
        const double r = std::ldexp(1.0, -sigma);
        std::vector<PiecewiseField::Piece> pieces;
        pieces.push_back({"0", [r](const Vector& x, double) { return std::abs(x(0)) < r; },
                          smooth(1, [](const Vector&, double) { return Vector::Zero(1).eval(); }), {}});
        pieces.push_back({"1", [r](const Vector& x, double) { return std::abs(x(0)) >= r; },
                          smooth(1, [](const Vector&, double) { return Vector::Ones(1).eval(); }), {}});
        PiecewiseField f(1, std::move(pieces), {[r](const Vector& x, double) { return std::abs(x(0)) == r; }});
        f.set_locator([r](const Vector& x, double) -> std::size_t { return std::abs(x(0)) < r ? 0 : 1; });
        family.emplace(sigma, std::move(f));
    }

    SwitchingSignal rho;
    rho.eval = [](const Vector& x, double) {
        const double a = std::abs(x(0));
        if (a == 0.0) return 1;
        int e = 0;
        std::frexp(a, &e);  // a in [2^(e-1), 2^e)
        return std::max(1, 1 - e);
    };
    rho.universe = {false, static_cast<std::size_t>(kCount), "natural numbers, truncated at 1075"};
    rho.boundaries.push_back([](const Vector& x, double) {
        int e = 0;
        return x(0) == 0.0 || std::frexp(std::abs(x(0)), &e) == 0.5;
    });

    Scenario s(assemble_switched(family, rho));
    s.name = "sec4_example";
    s.description = "countable family f_sigma = 1{|x| >= 2^-sigma}; rho accumulates at x = 0";
    s.family = std::move(family);
    s.rho = rho;
    s.V = quadratic_candidate(1, 1, 0.0);
    s.rule = SelectionRule::direct();
    for (int sigma = 1; sigma <= 20; ++sigma) s.subsystem_maps[sigma] = analytic_map(s.family.at(sigma), 1e-9);
    s.n_x = 1;
    s.x0 = vec({x0});
    s.t_final = tfinal;
    s.dt = 1e-3;
    s.point = vec({0.0});
    s.grid = {{-1.0, 1.0, 21}};
    s.probe_deltas = {1e-1, 1e-2, 1e-3, 1e-4};
    s.params = p.finish();
    return s;
}

Scenario make_sec7(const ScenarioParams& given)
{
    ParamReader p("sec7_counterexample", given);
    const double x01 = p.get("x0_1", 1.0);
    const double x02 = p.get("x0_2", 1.0);
    const double tfinal = p.positive("tfinal", 1.0);
    const double reg_delta = p.positive("reg_delta", 1e-6);
    const double printed_f2 = p.get("printed_f2", 0.0);

    const VectorFn g1 = [](const Vector& x, double) { return vec({x(0), 0.0}); };
    const VectorFn g2 = [](const Vector& x, double) { return vec({0.0, x(1)}); };
    const VectorFn g3 = [](const Vector& x, double) { return Vector(-x); };
    const Predicate surface = [](const Vector& x, double) { return std::abs(x(0)) == std::abs(x(1)); };

    const Predicate x2_dominates = [](const Vector& x, double) { return std::abs(x(0)) < std::abs(x(1)); };
    const Predicate x1_dominates = [](const Vector& x, double) { return std::abs(x(0)) > std::abs(x(1)); };
    const auto make_f = [&](const VectorFn& gi, const std::string& name, const Predicate& where) {
        std::vector<PiecewiseField::Piece> pieces;
        pieces.push_back({name, where, smooth(2, gi), {}});
        pieces.push_back({"g3", [where](const Vector& x, double t) { return !where(x, t); }, smooth(2, g3), {}});
        return PiecewiseField(2, std::move(pieces), {surface});
    };

    SubsystemFamily family;
    // g1 lives where |x2| dominates so that V's active gradient v2 annihilates
    // it; g2 mirrors this. printed_f2 = 1 places g2 on |x1| < |x2| instead,
    // where v2.g2 = |x2| > 0.
    family.emplace(1, make_f(g1, "g1", x2_dominates));
    family.emplace(2, make_f(g2, "g2", printed_f2 != 0.0 ? x2_dominates : x1_dominates));

    SwitchingSignal rho;
    rho.eval = [](const Vector& x, double) { return x(0) >= 0.0 ? 1 : 2; };
    rho.universe = {true, 2, "{1, 2}"};
    rho.boundaries.push_back([](const Vector& x, double) { return x(0) == 0.0; });

    Scenario s(assemble_switched(family, rho));
    s.name = "sec7_counterexample";
    s.description = "g1 = [x1;0], g2 = [0;x2], g3 = -x; V = max(|x1|,|x2|)";
    s.family = family;
    s.rho = rho;

    std::vector<std::pair<ScalarFn, VectorFn>> parts;
    for (int i = 0; i < 2; ++i) {
        for (double sign : {1.0, -1.0}) {
            parts.emplace_back([i, sign](const Vector& x, double) { return sign * x(i); },
                               [i, sign](const Vector&, double) {
                                   Vector g = Vector::Zero(3);
                                   g(i) = sign;
                                   return g;
                               });
        }
    }
    s.V = max_candidate(2, std::move(parts));
    s.V.lower_bound = [](const Vector& x, double) { return 0.5 * x.lpNorm<Eigen::Infinity>(); };
    s.V.upper_bound = [](const Vector& x, double) { return 2.0 * x.lpNorm<Eigen::Infinity>(); };
    s.V.decay = [](const Vector&, double) { return 0.0; };

    s.subsystem_maps[1] = analytic_map(family.at(1), reg_delta);
    s.subsystem_maps[2] = analytic_map(family.at(2), reg_delta);
    const SetValuedMap F1 = s.subsystem_maps[1];
    const SetValuedMap F2 = s.subsystem_maps[2];
    const SetValuedMap F = [F1, F2](const Vector& x, double t) {
        const std::vector<Polytope> both{F1(x, t), F2(x, t)};
        return union_hull(both);
    };
    s.rule = SelectionRule::custom(F, [](const Vector& x, double, const Polytope&) { return Vector(0.5 * x); });

    s.n_x = 2;
    s.x0 = vec({x01, x02});
    s.t_final = tfinal;
    s.dt = 1e-3;
    s.point = vec({1.0, 1.0});
    s.grid = {{-2.0, 2.0, 21}, {-2.0, 2.0, 21}};
    s.probe_deltas = {1e-1, 1e-2, 1e-3, 1e-4};
    s.mode = DerivativeMode::lower;
    s.params = p.finish();
    return s;
}

Scenario make_sec8_example1(const ScenarioParams& given)
{
    ParamReader p("sec8_example1", given);
    const double nd = p.get("n", 1.0);
    if (nd != std::floor(nd) || nd < 1.0 || nd > 3.0) {
        throw std::invalid_argument("sec8_example1: n must be 1, 2 or 3");
    }
    const auto n = static_cast<Eigen::Index>(nd);
    const double k = p.positive("k", 1.0);
    const double beta = p.positive("beta", 1.0);
    const double theta = p.get("theta", 2.0);
    const double dbar = p.get("dbar", 0.5);
    const double x0 = p.get("x0", 1.0);
    const double thetahat0 = p.get("thetahat0", 0.0);
    const double allow = p.get("allow_violation", 0.0);
    const double tfinal = p.positive("tfinal", 20.0);
    if (dbar < 0.0) throw std::invalid_argument("sec8_example1: dbar must be nonnegative");

    std::vector<std::string> warnings;
    if (!(beta > dbar)) {
        const std::string msg = "sec8_example1: beta <= dbar, the decrease condition is not guaranteed";
        if (allow == 0.0) throw std::invalid_argument(msg + " (set allow_violation=1 to run anyway)");
        warnings.push_back(msg);
    }

    // z = [x; theta~], Y(x) = diag(x), L = n.
    const Eigen::Index dim = 2 * n;
    const auto closed_loop = [n, k, beta, dbar](const Vector& z, double t, const Vector& sgn) {
        const Vector x = z.head(n);
        const Vector th = z.tail(n);
        Vector out(2 * n);
        out.head(n) = -k * x + x.cwiseProduct(th) + Vector::Constant(n, dbar * std::sin(t)) - beta * sgn;
        out.tail(n) = -x.cwiseProduct(x);
        return out;
    };

    SubsystemFamily family;
    family.emplace(1, signum_field(n, dim, closed_loop));
    const SwitchingSignal rho = SwitchingSignal::constant(1);

    Scenario s(assemble_switched(family, rho));
    s.name = "sec8_example1";
    s.description = "adaptive control xdot = -kx + Y theta~ + d - beta sgn(x), theta~dot = -Y^T x";
    s.family = family;
    s.rho = rho;
    s.V = quadratic_candidate(n, dim, k);
    s.rule = SelectionRule::sliding(coordinate_surfaces(n, dim));
    s.subsystem_maps[1] = analytic_map(family.at(1), 1e-6);
    s.n_x = n;
    s.x0 = Vector(dim);
    s.x0.head(n).setConstant(x0);
    s.x0.tail(n).setConstant(theta - thetahat0);
    s.t_final = tfinal;
    s.dt = 1e-3;
    s.point = Vector::Zero(dim);
    s.point(0) = 1.0;
    for (Eigen::Index i = 0; i < dim; ++i) s.grid.push_back({-2.0, 2.0, dim <= 2 ? 21u : 5u});
    s.grid.push_back({0.0, 6.0, 7});
    s.probe_deltas = {1e-1, 1e-2, 1e-3};
    s.params = p.finish();
    s.warnings = std::move(warnings);
    return s;
}

Scenario make_sec8_example2(const ScenarioParams& given)
{
    ParamReader p("sec8_example2", given);
    const double k1 = p.positive("k1", 1.0);
    const double k2 = p.positive("k2", 1.5);
    const double theta1 = p.get("theta1", 1.0);
    const double theta2 = p.get("theta2", -1.5);
    const double dbar1 = p.get("dbar1", 0.3);
    const double dbar2 = p.get("dbar2", 0.6);
    const double beta1 = p.positive("beta1", dbar1 + 0.5);
    const double beta2 = p.positive("beta2", dbar2 + 0.5);
    const double x0 = p.get("x0", 1.0);
    const double allow = p.get("allow_violation", 0.0);
    const double tfinal = p.positive("tfinal", 20.0);
    if (dbar1 < 0.0 || dbar2 < 0.0) throw std::invalid_argument("sec8_example2: dbar must be nonnegative");

    std::vector<std::string> warnings;
    if (!(beta1 > dbar1) || !(beta2 > dbar2)) {
        const std::string msg = "sec8_example2: beta_sigma <= dbar_sigma, the decrease condition is not guaranteed";
        if (allow == 0.0) throw std::invalid_argument(msg + " (set allow_violation=1 to run anyway)");
        warnings.push_back(msg);
    }

    // z = [x; theta~_1; theta~_2], Y_sigma = 1_sigma (x) Z_sigma.
    constexpr Eigen::Index n = 1;
    constexpr Eigen::Index dim = 3;
    struct Sub {
        double k, beta;
        std::function<double(double, double)> Z;  // (x, t)
        std::function<double(double)> d;          // t
    };
    const std::vector<Sub> subs = {
        {k1, beta1, [](double x, double) { return x; }, [dbar1](double t) { return dbar1 * std::sin(t); }},
        {k2, beta2, [](double x, double t) { return x * (1.0 + 0.5 * std::cos(t)); },
         [dbar2](double t) { return dbar2 * std::cos(2.0 * t); }},
    };

    SubsystemFamily family;
    for (std::size_t j = 0; j < subs.size(); ++j) {
        const Sub sub = subs[j];
        const auto slot = static_cast<Eigen::Index>(n + j);
        family.emplace(static_cast<int>(j + 1),
                       signum_field(n, dim, [sub, slot](const Vector& z, double t, const Vector& sgn) {
                           const double x = z(0);
                           const double Z = sub.Z(x, t);
                           Vector out = Vector::Zero(dim);
                           out(0) = -sub.k * x + Z * z(slot) + sub.d(t) - sub.beta * sgn(0);
                           out(slot) = -Z * x;
                           return out;
                       }));
    }

    SwitchingSignal rho;
    rho.eval = [](const Vector& z, double t) { return std::sin(2.0 * t + 0.25 * z(0)) >= 0.0 ? 1 : 2; };
    rho.universe = {true, 2, "{1, 2}"};
    rho.boundaries.push_back([](const Vector& z, double t) { return std::sin(2.0 * t + 0.25 * z(0)) == 0.0; });

    Scenario s(assemble_switched(family, rho));
    s.name = "sec8_example2";
    s.description = "two adaptive subsystems, time-periodic state-dependent switching";
    s.family = family;
    s.rho = rho;
    s.V = quadratic_candidate(n, dim, std::min(k1, k2));
    s.rule = SelectionRule::sliding(coordinate_surfaces(n, dim));
    s.subsystem_maps[1] = analytic_map(family.at(1), 1e-6);
    s.subsystem_maps[2] = analytic_map(family.at(2), 1e-6);
    s.n_x = n;
    s.x0 = vec({x0, theta1, theta2});
    s.t_final = tfinal;
    s.dt = 1e-3;
    s.point = vec({0.0, 0.0, 0.0});
    s.grid = {{-2.0, 2.0, 9}, {-2.0, 2.0, 9}, {-2.0, 2.0, 9}, {0.0, 6.0, 7}};
    s.probe_deltas = {1e-1, 1e-2, 1e-3};
    s.params = p.finish();
    s.warnings = std::move(warnings);
    return s;
}

} // namespace

std::vector<std::string> scenario_names() { return kNames; }

std::string canonical_scenario(const std::string& name)
{
    static const std::map<std::string, std::string> aliases = {
        {"sec4", "sec4_example"},   {"sec7", "sec7_counterexample"}, {"sec8_1", "sec8_example1"},
        {"ex1", "sec8_example1"},   {"sec8_2", "sec8_example2"},     {"ex2", "sec8_example2"},
    };
    if (std::find(kNames.begin(), kNames.end(), name) != kNames.end()) return name;
    if (const auto it = aliases.find(name); it != aliases.end()) return it->second;
    std::string known;
    for (const auto& n : kNames) known += (known.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown scenario '" + name + "' (known: " + known + ")");
}

Scenario make_scenario(const std::string& name, const ScenarioParams& params)
{
    const std::string canon = canonical_scenario(name);
    if (canon == "sec4_example") return make_sec4(params);
    if (canon == "sec7_counterexample") return make_sec7(params);
    if (canon == "sec8_example1") return make_sec8_example1(params);
    return make_sec8_example2(params);
}

} // namespace inclusion_lab

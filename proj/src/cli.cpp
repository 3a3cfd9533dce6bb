#include "inclusion_lab/cli.hpp"

#include "inclusion_lab/fields.hpp"
#include "inclusion_lab/hull.hpp"
#include "inclusion_lab/parallel.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace inclusion_lab::cli {

namespace {

using json = nlohmann::ordered_json;

/// Usage or configuration problems; mapped to exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string fmt(double v, int digits = 6)
{
    std::ostringstream os;
    os << std::setprecision(digits) << v + 0.0;  // no "-0"
    return os.str();
}

std::string fmt(const Vector& v, int digits = 6)
{
    std::ostringstream os;
    os << '[';
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << std::setprecision(digits) << v(i);
    os << ']';
    return os.str();
}

std::vector<double> parse_numbers(const std::string& text, const std::string& what)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw UsageError("malformed " + what + ": '" + text + "'");
        }
        if (used != item.size() || !std::isfinite(v)) throw UsageError("malformed " + what + ": '" + text + "'");
        out.push_back(v);
    }
    if (out.empty()) throw UsageError("empty " + what);
    return out;
}

Vector to_vector(const std::vector<double>& v)
{
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

struct Verdict {
    std::string name;
    bool pass;
    std::string detail;
};

struct Summary {
    std::string scenario;
    json params = json::object();
    std::vector<Verdict> verdicts;
    std::optional<double> worst_margin;
    double runtime_s = 0.0;

    void add(std::string name, bool pass, std::string detail)
    {
        verdicts.push_back({std::move(name), pass, std::move(detail)});
    }
    bool all_pass() const
    {
        return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
    }
    void fold_margin(double m)
    {
        if (std::isnan(m)) return;
        worst_margin = worst_margin ? std::min(*worst_margin, m) : m;
    }
};

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json to_json(const Summary& s)
{
    json verdicts = json::array();
    for (const auto& v : s.verdicts) verdicts.push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
    return {{"scenario", s.scenario},
            {"params", s.params},
            {"verdicts", verdicts},
            {"worst_margin", s.worst_margin ? finite_or_null(*s.worst_margin) : json(nullptr)},
            {"runtime_s", s.runtime_s}};
}

void write_json_file(const std::string& path, const Summary& s)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw UsageError("cannot open '" + path + "' for writing");
    os << to_json(s).dump(2) << '\n';
    if (!os) throw UsageError("failed writing '" + path + "'");
}

void print_summary(std::ostream& os, const Summary& s)
{
    for (const auto& v : s.verdicts) os << (v.pass ? "PASS " : "FAIL ") << v.name << ": " << v.detail << '\n';
    if (s.worst_margin) os << "worst margin: " << fmt(*s.worst_margin, 10) << '\n';
    os << "runtime: " << fmt(s.runtime_s, 3) << " s\n";
}

json params_json(const Scenario& sc, const RunConfig& cfg)
{
    json p = json::object();
    for (const auto& [k, v] : sc.params) p[k] = v;
    if (cfg.dt) p["dt"] = *cfg.dt;
    if (cfg.tfinal) p["tfinal"] = *cfg.tfinal;
    if (cfg.delta) p["delta"] = *cfg.delta;
    if (cfg.samples) p["samples"] = *cfg.samples;
    if (cfg.tol) p["tol"] = *cfg.tol;
    if (cfg.grid) p["grid"] = *cfg.grid;
    if (cfg.mode) p["mode"] = *cfg.mode;
    if (cfg.method) p["method"] = *cfg.method;
    p["seed"] = cfg.seed;
    return p;
}

double require_positive(const std::optional<double>& v, double fallback, const char* what)
{
    const double x = v.value_or(fallback);
    if (!(x > 0.0) || !std::isfinite(x)) throw UsageError(std::string("--") + what + " must be positive");
    return x;
}

// -------------------------------------------------------------------------
// simulate

int cmd_simulate(const RunConfig& cfg, Scenario& sc, Summary& sum, std::ostream& out)
{
    const double dt = require_positive(cfg.dt, sc.dt, "dt");
    const double tfinal = require_positive(cfg.tfinal, sc.t_final, "tfinal");
    if (!(tfinal > sc.t0)) throw UsageError("--tfinal must exceed the initial time");
    const Method method = cfg.method ? parse_method(*cfg.method) : sc.method;

    IntegrateOptions opts;
    opts.candidate = &sc.V;
    Trajectory traj;
    std::string escape;
    try {
        traj = integrate(sc.field, sc.rule, sc.x0, sc.t0, tfinal, dt, method, opts);
    } catch (const FiniteEscape& e) {
        traj = e.partial();
        escape = e.what();
    }

    if (cfg.out.empty()) {
        write_csv(out, traj);
    } else {
        std::ofstream os(cfg.out, std::ios::binary);
        if (!os) throw UsageError("cannot open '" + cfg.out + "' for writing");
        write_csv(os, traj);
        if (!os) throw UsageError("failed writing '" + cfg.out + "'");
    }

    const MonitorReport mon = monitor(traj, sc.V);
    sum.add("V nonincreasing", mon.nonincreasing,
            "max uptick " + fmt(mon.max_uptick) + " (tolerance " + fmt(mon.tol_up) + ")");
    sum.add("integral of W bounded by V(initial)", mon.W_integral <= mon.V_initial + 1e-3,
            "int W = " + fmt(mon.W_integral) + ", V(initial) = " + fmt(mon.V_initial));
    sum.add("W tail", true, "max W over last 10% = " + fmt(mon.W_tail));
    sum.add("trajectory complete", escape.empty(),
            escape.empty() ? "reached t = " + fmt(traj.times.back()) + " with " + std::to_string(traj.events.size())
                                 + " events"
                           : escape);
    sum.fold_margin(-mon.max_uptick);
    return escape.empty() ? 0 : 1;
}

// -------------------------------------------------------------------------
// certify

std::vector<GridPoint> grid_for(const RunConfig& cfg, const Scenario& sc, std::string& description)
{
    const std::vector<GridAxis> axes = cfg.grid ? parse_grid(*cfg.grid) : sc.grid;
    std::ostringstream os;
    for (std::size_t i = 0; i < axes.size(); ++i) {
        os << (i ? " x " : "") << '[' << fmt(axes[i].min) << ',' << fmt(axes[i].max) << "]:" << axes[i].count;
    }
    description = os.str();
    try {
        return make_grid(axes, sc.field.dim(), sc.t0);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

void add_certification_verdicts(const CertificationReport& rep, Summary& sum)
{
    const auto line = [&](const SubsystemSummary& s, const std::string& name) {
        const GridPoint& at = rep.grid[s.worst_grid_index];
        std::ostringstream os;
        os << s.passed << " passed, " << s.failed << " failed; worst margin " << fmt(s.worst_margin) << " at x="
           << fmt(at.x) << " t=" << fmt(at.t);
        sum.add(name, s.failed == 0, os.str());
        sum.fold_margin(s.worst_margin);
    };
    for (const auto& s : rep.subsystems) line(s, std::string("subsystem ") + std::to_string(s.index) + " (" + to_string(rep.mode) + ")");
    line(rep.union_hull, std::string("union hull (") + to_string(rep.mode) + ")");
}

int cmd_certify(const RunConfig& cfg, Scenario& sc, Summary& sum, std::ostream& err)
{
    if (sc.subsystem_maps.empty()) throw UsageError(sc.name + " has no subsystem maps to certify");
    CertifyOptions opts;
    try {
        opts.mode = cfg.mode ? parse_mode(*cfg.mode) : sc.mode;
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    opts.tol = cfg.tol.value_or(kDefaultTol);
    if (!(opts.tol >= 0.0)) throw UsageError("--tol must be nonnegative");
    opts.family = {sc.V};
    const std::vector<GridPoint> grid = grid_for(cfg, sc, opts.grid_description);
    const CertificationReport rep = certify(sc.V, sc.subsystem_maps, grid, opts);
    for (const auto& w : rep.warnings) err << "warning: " << w << '\n';
    add_certification_verdicts(rep, sum);
    return rep.all_pass() ? 0 : 1;
}

// -------------------------------------------------------------------------
// contain

ContainmentOptions containment_options(const RunConfig& cfg)
{
    ContainmentOptions o;
    o.delta = require_positive(cfg.delta, o.delta, "delta");
    o.n_samples = cfg.samples.value_or(o.n_samples);
    if (o.n_samples == 0) throw UsageError("--samples must be positive");
    o.tol = cfg.tol.value_or(o.tol);
    o.seed = cfg.seed;
    if (cfg.mode) {
        if (*cfg.mode == "krasovskii") {
            o.kind = Regularization::krasovskii;
        } else if (*cfg.mode == "filippov") {
            o.kind = Regularization::filippov;
        } else {
            throw UsageError("contain: --mode must be krasovskii or filippov");
        }
    }
    return o;
}

int cmd_contain(const RunConfig& cfg, Scenario& sc, Summary& sum)
{
    const ContainmentOptions o = containment_options(cfg);
    std::vector<GridPoint> points;
    std::string description;
    if (cfg.grid) {
        points = grid_for(cfg, sc, description);
    } else {
        const Vector x = cfg.point.value_or(sc.point);
        if (x.size() != sc.field.dim()) throw UsageError("--point has the wrong dimension");
        points.push_back({x, sc.t0});
    }

    std::vector<std::optional<ContainmentReport>> reports(points.size());
    parallel_for(points.size(), [&](std::size_t i) {
        reports[i] = containment_check(sc.family, sc.rho, points[i].x, points[i].t, o);
    });

    std::size_t held = 0;
    double worst = 0.0;
    std::size_t worst_at = 0;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        if (reports[i]->holds) ++held;
        if (reports[i]->inflation_needed > worst) {
            worst = reports[i]->inflation_needed;
            worst_at = i;
        }
    }
    if (points.size() == 1) {
        const ContainmentReport& r = *reports.front();
        std::ostringstream os;
        os << "attained indices " << r.attained.size() << ", inflation needed " << fmt(worst) << ", K diameter "
           << fmt(r.assembled_estimate.diameter()) << " at x=" << fmt(points.front().x);
        sum.add("K inside closed hull of union of K_sigma", r.holds, os.str());
    } else {
        std::ostringstream os;
        os << held << " of " << points.size() << " points hold; worst inflation " << fmt(worst) << " at x="
           << fmt(points[worst_at].x) << " t=" << fmt(points[worst_at].t) << " over " << description;
        sum.add("K inside closed hull of union of K_sigma", held == points.size(), os.str());
    }
    sum.fold_margin(-worst);
    return held == points.size() ? 0 : 1;
}

// -------------------------------------------------------------------------
// probe

int cmd_probe(const RunConfig& cfg, Scenario& sc, Summary& sum)
{
    std::vector<double> deltas = sc.probe_deltas;
    if (cfg.delta) {
        const double d = require_positive(cfg.delta, 1.0, "delta");
        deltas = {d, d / 10.0, d / 100.0, d / 1000.0};
    }
    const std::size_t n = cfg.samples.value_or(500);
    if (n == 0) throw UsageError("--samples must be positive");
    const Vector x = cfg.point.value_or(sc.point);
    if (x.size() != sc.field.dim()) throw UsageError("--point has the wrong dimension");

    const ProbeReport rep = assumption_probe(sc.rho, x, sc.t0, deltas, n, 64, cfg.seed);
    std::ostringstream os;
    os << "index counts";
    for (std::size_t i = 0; i < rep.deltas.size(); ++i) os << " [" << fmt(rep.deltas[i]) << ": " << rep.index_counts[i] << ']';
    os << "; finite_at " << (rep.finite_at ? fmt(*rep.finite_at) : std::string("none")) << " (cap " << rep.cap
       << "); " << rep.note;
    sum.add("locally finite switching near x=" + fmt(x), rep.finite_at.has_value(), os.str());
    return rep.finite_at ? 0 : 1;
}

// -------------------------------------------------------------------------
// repro

bool vertices_equal(const Polytope& P, double value)
{
    return std::all_of(P.vertices().begin(), P.vertices().end(),
                       [&](const Vector& v) { return (v.array() == value).all(); });
}

void repro_sec4(const RunConfig& cfg, Scenario& sc, Summary& sum)
{
    const std::string tag = sc.name + ": ";
    const Vector x0 = Vector::Zero(1);
    const double delta = cfg.delta.value_or(1e-3);
    const std::size_t n = cfg.samples.value_or(500);

    const Polytope K = krasovskii_estimate(sc.field, x0, 0.0, delta, n, cfg.seed);
    const Polytope interval(std::vector<Vector>{Vector::Zero(1), Vector::Ones(1)});
    const double h = hausdorff(K, interval);
    sum.add(tag + "Krasovskii set at 0 is [0,1]", h <= 0.05, "Hausdorff distance to [0,1] = " + fmt(h));

    const Polytope F = filippov_estimate(sc.field, x0, 0.0, delta, n, cfg.seed);
    sum.add(tag + "Filippov set at 0 is {1}", vertices_equal(F, 1.0),
            "Filippov estimate has " + std::to_string(F.size()) + " vertices, all equal to 1: "
                + (vertices_equal(F, 1.0) ? "yes" : "no"));

    ContainmentOptions o;
    o.delta = delta;
    o.n_samples = n;
    o.seed = cfg.seed;
    const ContainmentReport r = containment_check(sc.family, sc.rho, x0, 0.0, o);
    bool subs_zero = true;
    for (const auto& [sigma, est] : r.subsystem_estimates) subs_zero = subs_zero && vertices_equal(est, 0.0);
    sum.add(tag + "each attained subsystem set at 0 is {0}", subs_zero,
            std::to_string(r.subsystem_estimates.size()) + " attained subsystems");
    const bool fails = !r.holds && r.inflation_needed >= 0.9 && r.inflation_needed <= 1.1;
    sum.add(tag + "containment fails at 0 with inflation about 1", fails,
            std::string("holds=") + (r.holds ? "true" : "false") + ", inflation needed " + fmt(r.inflation_needed));

    const ProbeReport p = assumption_probe(sc.rho, x0, 0.0, sc.probe_deltas, n, 64, cfg.seed);
    std::ostringstream os;
    for (std::size_t i = 0; i < p.deltas.size(); ++i) os << (i ? ", " : "") << fmt(p.deltas[i]) << ": " << p.index_counts[i];
    sum.add(tag + "switching signal is not locally finite at 0", !p.finite_at.has_value(),
            "index counts " + os.str() + "; finite_at " + (p.finite_at ? fmt(*p.finite_at) : "none"));
    sum.fold_margin(-r.inflation_needed);
}

void repro_sec7(const RunConfig& cfg, Scenario& sc, Summary& sum)
{
    const std::string tag = sc.name + ": ";
    CertifyOptions opts;
    opts.mode = DerivativeMode::lower;
    opts.tol = cfg.tol.value_or(kDefaultTol);
    opts.family = {sc.V};
    const std::vector<GridPoint> grid = grid_for(cfg, sc, opts.grid_description);
    const CertificationReport rep = certify(sc.V, sc.subsystem_maps, grid, opts);

    for (const auto& s : rep.subsystems) {
        sum.add(tag + "subsystem " + std::to_string(s.index) + " lower derivative <= 0 on the grid", s.failed == 0,
                std::to_string(s.passed) + " grid points pass, worst margin " + fmt(s.worst_margin));
    }

    // The union hull must fail exactly on the surface |x1| = |x2|, x != 0,
    // with lower derivative 0.5 V(x).
    std::size_t surface = 0;
    std::size_t surface_fail = 0;
    std::size_t off_fail = 0;
    double worst_err = 0.0;
    for (const auto& pr : rep.points) {
        const GridPoint& g = rep.grid[pr.grid_index];
        const bool on = std::abs(std::abs(g.x(0)) - std::abs(g.x(1))) <= 1e-12 * (1.0 + g.x.norm()) && g.x.norm() > 0.0;
        if (on) {
            ++surface;
            if (!pr.union_hull.pass) ++surface_fail;
            const double expect = 0.5 * sc.V.value(g.x, g.t);
            worst_err = std::max(worst_err, std::abs(pr.union_hull.value.value() - expect));
        } else if (!pr.union_hull.pass) {
            ++off_fail;
        }
    }
    sum.add(tag + "union hull lower derivative = 0.5 V(x) > 0 on |x1|=|x2|",
            surface > 0 && surface_fail == surface && worst_err <= 1e-9,
            std::to_string(surface_fail) + " of " + std::to_string(surface) + " surface points fail, max |value - 0.5V| = "
                + fmt(worst_err) + "; " + std::to_string(off_fail) + " failures off the surface");

    const Vector x1 = (Vector(2) << 1.0, 1.0).finished();
    const ExtendedReal red = gen_deriv_reduced(sc.V, std::span<const LyapunovCandidate>(&sc.V, 1),
                                               sc.subsystem_maps.at(1)(x1, 0.0), x1, 0.0);
    sum.add(tag + "reduced derivative at [1;1] is -V(x) = -1", !red.is_neg_infinity() && std::abs(red.value() + 1.0) <= 1e-9,
            "value " + red.str());

    const double dt = require_positive(cfg.dt, 1e-3, "dt");
    const Trajectory traj = integrate(sc.field, sc.rule, sc.x0, 0.0, 1.0, dt, Method::rk4);
    const Vector expect = std::exp(0.5) * sc.x0;
    const double e = (traj.states.back() - expect).norm();
    sum.add(tag + "selection q = x/2 from [1;1] gives x(1) = e^0.5 [1;1]", e <= 1e-3 * std::exp(0.5),
            "x(1) = " + fmt(traj.states.back(), 12) + ", error " + fmt(e));
    const MonitorReport mon = monitor(traj, sc.V);
    sum.add(tag + "V increases along that solution", !mon.nonincreasing,
            "V from " + fmt(mon.V_initial) + " to " + fmt(mon.V_final));
    sum.fold_margin(rep.union_hull.worst_margin);
}

void repro_sec8(const RunConfig& cfg, Scenario& sc, Summary& sum)
{
    const std::string tag = sc.name + ": ";
    const double dt = require_positive(cfg.dt, sc.dt, "dt");
    const double tfinal = require_positive(cfg.tfinal, sc.t_final, "tfinal");
    const auto run = [&](double h, double T) { return integrate(sc.field, sc.rule, sc.x0, sc.t0, T, h, sc.method); };

    const Trajectory traj = run(dt, tfinal);
    const MonitorReport mon = monitor(traj, sc.V);
    sum.add(tag + "V nonincreasing", mon.nonincreasing && mon.max_uptick <= 1e-4,
            "max uptick " + fmt(mon.max_uptick));
    sum.add(tag + "integral of W <= V(initial) + 1e-3", mon.W_integral <= mon.V_initial + 1e-3,
            "int W = " + fmt(mon.W_integral) + ", V(initial) = " + fmt(mon.V_initial));
    const double xf = traj.states.back().head(sc.n_x).norm();
    sum.add(tag + "|x(T)| <= 1e-2", xf <= 1e-2, "|x(" + fmt(tfinal) + ")| = " + fmt(xf));

    const MonitorReport m10 = monitor(run(dt, 10.0), sc.V);
    const MonitorReport m40 = monitor(run(dt, 40.0), sc.V);
    sum.add(tag + "W tail shrinks with the horizon", m40.W_tail <= 0.25 * m10.W_tail,
            "W tail at T=10: " + fmt(m10.W_tail) + ", at T=40: " + fmt(m40.W_tail));

    const Trajectory half = run(0.5 * dt, tfinal);
    const double gap = (half.states.back() - traj.states.back()).norm();
    sum.add(tag + "halving dt changes the final state by <= 1e-3", gap <= 1e-3, "difference " + fmt(gap));

    CertifyOptions opts;
    opts.tol = cfg.tol.value_or(kDefaultTol);
    const std::vector<GridPoint> grid = grid_for(cfg, sc, opts.grid_description);
    const CertificationReport rep = certify(sc.V, sc.subsystem_maps, grid, opts);
    sum.add(tag + "upper derivative <= -W on the grid for every subsystem and the union", rep.all_pass(),
            std::to_string(grid.size()) + " grid points, worst margin "
                + fmt(std::min(rep.union_hull.worst_margin, rep.subsystems.front().worst_margin)));
    sum.fold_margin(rep.union_hull.worst_margin);
}

int cmd_repro(const RunConfig& cfg, Scenario& sc, Summary& sum)
{
    if (sc.name == "sec4_example") {
        repro_sec4(cfg, sc, sum);
    } else if (sc.name == "sec7_counterexample") {
        repro_sec7(cfg, sc, sum);
    } else {
        repro_sec8(cfg, sc, sum);
    }
    return sum.all_pass() ? 0 : 1;
}

// -------------------------------------------------------------------------

RunConfig from_json(const json& j)
{
    static const std::set<std::string> known = {"scenario", "params", "dt",     "tfinal", "delta", "samples", "tol",
                                                "grid",     "mode",   "method", "point",  "seed",  "out",     "json"};
    if (!j.is_object()) throw UsageError("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw UsageError("config: unknown key '" + key + "'");
    }
    RunConfig c;
    try {
        if (j.contains("scenario")) c.scenario = j.at("scenario").get<std::string>();
        if (j.contains("params")) {
            for (const auto& [k, v] : j.at("params").items()) c.params[k] = v.get<double>();
        }
        if (j.contains("dt")) c.dt = j.at("dt").get<double>();
        if (j.contains("tfinal")) c.tfinal = j.at("tfinal").get<double>();
        if (j.contains("delta")) c.delta = j.at("delta").get<double>();
        if (j.contains("samples")) c.samples = j.at("samples").get<std::size_t>();
        if (j.contains("tol")) c.tol = j.at("tol").get<double>();
        if (j.contains("grid")) c.grid = j.at("grid").get<std::string>();
        if (j.contains("mode")) c.mode = j.at("mode").get<std::string>();
        if (j.contains("method")) c.method = j.at("method").get<std::string>();
        if (j.contains("point")) c.point = to_vector(j.at("point").get<std::vector<double>>());
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("out")) c.out = j.at("out").get<std::string>();
        if (j.contains("json")) c.json = j.at("json").get<std::string>();
    } catch (const json::exception& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    return c;
}

} // namespace

RunConfig parse_config_text(const std::string& text)
{
    json j;
    try {
        j = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    try {
        return from_json(j);
    } catch (const UsageError& e) {
        throw std::invalid_argument(e.what());
    }
}

RunConfig load_config(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::invalid_argument("cannot read config '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config_text(ss.str());
}

void apply_overrides(RunConfig& base, const RunConfig& o)
{
    if (!o.scenario.empty()) base.scenario = o.scenario;
    for (const auto& [k, v] : o.params) base.params[k] = v;
    if (o.dt) base.dt = o.dt;
    if (o.tfinal) base.tfinal = o.tfinal;
    if (o.delta) base.delta = o.delta;
    if (o.samples) base.samples = o.samples;
    if (o.tol) base.tol = o.tol;
    if (o.grid) base.grid = o.grid;
    if (o.mode) base.mode = o.mode;
    if (o.method) base.method = o.method;
    if (o.point) base.point = o.point;
    if (!o.out.empty()) base.out = o.out;
    if (!o.json.empty()) base.json = o.json;
}

std::vector<GridAxis> parse_grid(const std::string& text)
{
    std::vector<GridAxis> axes;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::vector<std::string> parts;
        std::stringstream is(item);
        std::string part;
        while (std::getline(is, part, ':')) parts.push_back(part);
        if (parts.size() != 3) throw std::invalid_argument("grid axis '" + item + "' is not min:max:count");
        double lo = 0.0;
        double hi = 0.0;
        long count = 0;
        try {
            std::size_t u1 = 0;
            std::size_t u2 = 0;
            std::size_t u3 = 0;
            lo = std::stod(parts[0], &u1);
            hi = std::stod(parts[1], &u2);
            count = std::stol(parts[2], &u3);
            if (u1 != parts[0].size() || u2 != parts[1].size() || u3 != parts[2].size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw std::invalid_argument("grid axis '" + item + "' is not min:max:count");
        }
        if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo)) {
            throw std::invalid_argument("grid axis '" + item + "' needs min < max");
        }
        if (count < 2) throw std::invalid_argument("grid axis '" + item + "' needs count >= 2");
        axes.push_back({lo, hi, static_cast<std::size_t>(count)});
    }
    if (axes.empty()) throw std::invalid_argument("empty grid");
    return axes;
}

void write_csv(std::ostream& os, const Trajectory& traj)
{
    const Eigen::Index n = traj.size() ? traj.states.front().size() : 0;
    os << 't';
    for (Eigen::Index i = 0; i < n; ++i) os << ",x" << (i + 1);
    os << ",V,W,event\n";

    std::vector<std::string> events(traj.size());
    for (const auto& e : traj.events) {
        std::string& slot = events.at(e.sample);
        slot += (slot.empty() ? "" : ";") + std::string(to_string(e.kind));
    }
    const bool has_v = traj.V_values.size() == traj.size();
    os << std::setprecision(17);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        os << traj.times[k];
        for (Eigen::Index i = 0; i < n; ++i) os << ',' << traj.states[k](i);
        if (has_v) {
            os << ',' << traj.V_values[k] << ',' << traj.W_values[k];
        } else {
            os << ",,";
        }
        os << ',' << events[k] << '\n';
    }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    const auto t_start = std::chrono::steady_clock::now();

    CLI::App app{"Regularization, Lyapunov certification and simulation of switched nonsmooth systems",
                 "inclusion_lab"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    RunConfig flags;
    std::string config_path;
    std::vector<std::string> param_items;
    std::string point_text;
    std::string repro_name;
    std::size_t samples = 0;
    double dt = 0.0, tfinal = 0.0, delta = 0.0, tol = 0.0;
    std::string grid, mode, method;

    struct Bound {
        CLI::Option *dt, *tfinal, *delta, *samples, *tol, *grid, *mode, *method, *point, *seed;
    };
    std::map<std::string, Bound> bound;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--scenario", flags.scenario, "Scenario name (" + [] {
            std::string s;
            for (const auto& n : scenario_names()) s += (s.empty() ? "" : ", ") + n;
            return s;
        }() + ")");
        sub->add_option("--config", config_path, "JSON config file; flags override it");
        sub->add_option("--out", flags.out, "Output path (simulate: CSV, otherwise JSON summary)");
        sub->add_option("--json", flags.json, "simulate: JSON summary path");
        sub->add_option("--param", param_items, "Scenario parameter key=value (repeatable)");
        Bound b{};
        b.dt = sub->add_option("--dt", dt, "Integration step");
        b.tfinal = sub->add_option("--tfinal", tfinal, "Final time");
        b.delta = sub->add_option("--delta", delta, "Neighbourhood radius");
        b.samples = sub->add_option("--samples", samples, "Number of samples");
        b.tol = sub->add_option("--tol", tol, "Tolerance");
        b.grid = sub->add_option("--grid", grid, "Grid min:max:count per axis, comma separated; optional trailing time axis");
        b.mode = sub->add_option("--mode", mode, "certify: upper|lower|reduced; contain: krasovskii|filippov");
        b.method = sub->add_option("--method", method, "simulate: euler|rk4");
        b.point = sub->add_option("--point", point_text, "Analysis point, comma separated");
        b.seed = sub->add_option("--seed", flags.seed, "Random seed");
        bound[sub->get_name()] = b;
    };

    CLI::App* simulate = app.add_subcommand("simulate", "Integrate a scenario and write a CSV trajectory");
    CLI::App* certify_cmd = app.add_subcommand("certify", "Grid certification of the Lyapunov decrease condition");
    CLI::App* contain = app.add_subcommand("contain", "Check K(x,t) against the hull of the subsystem sets");
    CLI::App* probe = app.add_subcommand("probe", "Probe local finiteness of the switching signal");
    CLI::App* repro = app.add_subcommand("repro", "Reproduce a built-in example and check its expected outcomes");
    for (CLI::App* sub : {simulate, certify_cmd, contain, probe, repro}) add_common(sub);
    repro->add_option("name", repro_name, "Scenario to reproduce");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    CLI::App* active = app.get_subcommands().front();
    const Bound& b = bound.at(active->get_name());
    flags.command = active->get_name();
    if (b.dt->count()) flags.dt = dt;
    if (b.tfinal->count()) flags.tfinal = tfinal;
    if (b.delta->count()) flags.delta = delta;
    if (b.samples->count()) flags.samples = samples;
    if (b.tol->count()) flags.tol = tol;
    if (b.grid->count()) flags.grid = grid;
    if (b.mode->count()) flags.mode = mode;
    if (b.method->count()) flags.method = method;
    if (!repro_name.empty()) flags.scenario = repro_name;

    Summary sum;
    int code = 2;
    try {
        if (b.point->count()) flags.point = to_vector(parse_numbers(point_text, "--point"));
        for (const auto& item : param_items) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) throw UsageError("--param expects key=value, got '" + item + "'");
            const std::vector<double> v = parse_numbers(item.substr(eq + 1), "--param value");
            if (v.size() != 1) throw UsageError("--param expects one number, got '" + item + "'");
            flags.params[item.substr(0, eq)] = v.front();
        }

        RunConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        apply_overrides(cfg, flags);
        if (b.seed->count()) cfg.seed = flags.seed;
        cfg.command = flags.command;
        if (cfg.scenario.empty()) throw UsageError("no scenario given (use --scenario or a config file)");

        Scenario sc = make_scenario(cfg.scenario, cfg.params);
        for (const auto& w : sc.warnings) err << "warning: " << w << '\n';
        sum.scenario = sc.name;
        sum.params = params_json(sc, cfg);

        const bool csv_to_stdout = cfg.command == "simulate" && cfg.out.empty();
        if (cfg.command == "simulate") {
            code = cmd_simulate(cfg, sc, sum, out);
        } else if (cfg.command == "certify") {
            code = cmd_certify(cfg, sc, sum, err);
        } else if (cfg.command == "contain") {
            code = cmd_contain(cfg, sc, sum);
        } else if (cfg.command == "probe") {
            code = cmd_probe(cfg, sc, sum);
        } else {
            code = cmd_repro(cfg, sc, sum);
        }
        sum.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        print_summary(csv_to_stdout ? err : out, sum);
        const std::string json_path = cfg.command == "simulate" ? cfg.json : cfg.out;
        if (!json_path.empty()) write_json_file(json_path, sum);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return code;
}

} // namespace inclusion_lab::cli

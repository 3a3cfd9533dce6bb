#include "inclusion_lab/cli.hpp"
#include "inclusion_lab/fields.hpp"
#include "inclusion_lab/hull.hpp"
#include "inclusion_lab/lyap.hpp"
#include "inclusion_lab/nonsmooth.hpp"
#include "inclusion_lab/scenarios.hpp"
#include "inclusion_lab/sim.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace inclusion_lab;

namespace {

Polytope to_polytope(const std::vector<Vector>& vertices) { return Polytope(vertices); }

py::dict weights_dict(const ConvexWeights& w)
{
    py::dict d;
    d["indices"] = w.indices;
    d["weights"] = w.weights;
    return d;
}

Matrix states_matrix(const Trajectory& tr)
{
    Matrix m(static_cast<Eigen::Index>(tr.size()), tr.size() ? tr.states.front().size() : 0);
    for (std::size_t k = 0; k < tr.size(); ++k) m.row(static_cast<Eigen::Index>(k)) = tr.states[k].transpose();
    return m;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Regularizations, generalized derivatives and simulation of switched nonsmooth systems";

    py::register_exception<NotInHull>(m, "NotInHull", PyExc_ValueError);
    py::register_exception<CoverageViolated>(m, "CoverageViolated", PyExc_RuntimeError);
    py::register_exception<UnknownIndex>(m, "UnknownIndex", PyExc_RuntimeError);
    py::register_exception<NullSetNotNegligible>(m, "NullSetNotNegligible", PyExc_RuntimeError);
    py::register_exception<DegenerateSliding>(m, "DegenerateSliding", PyExc_RuntimeError);

    py::class_<Polytope>(m, "Polytope")
        .def(py::init(&to_polytope), py::arg("vertices"))
        .def_property_readonly("dim", &Polytope::dim)
        .def_property_readonly("vertices", &Polytope::vertices)
        .def("__len__", &Polytope::size)
        .def("diameter", &Polytope::diameter)
        .def("__repr__", [](const Polytope& P) {
            std::ostringstream os;
            os << "Polytope(dim=" << P.dim() << ", vertices=" << P.size() << ")";
            return os.str();
        });

    m.def("support", [](const Polytope& P, const Vector& c) {
        const SupportResult r = support(P, c);
        return py::make_tuple(r.value, r.witness);
    }, py::arg("P"), py::arg("direction"), "Support value and the witnessing vertex index.");
    m.def("distance", &distance, py::arg("P"), py::arg("q"));
    m.def("contains", &contains, py::arg("P"), py::arg("q"), py::arg("tol") = kDefaultTol);
    m.def("nearest_point", [](const Polytope& P, const Vector& q) {
        const NearestPoint np = nearest_point(P, q);
        return py::make_tuple(np.point, np.distance, weights_dict(np.weights));
    }, py::arg("P"), py::arg("q"));
    m.def("caratheodory_reduce", [](const Polytope& P, const Vector& q) {
        return weights_dict(caratheodory_reduce(P, q));
    }, py::arg("P"), py::arg("q"));
    m.def("union_hull", [](const std::vector<Polytope>& parts) { return union_hull(parts); }, py::arg("parts"));
    m.def("hull_subset", &hull_subset, py::arg("A"), py::arg("B"), py::arg("tol") = kDefaultTol);
    m.def("excess", &excess, py::arg("A"), py::arg("B"));
    m.def("hausdorff", &hausdorff, py::arg("A"), py::arg("B"));
    m.def("min_of_convex_max", &min_of_convex_max, py::arg("Pp"), py::arg("Qq"));

    py::class_<Scenario>(m, "Scenario")
        .def_readonly("name", &Scenario::name)
        .def_readonly("description", &Scenario::description)
        .def_readonly("x0", &Scenario::x0)
        .def_readonly("t_final", &Scenario::t_final)
        .def_readonly("dt", &Scenario::dt)
        .def_readonly("point", &Scenario::point)
        .def_readonly("params", &Scenario::params)
        .def_readonly("warnings", &Scenario::warnings)
        .def_property_readonly("dim", [](const Scenario& s) { return s.field.dim(); })
        .def_property_readonly("indices", [](const Scenario& s) {
            std::vector<int> keys;
            for (const auto& [k, f] : s.family) keys.push_back(k);
            return keys;
        })
        .def("field", [](const Scenario& s, const Vector& x, double t) { return s.field.eval(x, t); },
             py::arg("x"), py::arg("t") = 0.0)
        .def("rho", [](const Scenario& s, const Vector& x, double t) { return s.rho(x, t); },
             py::arg("x"), py::arg("t") = 0.0)
        .def("V", [](const Scenario& s, const Vector& x, double t) { return s.V.value(x, t); },
             py::arg("x"), py::arg("t") = 0.0)
        .def("W", [](const Scenario& s, const Vector& x, double t) { return s.V.W(x, t); },
             py::arg("x"), py::arg("t") = 0.0)
        .def("subsystem_set", [](const Scenario& s, int sigma, const Vector& x, double t) {
            const auto it = s.subsystem_maps.find(sigma);
            if (it == s.subsystem_maps.end()) throw py::key_error("no regularized map for index " + std::to_string(sigma));
            return it->second(x, t);
        }, py::arg("sigma"), py::arg("x"), py::arg("t") = 0.0);

    m.def("scenario_names", &scenario_names);
    m.def("scenario", &make_scenario, py::arg("name"), py::arg("params") = ScenarioParams{});

    m.def("krasovskii_estimate", [](const Scenario& s, const Vector& x, double t, double delta, std::size_t n,
                                    std::uint64_t seed, std::optional<int> sigma) {
        return krasovskii_estimate(sigma ? s.family.at(*sigma) : s.field, x, t, delta, n, seed);
    }, py::arg("scenario"), py::arg("x"), py::arg("t") = 0.0, py::arg("delta") = 1e-3, py::arg("n_samples") = 500,
       py::arg("seed") = 0, py::arg("sigma") = py::none());
    m.def("filippov_estimate", [](const Scenario& s, const Vector& x, double t, double delta, std::size_t n,
                                  std::uint64_t seed, std::optional<int> sigma) {
        return filippov_estimate(sigma ? s.family.at(*sigma) : s.field, x, t, delta, n, seed);
    }, py::arg("scenario"), py::arg("x"), py::arg("t") = 0.0, py::arg("delta") = 1e-3, py::arg("n_samples") = 500,
       py::arg("seed") = 0, py::arg("sigma") = py::none());
    m.def("containment_check", [](const Scenario& s, const Vector& x, double t, double delta, std::size_t n,
                                  std::uint64_t seed, bool filippov) {
        ContainmentOptions o;
        o.delta = delta;
        o.n_samples = n;
        o.seed = seed;
        o.kind = filippov ? Regularization::filippov : Regularization::krasovskii;
        const ContainmentReport r = containment_check(s.family, s.rho, x, t, o);
        py::dict d;
        d["holds"] = r.holds;
        d["inflation_needed"] = r.inflation_needed;
        d["attained"] = r.attained;
        d["assembled_estimate"] = r.assembled_estimate;
        d["union_estimate"] = r.union_estimate;
        return d;
    }, py::arg("scenario"), py::arg("x"), py::arg("t") = 0.0, py::arg("delta") = 1e-3, py::arg("n_samples") = 500,
       py::arg("seed") = 0, py::arg("filippov") = false);
    m.def("assumption_probe", [](const Scenario& s, const Vector& x, double t, std::vector<double> deltas,
                                 std::size_t n) {
        const ProbeReport r = assumption_probe(s.rho, x, t, deltas, n);
        py::dict d;
        d["deltas"] = r.deltas;
        d["index_counts"] = r.index_counts;
        d["finite_at"] = r.finite_at ? py::cast(*r.finite_at) : py::none();
        return d;
    }, py::arg("scenario"), py::arg("x"), py::arg("t") = 0.0,
       py::arg("deltas") = std::vector<double>{1e-1, 1e-2, 1e-3, 1e-4}, py::arg("n_samples") = 500);

    m.def("clarke_gradient", [](const Scenario& s, const Vector& x, double t) { return clarke_gradient(s.V, x, t); },
          py::arg("scenario"), py::arg("x"), py::arg("t") = 0.0);
    m.def("gen_deriv_upper", [](const Scenario& s, const Polytope& F, const Vector& x, double t) {
        return gen_deriv_upper(s.V, F, x, t).value;
    }, py::arg("scenario"), py::arg("F"), py::arg("x"), py::arg("t") = 0.0);
    m.def("gen_deriv_lower", [](const Scenario& s, const Polytope& F, const Vector& x, double t) {
        return gen_deriv_lower(s.V, F, x, t).value;
    }, py::arg("scenario"), py::arg("F"), py::arg("x"), py::arg("t") = 0.0);
    m.def("gen_deriv_reduced", [](const Scenario& s, const Polytope& F, const Vector& x, double t) {
        const std::vector<LyapunovCandidate> fam{s.V};
        const ExtendedReal r = gen_deriv_reduced(s.V, fam, F, x, t);
        return r.is_neg_infinity() ? -std::numeric_limits<double>::infinity() : r.value();
    }, py::arg("scenario"), py::arg("F"), py::arg("x"), py::arg("t") = 0.0,
       "Reduced derivative; -inf when the reduced set is empty.");
    m.def("certify", [](const Scenario& s, const std::string& mode, double tol, std::optional<std::vector<std::tuple<double, double, std::size_t>>> grid) {
        std::vector<GridAxis> axes = s.grid;
        if (grid) {
            axes.clear();
            for (const auto& [lo, hi, n] : *grid) axes.push_back({lo, hi, n});
        }
        CertifyOptions o;
        o.mode = parse_mode(mode);
        o.tol = tol;
        const CertificationReport r = certify(s.V, s.subsystem_maps, make_grid(axes, s.field.dim(), s.t0), o);
        py::dict d;
        d["subsystems_pass"] = r.subsystems_pass();
        d["union_pass"] = r.union_pass();
        d["union_failed"] = r.union_hull.failed;
        d["union_worst_margin"] = r.union_hull.worst_margin;
        d["points"] = r.grid.size();
        return d;
    }, py::arg("scenario"), py::arg("mode") = "upper", py::arg("tol") = kDefaultTol, py::arg("grid") = py::none());

    m.def("simulate", [](const Scenario& s, std::optional<double> t_final, std::optional<double> dt,
                         const std::string& method) {
        IntegrateOptions o;
        o.candidate = &s.V;
        const Trajectory tr = integrate(s.field, s.rule, s.x0, s.t0, t_final.value_or(s.t_final), dt.value_or(s.dt),
                                        parse_method(method), o);
        const MonitorReport mr = monitor(tr, s.V);
        py::dict d;
        d["t"] = tr.times;
        d["x"] = states_matrix(tr);
        d["V"] = tr.V_values;
        d["W"] = tr.W_values;
        d["events"] = tr.events.size();
        d["nonincreasing"] = mr.nonincreasing;
        d["max_uptick"] = mr.max_uptick;
        d["W_integral"] = mr.W_integral;
        d["W_tail"] = mr.W_tail;
        return d;
    }, py::arg("scenario"), py::arg("t_final") = py::none(), py::arg("dt") = py::none(), py::arg("method") = "rk4");

    m.def("run_cli", [](const std::vector<std::string>& args) {
        std::vector<std::string> all{"inclusion-lab"};
        all.insert(all.end(), args.begin(), args.end());
        std::vector<const char*> argv;
        for (const auto& a : all) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
    }, py::arg("args"), "Runs the command-line front end; returns (exit_code, stdout, stderr).");
}

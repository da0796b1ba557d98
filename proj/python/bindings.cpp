#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "rovella/config.hpp"
#include "rovella/errors.hpp"
#include "rovella/fit.hpp"
#include "rovella/hyperbolic.hpp"
#include "rovella/measures.hpp"
#include "rovella/orbit.hpp"
#include "rovella/runner.hpp"
#include "rovella/tails.hpp"
#include "rovella/tower.hpp"

namespace py = pybind11;
using namespace rovella;
using nlohmann::json;

namespace {

// Configs cross the boundary as JSON text in the command line schema.
ExperimentConfig parse_config(const std::string& text) {
    return ExperimentConfig::from_json(text.empty() ? json::object() : json::parse(text));
}

py::dict trace_dict(const OrbitTrace& tr) {
    py::dict d;
    d["points"] = tr.points;
    d["log_derivative"] = tr.log_der;
    d["depths"] = tr.depths;
    d["visits"] = std::vector<int>(tr.visits.begin(), tr.visits.end());
    d["truncated"] = tr.truncated;
    return d;
}

}  // namespace

PYBIND11_MODULE(_rovella, m) {
    m.doc() = "Random unimodal maps with critical points of order s: orbits, hyperbolic times, towers and decay.";
    m.attr("__version__") = kVersion;

    py::register_exception<Error>(m, "RovellaError");

    py::class_<MapFamily, std::shared_ptr<MapFamily>>(m, "Family")
        .def(py::init([](const std::string& spec) {
                 return std::const_pointer_cast<MapFamily>(make_family(json::parse(spec)));
             }),
             py::arg("spec"))
        .def("value", [](const MapFamily& f, double t, double x) { return evaluate(f, t, x); })
        .def("derivative", [](const MapFamily& f, double t, double x) { return derivative(f, t, x); })
        .def("schwarzian", [](const MapFamily& f, double t, double x) { return schwarzian(f, t, x); })
        .def_property_readonly("order", &MapFamily::order)
        .def_property_readonly("eps_max", &MapFamily::eps_max)
        .def("to_json", [](const MapFamily& f) { return f.to_json().dump(); });

    m.def(
        "validate_config",
        [](const std::string& config) {
            const ExperimentConfig c = parse_config(config);
            c.validate();
            return c.to_json().dump();
        },
        py::arg("config"));

    m.def(
        "iterate",
        [](const std::string& config, double x0, int n) {
            const ExperimentConfig c = parse_config(config);
            const FamilyPtr f = c.validate();
            return trace_dict(iterate(*f, NoiseStream(c.seed, c.eps), x0, n, c.hyperbolic.delta, SingularPolicy::truncate));
        },
        py::arg("config"), py::arg("x0"), py::arg("n"));

    m.def(
        "hyperbolic_times",
        [](const std::vector<int>& depths, double c_prime) { return hyperbolic_times(depths, depths.size(), c_prime); },
        py::arg("depths"), py::arg("c_prime"));

    m.def("pliss_times", &pliss_times, py::arg("a"), py::arg("c1"), py::arg("c2"), py::arg("A"));

    m.def(
        "ensemble_tails",
        [](const std::string& config) {
            const ExperimentConfig c = parse_config(config);
            const FamilyPtr f = c.validate();
            EnsembleParams p;
            p.seed = c.seed;
            p.eps = c.eps;
            p.samples = c.tails.samples;
            p.n_max = c.tails.n_max;
            p.min_survivors = c.tails.min_survivors;
            p.workers = c.workers;
            EnsembleTails r;
            {
                py::gil_scoped_release release;
                r = ensemble_tails(*f, c.hyperbolic, p);
            }
            return json{{"bad_set", r.bad_set.to_json()},
                        {"first_hyperbolic", r.first_hyperbolic.to_json()},
                        {"first_return", r.first_return.to_json()},
                        {"singular_hits", r.singular_hits},
                        {"samples", r.samples}}
                .dump();
        },
        py::arg("config"));

    m.def(
        "build_partition",
        [](const std::string& config) {
            const ExperimentConfig c = parse_config(config);
            const FamilyPtr f = c.validate();
            std::optional<ReturnPartition> p;
            {
                py::gil_scoped_release release;
                p = build_return_partition(f, NoiseStream(c.seed, c.eps), c.tower_config());
            }
            py::dict d;
            std::vector<double> left, right;
            std::vector<int> tau;
            for (const Element& e : p->elements) {
                left.push_back(static_cast<double>(e.left));
                right.push_back(static_cast<double>(e.right));
                tau.push_back(e.tau);
            }
            std::vector<double> tail;
            for (int n = 0; n <= p->horizon; ++n) tail.push_back(tail_measure(*p, n));
            d["left"] = left;
            d["right"] = right;
            d["tau"] = tau;
            d["tail_measure"] = tail;
            d["seeded_taus"] = p->seeded_taus;
            d["uncovered"] = static_cast<double>(p->uncovered);
            d["horizon"] = p->horizon;
            return d;
        },
        py::arg("config"));

    m.def(
        "equivariant_density",
        [](const std::string& config) {
            const ExperimentConfig c = parse_config(config);
            const FamilyPtr f = c.validate();
            py::gil_scoped_release release;
            return equivariant_density(*f, NoiseStream(c.seed, c.eps), c.measures.m_past,
                                       UniformGrid{c.measures.grid_m}, c.workers)
                .weights;
        },
        py::arg("config"));

    m.def(
        "quenched_correlation",
        [](const std::string& config) {
            const ExperimentConfig c = parse_config(config);
            const FamilyPtr f = c.validate();
            py::gil_scoped_release release;
            return quenched_correlation(*f, NoiseStream(c.seed, c.eps), observable(c.measures.phi),
                                        observable(c.measures.psi), c.measures.n_max,
                                        parse_method(c.measures.method), parse_direction(c.measures.direction),
                                        c.correlation_params())
                .to_json()
                .dump();
        },
        py::arg("config"));

    m.def(
        "fit_exponential",
        [](const std::vector<double>& series, std::size_t burn_in) { return fit_exponential(series, burn_in).to_json().dump(); },
        py::arg("series"), py::arg("burn_in") = 0);

    m.def(
        "run",
        [](const std::string& subcommand, const std::string& config) {
            std::ostringstream log;
            const RunResult r = run(subcommand, parse_config(config), log);
            py::dict d;
            d["exit_code"] = r.exit_code;
            d["message"] = r.message;
            d["artifacts"] = r.artifacts;
            d["manifest"] = r.manifest.dump();
            d["log"] = log.str();
            return d;
        },
        py::arg("subcommand"), py::arg("config"));

    m.def("subcommands", &subcommands);
}

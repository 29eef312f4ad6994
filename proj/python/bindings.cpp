#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "latdisc/body.hpp"
#include "latdisc/cli.hpp"
#include "latdisc/discrepancy.hpp"
#include "latdisc/error.hpp"
#include "latdisc/fourier.hpp"
#include "latdisc/lattice.hpp"
#include "latdisc/mollifier.hpp"
#include "latdisc/rotations.hpp"

namespace py = pybind11;
using namespace latdisc;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Lattice-point counts, mean-square discrepancy and Fourier checks for convex bodies";
    m.attr("__version__") = kToolVersion;

    py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
    py::register_exception<BudgetError>(m, "BudgetError", PyExc_RuntimeError);
    py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

    py::class_<Body>(m, "Body")
        .def_static("ball", &Body::ball, py::arg("dim"), py::arg("radius") = 1.0)
        .def_static("ellipsoid", &Body::ellipsoid, py::arg("semiaxes"))
        .def_static("superellipse", &Body::superellipse, py::arg("m"), py::arg("a") = 1.0, py::arg("b") = 1.0)
        .def_static("parse", [](const std::string& s) { return parse_body(s); })
        .def("rotated", [](const Body& b, double theta) { return rotate(b, theta); })
        .def("polar", [](const Body& b) { return polar(b); })
        .def("gauge", [](const Body& b, const std::vector<double>& x) { return gauge(b, x); })
        .def("support", [](const Body& b, const std::vector<double>& xi) { return support(b, xi); })
        .def_property_readonly("dim", &Body::dim)
        .def_property_readonly("volume", &Body::volume)
        .def_property_readonly("inradius", &Body::inradius)
        .def("__repr__", [](const Body& b) { return "Body('" + b.descriptor() + "')"; })
        .def("__str__", &Body::descriptor);

    py::class_<FlatPoint>(m, "FlatPoint")
        .def_readonly("point", &FlatPoint::point)
        .def_readonly("normal", &FlatPoint::normal)
        .def_readonly("tangent", &FlatPoint::tangent)
        .def_readonly("type", &FlatPoint::type);
    m.def("flat_points", &flat_points);

    m.def("count_points", [](const Body& b, double t) { return count_points(b, t); }, py::arg("body"), py::arg("t"));
    m.def(
        "gauge_events",
        [](const Body& b, double lo, double hi) {
            const auto ev = gauge_events(b, lo, hi);
            std::vector<std::pair<double, std::uint64_t>> out;
            for (const auto& e : ev.events) out.emplace_back(e.rho, e.multiplicity);
            return py::make_tuple(ev.base_count, out);
        },
        py::arg("body"), py::arg("lo"), py::arg("hi"), "(base_count, [(rho, multiplicity), ...])");
    m.def("shell_count", [](const Body& b, double tau, double eps) { return shell_count(b, tau, eps).count; });
    m.def("lattice_rest", [](const Body& b, double t) { return lattice_rest(b, t); });
    m.def(
        "window_msd", [](const Body& b, double R, double h, bool relative) { return window_msd(b, R, h, relative).G; },
        py::arg("body"), py::arg("R"), py::arg("h"), py::arg("relative") = true);
    m.def(
        "sweep_slope",
        [](const Body& b, const std::vector<double>& grid, const std::string& window) {
            const auto r = sweep_and_fit(b, grid, parse_window_rule(window));
            return py::make_tuple(r.fit.slope, normalized_stat(r.table));
        },
        py::arg("body"), py::arg("grid"), py::arg("window") = "full", "(slope, normalized_stat)");

    m.def("mollified_count", [](const Body& b, double t, double eps) { return mollified_count(b, t, eps).value; });
    m.def("mollified_rest", [](const Body& b, double t, double eps) { return mollified_rest(b, t, eps).value; });

    m.def("indicator_ft", [](const Body& b, const std::vector<double>& xi) { return indicator_ft(b, xi).value; });
    m.def("bump_ft", &bump_ft, py::arg("dim"), py::arg("rho"));
    m.def(
        "poisson_rest",
        [](const Body& b, double t, double eps, double K) {
            const auto r = poisson_rest(b, t, eps, K);
            return py::dict(py::arg("poisson") = r.poisson, py::arg("direct") = r.direct,
                            py::arg("tail_bound") = r.tail_bound, py::arg("terms") = r.terms);
        },
        py::arg("body"), py::arg("t"), py::arg("eps"), py::arg("K"));

    m.def("golden_angle", &golden_angle);
    m.def(
        "diophantine_sup",
        [](const FlatPoint& f, double theta, double eps, double K) { return diophantine_sup(theta, f, eps, K).value; },
        py::arg("flat"), py::arg("theta"), py::arg("eps"), py::arg("K"));
    m.def(
        "diophantine_condition",
        [](const Body& b, double theta, double eps, double K) { return diophantine_condition(b, theta, eps, K).value; },
        py::arg("body"), py::arg("theta"), py::arg("eps"), py::arg("K"));
}

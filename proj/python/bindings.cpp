#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "geonewton/calculus.hpp"
#include "geonewton/convergence.hpp"
#include "geonewton/harness.hpp"
#include "geonewton/manifold.hpp"
#include "geonewton/newton.hpp"

namespace py = pybind11;
using namespace geonewton;

namespace {

ScaleSweep make_sweep(std::vector<TangentVector> directions, std::vector<double> scales,
                      double noise_floor) {
  ScaleSweep sweep;
  if (!scales.empty()) sweep.scales = std::move(scales);
  sweep.directions = std::move(directions);
  sweep.noise_floor = noise_floor;
  return sweep;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Retraction-based Riemannian Newton method on embedded manifolds";
  m.attr("__version__") = kVersion;

  auto base_error = py::register_exception<Error>(m, "Error");
  py::register_exception<ContractViolation>(m, "ContractViolation", base_error.ptr());
  py::register_exception<ConfigurationError>(m, "ConfigurationError", base_error.ptr());
  py::register_exception<CutLocusError>(m, "CutLocusError", base_error.ptr());
  py::register_exception<InversionFailure>(m, "InversionFailure", base_error.ptr());
  py::register_exception<EvaluationError>(m, "EvaluationError", base_error.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", base_error.ptr());
  py::register_exception<InsufficientData>(m, "InsufficientData", base_error.ptr());
  py::register_exception<SingularHessian>(m, "SingularHessian", base_error.ptr());

  py::class_<Point>(m, "Point")
      .def_property_readonly("coords", &Point::coords)
      .def("__repr__", [](const Point& p) {
        std::ostringstream os;
        os << "Point(" << p.coords().transpose() << ")";
        return os.str();
      });

  py::class_<TangentVector>(m, "TangentVector")
      .def_property_readonly("base", &TangentVector::base)
      .def_property_readonly("coords", &TangentVector::coords)
      .def("__mul__", [](const TangentVector& v, double s) { return v * s; })
      .def("__rmul__", [](const TangentVector& v, double s) { return v * s; })
      .def("__add__", &TangentVector::operator+)
      .def("__neg__", [](const TangentVector& v) { return -v; });

  py::enum_<RetractionFamily>(m, "RetractionFamily")
      .value("Exponential", RetractionFamily::Exponential)
      .value("Projection", RetractionFamily::Projection)
      .value("Cayley", RetractionFamily::Cayley)
      .value("PerturbedOrder1", RetractionFamily::PerturbedOrder1);

  py::class_<RetractionSpec>(m, "RetractionSpec")
      .def(py::init(&RetractionSpec::of), py::arg("family"))
      .def_readonly("family", &RetractionSpec::family)
      .def_readonly("declared_order", &RetractionSpec::declared_order)
      .def_readonly_static("UNBOUNDED_ORDER", &RetractionSpec::kUnboundedOrder);

  py::class_<Manifold>(m, "Manifold")
      .def_static("sphere", &Manifold::sphere, py::arg("ambient_dim"))
      .def_static("rotations3", &Manifold::rotations3)
      .def_property_readonly("name", &Manifold::name)
      .def_property_readonly("ambient_dim", &Manifold::ambient_dim)
      .def_property_readonly("intrinsic_dim", &Manifold::intrinsic_dim)
      .def("point", &Manifold::point)
      .def("rotation", &Manifold::rotation)
      .def("tangent", &Manifold::tangent)
      .def("inner", &Manifold::inner)
      .def("norm", &Manifold::norm)
      .def("project", &Manifold::project)
      .def("exp", &Manifold::exp)
      .def("log", &Manifold::log)
      .def("distance", &Manifold::distance)
      .def("retract", &Manifold::retract)
      .def("inverse_retract", &Manifold::inverse_retract)
      .def("tangent_basis",
           [](const Manifold& self, const Point& p) { return self.tangent_basis(p).matrix(); });

  py::enum_<ObjectiveKind>(m, "ObjectiveKind")
      .value("Rayleigh", ObjectiveKind::Rayleigh)
      .value("ProcrustesTrace", ObjectiveKind::ProcrustesTrace);

  py::class_<Objective>(m, "Objective")
      .def_static("rayleigh", &Objective::rayleigh)
      .def_static("procrustes", &Objective::procrustes)
      .def_property_readonly("kind", &Objective::kind)
      .def_property_readonly("matrix", &Objective::matrix)
      .def("value", &Objective::value);

  py::class_<GradientResult>(m, "GradientResult")
      .def_readonly("vector", &GradientResult::vector)
      .def_readonly("step", &GradientResult::step);

  py::class_<SymmetricOperator>(m, "SymmetricOperator")
      .def_property_readonly("matrix", &SymmetricOperator::matrix)
      .def_property_readonly("basis",
                             [](const SymmetricOperator& h) { return h.basis().matrix(); });

  m.def("evaluate", &evaluate);
  m.def("gradient_fd", &gradient_fd);
  m.def("hessian_fd", &hessian_fd);
  m.def("analytic_gradient", &analytic_gradient);
  m.def("analytic_hessian", &analytic_hessian);
  m.def("critical_points", &critical_points);
  m.def("taylor_remainder", py::overload_cast<const Objective&, const Manifold&,
                                              const RetractionSpec&, const Point&,
                                              const TangentVector&>(&taylor_remainder));

  py::enum_<NewtonStatus>(m, "NewtonStatus")
      .value("Converged", NewtonStatus::Converged)
      .value("MaxIter", NewtonStatus::MaxIter)
      .value("SingularHessian", NewtonStatus::SingularHessian);

  py::class_<NewtonConfig>(m, "NewtonConfig")
      .def(py::init<>())
      .def_readwrite("tol", &NewtonConfig::tol)
      .def_readwrite("max_iter", &NewtonConfig::max_iter)
      .def_readwrite("cond_cap", &NewtonConfig::cond_cap)
      .def_readwrite("retraction", &NewtonConfig::retraction);

  py::class_<IterationTrace>(m, "IterationTrace")
      .def_readonly("points", &IterationTrace::points)
      .def_readonly("grad_norms", &IterationTrace::grad_norms)
      .def_readonly("step_norms", &IterationTrace::step_norms)
      .def_readonly("status", &IterationTrace::status)
      .def_property_readonly("iterations", &IterationTrace::iterations);

  m.def("newton_step", &newton_step, py::arg("objective"), py::arg("manifold"),
        py::arg("retraction"), py::arg("point"), py::arg("cond_cap") = 1e12);
  m.def("newton_run", &newton_run);

  py::class_<SlopeEstimate>(m, "SlopeEstimate")
      .def_readonly("slope", &SlopeEstimate::slope)
      .def_readonly("intercept", &SlopeEstimate::intercept)
      .def_readonly("r_squared", &SlopeEstimate::r_squared)
      .def_readonly("points_used", &SlopeEstimate::points_used)
      .def_readonly("saturated", &SlopeEstimate::saturated);

  py::class_<RateReport>(m, "RateReport")
      .def_readonly("fitted_rate", &RateReport::fitted_rate)
      .def_readonly("fitted_constant", &RateReport::fitted_constant)
      .def_readonly("pairs_used", &RateReport::pairs_used);

  m.def(
      "fit_loglog",
      [](std::vector<double> xs, std::vector<double> ys, double floor) {
        return fit_loglog(xs, ys, floor);
      },
      py::arg("xs"), py::arg("ys"), py::arg("floor") = kDefaultNoiseFloor);

  m.def(
      "estimate_retraction_order",
      [](const Manifold& mf, const RetractionSpec& r, const Point& p,
         std::vector<TangentVector> dirs, std::vector<double> scales, double floor) {
        return estimate_retraction_order(mf, r, p, make_sweep(std::move(dirs), std::move(scales), floor));
      },
      py::arg("manifold"), py::arg("retraction"), py::arg("point"), py::arg("directions"),
      py::arg("scales") = std::vector<double>{}, py::arg("floor") = kDefaultNoiseFloor);

  m.def(
      "lemma1_residual_slope",
      [](const Objective& j, const Manifold& mf, const RetractionSpec& r, const Point& p_star,
         std::vector<TangentVector> dirs, std::vector<double> scales, double floor) {
        return lemma1_residual_slope(j, mf, r, p_star,
                                     make_sweep(std::move(dirs), std::move(scales), floor));
      },
      py::arg("objective"), py::arg("manifold"), py::arg("retraction"), py::arg("p_star"),
      py::arg("directions"), py::arg("scales") = std::vector<double>{},
      py::arg("floor") = kDefaultNoiseFloor);

  m.def(
      "lemma2_deviation_slope",
      [](const Manifold& mf, const RetractionSpec& r, const Point& p, const TangentVector& v,
         const TangentVector& w, std::vector<double> scales, double floor) {
        return lemma2_deviation_slope(mf, r, p, v, w, make_sweep({}, std::move(scales), floor));
      },
      py::arg("manifold"), py::arg("retraction"), py::arg("point"), py::arg("v_dir"),
      py::arg("w_dir"), py::arg("scales") = std::vector<double>{},
      py::arg("floor") = kDefaultNoiseFloor);

  m.def(
      "taylor_remainder_slope",
      [](const Objective& j, const Manifold& mf, const RetractionSpec& r, const Point& p,
         std::vector<TangentVector> dirs, std::vector<double> scales, double floor) {
        return taylor_remainder_slope(j, mf, r, p,
                                      make_sweep(std::move(dirs), std::move(scales), floor));
      },
      py::arg("objective"), py::arg("manifold"), py::arg("retraction"), py::arg("point"),
      py::arg("directions"), py::arg("scales") = std::vector<double>{},
      py::arg("floor") = kDefaultNoiseFloor);

  m.def(
      "convergence_rate",
      [](std::vector<double> errors, double floor) { return convergence_rate(errors, floor); },
      py::arg("errors"), py::arg("floor") = kDefaultNoiseFloor);

  m.def("seeded_instance", &seeded_instance, py::arg("seed"), py::arg("kind"), py::arg("n"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out;
        std::ostringstream err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the command-line tool in-process; returns (exit_code, stdout, stderr).");
}

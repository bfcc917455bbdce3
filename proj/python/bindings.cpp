#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <vector>

#include "fourns/bitree.hpp"
#include "fourns/cli.hpp"
#include "fourns/dynamics.hpp"
#include "fourns/errors.hpp"
#include "fourns/measure.hpp"
#include "fourns/normal_form.hpp"
#include "fourns/spectral.hpp"

namespace py = pybind11;
using namespace fourns;

namespace {

FourierState state_from(const std::vector<cplx>& modes, double t) { return FourierState(modes, t); }

std::vector<cplx> modes_of(const FourierState& u) { return {u.modes().begin(), u.modes().end()}; }

}  // namespace

PYBIND11_MODULE(_fourns, m) {
  m.doc() = "Truncated fourth-order NLS, normal form expansion and measure experiments";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericalGuardError>(m, "NumericalGuardError", PyExc_ArithmeticError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<FourierState>(m, "FourierState")
      .def(py::init([](int cutoff, double t) { return FourierState(cutoff, t); }), py::arg("cutoff"),
           py::arg("time") = 0.0)
      .def(py::init(&state_from), py::arg("modes"), py::arg("time") = 0.0)
      .def_static("single_mode", &FourierState::single_mode, py::arg("cutoff"), py::arg("n"), py::arg("c"),
                  py::arg("time") = 0.0)
      .def_property_readonly("cutoff", &FourierState::cutoff)
      .def_property_readonly("time", &FourierState::time)
      .def_property_readonly("modes", &modes_of)
      .def("__getitem__", [](const FourierState& u, int n) { return u[n]; })
      .def("__len__", &FourierState::size)
      .def("low_modes", &FourierState::low_modes)
      .def("projected", &FourierState::projected)
      .def("resized", &FourierState::resized);

  m.def("sobolev_norm", py::overload_cast<const FourierState&, double>(&sobolev_norm), py::arg("state"),
        py::arg("r"));
  m.def("phase_phi", [](int n1, int n2, int n3) { return phase_phi(PhaseQuadruple::from_triple(n1, n2, n3)); });
  m.def("phase_mu", [](int n1, int n2, int n3) { return phase_mu(PhaseQuadruple::from_triple(n1, n2, n3)); });
  m.def(
      "gamma_set",
      [](int n, int N) {
        std::vector<std::tuple<int, int, int>> out;
        for (const auto& q : gamma_set(n, N)) out.emplace_back(q.n1, q.n2, q.n3);
        return out;
      },
      py::arg("n"), py::arg("N"));
  m.def("renorm_nonlinearity", &renorm_nonlinearity, py::arg("state"), py::arg("N"));

  m.def(
      "flow_truncated",
      [](const FourierState& u0, int N, double t_final, double dt, std::vector<double> sample_times, bool gauged) {
        FlowConfig cfg;
        cfg.N = N;
        cfg.M = u0.cutoff();
        cfg.t_final = t_final;
        cfg.dt = dt;
        cfg.sample_times = std::move(sample_times);
        cfg.scheme = gauged ? Scheme::gauged_rk4 : Scheme::interaction_rk4;
        return flow_truncated(u0, cfg);
      },
      py::arg("u0"), py::arg("N"), py::arg("t_final") = 1.0, py::arg("dt") = 1e-3,
      py::arg("sample_times") = std::vector<double>{}, py::arg("gauged") = false);
  m.def("mass", &mass);
  m.def("hamiltonian", &hamiltonian, py::arg("state"), py::arg("N"));

  m.def("chronicle_count", &chronicle_count);
  m.def("count_chronicles", [](int J) { return enumerate_chronicles(J).size(); });
  m.def(
      "assignment_count",
      [](int J, int N) {
        std::size_t total = 0;
        for (const auto& t : enumerate_chronicles(J)) {
          for (int n = -N; n <= N; ++n) total += enumerate_assignments(t, n, N).size();
        }
        return total;
      },
      py::arg("J"), py::arg("N"));

  py::enum_<FormKind>(m, "FormKind")
      .value("base", FormKind::base)
      .value("boundary_N0", FormKind::boundary_N0)
      .value("resonant_R", FormKind::resonant_R)
      .value("region_N1", FormKind::region_N1)
      .value("remainder_N2", FormKind::remainder_N2);

  m.def("eval_N1_base", &eval_N1_base, py::arg("v"), py::arg("t"), py::arg("s"), py::arg("N"));
  m.def(
      "eval_form",
      [](const FourierState& v, double t, int j, FormKind kind, double s, int N, double c_impl) {
        return eval_form(v, t, j, kind, s, N, c_impl).value;
      },
      py::arg("v"), py::arg("t"), py::arg("j"), py::arg("kind"), py::arg("s"), py::arg("N"), py::arg("c_impl") = 1.0);
  m.def("telescoping_residual",
        py::overload_cast<const FourierState&, double, int, double, int, double>(&telescoping_residual), py::arg("v"),
        py::arg("t"), py::arg("J"), py::arg("s"), py::arg("N"), py::arg("c_impl") = 1.0);

  py::class_<EnergyReport>(m, "EnergyReport")
      .def_readonly("plain_energy", &EnergyReport::plain_energy)
      .def_readonly("corrections", &EnergyReport::corrections)
      .def_readonly("modified_energy", &EnergyReport::modified_energy)
      .def_readonly("weight_logF", &EnergyReport::weight_logF);
  m.def("modified_energy",
        py::overload_cast<const FourierState&, double, int, double, int, double>(&modified_energy), py::arg("u"),
        py::arg("t"), py::arg("J"), py::arg("s"), py::arg("N"), py::arg("c_impl") = 1.0);
  m.def(
      "weight_F",
      [](const FourierState& u, int J, double s, int N, double c_impl) {
        const auto w = weight_F(u, J, s, N, c_impl);
        return py::make_tuple(w.log_weight, w.weight, w.overflow);
      },
      py::arg("u"), py::arg("J"), py::arg("s"), py::arg("N"), py::arg("c_impl") = 1.0);

  py::class_<GaussianSampler>(m, "GaussianSampler")
      .def(py::init<double, int, std::uint64_t>(), py::arg("s"), py::arg("M"), py::arg("seed"))
      .def("sample", &GaussianSampler::sample, py::arg("index"))
      .def("next", &GaussianSampler::next);

  m.def(
      "cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "fourns");
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        return cli_main(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "Runs the command-line tool in-process and returns its exit status.");
}

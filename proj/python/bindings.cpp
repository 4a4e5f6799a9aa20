#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "metaworld/errors.hpp"
#include "metaworld/evolution.hpp"
#include "metaworld/scenario.hpp"
#include "metaworld/states.hpp"
#include "metaworld/worlds.hpp"

namespace py = pybind11;
using namespace metaworld;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

py::array_t<double> to_matrix(const std::vector<double>& v, std::size_t cols) {
  return py::array_t<double>({v.size() / cols, cols}, v.data());
}

// (components, *grid.points) complex array, copied
py::array_t<cplx> amplitudes(const Wavefunction& psi) {
  std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(psi.components())};
  for (auto n : psi.grid().points()) shape.push_back(static_cast<py::ssize_t>(n));
  py::array_t<cplx> out(shape);
  std::copy(psi.values().begin(), psi.values().end(), out.mutable_data());
  return out;
}

Wavefunction from_amplitudes(const Grid& grid, py::array_t<cplx, py::array::c_style | py::array::forcecast> a,
                             double time) {
  const auto total = static_cast<std::size_t>(a.size());
  if (total == 0 || total % grid.size() != 0) throw InvalidArgument("amplitude count does not match the grid");
  std::vector<cplx> values(a.data(), a.data() + total);
  return Wavefunction(grid, total / grid.size(), std::move(values), time);
}

py::dict velocity_dict(const VelocityField& v) {
  py::list components;
  for (const auto& c : v.velocity) components.append(to_array(c));
  py::dict d;
  d["velocity"] = components;
  d["valid"] = py::array_t<bool>(v.valid.size(), reinterpret_cast<const bool*>(v.valid.data()));
  d["time"] = v.time;
  return d;
}

py::object json_to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json python_to_json(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.attr("__version__") = METAWORLD_VERSION;

  auto error = py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidArgument>(m, "InvalidArgument", error);
  py::register_exception<ModelViolation>(m, "ModelViolation", error);
  py::register_exception<NumericalFailure>(m, "NumericalFailure", error);
  py::register_exception<BranchesReinterfered>(m, "BranchesReinterfered", error);
  py::register_exception<ConfigError>(m, "ConfigError", error);

  py::class_<Grid>(m, "Grid")
      .def(py::init([](const std::vector<std::pair<double, double>>& extent, std::vector<std::size_t> points) {
             std::vector<Interval> iv;
             for (auto [lo, hi] : extent) iv.push_back({lo, hi});
             return Grid(std::move(iv), std::move(points));
           }),
           py::arg("extent"), py::arg("points"))
      .def_property_readonly("dims", &Grid::dims)
      .def_property_readonly("size", &Grid::size)
      .def_property_readonly("points", py::overload_cast<>(&Grid::points, py::const_))
      .def_property_readonly("spacing", py::overload_cast<>(&Grid::spacing, py::const_))
      .def_property_readonly("cell_volume", &Grid::cell_volume)
      .def("centers", [](const Grid& g, std::size_t d) {
        std::vector<double> c(g.points(d));
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = g.center(d, i);
        return to_array(c);
      });

  py::class_<Inertia>(m, "Inertia")
      .def(py::init([](std::vector<double> masses, double hbar) { return Inertia{std::move(masses), hbar}; }),
           py::arg("masses"), py::arg("hbar") = 1.0)
      .def_static("uniform", &Inertia::uniform, py::arg("dims"), py::arg("mass") = 1.0, py::arg("hbar") = 1.0)
      .def_readonly("masses", &Inertia::masses)
      .def_readonly("hbar", &Inertia::hbar);

  py::class_<Wavefunction>(m, "Wavefunction")
      .def(py::init(&from_amplitudes), py::arg("grid"), py::arg("amplitudes"), py::arg("time") = 0.0)
      .def_property_readonly("grid", &Wavefunction::grid)
      .def_property_readonly("components", &Wavefunction::components)
      .def_property_readonly("time", &Wavefunction::time)
      .def_property_readonly("amplitudes", &amplitudes)
      .def("norm", &Wavefunction::norm)
      .def("density", [](const Wavefunction& psi) { return to_array(density(psi).values); })
      .def("current", [](const Wavefunction& psi, const Inertia& inertia) {
        py::list out;
        for (const auto& c : current(psi, inertia).components) out.append(to_array(c));
        return out;
      });

  m.def("inner_product", &inner_product);

  auto st = m.def_submodule("states", "parameterized initial states");
  st.def("gaussian", &states::gaussian, py::arg("grid"), py::arg("center"), py::arg("width"),
         py::arg("boost") = std::vector<double>{});
  st.def("plane_wave", &states::plane_wave, py::arg("grid"), py::arg("k"));
  st.def("hermite_basis", &states::hermite_basis, py::arg("grid"), py::arg("count"), py::arg("center") = 0.0,
         py::arg("width") = 1.0);
  st.def("spinor", &states::spinor, py::arg("chi"), py::arg("alpha"), py::arg("beta"));

  py::class_<Hamiltonian>(m, "Hamiltonian")
      .def_static("free", &Hamiltonian::free, py::arg("grid"), py::arg("inertia"))
      .def_static("harmonic", &Hamiltonian::harmonic, py::arg("grid"), py::arg("inertia"), py::arg("omega"),
                  py::arg("center") = std::vector<double>{})
      .def_property_readonly("potential", [](const Hamiltonian& h) { return to_array(h.potential.values); });

  m.def("step", &step, py::arg("psi"), py::arg("hamiltonian"), py::arg("dt"));
  m.def(
      "evolve",
      [](const Wavefunction& psi, const Hamiltonian& h, double t_final, double dt, std::size_t snapshot_every) {
        auto ev = evolve(psi, h, t_final, dt, snapshot_every);
        py::dict log;
        log["times"] = to_array(ev.log.times);
        log["norms"] = to_array(ev.log.norms);
        log["edge_masses"] = to_array(ev.log.edge_masses);
        log["continuity"] = to_array(ev.log.continuity);
        log["warnings"] = ev.log.warnings;
        return py::make_tuple(std::move(ev.snapshots), log);
      },
      py::arg("psi"), py::arg("hamiltonian"), py::arg("t_final"), py::arg("dt"), py::arg("snapshot_every") = 1,
      "Returns (snapshots, log).");

  m.def(
      "velocity_field",
      [](const Wavefunction& psi, const Inertia& inertia) { return velocity_dict(velocity_field(psi, inertia)); },
      py::arg("psi"), py::arg("inertia"));
  m.def(
      "velocity_from_phase",
      [](const Wavefunction& psi, const Inertia& inertia) {
        return velocity_dict(velocity_from_phase(psi, inertia));
      },
      py::arg("psi"), py::arg("inertia"));

  py::class_<WorldEnsemble>(m, "WorldEnsemble")
      .def_property_readonly("size", &WorldEnsemble::size)
      .def_property_readonly("time", [](const WorldEnsemble& e) { return e.time; })
      .def_property_readonly("positions", [](const WorldEnsemble& e) { return to_matrix(e.positions, e.dims); })
      .def_property_readonly("unwrapped", [](const WorldEnsemble& e) { return to_matrix(e.unwrapped, e.dims); })
      .def_property_readonly("alive_count", &WorldEnsemble::alive_count);

  m.def("sample_worlds", &sample_worlds, py::arg("psi"), py::arg("count"), py::arg("seed"));
  m.def(
      "advance_worlds",
      [](const WorldEnsemble& e, const std::vector<Wavefunction>& snapshots, const Inertia& inertia) {
        auto r = advance_worlds(e, snapshots, inertia);
        return py::make_tuple(std::move(r.ensemble), r.record.ordering_violations, r.record.frozen);
      },
      py::arg("ensemble"), py::arg("snapshots"), py::arg("inertia"),
      "Returns (ensemble, ordering_violations, frozen).");
  m.def("equivariance_distance", &equivariance_distance, py::arg("ensemble"), py::arg("psi"), py::arg("bins"));

  m.def(
      "run_scenario",
      [](const py::object& config, const std::filesystem::path& output) {
        const auto s = py::isinstance<py::dict>(config) ? scenario::parse(python_to_json(config))
                                                        : scenario::load(config.cast<std::filesystem::path>());
        return json_to_python(scenario::run(s, output).report);
      },
      py::arg("config"), py::arg("output"),
      "Run a scenario given as a dict or a path to a JSON file; returns the report.");
  m.def(
      "verify",
      [](const std::filesystem::path& dir) {
        const auto report = scenario::verify(dir);
        py::list checks;
        for (const auto& c : report.checks) checks.append(py::make_tuple(c.name, c.passed, c.detail));
        return checks;
      },
      py::arg("directory"), "Re-check a run directory; returns [(name, passed, detail)].");
}

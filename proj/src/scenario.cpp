#include "metaworld/scenario.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "metaworld/errors.hpp"
#include "metaworld/io.hpp"
#include "metaworld/rng.hpp"
#include "metaworld/states.hpp"

namespace metaworld::scenario {

using nlohmann::json;

namespace {

// JSON view that remembers its pointer path for error messages.
class Node {
 public:
  Node(const json& value, std::string path) : value_(value), path_(std::move(path)) {}

  const json& value() const { return value_; }
  const std::string& path() const { return path_; }
  bool has(const std::string& key) const { return value_.is_object() && value_.contains(key); }

  Node at(const std::string& key) const {
    if (!value_.is_object()) fail("expected an object");
    if (!value_.contains(key)) throw ConfigError(path_ + "/" + key, "required key is missing");
    return Node(value_.at(key), path_ + "/" + key);
  }
  Node at(std::size_t i) const {
    if (!value_.is_array() || i >= value_.size()) fail("expected an array with index " + std::to_string(i));
    return Node(value_.at(i), path_ + "/" + std::to_string(i));
  }
  std::size_t size() const {
    if (!value_.is_array()) fail("expected an array");
    return value_.size();
  }

  double number() const {
    if (!value_.is_number()) fail("expected a number");
    const double v = value_.get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }
  double positive() const {
    const double v = number();
    if (!(v > 0.0)) fail("must be positive");
    return v;
  }
  std::size_t count() const {
    if (!value_.is_number_integer() || value_.get<long long>() < 0) fail("expected a nonnegative integer");
    return value_.get<std::size_t>();
  }
  std::string text() const {
    if (!value_.is_string()) fail("expected a string");
    return value_.get<std::string>();
  }
  cplx complex_number() const {
    if (value_.is_number()) return {number(), 0.0};
    if (value_.is_array() && value_.size() == 2) return {at(0).number(), at(1).number()};
    fail("expected a number or a [re, im] pair");
  }
  std::vector<double> numbers() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).number());
    return out;
  }
  Interval interval() const {
    if (size() != 2) fail("expected [lo, hi]");
    Interval iv{at(0).number(), at(1).number()};
    if (!(iv.hi > iv.lo)) fail("interval must have hi > lo");
    return iv;
  }

  double number_or(const std::string& key, double fallback) const {
    return has(key) ? at(key).number() : fallback;
  }
  std::size_t count_or(const std::string& key, std::size_t fallback) const {
    return has(key) ? at(key).count() : fallback;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(path_, what); }

 private:
  const json& value_;
  std::string path_;
};

Grid parse_grid(const Node& node) {
  const Node extent = node.at("extent");
  const Node points = node.at("points");
  std::vector<Interval> iv;
  std::vector<std::size_t> n;
  for (std::size_t d = 0; d < extent.size(); ++d) iv.push_back(extent.at(d).interval());
  for (std::size_t d = 0; d < points.size(); ++d) n.push_back(points.at(d).count());
  try {
    return Grid(std::move(iv), std::move(n));
  } catch (const InvalidArgument& e) {
    node.fail(e.what());
  }
}

std::vector<double> per_dimension(const Node& node, std::size_t dims) {
  auto v = node.numbers();
  if (v.size() != dims) node.fail("expected " + std::to_string(dims) + " entries");
  return v;
}

Wavefunction parse_state(const Node& node, const Grid& grid) {
  const std::string type = node.at("type").text();
  Wavefunction psi(grid);
  try {
    if (type == "gaussian") {
      const auto center = per_dimension(node.at("center"), grid.dims());
      const auto width = per_dimension(node.at("width"), grid.dims());
      for (std::size_t d = 0; d < width.size(); ++d) {
        if (!(width[d] > 0.0)) node.at("width").at(d).fail("must be positive");
      }
      const auto boost = node.has("boost") ? per_dimension(node.at("boost"), grid.dims())
                                           : std::vector<double>(grid.dims(), 0.0);
      psi = states::gaussian(grid, center, width, boost);
    } else if (type == "plane_wave") {
      psi = states::plane_wave(grid, per_dimension(node.at("k"), grid.dims()));
    } else if (type == "superposition") {
      const Node terms = node.at("terms");
      if (terms.size() == 0) terms.fail("superposition needs at least one term");
      for (std::size_t i = 0; i < terms.size(); ++i) {
        const Node term = terms.at(i);
        const cplx a = term.has("amplitude") ? term.at("amplitude").complex_number() : cplx(1.0, 0.0);
        psi += a * parse_state(term.at("state"), grid);
      }
    } else if (type == "hermite") {
      if (grid.dims() != 1) node.fail("hermite states need a 1D grid");
      const std::size_t n = node.at("n").count();
      const auto basis = states::hermite_basis(grid, n + 1, node.number_or("center", 0.0),
                                               node.number_or("width", 1.0));
      psi = basis.back();
    } else {
      node.at("type").fail("unknown state type '" + type + "'");
    }
  } catch (const InvalidArgument& e) {
    node.fail(e.what());
  }
  if (!(psi.norm_squared() > 0.0)) node.fail("state has zero norm");
  return psi;
}

Wavefunction parse_initial_state(const Node& node, const Grid& grid) {
  Wavefunction chi = parse_state(node, grid);
  if (!node.has("spinor")) return chi;
  const Node spinor = node.at("spinor");
  if (spinor.size() != 2) spinor.fail("expected [alpha, beta]");
  return states::spinor(chi, spinor.at(0).complex_number(), spinor.at(1).complex_number());
}

Hamiltonian parse_hamiltonian(const Node& node, const Grid& grid, const Inertia& inertia) {
  const std::string type = node.at("type").text();
  if (type == "free") return Hamiltonian::free(grid, inertia);
  if (type == "harmonic") {
    const auto omega = per_dimension(node.at("omega"), grid.dims());
    const auto center = node.has("center") ? per_dimension(node.at("center"), grid.dims())
                                           : std::vector<double>(grid.dims(), 0.0);
    return Hamiltonian::harmonic(grid, inertia, omega, center);
  }
  if (type == "tabulated") {
    auto values = node.at("values").numbers();
    if (values.size() != grid.size()) {
      node.at("values").fail("expected " + std::to_string(grid.size()) + " values");
    }
    return Hamiltonian{inertia, RealField{grid, std::move(values)}, std::nullopt};
  }
  node.at("type").fail("unknown hamiltonian type '" + type + "'");
}

// Largest step keeping the per-step potential phase under 0.1 and the
// highest-mode kinetic phase under 0.5.
double phase_safe_dt(const Hamiltonian& h, const Grid& grid) {
  double dt = std::numeric_limits<double>::infinity();
  double vmax = 0.0;
  for (double v : h.potential.values) vmax = std::max(vmax, std::abs(v));
  if (vmax > 0.0) dt = 0.1 * h.inertia.hbar / vmax;
  for (std::size_t d = 0; d < grid.dims(); ++d) {
    const double kmax = std::numbers::pi / grid.spacing(d);
    dt = std::min(dt, 0.5 * 2.0 * h.inertia.masses[d] / (h.inertia.hbar * kmax * kmax));
  }
  return dt;
}

EvolutionSpec parse_evolution(const Node& node, const Hamiltonian& h, const Grid& grid) {
  EvolutionSpec spec;
  spec.t_final = node.at("t_final").number();
  if (spec.t_final < 0.0) node.at("t_final").fail("must be >= 0");
  if (node.has("steps")) {
    const std::size_t steps = node.at("steps").count();
    if (steps == 0) node.at("steps").fail("must be positive");
    spec.dt = spec.t_final / static_cast<double>(steps);
  } else if (node.has("dt")) {
    spec.dt = node.at("dt").positive();
  } else {
    // shrink the safe step just enough to land on t_final
    spec.dt = phase_safe_dt(h, grid);
    if (spec.t_final > 0.0) spec.dt = spec.t_final / std::ceil(spec.t_final / spec.dt);
  }
  if (spec.t_final > 0.0) {
    const double steps = std::round(spec.t_final / spec.dt);
    if (steps < 1.0 || std::abs(steps * spec.dt - spec.t_final) > 1e-9) {
      node.fail("dt must divide t_final");
    }
  }
  spec.snapshot_every = node.count_or("snapshot_every", 1);
  if (spec.snapshot_every == 0) node.at("snapshot_every").fail("must be >= 1");
  spec.options.edge_warn = node.number_or("edge_warn", spec.options.edge_warn);
  spec.options.edge_abort = node.number_or("edge_abort", spec.options.edge_abort);
  spec.continuity_tolerance = node.number_or("continuity_tolerance", spec.continuity_tolerance);
  return spec;
}

WorldsSpec parse_worlds(const Node& node, const Grid& grid) {
  WorldsSpec spec;
  spec.count = node.at("count").count();
  if (spec.count == 0) node.at("count").fail("must be positive");
  spec.bins = node.count_or("bins", spec.bins);
  for (std::size_t d = 0; d < grid.dims(); ++d) {
    if (spec.bins == 0 || grid.points(d) % spec.bins != 0) {
      node.at("bins").fail("must divide every grid size");
    }
  }
  spec.dt_fraction = node.number_or("dt_fraction", spec.dt_fraction);
  if (!(spec.dt_fraction > 0.0 && spec.dt_fraction <= 1.0)) node.at("dt_fraction").fail("must be in (0, 1]");
  spec.tv_budget = node.number_or("tv_budget", spec.tv_budget);
  spec.csv_worlds = node.count_or("csv_worlds", spec.csv_worlds);
  spec.csv_time_stride = node.count_or("csv_time_stride", spec.csv_time_stride);
  return spec;
}

PointerDevice parse_pointer(const Node& node, std::size_t expected_regions) {
  const Grid grid = parse_grid(node.at("grid"));
  if (grid.dims() != 1) node.at("grid").fail("pointer grid must be 1D");
  const double width = node.at("width").positive();
  const Node initial = node.at("initial");
  const Interval ready = initial.at("region").interval();
  const double ready_center = initial.number_or("center", 0.5 * (ready.lo + ready.hi));
  const Node regions = node.at("regions");
  if (regions.size() != expected_regions) {
    regions.fail("expected " + std::to_string(expected_regions) + " regions");
  }
  PointerDevice device{grid, states::truncated_gaussian(grid, ready_center, width, ready), {}, {}};
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const Interval iv = regions.at(i).interval();
    device.regions.push_back(iv);
    try {
      device.states.push_back(states::truncated_gaussian(grid, 0.5 * (iv.lo + iv.hi), width, iv));
    } catch (const InvalidArgument& e) {
      regions.at(i).fail(e.what());
    }
  }
  try {
    device.validate();
  } catch (const ModelViolation& e) {
    node.fail(e.what());
  }
  return device;
}

MeasurementSpec parse_measurement(const Node& node) {
  const Node system = node.at("system");
  const Grid sx = parse_grid(system.at("grid"));
  const Node basis_node = system.at("basis");
  std::vector<Wavefunction> basis;
  const std::string basis_type = basis_node.at("type").text();
  try {
    if (basis_type == "hermite") {
      if (sx.dims() != 1) system.at("grid").fail("hermite basis needs a 1D system grid");
      basis = states::hermite_basis(sx, basis_node.at("count").count(),
                                    basis_node.number_or("center", 0.0), basis_node.number_or("width", 1.0));
    } else if (basis_type == "states") {
      const Node list = basis_node.at("states");
      for (std::size_t i = 0; i < list.size(); ++i) basis.push_back(parse_state(list.at(i), sx));
      basis = states::orthonormalize(std::move(basis));
    } else {
      basis_node.at("type").fail("unknown basis type '" + basis_type + "'");
    }
  } catch (const InvalidArgument& e) {
    basis_node.fail(e.what());
  }
  const std::size_t k = basis.size();
  if (k == 0 || k > MeasurementSetup::kMaxOutcomes) basis_node.fail("basis needs 1..8 states");

  const Node coeffs = node.at("coefficients");
  if (coeffs.size() != k) coeffs.fail("expected " + std::to_string(k) + " coefficients");
  std::vector<cplx> alpha;
  for (std::size_t i = 0; i < k; ++i) alpha.push_back(coeffs.at(i).complex_number());
  double total = 0.0;
  for (const auto& a : alpha) total += std::norm(a);
  if (!(total > 0.0)) coeffs.fail("coefficients are all zero");

  std::vector<double> outcomes;
  if (node.has("outcome_values")) {
    outcomes = node.at("outcome_values").numbers();
    if (outcomes.size() != k) node.at("outcome_values").fail("expected " + std::to_string(k) + " values");
  } else {
    for (std::size_t i = 0; i < k; ++i) outcomes.push_back(static_cast<double>(i));
  }

  MeasurementSpec spec{MeasurementSetup{sx, std::move(basis), std::move(alpha),
                                        parse_pointer(node.at("pointer"), k), std::move(outcomes)},
                       0, std::nullopt};
  try {
    spec.setup.validate();
  } catch (const Error& e) {
    node.fail(e.what());
  }
  try {
    (void)Grid(spec.setup.product_grid());
  } catch (const InvalidArgument& e) {
    node.fail(std::string("product grid: ") + e.what());
  }
  if (node.has("worlds")) spec.worlds = node.at("worlds").at("count").count();

  if (node.has("collapse")) {
    const Node c = node.at("collapse");
    CollapseSpec cs;
    cs.branch = c.count_or("branch", 0);
    if (cs.branch >= k) c.at("branch").fail("branch index out of range");
    if (spec.setup.coefficients[cs.branch] == cplx{}) c.at("branch").fail("branch has zero amplitude");
    cs.test_worlds = c.count_or("test_worlds", cs.test_worlds);
    if (cs.test_worlds == 0) c.at("test_worlds").fail("must be positive");
    cs.system_omega = c.number_or("system_omega", 0.0);
    cs.pointer_omega = c.number_or("pointer_omega", 0.0);
    cs.options.horizon = c.has("horizon") ? c.at("horizon").positive() : cs.options.horizon;
    cs.options.dt = c.has("dt") ? c.at("dt").positive() : cs.options.dt;
    cs.options.snapshot_every = c.count_or("snapshot_every", cs.options.snapshot_every);
    if (cs.options.snapshot_every == 0) c.at("snapshot_every").fail("must be >= 1");
    cs.options.overlap_abort = c.number_or("overlap_abort", cs.options.overlap_abort);
    const double steps = std::round(cs.options.horizon / cs.options.dt);
    if (std::abs(steps * cs.options.dt - cs.options.horizon) > 1e-9) c.fail("dt must divide horizon");
    spec.collapse = cs;
  }
  return spec;
}

SpinSpec parse_spin(const Node& node) {
  const Node system = node.at("system");
  const Grid sx = parse_grid(system.at("grid"));
  PointerDevice pointer = parse_pointer(node.at("pointer"), 2);
  SpinSpec spec{SpinSetup{sx, Wavefunction(sx), Wavefunction(sx), pointer}, std::nullopt, 0};
  if (system.has("entangled")) {
    const Node ent = system.at("entangled");
    spec.setup = SpinSetup::entangled(parse_state(ent.at("up"), sx), parse_state(ent.at("down"), sx),
                                      std::move(pointer));
    if (ent.has("up_weight")) {
      // rescale components to the requested squared norms
      const double wu = ent.at("up_weight").positive();
      const double wd = ent.at("down_weight").positive();
      spec.setup.psi_up *= std::sqrt(wu) / spec.setup.psi_up.norm();
      spec.setup.psi_down *= std::sqrt(wd) / spec.setup.psi_down.norm();
    }
  } else {
    const Wavefunction chi = states::normalized(parse_state(system.at("state"), sx));
    const cplx alpha = node.at("alpha").complex_number();
    const cplx beta = node.at("beta").complex_number();
    if (std::norm(alpha) + std::norm(beta) == 0.0) node.fail("alpha and beta are both zero");
    spec.setup = SpinSetup::disentangled(alpha, beta, chi, std::move(pointer));
    spec.coefficients = std::make_pair(alpha, beta);
  }
  try {
    spec.setup.validate();
    (void)Grid(spec.setup.product_grid());
  } catch (const Error& e) {
    node.fail(e.what());
  }
  if (node.has("worlds")) spec.worlds = node.at("worlds").at("count").count();
  return spec;
}

ProjectionSpec parse_projection(const Node& node) {
  const Grid g = parse_grid(node.at("grid"));
  ParticleLayout layout;
  if (node.has("layout")) {
    const Node roles = node.at("layout");
    for (std::size_t d = 0; d < roles.size(); ++d) {
      const Node r = roles.at(d);
      layout.roles.push_back({r.at("particle").count(), r.at("axis").count()});
    }
  } else {
    layout = ParticleLayout::one_dimensional(g.dims());
  }
  try {
    layout.validate(g);
  } catch (const InvalidArgument& e) {
    node.fail(e.what());
  }
  Wavefunction state = parse_state(node.at("state"), g);
  std::vector<Interval> region;
  if (node.has("region")) {
    const Node r = node.at("region");
    for (std::size_t a = 0; a < r.size(); ++a) region.push_back(r.at(a).interval());
    if (region.size() != layout.axes()) r.fail("expected one interval per physical axis");
  }
  return ProjectionSpec{std::move(state), std::move(layout), std::move(region)};
}

}  // namespace

Scenario parse(const json& config) {
  const Node root(config, "");
  if (!config.is_object()) root.fail("scenario must be a JSON object");
  if (root.at("schema_version").count() != static_cast<std::size_t>(kSchemaVersion)) {
    root.at("schema_version").fail("unsupported schema version");
  }
  static const std::vector<std::string> known{"schema_version", "name",      "seed",        "grid",
                                              "physics",        "initial_state", "hamiltonian", "evolution",
                                              "worlds",         "measurement", "spin",        "projection",
                                              "outputs",        "description"};
  for (const auto& [key, _] : config.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("/" + key, "unknown key");
    }
  }

  Scenario s;
  s.config = config;
  s.name = root.at("name").text();
  if (s.name.empty()) root.at("name").fail("must not be empty");
  const bool stochastic = config.contains("worlds") ||
                          (config.contains("measurement") && config["measurement"].contains("worlds")) ||
                          (config.contains("spin") && config["spin"].contains("worlds")) ||
                          (config.contains("measurement") && config["measurement"].contains("collapse"));
  if (stochastic || root.has("seed")) {
    const Node seed = root.at("seed");
    if (!seed.value().is_number_unsigned() && !(seed.value().is_number_integer() && seed.value().get<long long>() >= 0)) {
      seed.fail("seed must be a nonnegative integer");
    }
    s.seed = seed.value().get<std::uint64_t>();
  }

  if (root.has("grid")) {
    s.grid = parse_grid(root.at("grid"));
    s.inertia = Inertia::uniform(s.grid->dims());
    if (root.has("physics")) {
      const Node physics = root.at("physics");
      if (physics.has("hbar")) s.inertia.hbar = physics.at("hbar").positive();
      if (physics.has("masses")) {
        s.inertia.masses = per_dimension(physics.at("masses"), s.grid->dims());
        for (std::size_t d = 0; d < s.inertia.masses.size(); ++d) {
          if (!(s.inertia.masses[d] > 0.0)) physics.at("masses").at(d).fail("must be positive");
        }
      }
    }
    s.initial_state = parse_initial_state(root.at("initial_state"), *s.grid);
    if (root.has("hamiltonian")) s.hamiltonian = parse_hamiltonian(root.at("hamiltonian"), *s.grid, s.inertia);
    if (root.has("evolution")) {
      if (!s.hamiltonian) throw ConfigError("/hamiltonian", "required when evolution is present");
      s.evolution = parse_evolution(root.at("evolution"), *s.hamiltonian, *s.grid);
    }
    if (root.has("worlds")) {
      if (!s.evolution) throw ConfigError("/evolution", "required when worlds is present");
      s.worlds = parse_worlds(root.at("worlds"), *s.grid);
    }
  } else {
    for (const char* key : {"initial_state", "hamiltonian", "evolution", "worlds"}) {
      if (root.has(key)) throw ConfigError("/grid", std::string("required when ") + key + " is present");
    }
  }
  if (root.has("measurement")) s.measurement = parse_measurement(root.at("measurement"));
  if (root.has("spin")) s.spin = parse_spin(root.at("spin"));
  if (root.has("projection")) s.projection = parse_projection(root.at("projection"));

  s.output_directory = s.name;
  if (root.has("outputs")) {
    const Node out = root.at("outputs");
    if (out.has("directory")) s.output_directory = out.at("directory").text();
    s.snapshot_stride = out.count_or("snapshot_stride", 1);
    if (s.snapshot_stride == 0) out.at("snapshot_stride").fail("must be >= 1");
    if (out.has("formats")) {
      const Node formats = out.at("formats");
      s.write_csv = false;
      for (std::size_t i = 0; i < formats.size(); ++i) {
        const std::string f = formats.at(i).text();
        if (f == "csv") {
          s.write_csv = true;
        } else if (f != "binary" && f != "json") {
          formats.at(i).fail("unknown format '" + f + "'");
        }
      }
    }
  }
  if (!s.evolution && !s.measurement && !s.spin && !s.projection) {
    root.fail("scenario has no stage (evolution, measurement, spin or projection)");
  }
  return s;
}

Scenario load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read scenario file " + path.string());
  json config;
  try {
    config = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  return parse(config);
}

namespace {

std::string digest(std::string_view bytes) {
  std::ostringstream out;
  out << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << rng::fnv1a(bytes);
  return out.str();
}

}  // namespace

std::string config_hash(const json& config) { return digest(config.dump()); }

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream bytes;
  bytes << in.rdbuf();
  return digest(bytes.str());
}

namespace {

json complex_json(cplx c) { return json::array({c.real(), c.imag()}); }

void write_json(const std::filesystem::path& path, const json& value) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << value.dump(2) << '\n';
}

std::string snapshot_name(std::size_t index) {
  std::ostringstream name;
  name << "psi_" << std::setw(6) << std::setfill('0') << index << ".bin";
  return name.str();
}

// Binomial standard deviation of a frequency at probability p over n draws.
double binomial_sigma(double p, std::size_t n) {
  return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n));
}

Hamiltonian collapse_hamiltonian(const MeasurementSetup& setup, const CollapseSpec& spec) {
  const Grid product = setup.product_grid();
  const std::size_t dx = setup.system_grid.dims();
  const double width = [&] {
    // pointer width recovered from the first pointer state's second moment
    const auto& phi = setup.pointer.states.front();
    const Grid& g = phi.grid();
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double w = std::norm(phi.component(0)[i]);
      const double y = g.center(0, i);
      m0 += w;
      m1 += w * y;
      m2 += w * y * y;
    }
    const double var = m2 / m0 - (m1 / m0) * (m1 / m0);
    return std::sqrt(2.0 * var);
  }();
  const double pointer_omega = spec.pointer_omega > 0.0 ? spec.pointer_omega : 1.0 / (width * width);
  std::vector<double> centers;
  for (const auto& iv : setup.pointer.regions) centers.push_back(0.5 * (iv.lo + iv.hi));

  Inertia inertia = Inertia::uniform(product.dims());
  RealField v{product, std::vector<double>(product.size(), 0.0)};
  for (std::size_t i = 0; i < product.size(); ++i) {
    double sum = 0.0;
    for (std::size_t d = 0; d < dx; ++d) {
      const double x = product.coordinate(i, d);
      sum += 0.5 * spec.system_omega * spec.system_omega * x * x;
    }
    const double y = product.coordinate(i, dx);
    double nearest = centers.front();
    for (double c : centers) {
      if (std::abs(y - c) < std::abs(y - nearest)) nearest = c;
    }
    sum += 0.5 * pointer_omega * pointer_omega * (y - nearest) * (y - nearest);
    v.values[i] = sum;
  }
  return Hamiltonian{std::move(inertia), std::move(v), std::nullopt};
}

}  // namespace

RunResult run(const Scenario& s, const std::filesystem::path& directory) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  RunResult result{directory, json::object(), {}};
  std::vector<std::string> artifacts{"config.json"};
  json tolerances = json::object();
  write_json(directory / "config.json", s.config);

  // evolution and world transport
  if (s.evolution) {
    const auto& ev = *s.evolution;
    const Evolution evolution =
        evolve(*s.initial_state, *s.hamiltonian, ev.t_final, ev.dt, ev.snapshot_every, ev.options);
    result.warnings.insert(result.warnings.end(), evolution.log.warnings.begin(), evolution.log.warnings.end());
    io::write_evolution_log_csv(directory / "evolution_log.csv", evolution.log);
    artifacts.push_back("evolution_log.csv");

    fs::create_directories(directory / "snapshots");
    json snapshot_list = json::array();
    const std::size_t last = evolution.snapshots.size() - 1;
    for (std::size_t i = 0; i <= last; ++i) {
      if (i % s.snapshot_stride != 0 && i != last) continue;
      const std::string name = "snapshots/" + snapshot_name(i);
      io::write_wavefunction(directory / name, evolution.snapshots[i]);
      snapshot_list.push_back({{"file", name}, {"log_row", i}, {"time", evolution.snapshots[i].time()}});
      artifacts.push_back(name);
    }
    if (s.write_csv && s.grid->size() <= 4096) {
      io::write_wavefunction_csv(directory / "psi_final.csv", evolution.snapshots.back());
      artifacts.push_back("psi_final.csv");
    }
    const double n0 = evolution.log.norms.front();
    double drift = 0.0;
    double worst_continuity = 0.0;
    for (std::size_t i = 0; i < evolution.log.norms.size(); ++i) {
      drift = std::max(drift, std::abs(evolution.log.norms[i] - n0) / n0);
      worst_continuity = std::max(worst_continuity, evolution.log.continuity[i]);
    }
    result.report["evolution"] = {{"steps", static_cast<std::size_t>(std::llround(ev.t_final / ev.dt))},
                                  {"dt", ev.dt},
                                  {"t_final", ev.t_final},
                                  {"snapshots", snapshot_list},
                                  {"max_relative_norm_drift", drift},
                                  {"max_continuity_summary", worst_continuity},
                                  {"warnings", evolution.log.warnings}};
    tolerances["norm_drift"] = 1e-10;
    tolerances["continuity_summary"] = ev.continuity_tolerance;
    tolerances["edge_abort"] = ev.options.edge_abort;

    if (s.worlds) {
      const auto& ws = *s.worlds;
      const WorldEnsemble initial = sample_worlds(*s.initial_state, ws.count, rng::derive(s.seed, "worlds"));
      const double cadence = evolution.snapshots.size() > 1
                                 ? evolution.snapshots[1].time() - evolution.snapshots[0].time()
                                 : 0.0;
      const AdvanceResult advanced =
          advance_worlds(initial, evolution.snapshots, s.inertia, cadence * ws.dt_fraction);
      const double tv0 = equivariance_distance(initial, evolution.snapshots.front(), ws.bins);
      const double tv1 = equivariance_distance(advanced.ensemble, evolution.snapshots.back(), ws.bins);
      io::write_ensemble(directory / "ensemble_initial.bin", initial, *s.grid);
      io::write_ensemble(directory / "ensemble_final.bin", advanced.ensemble, *s.grid);
      io::TrajectoryCsvOptions csv{ws.csv_worlds, ws.csv_time_stride, false};
      io::write_trajectories_csv(directory / "trajectories.csv", advanced.record, advanced.ensemble, csv);
      csv.unwrapped = true;
      io::write_trajectories_csv(directory / "trajectories_unwrapped.csv", advanced.record,
                                 advanced.ensemble, csv);
      artifacts.insert(artifacts.end(), {"ensemble_initial.bin", "ensemble_final.bin", "trajectories.csv",
                                         "trajectories_unwrapped.csv", "equivariance.json"});
      const json eq = {{"count", ws.count},
                       {"bins", ws.bins},
                       {"tv_initial", tv0},
                       {"tv_final", tv1},
                       {"tv_difference", std::abs(tv1 - tv0)},
                       {"tv_budget", ws.tv_budget},
                       {"alive", advanced.ensemble.alive_count()},
                       {"frozen", advanced.record.frozen},
                       {"ordering_violations", advanced.record.ordering_violations},
                       {"final_snapshot", "snapshots/" + snapshot_name(last)}};
      write_json(directory / "equivariance.json", eq);
      result.report["equivariance"] = eq;
    }
  }

  if (s.measurement) {
    const auto& ms = *s.measurement;
    const MeasurementSetup& setup = ms.setup;
    const Wavefunction pre = premeasurement_state(setup);
    const Wavefunction post = apply_ideal_measurement(pre, setup);
    const OutcomeProbabilities volume = outcome_probabilities(post, setup);
    const auto born = born_reference(setup);
    const Expectation expect = expectation(setup, volume.probabilities);
    json coefficients = json::array();
    for (const auto& a : setup.coefficients) coefficients.push_back(complex_json(a));
    json report = {{"outcomes", setup.outcomes()},
                   {"coefficients", coefficients},
                   {"outcome_values", setup.outcome_values},
                   {"norm_pre", pre.norm()},
                   {"norm_post", post.norm()},
                   {"total_volume", volume.total_volume},
                   {"volumes", volume.volumes},
                   {"probabilities_volume", volume.probabilities},
                   {"probabilities_born", born},
                   {"escaped", volume.escaped},
                   {"expectation", {{"from_probabilities", expect.from_probabilities},
                                    {"from_operator", expect.from_operator}}}};
    io::write_wavefunction(directory / "measurement_pre.bin", pre);
    io::write_wavefunction(directory / "measurement_post.bin", post);
    artifacts.insert(artifacts.end(), {"measurement_pre.bin", "measurement_post.bin", "measurement.json"});

    if (ms.worlds > 0) {
      const WorldEnsemble before = sample_worlds(pre, ms.worlds, rng::derive(s.seed, "measurement.sample"));
      const WorldEnsemble after =
          carry_through_measurement(before, setup, rng::derive(s.seed, "measurement.transition"));
      const WorldEnsemble direct = sample_worlds(post, ms.worlds, rng::derive(s.seed, "measurement.direct"));
      auto frequencies = [&](const WorldEnsemble& e) {
        std::vector<double> counts(setup.outcomes(), 0.0);
        std::size_t unassigned = 0;
        for (std::size_t w = 0; w < e.size(); ++w) {
          const auto hit = e.alive[w] ? readout(e.position(w), setup) : std::nullopt;
          if (hit) {
            counts[*hit] += 1.0;
          } else {
            ++unassigned;
          }
        }
        for (auto& c : counts) c /= static_cast<double>(e.size());
        return std::make_pair(counts, unassigned);
      };
      const auto [carried, carried_unassigned] = frequencies(after);
      const auto [sampled, sampled_unassigned] = frequencies(direct);
      std::vector<double> sigma;
      for (double p : born) sigma.push_back(binomial_sigma(p, ms.worlds));
      report["worlds"] = {{"count", ms.worlds},
                          {"count_before", before.size()},
                          {"count_after", after.size()},
                          {"alive_after", after.alive_count()},
                          {"empirical_frequencies", carried},
                          {"unassigned", carried_unassigned},
                          {"direct_sampling_frequencies", sampled},
                          {"direct_sampling_unassigned", sampled_unassigned},
                          {"binomial_sigma", sigma}};
      io::write_ensemble(directory / "measurement_worlds.bin", after, setup.product_grid());
      artifacts.push_back("measurement_worlds.bin");
    }

    if (ms.collapse) {
      const auto& cs = *ms.collapse;
      const Wavefunction branch = collapse(post, setup, cs.branch);
      const WorldEnsemble probes =
          sample_worlds(branch, cs.test_worlds, rng::derive(s.seed, "measurement.collapse"));
      const Hamiltonian h = collapse_hamiltonian(setup, cs);
      const CollapseCheck check = collapse_equivalence(probes, setup, cs.branch, h, cs.options);
      report["collapse"] = {{"branch", cs.branch},
                            {"horizon", cs.options.horizon},
                            {"dt", cs.options.dt},
                            {"test_worlds", check.worlds},
                            {"frozen", check.frozen},
                            {"max_divergence", check.max_divergence},
                            {"max_overlap_mass", check.max_overlap_mass}};
    }
    write_json(directory / "measurement.json", report);
    result.report["measurement"] = report;
    tolerances["born_identity"] = 1e-8;
    tolerances["expectation_routes"] = 1e-10;
    tolerances["frequency_sigmas"] = 3.0;
    tolerances["collapse_divergence"] = 1e-6;
  }

  if (s.spin) {
    const auto& ss = *s.spin;
    const Wavefunction pre = spin_premeasurement(ss.setup);
    const Wavefunction post = stern_gerlach_measure(pre, ss.setup);
    const SpinProbabilities p = spin_probabilities(post, ss.setup);
    const auto [ref_up, ref_down] = spin_reference(ss.setup);
    json report = {{"norm_pre", pre.norm()},
                   {"norm_post", post.norm()},
                   {"volume_up", p.volume_up},
                   {"volume_down", p.volume_down},
                   {"total_volume", p.total_volume},
                   {"probability_up", p.up},
                   {"probability_down", p.down},
                   {"reference_up", ref_up},
                   {"reference_down", ref_down},
                   {"component_norm_up", ss.setup.psi_up.norm_squared()},
                   {"component_norm_down", ss.setup.psi_down.norm_squared()}};
    if (ss.coefficients) {
      report["alpha"] = complex_json(ss.coefficients->first);
      report["beta"] = complex_json(ss.coefficients->second);
    }
    if (ss.worlds > 0) {
      const WorldEnsemble worlds = sample_worlds(post, ss.worlds, rng::derive(s.seed, "spin.sample"));
      double up = 0.0, down = 0.0;
      for (std::size_t w = 0; w < worlds.size(); ++w) {
        const auto hit = spin_readout(worlds.position(w), ss.setup);
        if (hit == SpinSetup::kUp) up += 1.0;
        if (hit == SpinSetup::kDown) down += 1.0;
      }
      const double n = static_cast<double>(worlds.size());
      report["worlds"] = {{"count", ss.worlds},
                          {"empirical_up", up / n},
                          {"empirical_down", down / n},
                          {"binomial_sigma", binomial_sigma(ref_up, ss.worlds)}};
    }
    io::write_wavefunction(directory / "spin_post.bin", post);
    write_json(directory / "spin.json", report);
    artifacts.insert(artifacts.end(), {"spin_post.bin", "spin.json"});
    result.report["spin"] = report;
    tolerances["spin_identity"] = 1e-8;
  }

  if (s.projection) {
    const auto& ps = *s.projection;
    const RealField n = particle_density(ps.state, ps.layout);
    const Region everything = Region::full(n.grid);
    json report = {{"particles", ps.layout.particles()},
                   {"expected_count_total", expected_particle_count(ps.state, everything, ps.layout)}};
    if (!ps.region.empty()) {
      const Region region = Region::where(n.grid, [&](std::span<const double> x) {
        for (std::size_t a = 0; a < x.size(); ++a) {
          if (x[a] < ps.region[a].lo || x[a] >= ps.region[a].hi) return false;
        }
        return true;
      });
      json bounds = json::array();
      for (const auto& iv : ps.region) bounds.push_back({iv.lo, iv.hi});
      report["region"] = bounds;
      report["expected_count_region"] = expected_particle_count(ps.state, region, ps.layout);
    }
    io::write_field_csv(directory / "projection.csv", n, "density");
    write_json(directory / "projection.json", report);
    artifacts.insert(artifacts.end(), {"projection.csv", "projection.json"});
    result.report["projection"] = report;
  }

  write_json(directory / "report.json", result.report);
  artifacts.push_back("report.json");
  json digests = json::object();
  for (const auto& name : artifacts) digests[name] = file_digest(directory / name);

  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::ostringstream stamp;
  stamp << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
  const json manifest = {{"schema_version", kSchemaVersion},
                         {"generator", std::string("metaworld sim ") + METAWORLD_VERSION},
                         {"scenario", s.name},
                         {"seed", s.seed},
                         {"config_hash", config_hash(s.config)},
                         {"created", stamp.str()},
                         {"tolerances", tolerances},
                         {"artifacts", artifacts},
                         {"digests", digests}};
  write_json(directory / "manifest.json", manifest);
  return result;
}

}  // namespace metaworld::scenario

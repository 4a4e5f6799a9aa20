#include "metaworld/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "metaworld/errors.hpp"
#include "metaworld/rng.hpp"

namespace metaworld {

namespace {

// First and one-past-last cell index whose center lies in iv (1D grid).
std::pair<std::size_t, std::size_t> cell_span(const Grid& g, const Interval& iv) {
  std::size_t first = g.size();
  std::size_t last = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double y = g.center(0, i);
    if (y >= iv.lo && y < iv.hi) {
      first = std::min(first, i);
      last = i + 1;
    }
  }
  return {first, last};
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

}  // namespace

void PointerDevice::validate() const {
  if (grid.dims() != 1) throw ModelViolation("pointer grid must be one-dimensional");
  if (states.size() != regions.size()) throw ModelViolation("pointer needs one region per state");
  if (!(initial.grid() == grid) || initial.components() != 1) {
    throw ModelViolation("pointer initial state must be a scalar field on the pointer grid");
  }
  const double n0 = initial.norm();
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& phi = states[i];
    if (!(phi.grid() == grid) || phi.components() != 1) {
      throw ModelViolation("pointer state " + std::to_string(i) + " is not on the pointer grid");
    }
    const auto span = cell_span(grid, regions[i]);
    if (span.first >= span.second) {
      throw ModelViolation("pointer region " + std::to_string(i) + " contains no cells");
    }
    const auto v = phi.component(0);
    for (std::size_t j = 0; j < v.size(); ++j) {
      if ((j < span.first || j >= span.second) && v[j] != cplx{}) {
        throw ModelViolation("pointer state " + std::to_string(i) + " is nonzero outside its region");
      }
    }
    if (!close(phi.norm(), n0, 1e-10)) {
      throw ModelViolation("pointer state " + std::to_string(i) +
                           " norm differs from the ready state's norm");
    }
    spans.push_back(span);
  }
  std::sort(spans.begin(), spans.end());
  const std::size_t n = grid.size();
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& a = spans[i];
    const auto& b = spans[(i + 1) % spans.size()];
    std::size_t gap = 0;
    if (spans.size() == 1) {
      gap = n - (a.second - a.first);
    } else if (i + 1 < spans.size()) {
      if (b.first < a.second) throw ModelViolation("pointer regions overlap");
      gap = b.first - a.second;
    } else {
      gap = (n - a.second) + b.first;  // across the periodic boundary
    }
    if (gap < kMinGapCells) {
      throw ModelViolation("pointer regions must be separated by at least " +
                           std::to_string(kMinGapCells) + " empty cells");
    }
  }
}

std::optional<std::size_t> PointerDevice::region_of(double y) const {
  const double q[1] = {y};
  const auto cell = grid.locate_cell(q);
  if (!cell) return std::nullopt;
  const double center = grid.center(0, (*cell)[0]);
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (center >= regions[i].lo && center < regions[i].hi) return i;
  }
  return std::nullopt;
}

Region PointerDevice::region_mask(std::size_t i) const { return Region::slab(grid, 0, regions.at(i)); }

Wavefunction MeasurementSetup::system_state() const {
  Wavefunction psi(system_grid);
  for (std::size_t i = 0; i < basis.size(); ++i) psi += coefficients[i] * basis[i];
  return psi;
}

void MeasurementSetup::validate() const {
  const std::size_t k = basis.size();
  if (k == 0 || k > kMaxOutcomes) throw InvalidArgument("measurement needs 1..8 basis states");
  if (coefficients.size() != k || outcome_values.size() != k || pointer.states.size() != k) {
    throw InvalidArgument("measurement: basis, coefficients, pointer states and outcome values "
                          "must have equal length");
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (!(basis[i].grid() == system_grid) || basis[i].components() != 1) {
      throw InvalidArgument("basis state " + std::to_string(i) + " is not on the system grid");
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const cplx overlap = inner_product(basis[i], basis[j]);
      const double expected = i == j ? 1.0 : 0.0;
      if (std::abs(overlap - expected) > 1e-10) {
        throw ModelViolation("basis is not orthonormal at (" + std::to_string(i) + "," +
                             std::to_string(j) + ")");
      }
    }
  }
  pointer.validate();
}

Wavefunction premeasurement_state(const MeasurementSetup& setup) {
  setup.validate();
  return tensor_product(setup.system_state(), setup.pointer.initial);
}

namespace {

// c_i = <chi_i (x) phi_0 | psi> / ||phi_0||^2 for a scalar or per-component field.
std::vector<cplx> branch_amplitudes(std::span<const cplx> psi, const std::vector<Wavefunction>& basis,
                                    const Wavefunction& phi0) {
  const std::size_t nx = basis.front().grid().size();
  const std::size_t ny = phi0.grid().size();
  const auto p0 = phi0.component(0);
  const double dy = phi0.grid().cell_volume();
  const double dx = basis.front().grid().cell_volume();
  std::vector<cplx> reduced(nx);
  for (std::size_t x = 0; x < nx; ++x) {
    cplx sum{};
    for (std::size_t y = 0; y < ny; ++y) sum += std::conj(p0[y]) * psi[x * ny + y];
    reduced[x] = sum * dy;
  }
  const double n0 = phi0.norm_squared();
  std::vector<cplx> c(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto chi = basis[i].component(0);
    cplx sum{};
    for (std::size_t x = 0; x < nx; ++x) sum += std::conj(chi[x]) * reduced[x];
    c[i] = sum * dx / n0;
  }
  return c;
}

}  // namespace

Wavefunction apply_ideal_measurement(const Wavefunction& psi, const MeasurementSetup& setup) {
  setup.validate();
  const Grid product = setup.product_grid();
  if (!(psi.grid() == product) || psi.components() != 1) {
    throw InvalidArgument("apply_ideal_measurement: state is not a scalar field on X x Y");
  }
  const auto c = branch_amplitudes(psi.component(0), setup.basis, setup.pointer.initial);

  Wavefunction in_span(product);
  Wavefunction post(product, 1, psi.time());
  for (std::size_t i = 0; i < c.size(); ++i) {
    in_span += tensor_product(c[i] * setup.basis[i], setup.pointer.initial);
    post += tensor_product(c[i] * setup.basis[i], setup.pointer.states[i]);
  }
  const double norm_in = psi.norm();
  const double residual = (psi - in_span).norm();
  if (residual > 1e-8 * norm_in) {
    std::ostringstream msg;
    msg << "state is not of the form sum_i c_i chi_i (x) phi_0 (relative residual "
        << residual / norm_in << ")";
    throw ModelViolation(msg.str());
  }
  return post;
}

OutcomeProbabilities outcome_probabilities(const Wavefunction& post, const MeasurementSetup& setup) {
  const Grid product = setup.product_grid();
  if (!(post.grid() == product)) throw InvalidArgument("outcome_probabilities: grid mismatch");
  OutcomeProbabilities out;
  out.total_volume = world_volume(post, Region::full(product));
  if (!(out.total_volume > 0.0)) throw InvalidArgument("outcome_probabilities: zero world volume");
  const std::size_t pointer_dim = product.dims() - 1;
  double sum = 0.0;
  for (std::size_t i = 0; i < setup.pointer.regions.size(); ++i) {
    const double v = world_volume(post, Region::slab(product, pointer_dim, setup.pointer.regions[i]));
    out.volumes.push_back(v);
    out.probabilities.push_back(v / out.total_volume);
    sum += v / out.total_volume;
  }
  out.escaped = 1.0 - sum;
  return out;
}

std::vector<double> born_reference(const MeasurementSetup& setup) {
  double total = 0.0;
  for (const auto& a : setup.coefficients) total += std::norm(a);
  if (!(total > 0.0)) throw InvalidArgument("born_reference: all coefficients are zero");
  std::vector<double> p;
  p.reserve(setup.coefficients.size());
  for (const auto& a : setup.coefficients) p.push_back(std::norm(a) / total);
  return p;
}

Expectation expectation(const MeasurementSetup& setup) {
  const auto p = born_reference(setup);
  return expectation(setup, p);
}

Expectation expectation(const MeasurementSetup& setup, std::span<const double> probabilities) {
  setup.validate();
  if (probabilities.size() != setup.outcomes()) {
    throw InvalidArgument("expectation: one probability per outcome required");
  }
  Expectation e;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    e.from_probabilities += probabilities[i] * setup.outcome_values[i];
  }
  const Wavefunction psi = setup.system_state();
  Wavefunction a_psi(setup.system_grid);
  for (std::size_t i = 0; i < setup.outcomes(); ++i) {
    a_psi += (setup.outcome_values[i] * inner_product(setup.basis[i], psi)) * setup.basis[i];
  }
  const cplx numerator = inner_product(psi, a_psi);
  const double denominator = inner_product(psi, psi).real();
  if (!(denominator > 0.0)) throw InvalidArgument("expectation: zero system state");
  e.from_operator = numerator.real() / denominator;
  if (std::abs(e.from_operator - e.from_probabilities) > 1e-8) {
    throw ModelViolation("expectation routes disagree; basis orthonormality is broken");
  }
  return e;
}

std::optional<std::size_t> readout(std::span<const double> world, const MeasurementSetup& setup) {
  if (world.size() != setup.system_grid.dims() + 1) {
    throw InvalidArgument("readout: world has the wrong number of coordinates");
  }
  return setup.pointer.region_of(world.back());
}

Wavefunction collapse(const Wavefunction& post, const MeasurementSetup& setup, std::size_t branch) {
  if (branch >= setup.outcomes()) throw InvalidArgument("collapse: branch index out of range");
  const Grid product = setup.product_grid();
  if (!(post.grid() == product)) throw InvalidArgument("collapse: grid mismatch");
  const Region keep = Region::slab(product, product.dims() - 1, setup.pointer.regions[branch]);
  Wavefunction out = post;
  for (std::size_t c = 0; c < out.components(); ++c) {
    auto v = out.component(c);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!keep.contains(i)) v[i] = cplx{};
    }
  }
  if (!(out.norm_squared() > 0.0)) throw InvalidArgument("collapse: branch has zero norm");
  return out;
}

WorldEnsemble carry_through_measurement(const WorldEnsemble& pre, const MeasurementSetup& setup,
                                        std::uint64_t seed) {
  setup.validate();
  const Grid& sx = setup.system_grid;
  const Grid& gy = setup.pointer.grid;
  const std::size_t dx = sx.dims();
  if (pre.dims != dx + 1) throw InvalidArgument("carry_through_measurement: dimension mismatch");
  const std::size_t k = setup.outcomes();

  // pointer cell distributions per branch
  std::vector<std::vector<double>> cdfs(k, std::vector<double>(gy.size()));
  std::vector<double> pointer_norms(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto v = setup.pointer.states[i].component(0);
    double acc = 0.0;
    for (std::size_t j = 0; j < gy.size(); ++j) {
      acc += std::norm(v[j]);
      cdfs[i][j] = acc;
    }
    pointer_norms[i] = setup.pointer.states[i].norm_squared();
  }

  WorldEnsemble out = pre;
  for (std::size_t w = 0; w < pre.size(); ++w) {
    if (!out.alive[w]) continue;
    const auto q = pre.position(w);
    const auto cell = sx.locate_cell(q.subspan(0, dx));
    if (!cell) {
      out.alive[w] = 0;
      continue;
    }
    const std::size_t flat = sx.flatten(*cell);
    std::vector<double> weight(k);
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      weight[i] = std::norm(setup.coefficients[i] * setup.basis[i].component(0)[flat]) * pointer_norms[i];
      total += weight[i];
    }
    if (!(total > 0.0)) {
      out.alive[w] = 0;
      continue;
    }
    auto engine = rng::stream(seed, "measurement_transition", pre.ids[w]);
    double u = rng::uniform(engine) * total;
    std::size_t branch = 0;
    while (branch + 1 < k && (u >= weight[branch] || weight[branch] == 0.0)) {
      u -= weight[branch];
      ++branch;
    }
    const auto& cdf = cdfs[branch];
    const double target = rng::uniform(engine) * cdf.back();
    auto j = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), target) - cdf.begin());
    j = std::min(j, gy.size() - 1);
    const double y = gy.extent(0).lo + (static_cast<double>(j) + rng::uniform(engine)) * gy.spacing(0);
    out.positions[w * pre.dims + dx] = y;
    out.unwrapped[w * pre.dims + dx] = y;
  }
  return out;
}

CollapseCheck collapse_equivalence(const WorldEnsemble& worlds, const MeasurementSetup& setup,
                                   std::size_t branch, const Hamiltonian& hamiltonian,
                                   const CollapseCheckOptions& options) {
  const Wavefunction post = apply_ideal_measurement(premeasurement_state(setup), setup);
  for (std::size_t w = 0; w < worlds.size(); ++w) {
    const auto hit = readout(worlds.position(w), setup);
    if (!hit || *hit != branch) {
      throw InvalidArgument("collapse_equivalence: world " + std::to_string(worlds.ids[w]) +
                            " is outside the support of branch " + std::to_string(branch));
    }
  }
  const Wavefunction collapsed = collapse(post, setup, branch);

  WorldEnsemble start = worlds;
  start.time = post.time();
  const Evolution full = evolve(post, hamiltonian, options.horizon, options.dt, options.snapshot_every);
  const Evolution reduced =
      evolve(collapsed, hamiltonian, options.horizon, options.dt, options.snapshot_every);

  CollapseCheck check;
  check.worlds = worlds.size();
  const Grid product = setup.product_grid();
  const Region inside = Region::slab(product, product.dims() - 1, setup.pointer.regions[branch]);
  for (std::size_t s = 0; s < full.snapshots.size(); ++s) {
    const Wavefunction others = full.snapshots[s] - reduced.snapshots[s];
    const double overlap =
        world_volume(others, inside) / world_volume(full.snapshots[s], Region::full(product));
    check.max_overlap_mass = std::max(check.max_overlap_mass, overlap);
    if (overlap > options.overlap_abort) {
      std::ostringstream msg;
      msg << "branches re-interfered: overlap mass " << overlap << " at t="
          << full.snapshots[s].time();
      throw BranchesReinterfered(msg.str());
    }
  }

  const AdvanceResult a = advance_worlds(start, full.snapshots, hamiltonian.inertia);
  const AdvanceResult b = advance_worlds(start, reduced.snapshots, hamiltonian.inertia);
  check.frozen = std::max(a.record.frozen, b.record.frozen);
  for (std::size_t t = 0; t < a.record.times.size(); ++t) {
    const auto& pa = a.record.unwrapped[t];
    const auto& pb = b.record.unwrapped[t];
    for (std::size_t i = 0; i < pa.size(); ++i) {
      check.max_divergence = std::max(check.max_divergence, std::abs(pa[i] - pb[i]));
    }
  }
  return check;
}

}  // namespace metaworld

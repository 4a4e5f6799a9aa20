#include "metaworld/worlds.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "metaworld/errors.hpp"
#include "metaworld/rng.hpp"

namespace metaworld {

std::size_t VelocityField::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
}

bool VelocityField::interpolate(std::span<const double> q, std::span<double> out) const {
  const std::size_t dims = grid.dims();
  // at most 3 dimensions at desk scale, but keep this general
  std::vector<std::size_t> lo_idx(dims), hi_idx(dims);
  std::vector<double> frac(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    const std::size_t n = grid.points(d);
    const double s = (q[d] - grid.extent(d).lo) / grid.spacing(d) - 0.5;
    const double fl = std::floor(s);
    frac[d] = s - fl;
    const auto nn = static_cast<long long>(n);
    long long i0 = static_cast<long long>(fl) % nn;
    if (i0 < 0) i0 += nn;
    lo_idx[d] = static_cast<std::size_t>(i0);
    hi_idx[d] = (lo_idx[d] + 1) % n;
  }
  std::vector<double> acc(dims, 0.0);
  const std::size_t corners = std::size_t{1} << dims;
  for (std::size_t corner = 0; corner < corners; ++corner) {
    double weight = 1.0;
    std::size_t flat = 0;
    for (std::size_t d = 0; d < dims; ++d) {
      const bool upper = (corner >> d) & 1U;
      weight *= upper ? frac[d] : 1.0 - frac[d];
      flat += (upper ? hi_idx[d] : lo_idx[d]) * grid.stride(d);
    }
    if (!valid[flat]) return false;
    for (std::size_t d = 0; d < dims; ++d) acc[d] += weight * velocity[d][flat];
  }
  std::copy(acc.begin(), acc.end(), out.begin());
  return true;
}

namespace {

std::vector<unsigned char> validity_mask(const RealField& rho, double node_threshold) {
  const double peak = *std::max_element(rho.values.begin(), rho.values.end());
  std::vector<unsigned char> valid(rho.values.size(), 0);
  if (!(peak > 0.0)) return valid;
  const double cutoff = node_threshold * peak;
  for (std::size_t i = 0; i < valid.size(); ++i) valid[i] = rho.values[i] > cutoff ? 1 : 0;
  return valid;
}

void require_1d_scalar(const Wavefunction& psi, const char* what) {
  if (psi.grid().dims() != 1 || psi.components() != 1) {
    throw InvalidArgument(std::string(what) + ": requires a 1D scalar wavefunction");
  }
}

// Cyclic runs of valid cells, each listed in increasing (wrapped) order.
std::vector<std::vector<std::size_t>> segments_of(const std::vector<unsigned char>& valid) {
  const std::size_t n = valid.size();
  std::vector<std::vector<std::size_t>> runs;
  const auto first_invalid = std::find(valid.begin(), valid.end(), 0);
  if (first_invalid == valid.end()) return runs;
  const auto start = static_cast<std::size_t>(first_invalid - valid.begin());
  std::vector<std::size_t> current;
  for (std::size_t step = 1; step <= n; ++step) {
    const std::size_t j = (start + step) % n;
    if (valid[j]) {
      current.push_back(j);
    } else if (!current.empty()) {
      runs.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) runs.push_back(std::move(current));
  return runs;
}

}  // namespace

VelocityField velocity_field(const Wavefunction& psi, const Inertia& inertia,
                             double node_threshold) {
  const Grid& g = psi.grid();
  const RealField rho = density(psi);
  const VectorField j = current(psi, inertia);
  VelocityField v{g, std::vector<std::vector<double>>(g.dims(), std::vector<double>(g.size(), 0.0)),
                  validity_mask(rho, node_threshold), psi.time()};
  for (std::size_t d = 0; d < g.dims(); ++d) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (v.valid[i]) v.velocity[d][i] = j.components[d][i] / rho.values[i];
    }
  }
  return v;
}

UnwrappedPhase unwrap_phase(const Wavefunction& psi, double node_threshold) {
  require_1d_scalar(psi, "unwrap_phase");
  const auto values = psi.component(0);
  const std::size_t n = values.size();
  const auto valid = validity_mask(density(psi), node_threshold);
  UnwrappedPhase out{std::vector<double>(n, 0.0), std::vector<int>(n, -1), false};

  auto increment = [&](std::size_t from, std::size_t to) {
    return std::arg(values[to] * std::conj(values[from]));
  };

  if (std::all_of(valid.begin(), valid.end(), [](unsigned char m) { return m != 0; })) {
    out.periodic = true;
    out.phase[0] = std::arg(values[0]);
    out.segment[0] = 0;
    for (std::size_t j = 1; j < n; ++j) {
      out.phase[j] = out.phase[j - 1] + increment(j - 1, j);
      out.segment[j] = 0;
    }
    return out;
  }
  int label = 0;
  for (const auto& run : segments_of(valid)) {
    out.phase[run[0]] = std::arg(values[run[0]]);
    out.segment[run[0]] = label;
    for (std::size_t p = 1; p < run.size(); ++p) {
      out.phase[run[p]] = out.phase[run[p - 1]] + increment(run[p - 1], run[p]);
      out.segment[run[p]] = label;
    }
    ++label;
  }
  return out;
}

std::vector<double> first_derivative_weights(std::span<const double> nodes) {
  const std::size_t count = nodes.size();
  if (count < 2) throw InvalidArgument("first_derivative_weights: need at least two nodes");
  // weights[node][order], order 0..1
  std::vector<std::array<double, 2>> c(count, {0.0, 0.0});
  double c1 = 1.0;
  double c4 = nodes[0];
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < count; ++i) {
    const std::size_t mn = std::min<std::size_t>(i, 1);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i];
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (std::size_t k = mn; k >= 1; --k) {
          c[i][k] = c1 * (static_cast<double>(k) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        }
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (std::size_t k = mn; k >= 1; --k) {
        c[j][k] = (c4 * c[j][k] - static_cast<double>(k) * c[j][k - 1]) / c3;
      }
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(count);
  for (std::size_t i = 0; i < count; ++i) w[i] = c[i][1];
  return w;
}

VelocityField velocity_from_phase(const Wavefunction& psi, const Inertia& inertia,
                                  double node_threshold) {
  require_1d_scalar(psi, "velocity_from_phase");
  inertia.validate(1);
  const Grid& g = psi.grid();
  const std::size_t n = g.size();
  const double scale = inertia.hbar / (inertia.masses[0] * g.spacing(0));
  const auto values = psi.component(0);
  const auto valid = validity_mask(density(psi), node_threshold);
  VelocityField v{g, {std::vector<double>(n, 0.0)}, std::vector<unsigned char>(n, 0), psi.time()};

  constexpr std::size_t kStencil = 13;
  auto increment = [&](std::size_t from, std::size_t to) {
    return std::arg(values[to] * std::conj(values[from]));
  };

  if (std::all_of(valid.begin(), valid.end(), [](unsigned char m) { return m != 0; })) {
    const std::vector<double> nodes{-6, -5, -4, -3, -2, -1, 0, 1, 2, 3, 4, 5, 6};
    const auto w = first_derivative_weights(nodes);
    for (std::size_t j = 0; j < n; ++j) {
      // phase relative to cell j, accumulated outward so it never wraps
      std::array<double, kStencil> s{};
      for (std::size_t m = 1; m <= 6; ++m) {
        s[6 + m] = s[5 + m] + increment((j + m - 1) % n, (j + m) % n);
        s[6 - m] = s[7 - m] - increment((j + n - m) % n, (j + n - m + 1) % n);
      }
      double dsdx = 0.0;
      for (std::size_t m = 0; m < kStencil; ++m) dsdx += w[m] * s[m];
      v.velocity[0][j] = scale * dsdx;
      v.valid[j] = 1;
    }
    return v;
  }

  for (const auto& run : segments_of(valid)) {
    const std::size_t len = run.size();
    if (len < 2) continue;
    std::vector<double> s(len, 0.0);
    for (std::size_t p = 1; p < len; ++p) s[p] = s[p - 1] + increment(run[p - 1], run[p]);
    const std::size_t width = std::min(kStencil, len);
    for (std::size_t p = 0; p < len; ++p) {
      const std::size_t half = width / 2;
      const std::size_t first = std::min(p > half ? p - half : 0, len - width);
      std::vector<double> nodes(width);
      for (std::size_t m = 0; m < width; ++m) {
        nodes[m] = static_cast<double>(first + m) - static_cast<double>(p);
      }
      const auto w = first_derivative_weights(nodes);
      double dsdx = 0.0;
      for (std::size_t m = 0; m < width; ++m) dsdx += w[m] * (s[first + m] - s[p]);
      v.velocity[0][run[p]] = scale * dsdx;
      v.valid[run[p]] = 1;
    }
  }
  return v;
}

std::size_t WorldEnsemble::alive_count() const {
  return static_cast<std::size_t>(std::count(alive.begin(), alive.end(), 1));
}

WorldEnsemble sample_worlds(const Wavefunction& psi, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw InvalidArgument("sample_worlds: need at least one world");
  const Grid& g = psi.grid();
  const RealField rho = density(psi);
  std::vector<double> cdf(g.size());
  std::partial_sum(rho.values.begin(), rho.values.end(), cdf.begin());
  const double total = cdf.back();
  if (!(total > 0.0)) throw InvalidArgument("sample_worlds: total world volume is zero");
  std::size_t last_nonzero = g.size() - 1;
  while (rho.values[last_nonzero] == 0.0) --last_nonzero;

  const std::size_t dims = g.dims();
  WorldEnsemble e;
  e.dims = dims;
  e.positions.resize(count * dims);
  e.ids.resize(count);
  e.alive.assign(count, 1);
  e.birth_time = psi.time();
  e.time = psi.time();
  e.seed = seed;

#pragma omp parallel for schedule(static)
  for (std::size_t w = 0; w < count; ++w) {
    auto engine = rng::stream(seed, "sample_worlds", w);
    const double target = rng::uniform(engine) * total;
    auto cell = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), target) -
                                         cdf.begin());
    cell = std::min(cell, last_nonzero);
    for (std::size_t d = 0; d < dims; ++d) {
      const std::size_t i = (cell / g.stride(d)) % g.points(d);
      e.positions[w * dims + d] =
          g.extent(d).lo + (static_cast<double>(i) + rng::uniform(engine)) * g.spacing(d);
    }
    e.ids[w] = w;
  }
  e.unwrapped = e.positions;
  return e;
}

namespace {

double wrap(double x, const Interval& iv) {
  const double len = iv.length();
  double y = std::fmod(x - iv.lo, len);
  if (y < 0.0) y += len;
  if (y >= len) y = 0.0;
  return iv.lo + y;
}

// Velocity at time fraction s in [0,1] between two snapshot fields.
bool velocity_between(const VelocityField& a, const VelocityField& b, double s,
                      std::span<const double> q, std::span<double> out, std::span<double> scratch) {
  const std::size_t dims = q.size();
  if (s <= 0.0) return a.interpolate(q, out);
  if (s >= 1.0) return b.interpolate(q, out);
  if (!a.interpolate(q, out) || !b.interpolate(q, scratch)) return false;
  for (std::size_t d = 0; d < dims; ++d) out[d] = (1.0 - s) * out[d] + s * scratch[d];
  return true;
}

}  // namespace

AdvanceResult advance_worlds(const WorldEnsemble& ensemble, std::span<const Wavefunction> snapshots,
                             const Inertia& inertia, double dt_world) {
  if (snapshots.empty()) throw InvalidArgument("advance_worlds: empty snapshot list");
  const Grid& g = snapshots.front().grid();
  const std::size_t dims = g.dims();
  if (ensemble.dims != dims) throw InvalidArgument("advance_worlds: ensemble dimension mismatch");
  inertia.validate(dims);
  const double t0 = snapshots.front().time();
  if (std::abs(ensemble.time - t0) > 1e-9) {
    throw InvalidArgument("advance_worlds: ensemble time is not aligned with the first snapshot");
  }

  AdvanceResult result{ensemble, {}};
  WorldEnsemble& e = result.ensemble;
  TrajectoryRecord& rec = result.record;
  const std::size_t count = e.size();
  auto snapshot_record = [&](double t) {
    rec.times.push_back(t);
    rec.positions.push_back(e.positions);
    rec.unwrapped.push_back(e.unwrapped);
    rec.alive.push_back(e.alive);
  };
  snapshot_record(t0);
  if (snapshots.size() == 1) return result;

  const double cadence = snapshots[1].time() - snapshots[0].time();
  if (!(cadence > 0.0)) throw InvalidArgument("advance_worlds: snapshot times must increase");
  for (std::size_t k = 1; k < snapshots.size(); ++k) {
    if (!(snapshots[k].grid() == g)) throw InvalidArgument("advance_worlds: snapshot grid mismatch");
    const double gap = snapshots[k].time() - snapshots[k - 1].time();
    if (std::abs(gap - cadence) > 1e-9 * std::max(1.0, cadence)) {
      throw InvalidArgument("advance_worlds: snapshot cadence mismatch");
    }
  }
  if (dt_world <= 0.0) dt_world = cadence / 4.0;
  if (dt_world > cadence * (1.0 + 1e-12)) {
    throw InvalidArgument("advance_worlds: dt_world exceeds the snapshot cadence");
  }
  const auto substeps = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cadence / dt_world)));
  const double h = cadence / static_cast<double>(substeps);

  // initial 1D order, used for the non-crossing check
  std::vector<std::size_t> order;
  if (dims == 1) {
    order.resize(count);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return e.unwrapped[a] < e.unwrapped[b]; });
  }
  std::vector<unsigned char> was_alive = e.alive;

  VelocityField field_a = velocity_field(snapshots[0], inertia);
  for (std::size_t k = 1; k < snapshots.size(); ++k) {
    VelocityField field_b = velocity_field(snapshots[k], inertia);
    const double tk = snapshots[k - 1].time();
    for (std::size_t sub = 0; sub < substeps; ++sub) {
      const double s0 = static_cast<double>(sub) / static_cast<double>(substeps);
      const double s_half = (static_cast<double>(sub) + 0.5) / static_cast<double>(substeps);
      const double s1 = static_cast<double>(sub + 1) / static_cast<double>(substeps);
#pragma omp parallel for schedule(static)
      for (std::size_t w = 0; w < count; ++w) {
        if (!e.alive[w]) continue;
        std::vector<double> q(e.positions.begin() + static_cast<std::ptrdiff_t>(w * dims),
                              e.positions.begin() + static_cast<std::ptrdiff_t>((w + 1) * dims));
        std::vector<double> k1(dims), k2(dims), k3(dims), k4(dims), tmp(dims), scratch(dims);
        bool ok = velocity_between(field_a, field_b, s0, q, k1, scratch);
        if (ok) {
          for (std::size_t d = 0; d < dims; ++d) tmp[d] = q[d] + 0.5 * h * k1[d];
          ok = velocity_between(field_a, field_b, s_half, tmp, k2, scratch);
        }
        if (ok) {
          for (std::size_t d = 0; d < dims; ++d) tmp[d] = q[d] + 0.5 * h * k2[d];
          ok = velocity_between(field_a, field_b, s_half, tmp, k3, scratch);
        }
        if (ok) {
          for (std::size_t d = 0; d < dims; ++d) tmp[d] = q[d] + h * k3[d];
          ok = velocity_between(field_a, field_b, s1, tmp, k4, scratch);
        }
        if (!ok) {
          e.alive[w] = 0;
          continue;
        }
        for (std::size_t d = 0; d < dims; ++d) {
          const double dq = h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
          e.unwrapped[w * dims + d] += dq;
          e.positions[w * dims + d] = wrap(q[d] + dq, g.extent(d));
        }
      }
      if (dims == 1) {
        double previous = 0.0;
        bool have_previous = false;
        for (std::size_t idx : order) {
          if (!e.alive[idx]) continue;
          if (have_previous && !(e.unwrapped[idx] > previous)) ++rec.ordering_violations;
          previous = e.unwrapped[idx];
          have_previous = true;
        }
      }
    }
    e.time = tk + cadence;
    snapshot_record(snapshots[k].time());
    field_a = std::move(field_b);
  }
  e.time = snapshots.back().time();
  rec.times.back() = e.time;
  for (std::size_t w = 0; w < count; ++w) rec.frozen += was_alive[w] && !e.alive[w];
  return result;
}

double equivariance_distance(const WorldEnsemble& ensemble, const Wavefunction& psi,
                             std::size_t bins) {
  const Grid& g = psi.grid();
  if (ensemble.dims != g.dims()) throw InvalidArgument("equivariance_distance: dimension mismatch");
  if (std::abs(ensemble.time - psi.time()) > 1e-9) {
    throw InvalidArgument("equivariance_distance: ensemble and wavefunction times differ");
  }
  if (bins == 0) throw InvalidArgument("equivariance_distance: bins must be positive");
  for (std::size_t d = 0; d < g.dims(); ++d) {
    if (g.points(d) % bins != 0) {
      throw InvalidArgument("equivariance_distance: bins must divide every grid size");
    }
  }
  const std::size_t alive = ensemble.alive_count();
  if (alive == 0) throw InvalidArgument("equivariance_distance: no alive worlds");

  std::size_t total_bins = 1;
  for (std::size_t d = 0; d < g.dims(); ++d) total_bins *= bins;
  auto bin_of_cell = [&](std::size_t flat) {
    std::size_t b = 0;
    for (std::size_t d = 0; d < g.dims(); ++d) {
      const std::size_t i = (flat / g.stride(d)) % g.points(d);
      b = b * bins + i / (g.points(d) / bins);
    }
    return b;
  };

  std::vector<double> expected(total_bins, 0.0);
  const RealField rho = density(psi);
  double mass = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    expected[bin_of_cell(i)] += rho.values[i];
    mass += rho.values[i];
  }
  if (!(mass > 0.0)) throw InvalidArgument("equivariance_distance: zero world volume");

  std::vector<double> empirical(total_bins, 0.0);
  for (std::size_t w = 0; w < ensemble.size(); ++w) {
    if (!ensemble.alive[w]) continue;
    std::size_t b = 0;
    for (std::size_t d = 0; d < g.dims(); ++d) {
      const Interval& iv = g.extent(d);
      const double x = wrap(ensemble.positions[w * g.dims() + d], iv);
      auto i = static_cast<std::size_t>((x - iv.lo) / iv.length() * static_cast<double>(bins));
      b = b * bins + std::min(i, bins - 1);
    }
    empirical[b] += 1.0;
  }
  double tv = 0.0;
  for (std::size_t b = 0; b < total_bins; ++b) {
    tv += std::abs(empirical[b] / static_cast<double>(alive) - expected[b] / mass);
  }
  return 0.5 * tv;
}

}  // namespace metaworld

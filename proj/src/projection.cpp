#include "metaworld/projection.hpp"

#include <algorithm>
#include <optional>
#include <set>

#include "metaworld/errors.hpp"

namespace metaworld {

ParticleLayout ParticleLayout::one_dimensional(std::size_t particles) {
  ParticleLayout layout;
  for (std::size_t k = 0; k < particles; ++k) layout.roles.push_back({k, 0});
  return layout;
}

std::size_t ParticleLayout::particles() const {
  std::size_t n = 0;
  for (const auto& r : roles) n = std::max(n, r.particle + 1);
  return n;
}

std::size_t ParticleLayout::axes() const {
  std::size_t n = 0;
  for (const auto& r : roles) n = std::max(n, r.axis + 1);
  return n;
}

void ParticleLayout::validate(const Grid& grid) const {
  if (roles.size() != grid.dims()) {
    throw InvalidArgument("particle layout must assign every grid dimension");
  }
  const std::size_t np = particles();
  const std::size_t na = axes();
  if (np * na != roles.size()) {
    throw InvalidArgument("particle layout: every particle needs every physical axis exactly once");
  }
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& r : roles) {
    if (!seen.insert({r.particle, r.axis}).second) {
      throw InvalidArgument("particle layout: repeated (particle, axis) assignment");
    }
  }
  for (std::size_t a = 0; a < na; ++a) {
    std::optional<std::size_t> reference;
    for (std::size_t d = 0; d < roles.size(); ++d) {
      if (roles[d].axis != a) continue;
      if (!reference) {
        reference = d;
      } else if (!(grid.extent(d) == grid.extent(*reference)) ||
                 grid.points(d) != grid.points(*reference)) {
        throw InvalidArgument("particle layout: coordinates on one physical axis are not congruent");
      }
    }
  }
}

Grid ParticleLayout::physical_grid(const Grid& configuration) const {
  validate(configuration);
  std::vector<Interval> extent(axes());
  std::vector<std::size_t> points(axes());
  for (std::size_t d = 0; d < roles.size(); ++d) {
    if (roles[d].particle == 0) {
      extent[roles[d].axis] = configuration.extent(d);
      points[roles[d].axis] = configuration.points(d);
    }
  }
  return Grid(std::move(extent), std::move(points));
}

RealField particle_density(const Wavefunction& psi, const ParticleLayout& layout) {
  const Grid& g = psi.grid();
  const Grid phys = layout.physical_grid(g);
  const RealField rho = density(psi);
  RealField out{phys, std::vector<double>(phys.size(), 0.0)};
  const double weight = g.cell_volume() / phys.cell_volume();

  // coordinate index for (particle, axis)
  const std::size_t np = layout.particles();
  std::vector<std::vector<std::size_t>> coord(np, std::vector<std::size_t>(layout.axes()));
  for (std::size_t d = 0; d < layout.roles.size(); ++d) {
    coord[layout.roles[d].particle][layout.roles[d].axis] = d;
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = rho.values[i] * weight;
    if (r == 0.0) continue;
    for (std::size_t k = 0; k < np; ++k) {
      std::size_t flat = 0;
      for (std::size_t a = 0; a < layout.axes(); ++a) {
        const std::size_t d = coord[k][a];
        flat += ((i / g.stride(d)) % g.points(d)) * phys.stride(a);
      }
      out.values[flat] += r;
    }
  }
  return out;
}

double expected_particle_count(const Wavefunction& psi, const Region& physical_region,
                               const ParticleLayout& layout) {
  const RealField n = particle_density(psi, layout);
  if (!(physical_region.grid() == n.grid)) {
    throw InvalidArgument("expected_particle_count: region is not on the physical grid");
  }
  const double total = world_volume(psi, Region::full(psi.grid()));
  if (!(total > 0.0)) throw InvalidArgument("expected_particle_count: zero world volume");
  double sum = 0.0;
  for (std::size_t i = 0; i < n.values.size(); ++i) {
    if (physical_region.contains(i)) sum += n.values[i];
  }
  return sum * n.grid.cell_volume() / total;
}

}  // namespace metaworld

#include "metaworld/spectral.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <vector>

#include "metaworld/errors.hpp"

namespace metaworld {

namespace {

struct PlanPair {
  fftw_plan forward;
  fftw_plan inverse;
};

// FFTW planning is not thread-safe; everything touching the planner goes
// through this lock. Plans live for the process lifetime.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

PlanPair plans_for(const std::vector<std::size_t>& shape) {
  static std::map<std::vector<std::size_t>, PlanPair> cache;
  std::lock_guard lock(planner_mutex());
  if (auto it = cache.find(shape); it != cache.end()) return it->second;

  std::vector<int> n(shape.begin(), shape.end());
  std::size_t total = 1;
  for (auto s : shape) total *= s;
  auto* scratch = fftw_alloc_complex(total);
  // ESTIMATE keeps plan selection deterministic; UNALIGNED allows new-array
  // execution on std::vector storage.
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair plans{
      fftw_plan_dft(static_cast<int>(n.size()), n.data(), scratch, scratch, FFTW_FORWARD, flags),
      fftw_plan_dft(static_cast<int>(n.size()), n.data(), scratch, scratch, FFTW_BACKWARD, flags)};
  fftw_free(scratch);
  if (plans.forward == nullptr || plans.inverse == nullptr) {
    throw NumericalFailure("FFTW failed to create a plan");
  }
  cache.emplace(shape, plans);
  return plans;
}

}  // namespace

SpectralTransform::SpectralTransform(const Grid& grid) : grid_(grid) {
  const PlanPair plans = plans_for(grid.points());
  forward_plan_ = plans.forward;
  inverse_plan_ = plans.inverse;
}

void SpectralTransform::forward(std::span<cplx> data) const {
  if (data.size() != grid_.size()) throw InvalidArgument("spectral transform: size mismatch");
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(static_cast<fftw_plan>(forward_plan_), p, p);
}

void SpectralTransform::inverse(std::span<cplx> data) const {
  if (data.size() != grid_.size()) throw InvalidArgument("spectral transform: size mismatch");
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(static_cast<fftw_plan>(inverse_plan_), p, p);
  const double scale = 1.0 / static_cast<double>(data.size());
  for (auto& v : data) v *= scale;
}

void spectral_derivative(const SpectralTransform& transform, std::span<const cplx> field,
                         std::size_t d, std::span<cplx> out) {
  const Grid& g = transform.grid();
  if (field.size() != g.size() || out.size() != g.size()) {
    throw InvalidArgument("spectral_derivative: size mismatch");
  }
  std::copy(field.begin(), field.end(), out.begin());
  transform.forward(out);
  const auto k = g.wavenumbers(d);
  const std::size_t n = g.points(d);
  const std::size_t stride = g.stride(d);
  for (std::size_t flat = 0; flat < g.size(); ++flat) {
    const std::size_t j = (flat / stride) % n;
    out[flat] = (j == n / 2) ? cplx{} : out[flat] * cplx(0.0, k[j]);
  }
  transform.inverse(out);
}

}  // namespace metaworld

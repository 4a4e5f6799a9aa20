#pragma once

#include <complex>
#include <span>

#include "metaworld/grid.hpp"

namespace metaworld {

using cplx = std::complex<double>;

// In-place multidimensional DFT over a Grid-shaped array, backed by FFTW.
// forward() is unnormalized; inverse() divides by the cell count so that
// inverse(forward(f)) == f. Plans are cached per shape and shared; execution
// is safe from multiple threads.
class SpectralTransform {
 public:
  explicit SpectralTransform(const Grid& grid);

  void forward(std::span<cplx> data) const;
  void inverse(std::span<cplx> data) const;

  const Grid& grid() const { return grid_; }

 private:
  Grid grid_;
  void* forward_plan_;
  void* inverse_plan_;
};

// Spectral derivative along dimension d; the Nyquist mode is dropped so real
// fields have real derivatives.
void spectral_derivative(const SpectralTransform& transform, std::span<const cplx> field,
                         std::size_t d, std::span<cplx> out);

}  // namespace metaworld

#pragma once

// Unitary discrete Fourier pair on periodic grids, backed by FFTW. Both
// directions carry the 1/sqrt(point count) factor, so the transform is exactly
// unitary on the discrete l2 space and propagator roundtrips measure only
// roundoff. Plans are created once per grid with FFTW_ESTIMATE, which keeps
// plan selection (and therefore output bytes) deterministic across runs.

#include <fftw3.h>

#include <memory>

#include "qce/grid.hpp"

namespace qce {

class FourierTransform {
 public:
  explicit FourierTransform(PeriodicGrid grid)
      : grid_(grid),
        count_(grid.point_count()),
        scale_(1.0 / std::sqrt(static_cast<double>(grid.point_count()))),
        buf_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * grid.point_count())),
             &fftw_free) {
    if (!buf_) throw std::bad_alloc();
    if (grid_.dim == 1) {
      fwd_ = fftw_plan_dft_1d(grid_.n, buf_.get(), buf_.get(), FFTW_FORWARD, FFTW_ESTIMATE);
      bwd_ = fftw_plan_dft_1d(grid_.n, buf_.get(), buf_.get(), FFTW_BACKWARD, FFTW_ESTIMATE);
    } else {
      fwd_ = fftw_plan_dft_2d(grid_.n, grid_.n, buf_.get(), buf_.get(), FFTW_FORWARD,
                              FFTW_ESTIMATE);
      bwd_ = fftw_plan_dft_2d(grid_.n, grid_.n, buf_.get(), buf_.get(), FFTW_BACKWARD,
                              FFTW_ESTIMATE);
    }
    if (!fwd_ || !bwd_) throw std::runtime_error("fftw plan creation failed");
  }

  ~FourierTransform() {
    if (fwd_) fftw_destroy_plan(fwd_);
    if (bwd_) fftw_destroy_plan(bwd_);
  }
  FourierTransform(const FourierTransform&) = delete;
  FourierTransform& operator=(const FourierTransform&) = delete;

  const PeriodicGrid& grid() const { return grid_; }

  WaveField forward(const WaveField& f) const { return run(f, fwd_); }
  WaveField inverse(const WaveField& f) const { return run(f, bwd_); }

  // Fourier-space coefficient index for integer mode k in the symmetric band.
  std::size_t mode_index(IVec2 k) const {
    detail::check_band(grid_, k[0], "mode");
    if (grid_.dim == 1) return static_cast<std::size_t>(grid_.wrap(k[0]));
    detail::check_band(grid_, k[1], "mode");
    return grid_.id(k[0], k[1]);
  }

  // Integer mode (symmetric band) of coefficient index t along one axis.
  long mode_of(long t) const { return t <= grid_.band_hi() ? t : t - grid_.n; }

 private:
  WaveField run(const WaveField& f, fftw_plan plan) const {
    if (f.grid != grid_) throw std::invalid_argument("field grid does not match transform");
    auto* b = reinterpret_cast<Complex*>(buf_.get());
    std::copy(f.values.begin(), f.values.end(), b);
    fftw_execute(plan);
    WaveField out(grid_);
    for (std::size_t i = 0; i < count_; ++i) out.values[i] = b[i] * scale_;
    return out;
  }

  PeriodicGrid grid_;
  std::size_t count_;
  double scale_;
  std::unique_ptr<fftw_complex, decltype(&fftw_free)> buf_;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

// One-shot conveniences for tests and small jobs; hot paths hold a transform.
inline WaveField forward_transform(const WaveField& f) {
  return FourierTransform(f.grid).forward(f);
}
inline WaveField inverse_transform(const WaveField& f) {
  return FourierTransform(f.grid).inverse(f);
}

// Exact derivative of a band-limited field along unit vector v: multiply mode k
// by i*2*pi*(v.k) in Fourier space.
inline WaveField spectral_directional_derivative(const FourierTransform& ft, const WaveField& f,
                                                 Vec2 v) {
  WaveField hat = ft.forward(f);
  const PeriodicGrid& g = f.grid;
  const long n = g.n;
  if (g.dim == 1) {
    for (long t = 0; t < n; ++t)
      hat.values[t] *= Complex{0.0, two_pi * v[0] * static_cast<double>(ft.mode_of(t))};
  } else {
    for (long t1 = 0; t1 < n; ++t1)
      for (long t2 = 0; t2 < n; ++t2) {
        const double vk = v[0] * static_cast<double>(ft.mode_of(t1)) +
                          v[1] * static_cast<double>(ft.mode_of(t2));
        hat.values[g.id(t1, t2)] *= Complex{0.0, two_pi * vk};
      }
  }
  return ft.inverse(hat);
}

}  // namespace qce

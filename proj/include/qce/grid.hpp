#pragma once

// Periodic discretization of the unit circle [0,1) and the unit torus [0,1)^2,
// complex/real fields on those grids, finite-difference directional derivatives
// with saturation accounting, and masked log-averages.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace qce {

using Complex = std::complex<double>;
using IVec2 = std::array<long, 2>;   // integer lattice vector (2nd entry unused in 1D)
using Vec2 = std::array<double, 2>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

struct band_limit_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct degenerate_average_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Uniform periodic grid on the unit circle (dim 1) or unit torus (dim 2).
// Point j (or (j1,j2)) sits at coordinate j/N; all index arithmetic is modular.
struct PeriodicGrid {
  int dim = 1;
  int n = 0;  // points per axis

  static PeriodicGrid line(int n_points) {
    if (n_points < 2) throw std::invalid_argument("grid needs at least 2 points per axis");
    return {1, n_points};
  }
  static PeriodicGrid torus(int n_points) {
    if (n_points < 2) throw std::invalid_argument("grid needs at least 2 points per axis");
    return {2, n_points};
  }

  std::size_t point_count() const {
    return dim == 1 ? static_cast<std::size_t>(n)
                    : static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  }
  double spacing() const { return 1.0 / n; }

  long wrap(long i) const {
    long r = i % n;
    return r < 0 ? r + n : r;
  }
  std::size_t id(long j1, long j2 = 0) const {
    return dim == 1 ? static_cast<std::size_t>(wrap(j1))
                    : static_cast<std::size_t>(wrap(j1)) * n + static_cast<std::size_t>(wrap(j2));
  }
  // symmetric Fourier band per axis: [-floor(N/2), ceil(N/2)-1]
  long band_lo() const { return -(static_cast<long>(n) / 2); }
  long band_hi() const { return (static_cast<long>(n) + 1) / 2 - 1; }

  friend bool operator==(const PeriodicGrid&, const PeriodicGrid&) = default;
};

// Complex field sampled on a periodic grid (states and Heisenberg fields).
struct WaveField {
  PeriodicGrid grid;
  std::vector<Complex> values;

  explicit WaveField(PeriodicGrid g) : grid(g), values(g.point_count()) {}
  WaveField(PeriodicGrid g, std::vector<Complex> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.point_count())
      throw std::invalid_argument("field length does not match grid");
  }
};

// Real field with a validity mask; masked points never enter averages and are
// always counted, never silently dropped.
struct RealField {
  PeriodicGrid grid;
  std::vector<double> values;
  std::vector<unsigned char> valid;

  explicit RealField(PeriodicGrid g)
      : grid(g), values(g.point_count(), 0.0), valid(g.point_count(), 1) {}
};

// Discrete l2 norm with the 1/N^dim measure, so the flat state has norm 1.
inline double l2_norm(const WaveField& f) {
  double s = 0.0;
  for (const Complex& z : f.values) s += std::norm(z);
  return std::sqrt(s / static_cast<double>(f.grid.point_count()));
}

inline double max_abs(const WaveField& f) {
  double m = 0.0;
  for (const Complex& z : f.values) m = std::max(m, std::abs(z));
  return m;
}

inline double max_abs_diff(const WaveField& a, const WaveField& b) {
  if (a.grid != b.grid) throw std::invalid_argument("grid mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

inline RealField real_part(const WaveField& f) {
  RealField r(f.grid);
  for (std::size_t i = 0; i < f.values.size(); ++i) r.values[i] = f.values[i].real();
  return r;
}

// The p = 0 momentum eigenstate: every sample equals 1.
inline WaveField flat_state(PeriodicGrid grid) {
  WaveField f(grid);
  std::fill(f.values.begin(), f.values.end(), Complex{1.0, 0.0});
  return f;
}

namespace detail {

inline void check_band(const PeriodicGrid& g, long k, const char* what) {
  if (k < g.band_lo() || k > g.band_hi())
    throw band_limit_error(std::string(what) + " outside the representable Fourier band");
}

// exp(2*pi*i*t/N) via a shared phase convention (t reduced mod N by the caller)
inline Complex unit_root(long t, long n) {
  return std::polar(1.0, two_pi * static_cast<double>(t) / static_cast<double>(n));
}

}  // namespace detail

// values[j] = exp(2*pi*i k.j / N); k must lie in the symmetric band per axis.
inline WaveField plane_wave(PeriodicGrid grid, IVec2 k) {
  detail::check_band(grid, k[0], "wavevector");
  if (grid.dim == 2) detail::check_band(grid, k[1], "wavevector");
  WaveField f(grid);
  const long n = grid.n;
  if (grid.dim == 1) {
    for (long j = 0; j < n; ++j) f.values[j] = detail::unit_root(grid.wrap(k[0] * j), n);
  } else {
    for (long j1 = 0; j1 < n; ++j1)
      for (long j2 = 0; j2 < n; ++j2)
        f.values[grid.id(j1, j2)] = detail::unit_root(grid.wrap(k[0] * j1 + k[1] * j2), n);
  }
  return f;
}

inline WaveField plane_wave(PeriodicGrid grid, long k) { return plane_wave(grid, IVec2{k, 0}); }

struct DerivativeResult {
  RealField derivative;
  double saturation_fraction = 0.0;
};

namespace detail {

inline long step_norm_sq(const IVec2& s, int dim) {
  return dim == 1 ? s[0] * s[0] : s[0] * s[0] + s[1] * s[1];
}

}  // namespace detail

// Central difference of f along the lattice offset `step` (axis vectors in the
// presets; any nonzero integer offset is accepted). The physical step is
// h = |step|/N and the derivative is taken along the unit vector step/|step|.
//
// saturation_fraction counts points whose raw difference |f(x+h)-f(x-h)|
// reaches `saturation_ratio` times the field's dynamic range (max-min), the
// signal that the stencil no longer resolves the field. A constant field has
// zero dynamic range and reports zero saturation.
inline DerivativeResult directional_derivative(const RealField& f, IVec2 step,
                                               double saturation_ratio) {
  const PeriodicGrid& g = f.grid;
  const long nsq = detail::step_norm_sq(step, g.dim);
  if (nsq == 0) throw std::invalid_argument("zero direction");
  if (g.dim == 1) step[1] = 0;

  RealField d(g);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    if (!f.valid[i]) continue;
    lo = std::min(lo, f.values[i]);
    hi = std::max(hi, f.values[i]);
  }
  const bool have_range = hi > lo;
  const double range = have_range ? hi - lo : 0.0;
  const double threshold = saturation_ratio * range;
  const double h = std::sqrt(static_cast<double>(nsq)) * g.spacing();

  std::size_t evaluated = 0;
  std::size_t saturated = 0;
  const long n = g.n;
  auto visit = [&](std::size_t at, std::size_t fwd, std::size_t bwd) {
    if (!f.valid[at] || !f.valid[fwd] || !f.valid[bwd]) {
      d.valid[at] = 0;
      return;
    }
    const double diff = f.values[fwd] - f.values[bwd];
    d.values[at] = diff / (2.0 * h);
    ++evaluated;
    if (have_range && std::abs(diff) >= threshold) ++saturated;
  };
  if (g.dim == 1) {
    for (long j = 0; j < n; ++j) visit(g.id(j), g.id(j + step[0]), g.id(j - step[0]));
  } else {
    for (long j1 = 0; j1 < n; ++j1)
      for (long j2 = 0; j2 < n; ++j2)
        visit(g.id(j1, j2), g.id(j1 + step[0], j2 + step[1]), g.id(j1 - step[0], j2 - step[1]));
  }

  DerivativeResult out{std::move(d), 0.0};
  if (have_range && evaluated > 0)
    out.saturation_fraction = static_cast<double>(saturated) / static_cast<double>(evaluated);
  return out;
}

inline DerivativeResult directional_derivative(const WaveField& f, IVec2 step,
                                               double saturation_ratio) {
  return directional_derivative(real_part(f), step, saturation_ratio);
}

struct MaskedAverage {
  double mean = 0.0;
  std::size_t excluded = 0;
};

// Mean of log|f| over points with |f| above rel_floor times the field's max
// magnitude. Excluded = below-floor points plus already-masked points. All
// points excluded is an error, never a NaN.
inline MaskedAverage masked_log_average(const RealField& f, double rel_floor) {
  double peak = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i)
    if (f.valid[i]) peak = std::max(peak, std::abs(f.values[i]));
  const double floor = rel_floor * peak;

  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    if (!f.valid[i]) continue;
    const double a = std::abs(f.values[i]);
    if (a > floor && a > 0.0) {
      sum += std::log(a);
      ++used;
    }
  }
  if (used == 0) throw degenerate_average_error("all points fell below the log floor");
  return {sum / static_cast<double>(used), f.values.size() - used};
}

}  // namespace qce

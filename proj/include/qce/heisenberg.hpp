#pragma once

// Heisenberg-evolved observable fields gamma_n = U^-n X U^n psi0 with cached
// forward states. Computing gamma_0..gamma_N costs exactly N forward steps
// (cached, never recomputed) plus sum_n n = N(N+1)/2 inverse steps; the
// optional per-step roundtrip guard is accounted separately.

#include <optional>

#include "qce/floquet.hpp"

namespace qce {

struct unitarity_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// X = scale * sin(2 pi l.x), a pointwise multiplication sharing the position
// operator's generalized eigenvectors. l must be nonzero.
struct ObservableSpec {
  IVec2 l{1, 0};
  double scale = 1.0;
};

inline WaveField apply_observable(const ObservableSpec& obs, const WaveField& f) {
  const PeriodicGrid& g = f.grid;
  if (obs.l[0] == 0 && (g.dim == 1 || obs.l[1] == 0))
    throw std::invalid_argument("observable wavevector l must be nonzero");
  WaveField out(g);
  if (g.dim == 1) {
    for (long j = 0; j < g.n; ++j)
      out.values[j] = f.values[j] * (obs.scale * std::sin(two_pi * obs.l[0] * j / g.n));
  } else {
    for (long j1 = 0; j1 < g.n; ++j1)
      for (long j2 = 0; j2 < g.n; ++j2) {
        const std::size_t at = g.id(j1, j2);
        const double lx = static_cast<double>(obs.l[0] * j1 + obs.l[1] * j2) / g.n;
        out.values[at] = f.values[at] * (obs.scale * std::sin(two_pi * lx));
      }
  }
  return out;
}

class HeisenbergRun {
 public:
  HeisenbergRun(FloquetSpec spec, ObservableSpec obs)
      : op_(std::move(spec)), obs_(obs), states_{flat_state(op_.spec().grid)} {}

  HeisenbergRun(FloquetSpec spec, ObservableSpec obs, WaveField psi0)
      : op_(std::move(spec)), obs_(obs), states_{std::move(psi0)} {
    if (states_.front().grid != op_.spec().grid)
      throw std::invalid_argument("initial state grid does not match operator");
  }

  // When set, gamma() verifies the n-step roundtrip first and throws
  // unitarity_error beyond the bound.
  void set_unitarity_guard(std::optional<double> eps) { guard_eps_ = eps; }

  const FloquetOperator& op() const { return op_; }
  const ObservableSpec& observable() const { return obs_; }

  const WaveField& forward_state(int n) {
    if (n < 0) throw std::invalid_argument("n must be >= 0");
    while (static_cast<int>(states_.size()) <= n) states_.push_back(op_.apply(states_.back()));
    return states_[static_cast<std::size_t>(n)];
  }

  // Max-norm of (U^-n U^n - 1) psi0, reusing the cached forward state.
  double roundtrip_error(int n) {
    WaveField w = forward_state(n);
    for (int i = 0; i < n; ++i) w = op_.apply_inverse(w);
    return max_abs_diff(w, states_.front());
  }

  // gamma_n(x): apply the observable to the cached U^n psi0, then evolve n
  // steps backward. gamma_0 = X psi0.
  WaveField gamma(int n) {
    if (guard_eps_) {
      const double err = roundtrip_error(n);
      if (err > *guard_eps_)
        throw unitarity_error("roundtrip error " + std::to_string(err) + " at n=" +
                              std::to_string(n) + " exceeds the configured bound");
    }
    WaveField g = apply_observable(obs_, forward_state(n));
    for (int i = 0; i < n; ++i) g = op_.apply_inverse(g);
    return g;
  }

 private:
  FloquetOperator op_;
  ObservableSpec obs_;
  std::vector<WaveField> states_;  // states_[n] = U^n psi0, immutable once computed
  std::optional<double> guard_eps_;
};

}  // namespace qce

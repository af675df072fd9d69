#pragma once

// One-period evolution operators for kicked systems on S^1 and T^2: spectral
// free evolution composed with a multiplicative potential kick (rotators) or an
// exact substitution-permutation kick (torus automorphisms), plus inverses and
// the roundtrip precision check.

#include <cstdint>
#include <variant>

#include "qce/fourier.hpp"
#include "qce/grid.hpp"

namespace qce {

enum class KineticVariant { RotorQuadratic, RotorCosine, CatQuadratic };

// time_step is tau (rotators) or T (torus); 0 disables the free factor
// entirely so a kick-only operator is an exact index permutation.
struct KineticSpec {
  KineticVariant variant = KineticVariant::RotorQuadratic;
  double time_step = 1.0;
};

// Free-evolution eigenvalue H0 on the integer Fourier mode k.
inline double kinetic_eigenvalue(KineticVariant variant, IVec2 k) {
  switch (variant) {
    case KineticVariant::RotorQuadratic:  // H0 = -(1/2pi) d^2/dx^2
      return two_pi * static_cast<double>(k[0] * k[0]);
    case KineticVariant::RotorCosine:  // H0 = -2pi cos((1/2pi i) d/dx)
      return -two_pi * std::cos(static_cast<double>(k[0]));
    case KineticVariant::CatQuadratic:  // H0 = p^2/2 with p = 2pi k
      return 0.5 * two_pi * two_pi * static_cast<double>(k[0] * k[0] + k[1] * k[1]);
  }
  throw std::logic_error("unreachable");
}

// 2x2 integer matrix acting on configuration space.
struct IntMat2 {
  long long a = 1, b = 0, c = 0, d = 1;

  long long det() const { return a * d - b * c; }
  long long trace() const { return a + d; }
  IntMat2 inverse_unimodular() const {
    if (det() != 1) throw std::invalid_argument("matrix determinant must be 1");
    return {d, -b, -c, a};
  }
  IVec2 apply(IVec2 v) const { return {a * v[0] + b * v[1], c * v[0] + d * v[1]}; }
  IntMat2 operator*(const IntMat2& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
  }
  friend bool operator==(const IntMat2&, const IntMat2&) = default;
};

struct MultiplicativeKick {
  double strength = 0.0;  // V(x) = strength * cos(2 pi x)
};

struct SubstitutionKick {
  IntMat2 m;  // det 1 so the induced grid map is a bijection
};

using KickSpec = std::variant<MultiplicativeKick, SubstitutionKick>;

enum class CompositionOrder { KickThenFree, FreeThenKick };

struct FloquetSpec {
  PeriodicGrid grid;
  KineticSpec kinetic;
  KickSpec kick;
  CompositionOrder order = CompositionOrder::KickThenFree;
};

namespace detail {

inline void validate(const FloquetSpec& spec) {
  const int kin_dim = spec.kinetic.variant == KineticVariant::CatQuadratic ? 2 : 1;
  if (spec.grid.dim != kin_dim)
    throw std::invalid_argument("kinetic term dimensionality does not match grid");
  if (spec.kinetic.time_step < 0.0) throw std::invalid_argument("time step must be >= 0");
  if (std::holds_alternative<MultiplicativeKick>(spec.kick)) {
    if (spec.grid.dim != 1)
      throw std::invalid_argument("multiplicative kick is defined on the circle");
  } else {
    if (spec.grid.dim != 2)
      throw std::invalid_argument("substitution kick is defined on the torus");
    if (std::get<SubstitutionKick>(spec.kick).m.det() != 1)
      throw std::invalid_argument("substitution matrix must have determinant 1");
  }
}

}  // namespace detail

// Precomputes phase tables / permutation tables once; apply_* are pure maps on
// fields. A single operator instance is not safe for concurrent use (it owns
// FFT scratch buffers); independent trajectories use independent instances.
class FloquetOperator {
 public:
  explicit FloquetOperator(FloquetSpec spec) : spec_(std::move(spec)), fft_(spec_.grid) {
    detail::validate(spec_);
    build_kinetic_phases();
    build_kick();
  }

  const FloquetSpec& spec() const { return spec_; }

  // step counters, used to verify caching contracts
  std::size_t forward_steps() const { return forward_steps_; }
  std::size_t inverse_steps() const { return inverse_steps_; }

  WaveField apply_free(const WaveField& f) const { return free_phase(f, false); }
  WaveField apply_free_inverse(const WaveField& f) const { return free_phase(f, true); }

  WaveField apply_kick(const WaveField& f) const { return kick(f, false); }
  WaveField apply_kick_inverse(const WaveField& f) const { return kick(f, true); }

  WaveField apply(const WaveField& f) const {
    ++forward_steps_;
    return spec_.order == CompositionOrder::KickThenFree ? apply_free(apply_kick(f))
                                                         : apply_kick(apply_free(f));
  }

  WaveField apply_inverse(const WaveField& f) const {
    ++inverse_steps_;
    return spec_.order == CompositionOrder::KickThenFree
               ? apply_kick_inverse(apply_free_inverse(f))
               : apply_free_inverse(apply_kick_inverse(f));
  }

  const FourierTransform& transform() const { return fft_; }

 private:
  void build_kinetic_phases() {
    if (spec_.kinetic.time_step == 0.0) return;  // free factor disabled
    const PeriodicGrid& g = spec_.grid;
    kinetic_phase_.resize(g.point_count());
    const double t = spec_.kinetic.time_step;
    if (g.dim == 1) {
      for (long i = 0; i < g.n; ++i)
        kinetic_phase_[i] =
            std::polar(1.0, -t * kinetic_eigenvalue(spec_.kinetic.variant, {fft_.mode_of(i), 0}));
    } else {
      for (long i1 = 0; i1 < g.n; ++i1)
        for (long i2 = 0; i2 < g.n; ++i2)
          kinetic_phase_[g.id(i1, i2)] = std::polar(
              1.0, -t * kinetic_eigenvalue(spec_.kinetic.variant,
                                           {fft_.mode_of(i1), fft_.mode_of(i2)}));
    }
  }

  void build_kick() {
    const PeriodicGrid& g = spec_.grid;
    if (const auto* mk = std::get_if<MultiplicativeKick>(&spec_.kick)) {
      kick_phase_.resize(g.point_count());
      for (long j = 0; j < g.n; ++j)
        kick_phase_[j] = std::polar(1.0, -mk->strength * std::cos(two_pi * j / g.n));
      return;
    }
    // substitution: new(j) = old(M^-1 j mod N); inverse uses M in place of M^-1
    const IntMat2 m = std::get<SubstitutionKick>(spec_.kick).m;
    const IntMat2 minv = m.inverse_unimodular();
    perm_fwd_.resize(g.point_count());
    perm_inv_.resize(g.point_count());
    for (long j1 = 0; j1 < g.n; ++j1)
      for (long j2 = 0; j2 < g.n; ++j2) {
        const std::size_t at = g.id(j1, j2);
        perm_fwd_[at] = static_cast<std::uint32_t>(
            g.id(minv.a * j1 + minv.b * j2, minv.c * j1 + minv.d * j2));
        perm_inv_[at] =
            static_cast<std::uint32_t>(g.id(m.a * j1 + m.b * j2, m.c * j1 + m.d * j2));
      }
  }

  WaveField free_phase(const WaveField& f, bool inverse) const {
    if (spec_.kinetic.time_step == 0.0) return f;
    WaveField hat = fft_.forward(f);
    if (inverse) {
      for (std::size_t i = 0; i < hat.values.size(); ++i)
        hat.values[i] *= std::conj(kinetic_phase_[i]);
    } else {
      for (std::size_t i = 0; i < hat.values.size(); ++i) hat.values[i] *= kinetic_phase_[i];
    }
    return fft_.inverse(hat);
  }

  WaveField kick(const WaveField& f, bool inverse) const {
    if (f.grid != spec_.grid) throw std::invalid_argument("field grid does not match operator");
    WaveField out(spec_.grid);
    if (!kick_phase_.empty()) {
      if (inverse) {
        for (std::size_t i = 0; i < out.values.size(); ++i)
          out.values[i] = f.values[i] * std::conj(kick_phase_[i]);
      } else {
        for (std::size_t i = 0; i < out.values.size(); ++i)
          out.values[i] = f.values[i] * kick_phase_[i];
      }
      return out;
    }
    const auto& perm = inverse ? perm_inv_ : perm_fwd_;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = f.values[perm[i]];
    return out;
  }

  FloquetSpec spec_;
  FourierTransform fft_;
  std::vector<Complex> kinetic_phase_;
  std::vector<Complex> kick_phase_;
  std::vector<std::uint32_t> perm_fwd_;
  std::vector<std::uint32_t> perm_inv_;
  mutable std::size_t forward_steps_ = 0;
  mutable std::size_t inverse_steps_ = 0;
};

// Max-norm of (U^-n U^n - 1) f, the propagation precision check.
inline double unitarity_roundtrip_error(const FloquetOperator& op, const WaveField& f, int n) {
  if (n < 0) throw std::invalid_argument("n must be >= 0");
  WaveField w = f;
  for (int i = 0; i < n; ++i) w = op.apply(w);
  for (int i = 0; i < n; ++i) w = op.apply_inverse(w);
  return max_abs_diff(w, f);
}

}  // namespace qce

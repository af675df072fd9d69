#pragma once

// Exact reference results for the torus-automorphism system: the eigenvalue
// exponent log(mu1), exact big-integer orbits M^n l, accumulated free-flight
// phases, and the closed-form Heisenberg derivative field used to
// cross-validate the numerical pipeline.
//
// For a flat initial state the Heisenberg field has the closed form
//   gamma_n(x) = e^{i A(n)} sin(2 pi (M^n l).x),
//   A(n) = (T/2) (2 pi)^2 sum_{k=0}^{n-1} |M^k l|^2,
// so Re v.d gamma_n = cos(A(n)) * 2 pi (v.M^n l) * cos(2 pi (M^n l).x).
// Orbit sums grow like mu1^(2n); phases are reduced mod 2 pi in extended
// precision on the exact integers before any double-precision trig.

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "qce/grid.hpp"
#include "qce/floquet.hpp"

namespace qce {

using BigInt = boost::multiprecision::cpp_int;
using BigFloat = boost::multiprecision::cpp_bin_float_100;

struct BigVec2 {
  BigInt x, y;
};

// Hyperbolic unimodular matrix with its spectral data. det = 1 and |trace| > 2
// force real eigenvalues mu1 > 1 > mu2 = 1/mu1, both irrational.
struct CatMatrix {
  IntMat2 m;

  explicit CatMatrix(IntMat2 mat) : m(mat) {
    if (m.det() != 1) throw std::invalid_argument("cat matrix must have determinant 1");
    if (std::abs(m.trace()) <= 2) throw std::invalid_argument("cat matrix must be hyperbolic");
  }

  double discriminant_sqrt() const {
    const double t = static_cast<double>(m.trace());
    return std::sqrt(t * t - 4.0);
  }
  double mu1() const { return 0.5 * (static_cast<double>(m.trace()) + discriminant_sqrt()); }
  double mu2() const { return 0.5 * (static_cast<double>(m.trace()) - discriminant_sqrt()); }
  double log_mu1() const { return std::log(std::abs(mu1())); }
  double log_mu2() const { return -log_mu1(); }  // mu1 mu2 = det = 1

  // Unstable eigendirection. b and c cannot both vanish (that would make the
  // matrix diagonal with integer eigenvalues, excluded by hyperbolicity+det 1).
  Vec2 unstable_eigenvector() const {
    if (m.b != 0) return {static_cast<double>(m.b), mu1() - static_cast<double>(m.a)};
    return {mu1() - static_cast<double>(m.d), static_cast<double>(m.c)};
  }
  // The one direction (up to scale) that reaches the log(mu2) branch; its
  // components are quadratic irrationals, so no rational v is ever orthogonal
  // to the unstable eigendirection.
  Vec2 orthogonal_to_unstable() const {
    const Vec2 e = unstable_eigenvector();
    return {-e[1], e[0]};
  }
};

inline BigVec2 apply(const IntMat2& m, const BigVec2& v) {
  return {m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y};
}

// l, M l, M^2 l, ..., M^n l as exact integers.
inline std::vector<BigVec2> orbit(const CatMatrix& cat, IVec2 l, int n) {
  if (n < 0) throw std::invalid_argument("n must be >= 0");
  std::vector<BigVec2> out;
  out.reserve(n + 1);
  out.push_back({BigInt(l[0]), BigInt(l[1])});
  for (int k = 0; k < n; ++k) out.push_back(apply(cat.m, out.back()));
  return out;
}

namespace detail {

inline double log_big(const BigInt& v) {
  return static_cast<double>(log(BigFloat(abs(v))));
}

inline BigInt dot(const BigVec2& a, const BigVec2& b) { return a.x * b.x + a.y * b.y; }

// frac(pi * T * S) -> [0,1), computed in extended precision so the reduction
// stays exact for orbit sums far beyond double range.
inline double frac_pi_ts(double T, const BigInt& s) {
  static const BigFloat big_pi = 4 * atan(BigFloat(1));
  BigFloat u = big_pi * BigFloat(T) * BigFloat(s);
  u -= floor(u);
  double f = static_cast<double>(u);
  if (f < 0.0) f += 1.0;
  if (f >= 1.0) f -= 1.0;
  return f;
}

}  // namespace detail

// Accumulated free-flight phase data at step n for a flat initial state:
// theta_n(+-l, x) = A +- 2 pi (M^n l).x with the common sum A reduced mod 2 pi.
struct PhaseSum {
  int n = 0;
  std::vector<BigVec2> orbit;  // M^k l for k = 0..n
  double phase_sum = 0.0;      // A(n) mod 2 pi

  double theta_plus(Vec2 x) const { return phase_sum + spatial(x); }
  double theta_minus(Vec2 x) const { return phase_sum - spatial(x); }
  // cos(A): the n-dependent global factor carried by the whole field
  double time_phase() const { return std::cos(phase_sum); }

 private:
  double spatial(Vec2 x) const {
    const BigVec2& m = orbit.back();
    return two_pi * (static_cast<double>(BigFloat(m.x)) * x[0] +
                     static_cast<double>(BigFloat(m.y)) * x[1]);
  }
};

inline PhaseSum phase_sum(const CatMatrix& cat, IVec2 l, double time_step, int n) {
  PhaseSum ps;
  ps.n = n;
  ps.orbit = orbit(cat, l, n);
  BigInt s = 0;
  for (int k = 0; k < n; ++k) s += detail::dot(ps.orbit[k], ps.orbit[k]);
  // A = (T/2)(2 pi)^2 S = 2 pi * (pi T S)
  ps.phase_sum = two_pi * detail::frac_pi_ts(time_step, s);
  return ps;
}

// Exact characteristic exponent from the eigenvalues: log(mu1) for generic v,
// log(mu2) iff v is orthogonal to the unstable eigendirection (reachable only
// through the closed-form irrational vector; a rational v never is).
inline double exact_exponent(const CatMatrix& cat, Vec2 v, IVec2 l, double angular_tol = 1e-9) {
  if (l[0] == 0 && l[1] == 0) throw std::invalid_argument("l must be nonzero");
  const double vn = std::hypot(v[0], v[1]);
  if (vn == 0.0) throw std::invalid_argument("direction v must be nonzero");
  const Vec2 e = cat.unstable_eigenvector();
  const double en = std::hypot(e[0], e[1]);
  const double cosang = (v[0] * e[0] + v[1] * e[1]) / (vn * en);
  return std::abs(cosang) < angular_tol ? cat.log_mu2() : cat.log_mu1();
}

// Finite-n sequence (1/n) log|v.M^n l| for integer v, in exact arithmetic;
// entries where v.M^n l = 0 are NaN (possible only for non-generic v).
inline std::vector<double> finite_exponent_sequence(const CatMatrix& cat, IVec2 v, IVec2 l,
                                                    int n_max) {
  const auto orb = orbit(cat, l, n_max);
  const BigVec2 vv{BigInt(v[0]), BigInt(v[1])};
  std::vector<double> seq;
  seq.reserve(n_max);
  for (int n = 1; n <= n_max; ++n) {
    const BigInt d = detail::dot(vv, orb[n]);
    seq.push_back(d == 0 ? std::numeric_limits<double>::quiet_NaN()
                         : detail::log_big(d) / n);
  }
  return seq;
}

struct AnalyticDerivative {
  RealField field;         // closed-form Re v.d gamma_n sampled on the grid
  double time_phase;       // cos(A(n)); the n-dependent factor inside `field`
  double prefactor;        // 2 pi (v.M^n l), signed
  PhaseSum phases;
};

// Closed-form Re v.d gamma_n for p = 0 on the given grid. The returned field
// carries the full n-dependent time phase; growth-ratio checks against
// |v.M^(n+1) l| / |v.M^n l| normalize it out via `time_phase`. The absolute
// scale is defined up to one global constant shared by every x and n.
inline AnalyticDerivative analytic_derivative_field(const CatMatrix& cat, IVec2 l, Vec2 v,
                                                    double time_step, int n, PeriodicGrid grid) {
  if (grid.dim != 2) throw std::invalid_argument("analytic field lives on the torus");
  if (l[0] == 0 && l[1] == 0) throw std::invalid_argument("l must be nonzero");

  PhaseSum ps = phase_sum(cat, l, time_step, n);
  const BigVec2& m = ps.orbit.back();
  const double vm =
      static_cast<double>(BigFloat(m.x) * v[0] + BigFloat(m.y) * v[1]);
  const double pref = two_pi * vm;
  const double tph = ps.time_phase();

  const long N = grid.n;
  long m1 = static_cast<long>(m.x % N);
  long m2 = static_cast<long>(m.y % N);
  if (m1 < 0) m1 += N;
  if (m2 < 0) m2 += N;
  std::vector<double> cos_table(N);
  for (long t = 0; t < N; ++t) cos_table[t] = std::cos(two_pi * t / N);

  RealField field(grid);
  for (long j1 = 0; j1 < N; ++j1)
    for (long j2 = 0; j2 < N; ++j2)
      field.values[grid.id(j1, j2)] =
          pref * tph * cos_table[(m1 * j1 + m2 * j2) % N];

  return {std::move(field), tph, pref, std::move(ps)};
}

}  // namespace qce

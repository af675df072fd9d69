#pragma once

// Growth-index traces and the characteristic-exponent estimate: per-step
// masked averages of D_n(x) = log|Re v.d gamma_n(x)|, guard-controlled halting,
// and the constrained shared-asymptote least-squares fit y(n) = lambda + c_v/n.

#include <span>

#include "qce/heisenberg.hpp"

namespace qce {

struct underdetermined_fit_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StepGuards {
  double saturation_ratio = 0.5;   // ratio >= 1 never halts on saturation
  bool halt_on_saturation = true;  // record the fraction but keep going when false
  double unitarity_eps = 1e-8;
  double log_floor = 1e-12;  // relative floor for masked log averages
};

enum class HaltReason { None, Saturation, Unitarity, DegenerateAverage };

inline const char* to_string(HaltReason r) {
  switch (r) {
    case HaltReason::None: return "none";
    case HaltReason::Saturation: return "saturation";
    case HaltReason::Unitarity: return "unitarity";
    case HaltReason::DegenerateAverage: return "degenerate_average";
  }
  return "unknown";
}

struct TraceRecord {
  int n = 0;
  double mean_Dn = 0.0;      // masked average of log|Re v.d gamma_n|
  double mean_growth = 0.0;  // (1/n) <D_n - D_0> on the joint mask; NaN at n=0
  std::size_t excluded = 0;  // points outside the mean_Dn mask
  double saturation_fraction = 0.0;
  double roundtrip_error = 0.0;
  bool halted = false;
  HaltReason reason = HaltReason::None;
};

struct DirectionTrace {
  IVec2 direction{1, 0};
  std::vector<TraceRecord> records;
};

namespace detail {

struct ReferenceDerivative {
  std::vector<double> log_abs;       // log|d0| where usable
  std::vector<unsigned char> usable; // valid and above the floor
};

inline ReferenceDerivative reference_of(const RealField& d, double rel_floor) {
  double peak = 0.0;
  for (std::size_t i = 0; i < d.values.size(); ++i)
    if (d.valid[i]) peak = std::max(peak, std::abs(d.values[i]));
  const double floor = rel_floor * peak;
  ReferenceDerivative ref;
  ref.log_abs.resize(d.values.size(), 0.0);
  ref.usable.resize(d.values.size(), 0);
  for (std::size_t i = 0; i < d.values.size(); ++i) {
    if (!d.valid[i]) continue;
    const double a = std::abs(d.values[i]);
    if (a > floor && a > 0.0) {
      ref.log_abs[i] = std::log(a);
      ref.usable[i] = 1;
    }
  }
  return ref;
}

// Mean of log|d_n| - log|d_0| over points usable at both steps.
inline std::optional<double> joint_growth(const RealField& d, const ReferenceDerivative& ref,
                                          double rel_floor, int n) {
  double peak = 0.0;
  for (std::size_t i = 0; i < d.values.size(); ++i)
    if (d.valid[i]) peak = std::max(peak, std::abs(d.values[i]));
  const double floor = rel_floor * peak;
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < d.values.size(); ++i) {
    if (!d.valid[i] || !ref.usable[i]) continue;
    const double a = std::abs(d.values[i]);
    if (a > floor && a > 0.0) {
      sum += std::log(a) - ref.log_abs[i];
      ++used;
    }
  }
  if (used == 0) return std::nullopt;
  return sum / static_cast<double>(used) / static_cast<double>(n);
}

}  // namespace detail

// Runs the trace for every direction over one shared gamma_n sequence.
// Halts (marking the current records) when any direction saturates at the
// configured ratio, when the roundtrip check fails, or when an average
// degenerates; the halted records are the trace's final entries.
inline std::vector<DirectionTrace> run_trace(HeisenbergRun& run, std::span<const IVec2> directions,
                                             int n_max, const StepGuards& guards) {
  if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
  if (directions.empty()) throw std::invalid_argument("at least one direction required");

  std::vector<DirectionTrace> traces(directions.size());
  for (std::size_t d = 0; d < directions.size(); ++d) traces[d].direction = directions[d];
  std::vector<detail::ReferenceDerivative> refs(directions.size());

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int n = 0; n <= n_max; ++n) {
    const double rt = n == 0 ? 0.0 : run.roundtrip_error(n);
    const WaveField gamma_n = run.gamma(n);
    const RealField re = real_part(gamma_n);

    bool any_saturated = false;
    bool degenerate = false;
    for (std::size_t d = 0; d < directions.size(); ++d) {
      auto [deriv, sat] = directional_derivative(re, directions[d], guards.saturation_ratio);
      TraceRecord rec;
      rec.n = n;
      rec.saturation_fraction = sat;
      rec.roundtrip_error = rt;
      rec.mean_growth = nan;
      try {
        auto avg = masked_log_average(deriv, guards.log_floor);
        rec.mean_Dn = avg.mean;
        rec.excluded = avg.excluded;
      } catch (const degenerate_average_error&) {
        rec.mean_Dn = nan;
        rec.excluded = deriv.values.size();
        degenerate = true;
      }
      if (n == 0) {
        refs[d] = detail::reference_of(deriv, guards.log_floor);
      } else if (!degenerate) {
        auto g = detail::joint_growth(deriv, refs[d], guards.log_floor, n);
        if (g)
          rec.mean_growth = *g;
        else
          degenerate = true;
      }
      if (sat > 0.0) any_saturated = true;
      traces[d].records.push_back(rec);
    }

    HaltReason reason = HaltReason::None;
    if (degenerate)
      reason = HaltReason::DegenerateAverage;
    else if (rt > guards.unitarity_eps)
      reason = HaltReason::Unitarity;
    else if (any_saturated && guards.halt_on_saturation && guards.saturation_ratio < 1.0)
      reason = HaltReason::Saturation;

    if (reason != HaltReason::None) {
      for (auto& t : traces) {
        t.records.back().halted = true;
        t.records.back().reason = reason;
      }
      break;
    }
  }
  return traces;
}

inline std::vector<TraceRecord> run_trace(HeisenbergRun& run, IVec2 direction, int n_max,
                                          const StepGuards& guards) {
  const IVec2 dirs[1] = {direction};
  return run_trace(run, std::span<const IVec2>(dirs, 1), n_max, guards).front().records;
}

struct ExponentEstimate {
  double lambda = 0.0;                  // shared asymptote
  std::vector<double> transients;       // c_v per direction
  double residual = 0.0;                // RMS fit residual
  int n_lo = 0, n_hi = 0;               // fit window actually used
};

// Least squares for y(n) = lambda + c_v / n with lambda shared across
// directions; closed-form normal equations (tiny dense solve).
inline ExponentEstimate fit_exponent(const std::vector<std::vector<std::pair<int, double>>>& series) {
  const std::size_t ndir = series.size();
  if (ndir == 0) throw std::invalid_argument("at least one direction required");
  std::size_t total = 0;
  for (const auto& s : series) {
    if (s.size() < 2) throw underdetermined_fit_error("need at least 2 points per direction");
    total += s.size();
  }
  const std::size_t dim = ndir + 1;
  if (total < dim) throw underdetermined_fit_error("fewer points than fit parameters");

  std::vector<std::vector<double>> g(dim, std::vector<double>(dim, 0.0));
  std::vector<double> b(dim, 0.0);
  int n_lo = std::numeric_limits<int>::max(), n_hi = 0;
  for (std::size_t d = 0; d < ndir; ++d)
    for (auto [n, y] : series[d]) {
      if (n < 1) throw std::invalid_argument("fit points need n >= 1");
      n_lo = std::min(n_lo, n);
      n_hi = std::max(n_hi, n);
      const double u = 1.0 / n;
      g[0][0] += 1.0;
      g[0][d + 1] += u;
      g[d + 1][0] += u;
      g[d + 1][d + 1] += u * u;
      b[0] += y;
      b[d + 1] += u * y;
    }

  // Gaussian elimination with partial pivoting.
  std::vector<std::size_t> order(dim);
  for (std::size_t i = 0; i < dim; ++i) order[i] = i;
  for (std::size_t col = 0; col < dim; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < dim; ++r)
      if (std::abs(g[r][col]) > std::abs(g[piv][col])) piv = r;
    std::swap(g[col], g[piv]);
    std::swap(b[col], b[piv]);
    if (std::abs(g[col][col]) < 1e-14)
      throw underdetermined_fit_error("singular fit system (indistinguishable parameters)");
    for (std::size_t r = col + 1; r < dim; ++r) {
      const double f = g[r][col] / g[col][col];
      for (std::size_t c = col; c < dim; ++c) g[r][c] -= f * g[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(dim, 0.0);
  for (std::size_t i = dim; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < dim; ++c) s -= g[i][c] * x[c];
    x[i] = s / g[i][i];
  }

  ExponentEstimate est;
  est.lambda = x[0];
  est.transients.assign(x.begin() + 1, x.end());
  est.n_lo = n_lo;
  est.n_hi = n_hi;
  double ss = 0.0;
  for (std::size_t d = 0; d < ndir; ++d)
    for (auto [n, y] : series[d]) {
      const double r = est.lambda + est.transients[d] / n - y;
      ss += r * r;
    }
  est.residual = std::sqrt(ss / static_cast<double>(total));
  return est;
}

// Fit points from traces: records with n >= min_n, skipping halted records
// (their derivatives are unresolved by the guard's own definition) and any
// record without a defined growth value.
inline std::vector<std::vector<std::pair<int, double>>> fit_series(
    std::span<const DirectionTrace> traces, int min_n = 2, bool include_halted = false) {
  std::vector<std::vector<std::pair<int, double>>> series(traces.size());
  for (std::size_t d = 0; d < traces.size(); ++d)
    for (const TraceRecord& r : traces[d].records) {
      if (r.n < min_n || (!include_halted && r.halted) || std::isnan(r.mean_growth)) continue;
      series[d].emplace_back(r.n, r.mean_growth);
    }
  return series;
}

inline ExponentEstimate fit_exponent(std::span<const DirectionTrace> traces, int min_n = 2,
                                     bool include_halted = false) {
  return fit_exponent(fit_series(traces, min_n, include_halted));
}

// (n, mean_Dn / log(log(n+1))) for n >= 2; the scale factor is not positive
// below that.
inline std::vector<std::pair<int, double>> loglog_scaled(std::span<const TraceRecord> records) {
  std::vector<std::pair<int, double>> out;
  for (const TraceRecord& r : records) {
    if (r.n < 2) continue;
    out.emplace_back(r.n, r.mean_Dn / std::log(std::log(static_cast<double>(r.n) + 1.0)));
  }
  return out;
}

}  // namespace qce

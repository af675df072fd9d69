#pragma once

// Experiment runner and persistence: presets, structured-text configs, CSV
// traces, run manifests. The resolved configuration (every default applied) is
// what gets persisted; identical resolved configs produce byte-identical CSVs
// on the same platform.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "qce/cat_oracle.hpp"
#include "qce/chart.hpp"
#include "qce/estimator.hpp"
#include "qce/version.hpp"

namespace qce {

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Preset { Cat, RotorQuadratic, RotorCosine, Custom };

inline const char* to_string(Preset p) {
  switch (p) {
    case Preset::Cat: return "cat";
    case Preset::RotorQuadratic: return "rotor_quadratic";
    case Preset::RotorCosine: return "rotor_cosine";
    case Preset::Custom: return "custom";
  }
  return "unknown";
}

enum class KickKind { Multiplicative, Substitution };

struct ExperimentConfig {
  Preset preset = Preset::Custom;
  KineticVariant kinetic = KineticVariant::RotorQuadratic;
  int grid_n = 4096;
  int n_max = 300;
  double time_step = 1.0;
  KickKind kick = KickKind::Multiplicative;
  double kick_strength = 0.0;
  IntMat2 kick_matrix{1, 1, 1, 2};
  CompositionOrder order = CompositionOrder::FreeThenKick;
  IVec2 observable_l{1, 0};
  double observable_scale = 1.0;
  std::vector<IVec2> directions{{1, 0}};
  StepGuards guards;
  int fit_min_n = 2;
  bool emit_loglog = false;
  bool emit_chart = false;
  std::string output_dir = "out";

  int dim() const { return kinetic == KineticVariant::CatQuadratic ? 2 : 1; }
};

// tau = sqrt(5)/2 for the rotators; the torus preset uses T = 1/(2 pi), for
// which the accumulated free-flight phase A(n) is an exact multiple of pi and
// the |cos A(n)| factor in every derivative field is exactly 1 (the exponent
// itself is independent of T).
inline ExperimentConfig preset_config(Preset p, bool full_scale = false) {
  ExperimentConfig c;
  c.preset = p;
  switch (p) {
    case Preset::Cat:
      c.kinetic = KineticVariant::CatQuadratic;
      c.grid_n = full_scale ? 541 : 256;
      c.n_max = 24;
      c.time_step = 1.0 / two_pi;
      c.kick = KickKind::Substitution;
      c.kick_matrix = {1, 1, 1, 2};
      c.order = CompositionOrder::KickThenFree;
      c.observable_l = {1, 1};
      c.directions = {{1, 0}, {0, 1}};
      break;
    case Preset::RotorQuadratic:
    case Preset::Custom:
      c.kinetic = KineticVariant::RotorQuadratic;
      c.grid_n = 4096;
      c.n_max = 300;
      c.time_step = std::sqrt(5.0) / 2.0;
      c.kick = KickKind::Multiplicative;
      c.kick_strength = 5.0;
      c.order = CompositionOrder::FreeThenKick;
      c.observable_l = {1, 0};
      c.directions = {{1, 0}};
      break;
    case Preset::RotorCosine:
      c = preset_config(Preset::RotorQuadratic);
      c.preset = Preset::RotorCosine;
      c.kinetic = KineticVariant::RotorCosine;
      c.kick_strength = 11.0;
      c.guards.halt_on_saturation = false;  // fraction still recorded
      c.emit_loglog = true;
      break;
  }
  return c;
}

inline void validate(const ExperimentConfig& c) {
  if (c.grid_n < 2) throw config_error("grid_n must be >= 2");
  if (c.n_max < 1) throw config_error("n_max must be >= 1");
  if (c.time_step < 0.0) throw config_error("time_step must be >= 0");
  if (c.guards.saturation_ratio < 0.0) throw config_error("saturation_ratio must be >= 0");
  if (c.guards.unitarity_eps <= 0.0) throw config_error("unitarity_eps must be > 0");
  if (c.guards.log_floor < 0.0 || c.guards.log_floor >= 1.0)
    throw config_error("log_floor must lie in [0,1)");
  if (c.fit_min_n < 1) throw config_error("fit_min_n must be >= 1");
  if (c.observable_scale <= 0.0) throw config_error("observable_scale must be > 0");
  const int d = c.dim();
  if (c.observable_l[0] == 0 && (d == 1 || c.observable_l[1] == 0))
    throw config_error("observable_l must be nonzero");
  if (d == 1 && c.observable_l[1] != 0)
    throw config_error("observable_l has one component on the circle");
  if (c.directions.empty()) throw config_error("at least one direction required");
  for (const IVec2& v : c.directions) {
    if (v[0] == 0 && (d == 1 || v[1] == 0)) throw config_error("directions must be nonzero");
    if (d == 1 && v[1] != 0) throw config_error("directions have one component on the circle");
  }
  if (c.kick == KickKind::Multiplicative && d != 1)
    throw config_error("multiplicative kick requires a 1D kinetic term");
  if (c.kick == KickKind::Substitution) {
    if (d != 2) throw config_error("substitution kick requires the torus kinetic term");
    if (c.kick_matrix.det() != 1) throw config_error("kick_matrix must have determinant 1");
  }
  if (c.output_dir.empty()) throw config_error("output_dir must not be empty");
}

inline FloquetSpec floquet_spec(const ExperimentConfig& c) {
  FloquetSpec spec;
  spec.grid = c.dim() == 1 ? PeriodicGrid::line(c.grid_n) : PeriodicGrid::torus(c.grid_n);
  spec.kinetic = {c.kinetic, c.time_step};
  if (c.kick == KickKind::Multiplicative)
    spec.kick = MultiplicativeKick{c.kick_strength};
  else
    spec.kick = SubstitutionKick{c.kick_matrix};
  spec.order = c.order;
  return spec;
}

// ---------------------------------------------------------------------------
// structured-text config files: `key = value` lines, '#' comments, optional
// [section] headers (only the [config] section is consumed, so a manifest can
// be re-run directly)

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw config_error("line " + std::to_string(line) + ": expected a number, got '" + v + "'");
  }
}

inline long parse_long(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw config_error("line " + std::to_string(line) + ": expected an integer, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& v, int line) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw config_error("line " + std::to_string(line) + ": expected true/false, got '" + v + "'");
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline IVec2 parse_ivec(const std::string& v, int line) {
  const auto parts = split(v, ',');
  if (parts.size() == 1) return {parse_long(parts[0], line), 0};
  if (parts.size() == 2) return {parse_long(parts[0], line), parse_long(parts[1], line)};
  throw config_error("line " + std::to_string(line) + ": expected 'a' or 'a,b', got '" + v + "'");
}

// %.17g: full roundtrip precision, so a persisted config reloads bit-exactly
inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// "a,b;c,d" or "a,b,c,d"
inline IntMat2 parse_mat2(const std::string& v, int line) {
  const auto rows = split(v, ';');
  if (rows.size() == 2) {
    const IVec2 r0 = parse_ivec(rows[0], line);
    const IVec2 r1 = parse_ivec(rows[1], line);
    return {r0[0], r0[1], r1[0], r1[1]};
  }
  const auto cells = split(v, ',');
  if (cells.size() == 4)
    return {parse_long(cells[0], line), parse_long(cells[1], line), parse_long(cells[2], line),
            parse_long(cells[3], line)};
  throw config_error("line " + std::to_string(line) + ": expected 'a,b;c,d' or 'a,b,c,d', got '" +
                     v + "'");
}

inline std::string ivec_str(const IVec2& v, int dim) {
  return dim == 1 ? std::to_string(v[0]) : std::to_string(v[0]) + "," + std::to_string(v[1]);
}

inline std::string direction_tag(const IVec2& v, int dim) {
  auto part = [](long c) { return c < 0 ? "m" + std::to_string(-c) : std::to_string(c); };
  return dim == 1 ? part(v[0]) : part(v[0]) + "_" + part(v[1]);
}

}  // namespace detail

// Applies `key = value` entries from a config (or manifest) file on top of the
// given base. A `preset` key inside the file rebases the defaults first.
inline ExperimentConfig load_config(const std::string& path,
                                    std::optional<Preset> base = std::nullopt,
                                    bool full_scale = false) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config file: " + path);

  std::map<std::string, std::pair<std::string, int>> kv;
  std::string linebuf;
  int lineno = 0;
  bool in_config_section = true;
  bool saw_section = false;
  while (std::getline(in, linebuf)) {
    ++lineno;
    std::string line = detail::trim(linebuf);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      saw_section = true;
      in_config_section = detail::trim(line.substr(1, line.size() - 2)) == "config";
      continue;
    }
    if (!in_config_section) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("line " + std::to_string(lineno) + ": expected 'key = value'");
    kv[detail::trim(line.substr(0, eq))] = {detail::trim(line.substr(eq + 1)), lineno};
  }
  (void)saw_section;

  Preset preset = base.value_or(Preset::Custom);
  if (auto it = kv.find("preset"); it != kv.end() && !base) {
    const std::string& v = it->second.first;
    if (v == "cat") preset = Preset::Cat;
    else if (v == "rotor_quadratic") preset = Preset::RotorQuadratic;
    else if (v == "rotor_cosine") preset = Preset::RotorCosine;
    else if (v == "custom") preset = Preset::Custom;
    else throw config_error("line " + std::to_string(it->second.second) + ": unknown preset '" + v + "'");
  }
  ExperimentConfig c = preset_config(preset, full_scale);

  for (const auto& [key, vl] : kv) {
    const auto& [v, line] = vl;
    if (key == "preset") continue;
    else if (key == "grid_n") c.grid_n = static_cast<int>(detail::parse_long(v, line));
    else if (key == "n_max") c.n_max = static_cast<int>(detail::parse_long(v, line));
    else if (key == "time_step") c.time_step = detail::parse_double(v, line);
    else if (key == "kick_strength") c.kick_strength = detail::parse_double(v, line);
    else if (key == "observable_scale") c.observable_scale = detail::parse_double(v, line);
    else if (key == "saturation_ratio") c.guards.saturation_ratio = detail::parse_double(v, line);
    else if (key == "unitarity_eps") c.guards.unitarity_eps = detail::parse_double(v, line);
    else if (key == "log_floor") c.guards.log_floor = detail::parse_double(v, line);
    else if (key == "halt_on_saturation") c.guards.halt_on_saturation = detail::parse_bool(v, line);
    else if (key == "fit_min_n") c.fit_min_n = static_cast<int>(detail::parse_long(v, line));
    else if (key == "emit_loglog") c.emit_loglog = detail::parse_bool(v, line);
    else if (key == "emit_chart") c.emit_chart = detail::parse_bool(v, line);
    else if (key == "output_dir") c.output_dir = v;
    else if (key == "observable_l") c.observable_l = detail::parse_ivec(v, line);
    else if (key == "kinetic") {
      if (v == "rotor_quadratic") c.kinetic = KineticVariant::RotorQuadratic;
      else if (v == "rotor_cosine") c.kinetic = KineticVariant::RotorCosine;
      else if (v == "cat_quadratic") c.kinetic = KineticVariant::CatQuadratic;
      else throw config_error("line " + std::to_string(line) + ": unknown kinetic '" + v + "'");
    } else if (key == "kick") {
      if (v == "multiplicative") c.kick = KickKind::Multiplicative;
      else if (v == "substitution") c.kick = KickKind::Substitution;
      else throw config_error("line " + std::to_string(line) + ": unknown kick '" + v + "'");
    } else if (key == "order") {
      if (v == "kick_then_free") c.order = CompositionOrder::KickThenFree;
      else if (v == "free_then_kick") c.order = CompositionOrder::FreeThenKick;
      else throw config_error("line " + std::to_string(line) + ": unknown order '" + v + "'");
    } else if (key == "kick_matrix") {
      c.kick_matrix = detail::parse_mat2(v, line);
    } else if (key == "directions") {
      c.directions.clear();
      for (const std::string& part : detail::split(v, ';'))
        c.directions.push_back(detail::parse_ivec(part, line));
    } else {
      throw config_error("line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
  }
  return c;
}

inline void write_resolved_config(std::ostream& os, const ExperimentConfig& c) {
  const int d = c.dim();
  os << "preset = " << to_string(c.preset) << "\n";
  os << "kinetic = "
     << (c.kinetic == KineticVariant::RotorQuadratic
             ? "rotor_quadratic"
             : c.kinetic == KineticVariant::RotorCosine ? "rotor_cosine" : "cat_quadratic")
     << "\n";
  os << "grid_n = " << c.grid_n << "\n";
  os << "n_max = " << c.n_max << "\n";
  os << "time_step = " << detail::format_double(c.time_step) << "\n";
  os << "kick = " << (c.kick == KickKind::Multiplicative ? "multiplicative" : "substitution")
     << "\n";
  if (c.kick == KickKind::Multiplicative)
    os << "kick_strength = " << detail::format_double(c.kick_strength) << "\n";
  else
    os << "kick_matrix = " << c.kick_matrix.a << "," << c.kick_matrix.b << ";" << c.kick_matrix.c
       << "," << c.kick_matrix.d << "\n";
  os << "order = "
     << (c.order == CompositionOrder::KickThenFree ? "kick_then_free" : "free_then_kick") << "\n";
  os << "observable_l = " << detail::ivec_str(c.observable_l, d) << "\n";
  os << "observable_scale = " << detail::format_double(c.observable_scale) << "\n";
  os << "directions = ";
  for (std::size_t i = 0; i < c.directions.size(); ++i)
    os << (i ? "; " : "") << detail::ivec_str(c.directions[i], d);
  os << "\n";
  os << "saturation_ratio = " << detail::format_double(c.guards.saturation_ratio) << "\n";
  os << "halt_on_saturation = " << (c.guards.halt_on_saturation ? "true" : "false") << "\n";
  os << "unitarity_eps = " << detail::format_double(c.guards.unitarity_eps) << "\n";
  os << "log_floor = " << detail::format_double(c.guards.log_floor) << "\n";
  os << "fit_min_n = " << c.fit_min_n << "\n";
  os << "emit_loglog = " << (c.emit_loglog ? "true" : "false") << "\n";
  os << "emit_chart = " << (c.emit_chart ? "true" : "false") << "\n";
  os << "output_dir = " << c.output_dir << "\n";
}

// ---------------------------------------------------------------------------

enum class RunStatus { Completed, GuardHalt, DegenerateData };

struct ExperimentResult {
  ExperimentConfig config;  // resolved
  std::vector<DirectionTrace> traces;
  std::optional<ExponentEstimate> fit;
  std::optional<double> lambda_exact;  // substitution systems only
  HaltReason halt = HaltReason::None;
  RunStatus status = RunStatus::Completed;
  std::filesystem::path trace_path;
  std::filesystem::path manifest_path;
  std::filesystem::path chart_path;  // empty unless a chart was written
};

inline std::string trace_csv_text(const ExperimentConfig& c,
                                  const std::vector<DirectionTrace>& traces) {
  const int d = c.dim();
  const bool multi = traces.size() > 1;
  std::ostringstream os;
  os << "n";
  for (const auto& t : traces)
    os << ",mean_Dn" << (multi ? "_" + detail::direction_tag(t.direction, d) : "");
  for (const auto& t : traces)
    os << ",mean_growth" << (multi ? "_" + detail::direction_tag(t.direction, d) : "");
  for (const auto& t : traces)
    os << ",excluded" << (multi ? "_" + detail::direction_tag(t.direction, d) : "");
  os << ",saturation_fraction,roundtrip_error";
  if (c.emit_loglog) os << ",mean_Dn_loglog";
  os << "\n";

  const std::size_t rows = traces.front().records.size();
  for (std::size_t i = 0; i < rows; ++i) {
    const TraceRecord& first = traces.front().records[i];
    os << first.n;
    for (const auto& t : traces) os << "," << detail::format_double(t.records[i].mean_Dn);
    for (const auto& t : traces) os << "," << detail::format_double(t.records[i].mean_growth);
    for (const auto& t : traces) os << "," << t.records[i].excluded;
    double sat = 0.0;
    for (const auto& t : traces) sat = std::max(sat, t.records[i].saturation_fraction);
    os << "," << detail::format_double(sat);
    os << "," << detail::format_double(first.roundtrip_error);
    if (c.emit_loglog) {
      const double scale = first.n >= 2 ? std::log(std::log(static_cast<double>(first.n) + 1.0))
                                        : std::numeric_limits<double>::quiet_NaN();
      os << "," << detail::format_double(first.mean_Dn / scale);
    }
    os << "\n";
  }
  const TraceRecord& last = traces.front().records.back();
  if (last.halted)
    os << "# status: halted(" << to_string(last.reason) << ")\n";
  else
    os << "# status: completed\n";
  return os.str();
}

namespace detail {

inline std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw io_error("cannot write " + p.string());
  out << text;
  if (!out) throw io_error("write failed for " + p.string());
}

}  // namespace detail

// Full pipeline for one resolved configuration: propagate, trace, fit, compare
// against the exact exponent where one exists, and persist everything.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate(config);
  const std::string started = detail::utc_now();

  ExperimentResult res;
  res.config = config;

  HeisenbergRun run(floquet_spec(config), ObservableSpec{config.observable_l,
                                                         config.observable_scale});
  res.traces = run_trace(run, std::span<const IVec2>(config.directions), config.n_max,
                         config.guards);

  const TraceRecord& last = res.traces.front().records.back();
  res.halt = last.reason;
  if (last.reason == HaltReason::DegenerateAverage)
    res.status = RunStatus::DegenerateData;
  else if (last.halted)
    res.status = RunStatus::GuardHalt;

  try {
    res.fit = fit_exponent(std::span<const DirectionTrace>(res.traces), config.fit_min_n);
  } catch (const underdetermined_fit_error&) {
    res.fit.reset();
  }
  if (config.kick == KickKind::Substitution) {
    try {
      CatMatrix cat(config.kick_matrix);
      Vec2 v0{static_cast<double>(config.directions[0][0]),
              static_cast<double>(config.directions[0][1])};
      res.lambda_exact = exact_exponent(cat, v0, config.observable_l);
    } catch (const std::invalid_argument&) {
      res.lambda_exact.reset();  // non-hyperbolic substitution: no exact value
    }
  }

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw io_error("cannot create output directory " + config.output_dir);
  res.trace_path = fs::path(config.output_dir) / "trace.csv";
  res.manifest_path = fs::path(config.output_dir) / "manifest.txt";

  detail::write_file(res.trace_path, trace_csv_text(config, res.traces));

  std::ostringstream ms;
  ms << "# qce run manifest\n[run]\n";
  ms << "version = " << version << "\n";
  ms << "started_utc = " << started << "\n";
  ms << "finished_utc = " << detail::utc_now() << "\n";
  ms << "status = "
     << (res.status == RunStatus::Completed
             ? "completed"
             : res.status == RunStatus::GuardHalt ? "guard_halt" : "degenerate_data")
     << "\n";
  ms << "halt_reason = " << to_string(res.halt) << "\n";
  ms << "records = " << res.traces.front().records.size() << "\n";
  if (res.fit) {
    ms << "lambda_fit = " << detail::format_double(res.fit->lambda) << "\n";
    ms << "fit_residual = " << detail::format_double(res.fit->residual) << "\n";
    ms << "fit_n_range = " << res.fit->n_lo << ".." << res.fit->n_hi << "\n";
    for (std::size_t i = 0; i < res.traces.size(); ++i)
      ms << "transient_" << detail::direction_tag(res.traces[i].direction, config.dim()) << " = "
         << detail::format_double(res.fit->transients[i]) << "\n";
  }
  if (res.lambda_exact) {
    ms << "lambda_exact = " << detail::format_double(*res.lambda_exact) << "\n";
    if (res.fit)
      ms << "lambda_gap = " << detail::format_double(std::abs(res.fit->lambda - *res.lambda_exact))
         << "\n";
  }
  ms << "trace_csv = " << res.trace_path.filename().string() << "\n";

  if (config.emit_chart) {
    res.chart_path = fs::path(config.output_dir) / "chart.svg";
    ms << "chart_svg = " << res.chart_path.filename().string() << "\n";
  }
  ms << "\n[config]\n";
  write_resolved_config(ms, config);
  detail::write_file(res.manifest_path, ms.str());

  if (config.emit_chart)
    emit_chart_file(res.trace_path.string(), res.chart_path.string(), true);

  return res;
}

}  // namespace qce
